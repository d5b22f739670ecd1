"""Actor runtime with bestowed references, atomic blocks and coalesced batches."""

from .errors import (
    ActorTerminated,
    AlreadyInAtomic,
    FutureAlreadyFulfilled,
    NotInsideActor,
    NotOwner,
    NotTransferable,
    RuntimeFault,
    ScopeExpired,
    SelfDeadlock,
    Timeout,
    TransferSafetyViolation,
)
from .future import FutureValue
from .system import (
    EXTERNAL,
    ActorRef,
    ActorSystem,
    AtomicHandle,
    BestowedRef,
    EnvelopeRecord,
    RuntimeStats,
    TransferOutcome,
    TransferPolicy,
)

__all__ = [
    "EXTERNAL",
    "ActorRef",
    "ActorSystem",
    "ActorTerminated",
    "AlreadyInAtomic",
    "AtomicHandle",
    "BestowedRef",
    "EnvelopeRecord",
    "FutureAlreadyFulfilled",
    "FutureValue",
    "NotInsideActor",
    "NotOwner",
    "NotTransferable",
    "RuntimeFault",
    "RuntimeStats",
    "ScopeExpired",
    "SelfDeadlock",
    "Timeout",
    "TransferOutcome",
    "TransferPolicy",
    "TransferSafetyViolation",
]
