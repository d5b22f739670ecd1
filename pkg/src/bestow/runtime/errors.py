"""Exceptions raised by the actor runtime."""


class RuntimeFault(Exception):
    """Base class for runtime errors."""


class ActorTerminated(RuntimeFault):
    def __init__(self, actor: str):
        super().__init__(f"actor {actor} has terminated")
        self.actor = actor


class NotInsideActor(RuntimeFault):
    def __init__(self, operation: str):
        super().__init__(f"{operation} must be called from code running inside an actor")


class AlreadyInAtomic(RuntimeFault):
    pass


class ScopeExpired(RuntimeFault):
    """An atomic handle was used after its block ended or by another actor."""


class SelfDeadlock(RuntimeFault):
    """An actor waited on a future only it can fulfil."""


class Timeout(RuntimeFault):
    pass


class NotTransferable(RuntimeFault):
    pass


class NotOwner(RuntimeFault):
    pass


class TransferSafetyViolation(RuntimeFault):
    """A transferable object was touched by an actor that does not own it."""


class FutureAlreadyFulfilled(RuntimeFault):
    pass
