"""Deliberately broken semantics used to show the explorer's oracles have teeth."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, Optional

from .ast import Expr, Variant
from .semantics import Config, EndMsg, Semantics, _enqueue_public
from .statics import _Checker


class LeakySemantics(Semantics):
    """Accepts programs whose messages capture passive variables."""

    name = "leak-premise-dropped"

    def accepts(self, program: Expr) -> None:
        _Checker(self.variant, leak_premise=False).check({}, program)


class MisdirectedBestowSemantics(Semantics):
    """Sends on a bestowed reference land in the sender's own queue instead of the owner's."""

    name = "bestowed-send-to-sender"

    def bestowed_recipient(self, cfg: Config, sender: int, owner: int) -> int:
        return sender


class EagerTransferSemantics(Semantics):
    """Ownership may move while the owner is still running a message."""

    name = "transfer-mid-message"

    def can_transfer(self, cfg: Config, loc: int, frm: int) -> bool:
        return True


class PublicRoutingSemantics(Semantics):
    """Sends inside a conversation are delivered to the public queue."""

    name = "private-send-to-public"

    def route_send(self, cfg: Config, sender: int, receiver: int) -> Optional[int]:
        return None


class PublicEndSemantics(Semantics):
    """The end marker of a conversation goes to the target's public queue."""

    name = "end-to-public"

    def deliver_end(self, cfg: Config, sender: int, receiver: int, q: int) -> Config:
        return _enqueue_public(cfg, receiver, EndMsg(sender))


@dataclass(frozen=True)
class Mutant:
    name: str
    variant: Variant
    factory: Callable[[Variant], Semantics]
    description: str

    def semantics(self) -> Semantics:
        return self.factory(self.variant)


MUTANTS: Dict[str, Mutant] = {
    m.name: m
    for m in (
        Mutant(LeakySemantics.name, Variant.CORE, LeakySemantics, LeakySemantics.__doc__),
        Mutant(
            MisdirectedBestowSemantics.name, Variant.CORE, MisdirectedBestowSemantics, MisdirectedBestowSemantics.__doc__
        ),
        Mutant(EagerTransferSemantics.name, Variant.TRANSFER, EagerTransferSemantics, EagerTransferSemantics.__doc__),
        Mutant(PublicRoutingSemantics.name, Variant.PRIVATE, PublicRoutingSemantics, PublicRoutingSemantics.__doc__),
        Mutant(PublicEndSemantics.name, Variant.PRIVATE, PublicEndSemantics, PublicEndSemantics.__doc__),
    )
}
