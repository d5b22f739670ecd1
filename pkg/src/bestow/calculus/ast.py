"""Abstract syntax for the actor calculus with bestow, transfer and private queues.

All nodes are frozen dataclasses so configurations built from them can be
hashed and compared structurally.  Source positions ride along on the nodes
that the parser creates but never take part in equality.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Tuple, Union

Pos = Optional[Tuple[int, int]]


class Variant(str, enum.Enum):
    CORE = "core"
    TRANSFER = "transfer"
    PRIVATE = "private"

    @classmethod
    def parse(cls, text: str) -> "Variant":
        try:
            return cls(text.strip().lower())
        except ValueError:
            raise ValueError(f"unknown variant {text!r} (expected core, transfer or private)") from None


# -- types -------------------------------------------------------------------


@dataclass(frozen=True)
class ActorType:
    def __str__(self) -> str:
        return "c"


@dataclass(frozen=True)
class PassiveType:
    def __str__(self) -> str:
        return "p"


@dataclass(frozen=True)
class BestowedType:
    """B(p); the grammar only admits the passive type inside."""

    def __str__(self) -> str:
        return "B(p)"


@dataclass(frozen=True)
class TransferableType:
    """T(p)."""

    def __str__(self) -> str:
        return "T(p)"


@dataclass(frozen=True)
class UnitType:
    def __str__(self) -> str:
        return "Unit"


@dataclass(frozen=True)
class Arrow:
    domain: "Type"
    codomain: "Type"

    def __str__(self) -> str:
        dom = f"({self.domain})" if isinstance(self.domain, Arrow) else str(self.domain)
        return f"{dom} -> {self.codomain}"


Type = Union[ActorType, PassiveType, BestowedType, TransferableType, UnitType, Arrow]

ACTOR = ActorType()
PASSIVE = PassiveType()
BESTOWED = BestowedType()
TRANSFERABLE = TransferableType()
UNIT_T = UnitType()


def is_active(ty: Type) -> bool:
    return isinstance(ty, (ActorType, BestowedType, TransferableType))


# -- values ------------------------------------------------------------------


@dataclass(frozen=True)
class Lam:
    param: str
    param_type: Type
    body: "Expr"
    pos: Pos = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class UnitV:
    pos: Pos = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class ActorId:
    id: int


@dataclass(frozen=True)
class Loc:
    loc: int


@dataclass(frozen=True)
class BestowedLoc:
    loc: int
    owner: int


@dataclass(frozen=True)
class TransferableLoc:
    loc: int


Value = Union[Lam, UnitV, ActorId, Loc, BestowedLoc, TransferableLoc]
RUNTIME_VALUES = (ActorId, Loc, BestowedLoc, TransferableLoc)

UNIT = UnitV()


# -- expressions ---------------------------------------------------------------


@dataclass(frozen=True)
class Var:
    name: str
    pos: Pos = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class App:
    fun: "Expr"
    arg: "Expr"
    pos: Pos = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Send:
    target: "Expr"
    msg: Value
    pos: Pos = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Mutate:
    target: "Expr"
    pos: Pos = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class New:
    ty: Type
    pos: Pos = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Bestow:
    inner: "Expr"
    pos: Pos = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Atomic:
    target: "Expr"
    pos: Pos = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Release:
    target: "Expr"
    pos: Pos = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Val:
    v: Value
    pos: Pos = field(default=None, compare=False, repr=False)


Expr = Union[Var, App, Send, Mutate, New, Bestow, Atomic, Release, Val]

UNIT_E = Val(UNIT)


def is_value(e: Expr) -> bool:
    return isinstance(e, Val)


def subvalues(e: Expr):
    """Yield every value occurring in ``e``, including those under lambdas."""
    stack = [e]
    while stack:
        node = stack.pop()
        if isinstance(node, Val):
            v = node.v
            yield v
            if isinstance(v, Lam):
                stack.append(v.body)
        elif isinstance(node, App):
            stack.append(node.fun)
            stack.append(node.arg)
        elif isinstance(node, Send):
            stack.append(node.target)
            yield node.msg
            if isinstance(node.msg, Lam):
                stack.append(node.msg.body)
        elif isinstance(node, (Mutate, Atomic, Release)):
            stack.append(node.target)
        elif isinstance(node, Bestow):
            stack.append(node.inner)


def free_vars(e: Expr) -> frozenset:
    if isinstance(e, Var):
        return frozenset((e.name,))
    if isinstance(e, Val):
        return value_free_vars(e.v)
    if isinstance(e, App):
        return free_vars(e.fun) | free_vars(e.arg)
    if isinstance(e, Send):
        return free_vars(e.target) | value_free_vars(e.msg)
    if isinstance(e, (Mutate, Atomic, Release)):
        return free_vars(e.target)
    if isinstance(e, Bestow):
        return free_vars(e.inner)
    return frozenset()


def value_free_vars(v: Value) -> frozenset:
    if isinstance(v, Lam):
        return free_vars(v.body) - {v.param}
    return frozenset()
