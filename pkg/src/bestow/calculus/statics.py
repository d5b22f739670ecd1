"""Typing judgment for the three calculus variants."""

from __future__ import annotations

import enum
from typing import Dict, Mapping, Optional, Tuple

from .ast import (
    ACTOR,
    BESTOWED,
    PASSIVE,
    TRANSFERABLE,
    UNIT_T,
    ActorId,
    ActorType,
    App,
    Arrow,
    Atomic,
    Bestow,
    BestowedLoc,
    Expr,
    Lam,
    Loc,
    Mutate,
    New,
    PassiveType,
    Pos,
    Release,
    Send,
    TransferableLoc,
    Type,
    UnitType,
    UnitV,
    Val,
    Value,
    Var,
    Variant,
    free_vars,
    is_active,
    subvalues,
)

TypeEnv = Dict[str, Type]


class ErrorKind(str, enum.Enum):
    UNBOUND_VAR = "UnboundVar"
    NOT_A_FUNCTION = "NotAFunction"
    ARG_MISMATCH = "ArgMismatch"
    RECEIVER_NOT_ACTIVE = "ReceiverNotActive"
    PASSIVE_LEAK = "PassiveLeak"
    BODY_NOT_UNIT = "BodyNotUnit"
    BAD_MUTATE = "BadMutate"
    BAD_BESTOW = "BadBestow"


class CalcTypeError(Exception):
    def __init__(self, kind: ErrorKind, message: str, pos: Pos = None):
        self.kind = kind
        self.pos = pos
        self.message = message
        where = f"{pos[0]}:{pos[1]}: " if pos else ""
        super().__init__(f"{where}{kind.value}: {message}")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "message": self.message,
            "line": self.pos[0] if self.pos else None,
            "column": self.pos[1] if self.pos else None,
        }


def active_restriction(env: Mapping[str, Type]) -> TypeEnv:
    """Keep only the bindings of active type (actors, bestowed and transferable)."""
    return {name: ty for name, ty in env.items() if is_active(ty)}


def validate_message(v: Value) -> None:
    """Reject messages whose body mentions a raw passive location."""
    if not isinstance(v, Lam):
        raise CalcTypeError(ErrorKind.NOT_A_FUNCTION, "a message must be a lambda", getattr(v, "pos", None))
    for sub in subvalues(v.body):
        if isinstance(sub, Loc):
            raise CalcTypeError(
                ErrorKind.PASSIVE_LEAK, f"message body contains passive location #l{sub.loc}", v.pos
            )


def typecheck(env: Optional[Mapping[str, Type]], e: Expr, variant: Variant = Variant.CORE) -> Type:
    """Return the type of ``e`` under ``env`` or raise :class:`CalcTypeError`."""
    return _Checker(Variant(variant)).check(dict(env or {}), e)


def typecheck_value(v: Value, variant: Variant = Variant.CORE) -> Type:
    return _Checker(Variant(variant)).value(dict(), v, None)


class _Checker:
    def __init__(self, variant: Variant, *, leak_premise: bool = True):
        self.variant = variant
        self.leak_premise = leak_premise

    def active_types(self) -> Tuple[type, ...]:
        return (ActorType, type(TRANSFERABLE)) if self.variant is Variant.TRANSFER else (ActorType, type(BESTOWED))

    def check(self, env: TypeEnv, e: Expr) -> Type:
        if isinstance(e, Var):
            if e.name not in env:
                raise CalcTypeError(ErrorKind.UNBOUND_VAR, f"unbound variable {e.name!r}", e.pos)
            return env[e.name]
        if isinstance(e, Val):
            return self.value(env, e.v, e.pos)
        if isinstance(e, App):
            fty = self.check(env, e.fun)
            if not isinstance(fty, Arrow):
                raise CalcTypeError(ErrorKind.NOT_A_FUNCTION, f"cannot apply a value of type {fty}", e.pos)
            aty = self.check(env, e.arg)
            if aty != fty.domain:
                raise CalcTypeError(
                    ErrorKind.ARG_MISMATCH, f"argument has type {aty}, function expects {fty.domain}", e.pos
                )
            return fty.codomain
        if isinstance(e, New):
            return e.ty
        if isinstance(e, Mutate):
            ty = self.check(env, e.target)
            if not isinstance(ty, PassiveType):
                raise CalcTypeError(ErrorKind.BAD_MUTATE, f"mutate needs a passive object, got {ty}", e.pos)
            return UNIT_T
        if isinstance(e, Bestow):
            ty = self.check(env, e.inner)
            if not isinstance(ty, PassiveType):
                raise CalcTypeError(ErrorKind.BAD_BESTOW, f"only passive objects can be bestowed, got {ty}", e.pos)
            return BESTOWED
        if isinstance(e, Send):
            self.receiver(env, e.target, e.pos)
            self.message(env, e.msg, e.pos)
            return UNIT_T
        if isinstance(e, (Atomic, Release)):
            self.receiver(env, e.target, e.pos)
            return UNIT_T
        raise TypeError(f"not an expression: {e!r}")

    def receiver(self, env: TypeEnv, target: Expr, pos: Pos) -> None:
        ty = self.check(env, target)
        if not isinstance(ty, self.active_types()):
            raise CalcTypeError(ErrorKind.RECEIVER_NOT_ACTIVE, f"receiver has non-active type {ty}", pos)

    def message(self, env: TypeEnv, msg: Value, pos: Pos) -> None:
        if not isinstance(msg, Lam):
            raise CalcTypeError(ErrorKind.NOT_A_FUNCTION, "a message must be a lambda", pos)
        if not isinstance(msg.param_type, PassiveType):
            raise CalcTypeError(
                ErrorKind.ARG_MISMATCH, f"message parameter must have type p, not {msg.param_type}", msg.pos or pos
            )
        if self.leak_premise:
            inner_env = active_restriction(env)
            hidden = {name for name in env if name not in inner_env}
            hidden.discard(msg.param)
            leaked = sorted((free_vars(msg.body) - {msg.param}) & hidden)
            if leaked:
                raise CalcTypeError(
                    ErrorKind.PASSIVE_LEAK,
                    f"message captures {', '.join(leaked)} of non-active type",
                    msg.pos or pos,
                )
            validate_message(msg)
        else:
            inner_env = dict(env)
        inner_env[msg.param] = PASSIVE
        body_ty = self.check(inner_env, msg.body)
        if self.variant is Variant.TRANSFER and not isinstance(body_ty, UnitType):
            raise CalcTypeError(
                ErrorKind.BODY_NOT_UNIT, f"message body has type {body_ty}; transferable sends need Unit", msg.pos or pos
            )

    def value(self, env: TypeEnv, v: Value, pos: Pos) -> Type:
        if isinstance(v, UnitV):
            return UNIT_T
        if isinstance(v, Lam):
            inner = dict(env)
            inner[v.param] = v.param_type
            return Arrow(v.param_type, self.check(inner, v.body))
        if isinstance(v, Loc):
            return PASSIVE
        if isinstance(v, ActorId):
            return ACTOR
        if isinstance(v, BestowedLoc):
            return BESTOWED
        if isinstance(v, TransferableLoc):
            return TRANSFERABLE
        raise TypeError(f"not a value: {v!r}")
