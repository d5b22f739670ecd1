"""Labelled small-step semantics for the core, transfer and private-queue variants.

A :class:`Config` is an immutable snapshot; :meth:`Semantics.apply` returns a
new one.  Fresh actors, locations and queues are drawn from counters stored in
the configuration so every label has exactly one outcome.

Queues are FIFO: messages are appended at the tail and popped from the head.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Tuple, Union

from .ast import (
    PASSIVE,
    UNIT_E,
    ActorId,
    ActorType,
    App,
    Atomic,
    Bestow,
    BestowedLoc,
    Expr,
    Lam,
    Loc,
    Mutate,
    New,
    PassiveType,
    Release,
    Send,
    TransferableLoc,
    TransferableType,
    Val,
    Value,
    Var,
    Variant,
)
from .statics import typecheck

# -- machine state -------------------------------------------------------------


@dataclass(frozen=True)
class Fn:
    """A lambda message.  ``sender``/``conv`` record provenance only."""

    lam: Lam
    sender: Optional[int] = None
    conv: Optional[int] = None


@dataclass(frozen=True)
class AtReq:
    q: int
    sender: Optional[int] = None


@dataclass(frozen=True)
class EndMsg:
    sender: Optional[int] = None


Message = Union[Fn, AtReq, EndMsg]


@dataclass(frozen=True)
class ActorState:
    this: int
    heap: frozenset
    queue: Tuple[Message, ...]
    current: Expr
    conversations: Tuple[Tuple[int, int], ...] = ()  # sorted (target actor, queue id)

    def conv_map(self) -> Dict[int, int]:
        return dict(self.conversations)


@dataclass(frozen=True)
class PrivateQueue:
    messages: Tuple[Message, ...]
    owner: int
    initiator: Optional[int] = None


@dataclass(frozen=True)
class Config:
    actors: Tuple[ActorState, ...]
    owners: Tuple[Tuple[int, int], ...] = ()  # sorted (location, owner actor)
    queues: Tuple[Tuple[int, PrivateQueue], ...] = ()  # sorted by queue id
    next_loc: int = 1
    next_queue: int = 0

    def owner_map(self) -> Dict[int, int]:
        return dict(self.owners)

    def queue_map(self) -> Dict[int, PrivateQueue]:
        return dict(self.queues)

    def actor(self, aid: int) -> ActorState:
        return self.actors[aid]

    def with_actor(self, aid: int, state: ActorState) -> "Config":
        actors = list(self.actors)
        actors[aid] = state
        return dataclasses.replace(self, actors=tuple(actors))

    def with_queues(self, queues: Dict[int, PrivateQueue]) -> "Config":
        return dataclasses.replace(self, queues=tuple(sorted(queues.items())))

    def with_owners(self, owners: Dict[int, int]) -> "Config":
        return dataclasses.replace(self, owners=tuple(sorted(owners.items())))


def initial_config(program: Expr) -> Config:
    """The main actor ``a0`` with ``this = l0`` runs the program."""
    main = ActorState(this=0, heap=frozenset((0,)), queue=(), current=program)
    return Config(actors=(main,), next_loc=1)


# -- labels --------------------------------------------------------------------


@dataclass(frozen=True, order=True)
class RunExpr:
    actor: int

    def __str__(self) -> str:
        return f"run a{self.actor}"


@dataclass(frozen=True, order=True)
class PopPublic:
    actor: int

    def __str__(self) -> str:
        return f"pop a{self.actor}"


@dataclass(frozen=True, order=True)
class PopPrivate:
    actor: int

    def __str__(self) -> str:
        return f"pop-private a{self.actor}"


@dataclass(frozen=True, order=True)
class EndPrivate:
    actor: int

    def __str__(self) -> str:
        return f"end-private a{self.actor}"


@dataclass(frozen=True, order=True)
class TransferOwnership:
    loc: int
    to: int

    def __str__(self) -> str:
        return f"transfer l{self.loc} a{self.to}"


Label = Union[RunExpr, PopPublic, PopPrivate, EndPrivate, TransferOwnership]

_LABEL_WORDS = {"run": RunExpr, "pop": PopPublic, "pop-private": PopPrivate, "end-private": EndPrivate}


def parse_label(text: str) -> Label:
    parts = text.split()
    try:
        if parts[0] == "transfer" and len(parts) == 3:
            return TransferOwnership(int(parts[1].lstrip("l")), int(parts[2].lstrip("a")))
        if parts[0] in _LABEL_WORDS and len(parts) == 2:
            return _LABEL_WORDS[parts[0]](int(parts[1].lstrip("a")))
    except (IndexError, ValueError):
        pass
    raise ValueError(f"not a transition label: {text!r}")


def label_actor(label: Label) -> Optional[int]:
    return None if isinstance(label, TransferOwnership) else label.actor


class IllegalLabel(Exception):
    pass


class Stuck(Exception):
    """An expression is neither a value nor has a redex."""


# -- evaluation contexts -------------------------------------------------------

# A frame is (kind, payload).  Frames are listed outermost first.
Frame = Tuple[str, object]


class _AlreadyValue:
    def __repr__(self) -> str:
        return "AlreadyValue"


ALREADY_VALUE = _AlreadyValue()


def decompose(e: Expr):
    """Split ``e`` into (context frames, redex), or return ``ALREADY_VALUE``."""
    if isinstance(e, Val):
        return ALREADY_VALUE
    frames: List[Frame] = []
    while True:
        if isinstance(e, App):
            if not isinstance(e.fun, Val):
                frames.append(("app-fun", e.arg))
                e = e.fun
                continue
            if not isinstance(e.arg, Val):
                frames.append(("app-arg", e.fun))
                e = e.arg
                continue
            return tuple(frames), e
        if isinstance(e, Send):
            if not isinstance(e.target, Val):
                frames.append(("send", e.msg))
                e = e.target
                continue
            return tuple(frames), e
        if isinstance(e, (Mutate, Atomic, Release)):
            if not isinstance(e.target, Val):
                frames.append((type(e).__name__.lower(), None))
                e = e.target
                continue
            return tuple(frames), e
        if isinstance(e, Bestow):
            if not isinstance(e.inner, Val):
                frames.append(("bestow", None))
                e = e.inner
                continue
            return tuple(frames), e
        if isinstance(e, New):
            return tuple(frames), e
        raise Stuck(f"no redex in {e!r}")


def plug(frames: Iterable[Frame], e: Expr) -> Expr:
    for kind, payload in reversed(tuple(frames)):
        if kind == "app-fun":
            e = App(e, payload)
        elif kind == "app-arg":
            e = App(payload, e)
        elif kind == "send":
            e = Send(e, payload)
        elif kind == "mutate":
            e = Mutate(e)
        elif kind == "atomic":
            e = Atomic(e)
        elif kind == "release":
            e = Release(e)
        elif kind == "bestow":
            e = Bestow(e)
        else:
            raise ValueError(kind)
    return e


def current_redex(e: Expr) -> Optional[Expr]:
    try:
        d = decompose(e)
    except Stuck:
        return None
    return None if d is ALREADY_VALUE else d[1]


def substitute(body: Expr, param: str, v: Value) -> Expr:
    """Replace free occurrences of ``param`` by the closed value ``v``."""
    if isinstance(body, Var):
        return Val(v) if body.name == param else body
    if isinstance(body, Val):
        return Val(_subst_value(body.v, param, v)) if isinstance(body.v, Lam) else body
    if isinstance(body, App):
        return App(substitute(body.fun, param, v), substitute(body.arg, param, v))
    if isinstance(body, Send):
        return Send(substitute(body.target, param, v), _subst_value(body.msg, param, v))
    if isinstance(body, Mutate):
        return Mutate(substitute(body.target, param, v))
    if isinstance(body, Atomic):
        return Atomic(substitute(body.target, param, v))
    if isinstance(body, Release):
        return Release(substitute(body.target, param, v))
    if isinstance(body, Bestow):
        return Bestow(substitute(body.inner, param, v))
    return body


def _subst_value(w: Value, param: str, v: Value) -> Value:
    if isinstance(w, Lam) and w.param != param:
        return Lam(w.param, w.param_type, substitute(w.body, param, v))
    return w


def message_applied(lam: Lam, this: int) -> Expr:
    return App(Val(lam), Val(Loc(this)))


# -- the transition system -------------------------------------------------------


class Semantics:
    """Reference semantics for one variant.

    The small ``route_*``/``*_recipient`` hooks exist so deliberately broken
    variants can be built as subclasses for mutation testing.
    """

    name = "reference"

    def __init__(self, variant: Union[Variant, str]):
        self.variant = Variant(variant)

    # static acceptance

    def accepts(self, program: Expr) -> None:
        typecheck({}, program, self.variant)

    def initial(self, program: Expr) -> Config:
        return initial_config(program)

    # hooks

    def can_transfer(self, cfg: Config, loc: int, frm: int) -> bool:
        return isinstance(cfg.actors[frm].current, Val)

    def bestowed_recipient(self, cfg: Config, sender: int, owner: int) -> int:
        return owner

    def conversation(self, cfg: Config, sender: int, receiver: int) -> Optional[int]:
        """Queue id of the open conversation from ``sender`` to ``receiver``, if any."""
        if self.variant is not Variant.PRIVATE:
            return None
        return cfg.actors[sender].conv_map().get(receiver)

    def route_send(self, cfg: Config, sender: int, receiver: int) -> Optional[int]:
        """Private queue a send is delivered to, or None for the public queue."""
        return self.conversation(cfg, sender, receiver)

    def deliver_end(self, cfg: Config, sender: int, receiver: int, q: int) -> Config:
        return _enqueue_private(cfg, q, EndMsg(sender))

    # enabledness

    def enabled(self, cfg: Config) -> List[Label]:
        labels: List[Label] = []
        queues = cfg.queue_map() if self.variant is Variant.PRIVATE else {}
        for aid, actor in enumerate(cfg.actors):
            if not isinstance(actor.current, Val):
                redex = current_redex(actor.current)
                if redex is not None and self._reducible(cfg, aid, redex):
                    labels.append(RunExpr(aid))
                continue
            if not actor.queue:
                continue
            head = actor.queue[0]
            if isinstance(head, Fn):
                labels.append(PopPublic(aid))
            elif isinstance(head, AtReq) and self.variant is Variant.PRIVATE:
                pq = queues.get(head.q)
                if pq is not None and pq.messages:
                    if isinstance(pq.messages[0], Fn):
                        labels.append(PopPrivate(aid))
                    elif isinstance(pq.messages[0], EndMsg):
                        labels.append(EndPrivate(aid))
        if self.variant is Variant.TRANSFER:
            for loc, frm in cfg.owners:
                if self.can_transfer(cfg, loc, frm):
                    labels.extend(TransferOwnership(loc, to) for to in range(len(cfg.actors)) if to != frm)
        return labels

    def is_blocked(self, cfg: Config, aid: int) -> bool:
        """Waiting on an empty private queue (private-queue variant only)."""
        if self.variant is not Variant.PRIVATE:
            return False
        actor = cfg.actors[aid]
        if not isinstance(actor.current, Val) or not actor.queue or not isinstance(actor.queue[0], AtReq):
            return False
        pq = cfg.queue_map().get(actor.queue[0].q)
        return pq is not None and not pq.messages

    def _reducible(self, cfg: Config, aid: int, redex: Expr) -> bool:
        variant = self.variant
        if isinstance(redex, App):
            return isinstance(redex.fun.v, Lam)
        if isinstance(redex, New):
            if isinstance(redex.ty, TransferableType):
                return variant is Variant.TRANSFER
            return isinstance(redex.ty, (PassiveType, ActorType))
        if isinstance(redex, Mutate):
            return isinstance(redex.target.v, Loc)
        if isinstance(redex, Bestow):
            return variant is not Variant.TRANSFER and isinstance(redex.inner.v, Loc)
        if isinstance(redex, Send):
            t = redex.target.v
            if not isinstance(redex.msg, Lam):
                return False
            if isinstance(t, ActorId):
                return t.id < len(cfg.actors)
            if isinstance(t, BestowedLoc):
                return variant is not Variant.TRANSFER and t.owner < len(cfg.actors)
            if isinstance(t, TransferableLoc):
                return variant is Variant.TRANSFER and t.loc in cfg.owner_map()
            return False
        if isinstance(redex, (Atomic, Release)):
            return variant is Variant.PRIVATE and isinstance(redex.target.v, (ActorId, BestowedLoc))
        return False

    # stepping

    def apply(self, cfg: Config, label: Label) -> Config:
        if label not in self.enabled(cfg):
            raise IllegalLabel(f"{label} is not enabled")
        return self._apply(cfg, label)

    def _apply(self, cfg: Config, label: Label) -> Config:
        if isinstance(label, RunExpr):
            return self._run(cfg, label.actor)
        if isinstance(label, PopPublic):
            actor = cfg.actors[label.actor]
            msg = actor.queue[0]
            return cfg.with_actor(
                label.actor,
                dataclasses.replace(actor, queue=actor.queue[1:], current=message_applied(msg.lam, actor.this)),
            )
        if isinstance(label, PopPrivate):
            actor = cfg.actors[label.actor]
            queues = cfg.queue_map()
            q = actor.queue[0].q
            pq = queues[q]
            queues[q] = dataclasses.replace(pq, messages=pq.messages[1:])
            cfg = cfg.with_queues(queues)
            return cfg.with_actor(
                label.actor, dataclasses.replace(actor, current=message_applied(pq.messages[0].lam, actor.this))
            )
        if isinstance(label, EndPrivate):
            actor = cfg.actors[label.actor]
            queues = cfg.queue_map()
            del queues[actor.queue[0].q]
            cfg = cfg.with_queues(queues)
            return cfg.with_actor(label.actor, dataclasses.replace(actor, queue=actor.queue[1:]))
        if isinstance(label, TransferOwnership):
            owners = cfg.owner_map()
            frm = owners[label.loc]
            owners[label.loc] = label.to
            src, dst = cfg.actors[frm], cfg.actors[label.to]
            cfg = cfg.with_actor(frm, dataclasses.replace(src, heap=src.heap - {label.loc}))
            cfg = cfg.with_actor(label.to, dataclasses.replace(dst, heap=dst.heap | {label.loc}))
            return cfg.with_owners(owners)
        raise IllegalLabel(f"unknown label {label!r}")

    def _run(self, cfg: Config, aid: int) -> Config:
        frames, redex = decompose(cfg.actors[aid].current)
        cfg, result = self.step_redex(cfg, aid, redex)
        actor = cfg.actors[aid]
        return cfg.with_actor(aid, dataclasses.replace(actor, current=plug(frames, result)))

    def step_redex(self, cfg: Config, aid: int, redex: Expr) -> Tuple[Config, Expr]:
        actor = cfg.actors[aid]
        if isinstance(redex, App):
            lam = redex.fun.v
            return cfg, substitute(lam.body, lam.param, redex.arg.v)
        if isinstance(redex, Mutate):
            return cfg, UNIT_E
        if isinstance(redex, New):
            loc = cfg.next_loc
            cfg = dataclasses.replace(cfg, next_loc=loc + 1)
            if isinstance(redex.ty, ActorType):
                fresh = ActorState(this=loc, heap=frozenset((loc,)), queue=(), current=UNIT_E)
                new_id = len(cfg.actors)
                return dataclasses.replace(cfg, actors=cfg.actors + (fresh,)), Val(ActorId(new_id))
            cfg = cfg.with_actor(aid, dataclasses.replace(actor, heap=actor.heap | {loc}))
            if isinstance(redex.ty, TransferableType):
                owners = cfg.owner_map()
                owners[loc] = aid
                return cfg.with_owners(owners), Val(TransferableLoc(loc))
            return cfg, Val(Loc(loc))
        if isinstance(redex, Bestow):
            return cfg, Val(BestowedLoc(redex.inner.v.loc, aid))
        if isinstance(redex, Send):
            target, msg = redex.target.v, redex.msg
            if isinstance(target, ActorId):
                return self._deliver(cfg, aid, target.id, msg), UNIT_E
            if isinstance(target, BestowedLoc):
                wrapper = Lam("this", PASSIVE, App(Val(msg), Val(Loc(target.loc))))
                recipient = self.bestowed_recipient(cfg, aid, target.owner)
                return self._deliver(cfg, aid, recipient, wrapper), UNIT_E
            if isinstance(target, TransferableLoc):
                owner = cfg.owner_map()[target.loc]
                if owner == aid:
                    return cfg, App(Val(msg), Val(Loc(target.loc)))
                relay = Lam("this", PASSIVE, Send(Val(target), msg))
                return _enqueue_public(cfg, owner, Fn(relay, aid)), UNIT_E
        if isinstance(redex, Atomic):
            other = _target_actor(redex.target.v)
            conv = actor.conv_map()
            if other in conv:
                return cfg, UNIT_E
            q = cfg.next_queue
            conv[other] = q
            cfg = dataclasses.replace(cfg, next_queue=q + 1)
            cfg = cfg.with_actor(aid, dataclasses.replace(actor, conversations=tuple(sorted(conv.items()))))
            queues = cfg.queue_map()
            queues[q] = PrivateQueue((), owner=other, initiator=aid)
            cfg = cfg.with_queues(queues)
            return _enqueue_public(cfg, other, AtReq(q, aid)), UNIT_E
        if isinstance(redex, Release):
            other = _target_actor(redex.target.v)
            conv = actor.conv_map()
            if other not in conv:
                return cfg, UNIT_E
            q = conv.pop(other)
            cfg = cfg.with_actor(aid, dataclasses.replace(actor, conversations=tuple(sorted(conv.items()))))
            return self.deliver_end(cfg, aid, other, q), UNIT_E
        raise Stuck(f"cannot reduce {redex!r}")

    def _deliver(self, cfg: Config, sender: int, receiver: int, lam: Lam) -> Config:
        # the tag records the sender's conversation regardless of where the message is routed
        msg = Fn(lam, sender, self.conversation(cfg, sender, receiver))
        q = self.route_send(cfg, sender, receiver)
        if q is None:
            return _enqueue_public(cfg, receiver, msg)
        return _enqueue_private(cfg, q, msg)


def _target_actor(v: Value) -> int:
    return v.id if isinstance(v, ActorId) else v.owner


def _enqueue_public(cfg: Config, receiver: int, msg: Message) -> Config:
    actor = cfg.actors[receiver]
    return cfg.with_actor(receiver, dataclasses.replace(actor, queue=actor.queue + (msg,)))


def _enqueue_private(cfg: Config, q: int, msg: Message) -> Config:
    queues = cfg.queue_map()
    pq = queues[q]
    queues[q] = dataclasses.replace(pq, messages=pq.messages + (msg,))
    return cfg.with_queues(queues)


_REFERENCE: Dict[Variant, Semantics] = {}


def reference(variant: Union[Variant, str]) -> Semantics:
    variant = Variant(variant)
    if variant not in _REFERENCE:
        _REFERENCE[variant] = Semantics(variant)
    return _REFERENCE[variant]


def enabled(cfg: Config, variant: Union[Variant, str]) -> List[Label]:
    return reference(variant).enabled(cfg)


def apply(cfg: Config, label: Label, variant: Union[Variant, str]) -> Config:
    return reference(variant).apply(cfg, label)


def is_terminal(actor: ActorState) -> bool:
    return isinstance(actor.current, Val) and not actor.queue
