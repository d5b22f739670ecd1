"""An in-process actor system with bestowed references and atomic blocks.

Actor state is only reachable as the argument handed to closures that run
inside the actor, so isolation holds by construction.  ``bestow`` is the one
sanctioned way to let other actors name an object; operations on the
resulting :class:`BestowedRef` are shipped back to the owner.

Two execution modes share all mailbox logic:

* threaded: a pool of worker threads; a worker that blocks on a future inside
  an actor is compensated with an extra thread so the pool never starves;
* deterministic: one OS thread, one greenlet per running envelope and a seeded
  random choice among runnable actors at every step, so a seed fixes the
  whole interleaving.
"""

from __future__ import annotations

import enum
import os
import random
import threading
from collections import Counter, deque
from contextlib import ExitStack, contextmanager
from dataclasses import dataclass, field
from typing import Any, Callable, Deque, Dict, Iterable, List, Optional, Sequence, Tuple, Union

from greenlet import getcurrent, greenlet

from .errors import (
    ActorTerminated,
    AlreadyInAtomic,
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

EXTERNAL = -1  # sender id of code running outside any actor

Op = Callable[[Any], Any]


class TransferPolicy(str, enum.Enum):
    NEVER = "never"
    WHEN_OWNER_IDLE = "when-owner-idle"


class TransferOutcome(str, enum.Enum):
    TRANSFERRED = "transferred"
    DELEGATED = "delegated"


# -- handles ---------------------------------------------------------------------


@dataclass(frozen=True)
class ActorRef:
    system: "ActorSystem" = field(repr=False, compare=False)
    id: int
    name: str = field(compare=False)

    def send(self, op: Op) -> FutureValue:
        return self.system.send(self, op)

    def __repr__(self) -> str:
        return f"ActorRef(a{self.id}:{self.name})"


class _OwnershipCell:
    """Shared ownership record of one transferable object."""

    __slots__ = ("owner", "obj", "in_use_by")

    def __init__(self, owner: int, obj: Any):
        self.owner = owner
        self.obj = obj
        self.in_use_by: Optional[int] = None


@dataclass(frozen=True, eq=False)
class BestowedRef:
    """An (owner, object) pair; operations on the object run inside the owner."""

    owner_ref: ActorRef
    obj: Any = field(repr=False)
    cell: Optional[_OwnershipCell] = field(default=None, repr=False)

    @property
    def transferable(self) -> bool:
        return self.cell is not None

    @property
    def owner(self) -> ActorRef:
        if self.cell is None:
            return self.owner_ref
        return self.owner_ref.system._actors[self.cell.owner].ref

    def send(self, op: Op) -> FutureValue:
        return self.owner_ref.system.send_bestowed(self, op)


Target = Union[ActorRef, BestowedRef]


class PrivateMailbox:
    __slots__ = ("owner", "initiator", "queue")

    def __init__(self, owner: int, initiator: int):
        self.owner = owner
        self.initiator = initiator
        self.queue: Deque = deque()


class AtomicHandle:
    """Capability to send into one installed private mailbox.

    It is valid only inside the block that created it and only for the actor
    (or external thread) that opened the block.
    """

    def __init__(self, system: "ActorSystem", target: Target, mailbox: PrivateMailbox):
        self._system = system
        self._target = target
        self._mailbox = mailbox
        self._live = True

    @property
    def target(self) -> Target:
        return self._target

    @property
    def live(self) -> bool:
        return self._live

    def _expire(self) -> None:
        self._live = False

    def send(self, op: Op) -> FutureValue:
        return self._system.atomic_send(self, op)


# -- envelopes -------------------------------------------------------------------


@dataclass(eq=False)
class Perform:
    fn: Op
    future: FutureValue
    sender: int
    kind: str = "send"
    cell: Optional[_OwnershipCell] = None


@dataclass(eq=False)
class Batch:
    items: List[Tuple[Op, FutureValue]]
    sender: int
    kind: str = "batch"
    cell: Optional[_OwnershipCell] = None


@dataclass(eq=False)
class InstallPrivate:
    mailbox: PrivateMailbox
    ack: FutureValue
    sender: int
    kind: str = "install"


@dataclass(eq=False)
class RestorePublic:
    sender: int
    kind: str = "restore"


Envelope = Union[Perform, Batch, InstallPrivate, RestorePublic]


@dataclass(frozen=True)
class EnvelopeRecord:
    actor: int
    kind: str
    sender: int
    private_initiator: Optional[int]


@dataclass
class RuntimeStats:
    envelopes: int = 0
    by_kind: Counter = field(default_factory=Counter)
    private_installs: int = 0
    transfers: int = 0
    redelegations: int = 0

    def snapshot(self) -> "RuntimeStats":
        return RuntimeStats(
            self.envelopes, Counter(self.by_kind), self.private_installs, self.transfers, self.redelegations
        )

    def to_dict(self) -> dict:
        return {
            "envelopes": self.envelopes,
            "byKind": dict(sorted(self.by_kind.items())),
            "privateInstalls": self.private_installs,
            "transfers": self.transfers,
            "redelegations": self.redelegations,
        }


# -- actors ------------------------------------------------------------------------

_IDLE, _SCHEDULED, _RUNNING = "idle", "scheduled", "running"


class _Actor:
    __slots__ = ("id", "name", "state", "public", "private", "status", "terminated", "suspended", "waiting", "ref")

    def __init__(self, aid: int, name: str, state: Any, ref: ActorRef):
        self.id = aid
        self.name = name
        self.state = state
        self.public: Deque[Envelope] = deque()
        self.private: Optional[PrivateMailbox] = None
        self.status = _IDLE
        self.terminated = False
        self.suspended: Optional[greenlet] = None
        self.waiting: Optional[FutureValue] = None
        self.ref = ref

    def active(self) -> Deque[Envelope]:
        return self.public if self.private is None else self.private.queue

    def has_work(self) -> bool:
        return bool(self.public) if self.private is None else bool(self.private.queue)

    def idle(self) -> bool:
        return self.status == _IDLE and not self.public and self.private is None and self.suspended is None

    def describe(self) -> str:
        parts = [f"a{self.id}:{self.name}", f"public={len(self.public)}"]
        if self.private is not None:
            parts.append(f"private(initiator={_who(self.private.initiator)}, pending={len(self.private.queue)})")
        if self.waiting is not None:
            parts.append("waiting on a future")
        if self.status == _RUNNING:
            parts.append("running")
        return " ".join(parts)


def _who(aid: int) -> str:
    return "external" if aid == EXTERNAL else f"a{aid}"


class _ActorGreenlet(greenlet):
    actor: Optional[_Actor] = None


class _NullLock:
    def __enter__(self):
        return self

    def __exit__(self, *exc):
        return False


def _env_flag(name: str) -> Optional[bool]:
    value = os.environ.get(name)
    if value is None:
        return None
    return value.strip().lower() in ("1", "true", "yes", "on")


# -- the system --------------------------------------------------------------------


class ActorSystem:
    """Owns actors, mailboxes and the scheduler.

    Defaults come from ``BESTOW_WORKERS``, ``BESTOW_DETERMINISTIC`` and
    ``BESTOW_SEED`` when the corresponding argument is None.
    """

    def __init__(
        self,
        workers: Optional[int] = None,
        deterministic: Optional[bool] = None,
        seed: Optional[int] = None,
        transfer_policy: Union[TransferPolicy, str] = TransferPolicy.NEVER,
        *,
        record_trace: bool = False,
        default_timeout: Optional[float] = 60.0,
    ):
        if workers is None:
            workers = int(os.environ.get("BESTOW_WORKERS", "4"))
        if deterministic is None:
            deterministic = bool(_env_flag("BESTOW_DETERMINISTIC"))
        if seed is None:
            seed = int(os.environ.get("BESTOW_SEED", "0"))
        if workers < 1:
            raise ValueError("workers must be at least 1")
        self.workers = workers
        self.deterministic = deterministic
        self.seed = seed
        self.transfer_policy = TransferPolicy(transfer_policy)
        self.default_timeout = default_timeout
        self.stats = RuntimeStats()
        self.trace: Optional[List[EnvelopeRecord]] = [] if record_trace else None
        self._actors: List[_Actor] = []
        self._open_blocks: set = set()
        self._plain_bestowed: Dict[int, Any] = {}
        self._cells: Dict[int, _OwnershipCell] = {}
        self._faults: List[BaseException] = []
        self._closed = False
        if deterministic:
            self._lock = _NullLock()
            self._rng = random.Random(seed)
        else:
            self._lock = threading.RLock()
            self._cv = threading.Condition(self._lock)
            self._runq: Deque[_Actor] = deque()
            self._tls = threading.local()
            self._threads: List[threading.Thread] = []
            self._live_workers = 0
            self._blocked_workers = 0
            self._stopping = False

    def __enter__(self) -> "ActorSystem":
        return self

    def __exit__(self, *exc) -> None:
        self.shutdown()

    # -- identity ------------------------------------------------------------------

    def _current(self) -> Optional[_Actor]:
        if self.deterministic:
            return getattr(getcurrent(), "actor", None)
        return getattr(self._tls, "actor", None)

    def current_actor(self) -> Optional[ActorRef]:
        actor = self._current()
        return None if actor is None else actor.ref

    def _sender_id(self) -> int:
        actor = self._current()
        return EXTERNAL if actor is None else actor.id

    def actors(self) -> List[ActorRef]:
        return [a.ref for a in self._actors]

    # -- actors and plain sends ---------------------------------------------------------

    def spawn(self, state: Any = None, name: Optional[str] = None) -> ActorRef:
        """Start an actor whose private state is ``state``."""
        if self._closed:
            raise RuntimeFault("actor system has been shut down")
        with self._lock:
            aid = len(self._actors)
            name = name or f"actor{aid}"
            ref = ActorRef(self, aid, name)
            self._actors.append(_Actor(aid, name, state, ref))
        if not self.deterministic:
            self._ensure_workers()
        return ref

    def send(self, target: Target, op: Op) -> FutureValue:
        """Run ``op(state)`` inside the target actor; the future receives its result."""
        if isinstance(target, BestowedRef):
            return self.send_bestowed(target, op)
        actor = self._actors[target.id]
        future = FutureValue(self, actor.id)
        self._enqueue(actor, None, Perform(op, future, self._sender_id()))
        return future

    def stop(self, ref: ActorRef) -> None:
        """Terminate an actor; pending and later messages fail with ActorTerminated."""
        actor = self._actors[ref.id]
        with self._lock:
            if actor.terminated:
                return
            actor.terminated = True
            pending = list(actor.public)
            actor.public.clear()
            if actor.private is not None:
                pending.extend(actor.private.queue)
                actor.private.queue.clear()
            if not self.deterministic:
                self._cv.notify_all()
        for env in pending:
            self._fail_envelope(actor, env)

    def _fail_envelope(self, actor: _Actor, env: Envelope) -> None:
        error = ActorTerminated(f"a{actor.id}:{actor.name}")
        if isinstance(env, Perform):
            env.future.fail(error)
        elif isinstance(env, Batch):
            for _, fut in env.items:
                fut.fail(error)
        elif isinstance(env, InstallPrivate):
            env.ack.fail(error)

    # -- bestow ------------------------------------------------------------------------

    def bestow(self, obj: Any, *, transferable: bool = False) -> BestowedRef:
        """Wrap an object owned by the calling actor in a shareable reference."""
        actor = self._current()
        if actor is None:
            raise NotInsideActor("bestow")
        key = id(obj)
        with self._lock:
            if transferable:
                if key in self._plain_bestowed:
                    raise NotTransferable("object was already bestowed without transfer")
                cell = self._cells.get(key)
                if cell is None:
                    cell = self._cells[key] = _OwnershipCell(actor.id, obj)
                elif cell.owner != actor.id:
                    raise NotOwner(f"a{actor.id} does not own this transferable object")
                return BestowedRef(actor.ref, obj, cell)
            if key in self._cells:
                raise NotTransferable("object is transferable; bestow it with transferable=True")
            self._plain_bestowed[key] = obj
        return BestowedRef(actor.ref, obj)

    def local(self, ref: BestowedRef) -> Any:
        """Direct access to a bestowed object from code running inside its owner."""
        actor = self._current()
        owner = ref.cell.owner if ref.cell is not None else ref.owner_ref.id
        if actor is None or actor.id != owner:
            raise NotOwner(f"{_who(self._sender_id())} does not own this object (owner a{owner})")
        return ref.obj

    def send_bestowed(self, ref: BestowedRef, op: Op) -> FutureValue:
        """Run ``op(obj)`` inside the object's owner."""
        sender = self._current()
        sender_id = EXTERNAL if sender is None else sender.id
        obj = ref.obj
        cell = ref.cell
        if cell is None:
            owner = self._actors[ref.owner_ref.id]
            future = FutureValue(self, owner.id)
            self._enqueue(owner, None, Perform(self._guarded(owner, obj, op), future, sender_id, "bestowed"))
            return future
        if sender is not None:
            if cell.owner == sender.id or (
                self.transfer_policy is TransferPolicy.WHEN_OWNER_IDLE and self._transfer_if_idle(cell, sender.id)
            ):
                return self._run_owned(cell, sender, op)
        with self._lock:
            owner = self._actors[cell.owner]
            future = FutureValue(self, owner.id)
            self._enqueue(owner, None, Perform(lambda _state: op(obj), future, sender_id, "bestowed", cell))
        return future

    def _guarded(self, owner: _Actor, obj: Any, op: Op) -> Op:
        """Wrap ``op`` so it refuses to touch ``obj`` outside the owning actor."""

        def run(_state: Any) -> Any:
            here = self._current()
            if here is not owner:
                raise NotOwner(f"{_who(EXTERNAL if here is None else here.id)} ran a message for a{owner.id}")
            return op(obj)

        return run

    def _run_owned(self, cell: _OwnershipCell, actor: _Actor, op: Op) -> FutureValue:
        previous = self._enter_cell(cell, actor)
        try:
            return FutureValue.resolved(op(cell.obj))
        except Exception as err:  # the error belongs to the caller's future
            return FutureValue.failed(err)
        finally:
            cell.in_use_by = previous

    def _enter_cell(self, cell: _OwnershipCell, actor: _Actor) -> Optional[int]:
        with self._lock:
            if cell.owner != actor.id or cell.in_use_by not in (None, actor.id):
                raise TransferSafetyViolation(
                    f"a{actor.id} touched an object owned by a{cell.owner} (in use by {cell.in_use_by})"
                )
            previous, cell.in_use_by = cell.in_use_by, actor.id
            return previous

    def set_transfer_policy(self, policy: Union[TransferPolicy, str]) -> None:
        self.transfer_policy = TransferPolicy(policy)

    def try_transfer(self, ref: BestowedRef, new_owner: ActorRef) -> TransferOutcome:
        """Move a transferable object to ``new_owner`` if its owner is idle."""
        cell = ref.cell
        if cell is None:
            raise NotTransferable("only objects bestowed with transferable=True can move")
        if cell.owner == new_owner.id:
            return TransferOutcome.TRANSFERRED
        if self.transfer_policy is TransferPolicy.NEVER:
            return TransferOutcome.DELEGATED
        if self._transfer_if_idle(cell, new_owner.id):
            return TransferOutcome.TRANSFERRED
        return TransferOutcome.DELEGATED

    def _transfer_if_idle(self, cell: _OwnershipCell, new_owner: int) -> bool:
        with self._lock:
            old = self._actors[cell.owner]
            if cell.in_use_by is not None or not old.idle() or self._actors[new_owner].terminated:
                return False
            cell.owner = new_owner
            self.stats.transfers += 1
            return True

    # -- atomic blocks -------------------------------------------------------------------

    def _owner_id(self, target: Target) -> int:
        if isinstance(target, ActorRef):
            return target.id
        return target.cell.owner if target.cell is not None else target.owner_ref.id

    @contextmanager
    def _acquire(self, target: Target):
        initiator = self._sender_id()
        with self._lock:
            owner_id = self._owner_id(target)
            key = (initiator, owner_id)
            if key in self._open_blocks:
                raise AlreadyInAtomic(f"{_who(initiator)} already has an atomic block open on a{owner_id}")
            self._open_blocks.add(key)
            owner = self._actors[owner_id]
            mailbox = PrivateMailbox(owner_id, initiator)
            ack = FutureValue(self, owner_id)
            # enqueued under the lock so a transferable target cannot move before it is installed
            self._enqueue(owner, None, InstallPrivate(mailbox, ack, initiator))
        try:
            ack.get()
            handle = AtomicHandle(self, target, mailbox)
            try:
                yield handle
            finally:
                handle._expire()
                self._enqueue(owner, mailbox, RestorePublic(initiator))
        finally:
            with self._lock:
                self._open_blocks.discard(key)

    def atomic(self, target: Target, body: Callable[[AtomicHandle], Any]) -> Any:
        """Run ``body`` with exclusive access to the target's mailbox."""
        with self._acquire(target) as handle:
            return body(handle)

    def atomic_all(self, targets: Sequence[Target], body: Callable[[List[AtomicHandle]], Any]) -> Any:
        """Atomic over several targets, acquired in actor-id order and released in reverse."""
        targets = list(targets)
        if not targets:
            raise ValueError("atomic_all needs at least one target")
        owners = [self._owner_id(t) for t in targets]
        if len(set(owners)) != len(owners):
            raise ValueError("atomic_all targets must live in distinct actors")
        handles: List[Optional[AtomicHandle]] = [None] * len(targets)
        with ExitStack() as stack:
            for i in sorted(range(len(targets)), key=owners.__getitem__):
                handles[i] = stack.enter_context(self._acquire(targets[i]))
            return body(handles)

    def atomic_send(self, handle: AtomicHandle, op: Op) -> FutureValue:
        if not handle._live:
            raise ScopeExpired("atomic handle used after its block ended")
        mailbox = handle._mailbox
        if self._sender_id() != mailbox.initiator:
            raise ScopeExpired("atomic handle used outside the actor that opened the block")
        owner = self._actors[mailbox.owner]
        future = FutureValue(self, owner.id)
        target = handle._target
        cell = None
        if isinstance(target, ActorRef):
            fn = op
        elif target.cell is None:
            fn = self._guarded(owner, target.obj, op)
        else:
            obj, cell = target.obj, target.cell
            fn = lambda _state: op(obj)  # noqa: E731
        self._enqueue(owner, mailbox, Perform(fn, future, mailbox.initiator, "atomic", cell))
        return future

    def coalesce(self, target: Target, ops: Iterable[Op]) -> List[FutureValue]:
        """Deliver ``ops`` as one envelope that runs them back to back."""
        ops = list(ops)
        if not ops:
            raise ValueError("coalesce needs a non-empty batch")
        sender_id = self._sender_id()
        with self._lock:
            owner = self._actors[self._owner_id(target)]
            futures = [FutureValue(self, owner.id) for _ in ops]
            if isinstance(target, ActorRef):
                fns, cell = ops, None
            elif target.cell is None:
                fns, cell = [self._guarded(owner, target.obj, op) for op in ops], None
            else:
                obj, cell = target.obj, target.cell
                fns = [(lambda _state, op=op: op(obj)) for op in ops]
            self._enqueue(owner, None, Batch(list(zip(fns, futures)), sender_id, cell=cell))
        return futures

    # -- mailbox plumbing -------------------------------------------------------------------

    def _enqueue(self, actor: _Actor, mailbox: Optional[PrivateMailbox], env: Envelope) -> None:
        with self._lock:
            if actor.terminated:
                failed = True
            else:
                failed = False
                (actor.public if mailbox is None else mailbox.queue).append(env)
                if not self.deterministic and actor.status == _IDLE and actor.has_work():
                    actor.status = _SCHEDULED
                    self._runq.append(actor)
                    self._cv.notify()
        if failed:
            self._fail_envelope(actor, env)

    def _take(self, actor: _Actor) -> Envelope:
        """Pop the next envelope of an actor that has work.  Caller holds the lock."""
        private = actor.private
        env = actor.active().popleft()
        actor.status = _RUNNING
        stats = self.stats
        stats.envelopes += 1
        stats.by_kind[env.kind] += 1
        if self.trace is not None:
            self.trace.append(
                EnvelopeRecord(actor.id, env.kind, env.sender, None if private is None else private.initiator)
            )
        return env

    def _execute(self, actor: _Actor, env: Envelope) -> None:
        if isinstance(env, Perform):
            if env.cell is not None and self._redelegated(actor, env, env.cell):
                return
            previous = None if env.cell is None else self._enter_cell(env.cell, actor)
            try:
                try:
                    result = env.fn(actor.state)
                except Exception as err:
                    env.future.fail(err)
                else:
                    env.future.fulfill(result)
            finally:
                if env.cell is not None:
                    env.cell.in_use_by = previous
        elif isinstance(env, Batch):
            if env.cell is not None and self._redelegated(actor, env, env.cell):
                return
            previous = None if env.cell is None else self._enter_cell(env.cell, actor)
            try:
                for fn, future in env.items:
                    try:
                        result = fn(actor.state)
                    except Exception as err:
                        future.fail(err)
                    else:
                        future.fulfill(result)
            finally:
                if env.cell is not None:
                    env.cell.in_use_by = previous
        elif isinstance(env, InstallPrivate):
            with self._lock:
                actor.private = env.mailbox
                self.stats.private_installs += 1
            env.ack.fulfill(None)
        elif isinstance(env, RestorePublic):
            with self._lock:
                actor.private = None

    def _redelegated(self, actor: _Actor, env: Envelope, cell: _OwnershipCell) -> bool:
        """Forward an envelope whose object moved to another owner since it was sent."""
        with self._lock:
            if cell.owner == actor.id:
                return False
            self.stats.redelegations += 1
            target = self._actors[cell.owner]
            if isinstance(env, Perform):
                env.future.owner = target.id
            self._enqueue(target, None, env)
            return True

    # -- scheduling: deterministic ------------------------------------------------------------

    def _runnable(self, actor: _Actor) -> bool:
        if actor.suspended is not None:
            return actor.waiting is None or actor.waiting.done()
        return not actor.terminated and actor.has_work()

    def _step(self) -> bool:
        """Run one scheduling step; False when no actor can make progress."""
        runnable = [a for a in self._actors if self._runnable(a)]
        if not runnable:
            return False
        actor = runnable[self._rng.randrange(len(runnable))] if len(runnable) > 1 else runnable[0]
        if actor.suspended is not None:
            g = actor.suspended
            actor.suspended = None
            actor.waiting = None
            g.parent = getcurrent()
            g.switch()
        else:
            env = self._take(actor)
            g = _ActorGreenlet(self._run_envelope)
            g.actor = actor
            g.switch(actor, env)
        return True

    def _run_envelope(self, actor: _Actor, env: Envelope) -> None:
        try:
            self._execute(actor, env)
        finally:
            actor.status = _IDLE

    def _suspend(self, actor: _Actor, future: FutureValue) -> None:
        actor.waiting = future
        actor.suspended = getcurrent()
        actor.suspended.parent.switch()

    # -- scheduling: threads ------------------------------------------------------------------

    def _ensure_workers(self) -> None:
        with self._lock:
            while self._live_workers - self._blocked_workers < self.workers and not self._stopping:
                self._start_worker()

    def _start_worker(self) -> None:
        self._live_workers += 1
        thread = threading.Thread(target=self._worker, name=f"bestow-worker-{len(self._threads)}", daemon=True)
        self._threads.append(thread)
        thread.start()

    def _worker(self) -> None:
        cv = self._cv
        while True:
            with cv:
                while not self._runq:
                    if self._stopping or self._live_workers - self._blocked_workers > self.workers:
                        self._live_workers -= 1
                        return
                    cv.wait()
                actor = self._runq.popleft()
                if actor.terminated or not actor.has_work():
                    # its active queue was swapped out (an abandoned block) after scheduling
                    actor.status = _IDLE
                    continue
                env = self._take(actor)
            self._tls.actor = actor
            try:
                self._execute(actor, env)
            except BaseException as err:  # keep the worker alive; surfaced by run_until_quiescent
                self._faults.append(err)
            finally:
                self._tls.actor = None
            with cv:
                if not actor.terminated and actor.has_work():
                    actor.status = _SCHEDULED
                    self._runq.append(actor)
                else:
                    actor.status = _IDLE
                cv.notify_all()

    # -- waiting ------------------------------------------------------------------------------

    def _await(self, future: FutureValue, timeout: Optional[float]) -> None:
        actor = self._current()
        if actor is not None and future.owner == actor.id:
            raise SelfDeadlock(f"a{actor.id}:{actor.name} waited on a future that only it can fulfil")
        if self.deterministic:
            if actor is not None:
                self._suspend(actor, future)
                return
            while not future.done():
                if not self._step():
                    raise Timeout(f"no actor can make progress; {self._diagnostic()}")
            return
        if timeout is None:
            timeout = self.default_timeout
        if actor is None:
            if not future._wait_event(timeout):
                raise Timeout(f"future not fulfilled within {timeout}s; {self._diagnostic()}")
            return
        with self._cv:
            self._blocked_workers += 1
            if self._live_workers - self._blocked_workers < self.workers:
                self._start_worker()
        try:
            done = future._wait_event(timeout)
        finally:
            with self._cv:
                self._blocked_workers -= 1
        if not done:
            raise Timeout(f"future not fulfilled within {timeout}s; {self._diagnostic()}")

    def _quiescent(self) -> bool:
        for actor in self._actors:
            if actor.suspended is not None or actor.status != _IDLE:
                return False
            if actor.terminated:
                continue
            if actor.public or actor.private is not None:
                return False
        return True

    def _diagnostic(self) -> str:
        busy = [a.describe() for a in self._actors if not a.terminated and not a.idle()]
        return "non-quiescent actors: " + ("; ".join(busy) if busy else "none")

    def run_until_quiescent(self, timeout: Optional[float] = None) -> RuntimeStats:
        """Wait until every mailbox is empty and nothing is executing."""
        if self.deterministic:
            while self._step():
                pass
            if not self._quiescent():
                raise Timeout(self._diagnostic())
            return self.stats.snapshot()
        if timeout is None:
            timeout = self.default_timeout
        with self._cv:
            ok = self._cv.wait_for(lambda: self._quiescent() or self._stalled() or self._faults, timeout)
            if self._faults:
                raise self._faults[0]
            if not ok or not self._quiescent():
                raise Timeout(self._diagnostic())
            return self.stats.snapshot()

    def _stalled(self) -> bool:
        return not self._runq and all(a.status == _IDLE for a in self._actors)

    def shutdown(self) -> None:
        """Terminate every actor and stop the worker threads."""
        if self._closed:
            return
        for actor in list(self._actors):
            self.stop(actor.ref)
        self._closed = True
        if not self.deterministic:
            with self._cv:
                self._stopping = True
                self._cv.notify_all()
            current = threading.current_thread()
            for thread in self._threads:
                if thread is not current:
                    thread.join(timeout=5)
        else:
            for actor in self._actors:
                actor.suspended = None


__all__ = [
    "EXTERNAL",
    "ActorRef",
    "ActorSystem",
    "AtomicHandle",
    "Batch",
    "BestowedRef",
    "EnvelopeRecord",
    "InstallPrivate",
    "Perform",
    "RestorePublic",
    "RuntimeStats",
    "TransferOutcome",
    "TransferPolicy",
]
