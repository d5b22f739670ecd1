"""Bounded exhaustive exploration of interleavings.

Every reachable configuration (up to a depth bound) is checked for
well-formedness, data-race freedom and progress; every transition is checked
for preservation and, in the private-queue variant, atomicity of conversations.
Violating paths are shrunk by greedy label deletion and re-validated by replay.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

from .ast import ActorId, BestowedLoc, Expr, Lam, Loc, Mutate, TransferableLoc, Val, Variant
from .semantics import (
    AtReq,
    Config,
    EndPrivate,
    Fn,
    IllegalLabel,
    Label,
    PopPrivate,
    PopPublic,
    PrivateQueue,
    Semantics,
    TransferOwnership,
    current_redex,
    label_actor,
    reference,
)
from .wf import check_wf

PROPERTIES = ("wf", "preservation", "drf", "progress", "atomicity")


@dataclass
class Trace:
    initial: Config
    steps: List[Tuple[Label, Config]] = field(default_factory=list)

    @property
    def labels(self) -> List[Label]:
        return [label for label, _ in self.steps]

    @property
    def final(self) -> Config:
        return self.steps[-1][1] if self.steps else self.initial

    def configs(self) -> List[Config]:
        return [self.initial] + [cfg for _, cfg in self.steps]

    @classmethod
    def replay(cls, semantics: Semantics, initial: Config, labels: Sequence[Label]) -> "Trace":
        """Re-execute ``labels``; raises IllegalLabel if one is not enabled."""
        trace = cls(initial)
        cfg = initial
        for label in labels:
            cfg = semantics.apply(cfg, label)
            trace.steps.append((label, cfg))
        return trace


@dataclass
class Violation:
    property: str
    detail: str
    trace: Trace

    def to_dict(self) -> dict:
        return {"property": self.property, "detail": self.detail, "trace": [str(l) for l in self.trace.labels]}


@dataclass
class ExplorationReport:
    states_visited: int = 0
    max_depth: int = 0
    truncated: bool = False
    truncation_reason: Optional[str] = None
    violations: List[Violation] = field(default_factory=list)
    elapsed: float = 0.0

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "schema": 1,
            "statesVisited": self.states_visited,
            "maxDepth": self.max_depth,
            "truncated": self.truncated,
            "truncationReason": self.truncation_reason,
            "violations": [v.to_dict() for v in self.violations],
        }


# -- property oracles ------------------------------------------------------------


def check_drf(cfg: Config) -> List[Tuple[Tuple[int, int], int]]:
    """Pairs of distinct actors whose next step mutates the same location."""
    mutating: Dict[int, List[int]] = {}
    for aid, actor in enumerate(cfg.actors):
        redex = current_redex(actor.current)
        if isinstance(redex, Mutate) and isinstance(redex.target, Val) and isinstance(redex.target.v, Loc):
            mutating.setdefault(redex.target.v.loc, []).append(aid)
    races = []
    for loc, aids in sorted(mutating.items()):
        for i, a in enumerate(aids):
            for b in aids[i + 1 :]:
                races.append(((a, b), loc))
    return races


@dataclass(frozen=True)
class StuckReport:
    actor: int
    reason: str


def check_progress(
    cfg: Config, variant: Union[Variant, str], semantics: Optional[Semantics] = None
) -> List[StuckReport]:
    """Actors that are neither able to step, terminal, nor blocked on a private queue."""
    sem = semantics or reference(variant)
    active = {label_actor(label) for label in sem.enabled(cfg)}
    stuck = []
    for aid, actor in enumerate(cfg.actors):
        if aid in active:
            continue
        if isinstance(actor.current, Val) and not actor.queue:
            continue
        if sem.is_blocked(cfg, aid):
            continue
        if not isinstance(actor.current, Val):
            reason = "current expression cannot reduce"
        else:
            reason = f"cannot consume queue head {type(actor.queue[0]).__name__}"
        stuck.append(StuckReport(aid, reason))
    return stuck


def atomicity_step(before: Config, label: Label) -> Optional[str]:
    """Atomicity problem introduced by taking ``label`` from ``before``, if any.

    A private pop must consume a message from the conversation's initiator,
    and a message sent inside a conversation must never be consumed from the
    public queue.
    """
    if isinstance(label, (PopPrivate, EndPrivate)):
        actor = before.actors[label.actor]
        q = actor.queue[0].q
        pq: PrivateQueue = before.queue_map()[q]
        msg = pq.messages[0]
        if msg.sender is not None and pq.initiator is not None and msg.sender != pq.initiator:
            return f"a{label.actor} consumed a message from a{msg.sender} in q{q} initiated by a{pq.initiator}"
    elif isinstance(label, PopPublic):
        msg = before.actors[label.actor].queue[0]
        if isinstance(msg, Fn) and msg.conv is not None:
            return f"a{label.actor} consumed a message sent by a{msg.sender} inside q{msg.conv} from its public queue"
    return None


def check_atomicity(trace: Trace) -> List[str]:
    problems = []
    cfg = trace.initial
    for label, after in trace.steps:
        problem = atomicity_step(cfg, label)
        if problem:
            problems.append(problem)
        cfg = after
    return problems


# -- canonical state keys ----------------------------------------------------------


def canonical_key(cfg: Config):
    """A renaming-invariant key: locations and queue ids are numbered by first use."""
    locs: Dict[int, int] = {}
    qids: Dict[int, int] = {}

    def loc(n: int) -> int:
        return locs.setdefault(n, len(locs))

    def qid(n: Optional[int]) -> Optional[int]:
        return None if n is None else qids.setdefault(n, len(qids))

    def value(v):
        if isinstance(v, Loc):
            return ("L", loc(v.loc))
        if isinstance(v, BestowedLoc):
            return ("B", loc(v.loc), v.owner)
        if isinstance(v, TransferableLoc):
            return ("T", loc(v.loc))
        if isinstance(v, ActorId):
            return ("A", v.id)
        if isinstance(v, Lam):
            return ("F", v.param, str(v.param_type), expr(v.body))
        return ("U",)

    def expr(e: Expr):
        if isinstance(e, Val):
            return value(e.v)
        parts = [type(e).__name__]
        for name in e.__dataclass_fields__:
            if name == "pos":
                continue
            child = getattr(e, name)
            if name == "msg":
                parts.append(value(child))
            elif name in ("ty", "name"):
                parts.append(str(child))
            else:
                parts.append(expr(child))
        return tuple(parts)

    def message(m):
        if isinstance(m, Fn):
            return ("Fn", value(m.lam), m.sender, qid(m.conv))
        if isinstance(m, AtReq):
            return ("At", qid(m.q), m.sender)
        return ("End", m.sender)

    actors = []
    for actor in cfg.actors:
        actors.append(
            (
                loc(actor.this),
                expr(actor.current),
                tuple(message(m) for m in actor.queue),
                tuple((t, qid(q)) for t, q in actor.conversations),
                tuple(sorted(loc(l) for l in sorted(actor.heap))),
            )
        )
    owners = tuple(sorted((loc(l), a) for l, a in cfg.owners))
    queues = tuple(
        sorted((qid(q), pq.owner, pq.initiator, tuple(message(m) for m in pq.messages)) for q, pq in cfg.queues)
    )
    return (tuple(actors), owners, queues)


def exact_key(cfg: Config):
    return cfg


# -- exploration -------------------------------------------------------------------


def _state_problems(sem: Semantics, cfg: Config) -> List[Tuple[str, str]]:
    problems = []
    wf = check_wf(cfg, sem.variant)
    if not wf.ok:
        problems.append(("wf", "; ".join(str(v) for v in wf.violations)))
    for (a, b), loc in check_drf(cfg):
        problems.append(("drf", f"a{a} and a{b} both about to mutate l{loc}"))
    for stuck in check_progress(cfg, sem.variant, sem):
        problems.append(("progress", f"a{stuck.actor} is stuck: {stuck.reason}"))
    return problems


def _transition_problems(sem: Semantics, before: Config, before_wf: bool, label: Label, after: Config):
    problems = []
    if before_wf:
        wf = check_wf(after, sem.variant)
        if not wf.ok:
            problems.append(("preservation", "; ".join(str(v) for v in wf.violations)))
    if sem.variant is Variant.PRIVATE:
        problem = atomicity_step(before, label)
        if problem:
            problems.append(("atomicity", problem))
    return problems


def _final_violates(sem: Semantics, trace: Trace, prop: str) -> bool:
    """Whether the last state (or last transition) of ``trace`` violates ``prop``."""
    if prop in ("wf", "drf", "progress"):
        return any(p == prop for p, _ in _state_problems(sem, trace.final))
    if not trace.steps:
        return False
    configs = trace.configs()
    before, (label, after) = configs[-2], trace.steps[-1]
    before_wf = check_wf(before, sem.variant).ok
    return any(p == prop for p, _ in _transition_problems(sem, before, before_wf, label, after))


def minimize(sem: Semantics, trace: Trace, prop: str) -> Trace:
    """Greedily drop labels while the shortened path still replays and still violates ``prop``."""
    labels = list(trace.labels)
    changed = True
    while changed:
        changed = False
        i = len(labels) - 2  # the final label is what exhibits the violation
        while i >= 0:
            candidate = labels[:i] + labels[i + 1 :]
            try:
                shorter = Trace.replay(sem, trace.initial, candidate)
            except IllegalLabel:
                i -= 1
                continue
            if _final_violates(sem, shorter, prop):
                labels = candidate
                changed = True
            i -= 1
    return Trace.replay(sem, trace.initial, labels)


def explore(
    program: Expr,
    variant: Union[Variant, str] = Variant.CORE,
    depth_bound: int = 60,
    transfer_cap: int = 2,
    *,
    semantics: Optional[Semantics] = None,
    canonicalize: bool = False,
    state_budget: int = 500_000,
    minimize_traces: bool = True,
    check_program: bool = True,
) -> ExplorationReport:
    """Depth-first search over all label sequences from the program's initial state."""
    variant = Variant(variant)
    sem = semantics or reference(variant)
    if sem.variant is not variant:
        raise ValueError(f"semantics is for {sem.variant.value}, not {variant.value}")
    if check_program:
        sem.accepts(program)
    started = time.perf_counter()
    report = ExplorationReport()
    initial = sem.initial(program)

    # parent-pointer tree so violating paths can be rebuilt without storing them per state
    parents: List[Tuple[int, Optional[Label]]] = [(-1, None)]
    found: Dict[str, Tuple[int, str]] = {}
    seen: Dict[object, List[Tuple[int, int]]] = {}
    key_of: Callable = canonical_key if canonicalize else exact_key

    def path_to(node: int) -> List[Label]:
        labels = []
        while node > 0:
            node, label = parents[node][0], parents[node][1]
            labels.append(label)
        labels.reverse()
        return labels

    def record(prop: str, detail: str, node: int) -> None:
        if prop not in found:
            found[prop] = (node, detail)

    initial_wf = True
    stack = [(initial, 0, 0, 0)]  # cfg, depth, transfers, node
    while stack:
        cfg, depth, transfers, node = stack.pop()
        if canonicalize:
            key = key_of(cfg)
            previous = seen.setdefault(key, [])
            if any(d <= depth and t <= transfers for d, t in previous):
                continue
            previous.append((depth, transfers))
        report.states_visited += 1
        report.max_depth = max(report.max_depth, depth)
        if report.states_visited > state_budget:
            report.truncated = True
            report.truncation_reason = f"state budget of {state_budget} exhausted"
            break

        problems = _state_problems(sem, cfg)
        cfg_wf = True
        for prop, detail in problems:
            if prop == "wf":
                cfg_wf = False
                if depth == 0:
                    initial_wf = False
                    record("wf", detail, node)
            else:
                record(prop, detail, node)
        if not cfg_wf and depth > 0 and initial_wf:
            # the preservation failure was already recorded on the way in
            continue

        labels = sem.enabled(cfg)
        if not labels:
            continue
        if depth >= depth_bound:
            report.truncated = True
            report.truncation_reason = f"depth bound {depth_bound} reached before quiescence"
            continue
        children = []
        for label in labels:
            is_transfer = isinstance(label, TransferOwnership)
            if is_transfer and transfers >= transfer_cap:
                continue
            after = sem.apply(cfg, label)
            parents.append((node, label))
            child = len(parents) - 1
            for prop, detail in _transition_problems(sem, cfg, cfg_wf, label, after):
                record(prop, detail, child)
            children.append((after, depth + 1, transfers + int(is_transfer), child))
        stack.extend(reversed(children))

    for prop in PROPERTIES:
        if prop not in found:
            continue
        node, detail = found[prop]
        trace = Trace.replay(sem, initial, path_to(node))
        if minimize_traces:
            trace = minimize(sem, trace, prop)
        report.violations.append(Violation(prop, detail, trace))
    report.elapsed = time.perf_counter() - started
    return report


def first_violation(report: ExplorationReport, prop: str) -> Optional[Violation]:
    return next((v for v in report.violations if v.property == prop), None)


__all__ = [
    "PROPERTIES",
    "ExplorationReport",
    "StuckReport",
    "Trace",
    "Violation",
    "atomicity_step",
    "canonical_key",
    "check_atomicity",
    "check_drf",
    "check_progress",
    "explore",
    "minimize",
]
