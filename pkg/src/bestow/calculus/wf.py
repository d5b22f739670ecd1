"""Well-formedness oracles for machine configurations.

Violations are accumulated rather than raised so one run can report several
broken invariants at once.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import List, Tuple, Union

from .ast import ActorId, BestowedLoc, Expr, Lam, Loc, PassiveType, TransferableLoc, Val, Variant, subvalues
from .semantics import AtReq, Config, EndMsg, Fn, Message
from .statics import CalcTypeError, typecheck, typecheck_value


@dataclass(frozen=True)
class WfViolation:
    rule: str
    subject: str
    detail: str

    def __str__(self) -> str:
        return f"{self.rule} [{self.subject}]: {self.detail}"


@dataclass
class WfReport:
    violations: List[WfViolation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, rule: str, subject: str, detail: str) -> None:
        self.violations.append(WfViolation(rule, subject, detail))


def check_wf_core(cfg: Config) -> WfReport:
    report = WfReport()
    _check_base(cfg, Variant.CORE, report)
    return report


def check_wf_transfer(cfg: Config) -> WfReport:
    report = WfReport()
    _check_base(cfg, Variant.TRANSFER, report)
    _check_transfer(cfg, report)
    return report


def check_wf_private(cfg: Config) -> WfReport:
    report = WfReport()
    _check_base(cfg, Variant.PRIVATE, report)
    _check_private(cfg, report)
    return report


_CHECKERS = {Variant.CORE: check_wf_core, Variant.TRANSFER: check_wf_transfer, Variant.PRIVATE: check_wf_private}


def check_wf(cfg: Config, variant: Union[Variant, str]) -> WfReport:
    return _CHECKERS[Variant(variant)](cfg)


# -- shared rules --------------------------------------------------------------


def _check_base(cfg: Config, variant: Variant, report: WfReport) -> None:
    seen = {}
    for aid, actor in enumerate(cfg.actors):
        for loc in actor.heap:
            if loc in seen:
                report.add("wf-heap", f"l{loc}", f"in the local heaps of a{seen[loc]} and a{aid}")
            else:
                seen[loc] = aid
    for aid, actor in enumerate(cfg.actors):
        subject = f"a{aid}"
        if actor.this not in actor.heap:
            report.add("wf-actor", subject, f"this l{actor.this} is not in the local heap")
        if actor.conversations and variant is not Variant.PRIVATE:
            report.add("wf-actor", subject, "conversations outside the private-queue variant")
        try:
            typecheck({}, actor.current, variant)
        except CalcTypeError as err:
            report.add("wf-actor", subject, f"current expression does not typecheck: {err}")
        _check_values(cfg, aid, actor.current, "wf-actor", subject, report)
        for i, msg in enumerate(actor.queue):
            _check_message(cfg, variant, aid, msg, "wf-queue", f"{subject}.queue[{i}]", report)


def _check_values(cfg: Config, aid: int, e: Expr, rule: str, subject: str, report: WfReport) -> None:
    heap = cfg.actors[aid].heap
    for v in subvalues(e):
        if isinstance(v, Loc) and v.loc not in heap:
            report.add(rule, subject, f"l{v.loc} is not in the local heap of a{aid}")
        elif isinstance(v, ActorId) and not 0 <= v.id < len(cfg.actors):
            report.add(rule, subject, f"unknown actor a{v.id}")
        elif isinstance(v, BestowedLoc):
            if not 0 <= v.owner < len(cfg.actors):
                report.add(rule, subject, f"bestowed reference to unknown actor a{v.owner}")
            elif v.loc not in cfg.actors[v.owner].heap:
                report.add(rule, subject, f"bestowed l{v.loc} is not owned by a{v.owner}")


def _check_message(
    cfg: Config, variant: Variant, aid: int, msg: Message, rule: str, subject: str, report: WfReport
) -> None:
    if not isinstance(msg, Fn):
        if variant is not Variant.PRIVATE:
            report.add(rule, subject, f"{type(msg).__name__} outside the private-queue variant")
        return
    lam = msg.lam
    if not isinstance(lam, Lam) or not isinstance(lam.param_type, PassiveType):
        report.add(rule, subject, "message is not a lambda over a passive object")
        return
    try:
        typecheck_value(lam, variant)
    except CalcTypeError as err:
        report.add(rule, subject, f"message does not typecheck: {err}")
    _check_values(cfg, aid, Val(lam), rule, subject, report)


# -- transfer variant ----------------------------------------------------------------


def _check_transfer(cfg: Config, report: WfReport) -> None:
    owners = cfg.owner_map()
    for loc, aid in cfg.owners:
        if not 0 <= aid < len(cfg.actors) or loc not in cfg.actors[aid].heap:
            report.add("wf-owners", f"l{loc}", f"owner a{aid} does not hold it in its local heap")
    for aid, actor in enumerate(cfg.actors):
        subject = f"a{aid}"
        if actor.this in owners:
            report.add("wf-actor-trans", subject, f"this l{actor.this} has transferable ownership")
        for v in subvalues(actor.current):
            if isinstance(v, TransferableLoc) and v.loc not in owners:
                report.add("wf-actor-trans", subject, f"transferable l{v.loc} has no owner entry")
        for i, msg in enumerate(actor.queue):
            if not isinstance(msg, Fn):
                continue
            for v in subvalues(Val(msg.lam)):
                if isinstance(v, Loc) and v.loc in owners:
                    report.add(
                        "wf-queue-message-trans", f"{subject}.queue[{i}]", f"plain l{v.loc} is transferable"
                    )
                elif isinstance(v, TransferableLoc) and v.loc not in owners:
                    report.add(
                        "wf-queue-message-trans", f"{subject}.queue[{i}]", f"transferable l{v.loc} has no owner entry"
                    )


# -- private-queue variant -------------------------------------------------------------


def _check_private(cfg: Config, report: WfReport) -> None:
    queues = cfg.queue_map()
    referenced: Counter = Counter()
    for actor in cfg.actors:
        referenced.update(q for _, q in actor.conversations)

    for q, pq in cfg.queues:
        subject = f"q{q}"
        if not 0 <= pq.owner < len(cfg.actors):
            report.add("wf-queue-map", subject, f"owner a{pq.owner} does not exist")
            continue
        has_end = False
        for i, msg in enumerate(pq.messages):
            if isinstance(msg, AtReq):
                report.add("wf-queue-map", subject, "private queue holds a conversation request")
            elif isinstance(msg, EndMsg):
                has_end = True
            else:
                _check_message(cfg, Variant.PRIVATE, pq.owner, msg, "wf-queue-map", f"{subject}[{i}]", report)
        if has_end and referenced[q]:
            report.add("wf-queue-map", subject, "ended queue is still referenced by a conversation")

    for q, count in referenced.items():
        if count > 1:
            report.add("wf-heap-priv", f"q{q}", f"used by {count} conversations")

    for aid, actor in enumerate(cfg.actors):
        subject = f"a{aid}"
        for target, q in actor.conversations:
            pq = queues.get(q)
            if pq is None:
                report.add("wf-actor-priv", subject, f"conversation with a{target} uses missing q{q}")
            elif pq.owner != target:
                report.add("wf-actor-priv", subject, f"q{q} is owned by a{pq.owner}, not a{target}")
        requests: List[int] = []
        for msg in actor.queue:
            if isinstance(msg, EndMsg):
                report.add("wf-actor-priv", subject, "public queue holds an end marker")
            elif isinstance(msg, AtReq):
                requests.append(msg.q)
                pq = queues.get(msg.q)
                if pq is None:
                    report.add("wf-queue-atomic", subject, f"request for missing q{msg.q}")
                elif pq.owner != aid:
                    report.add("wf-queue-atomic", subject, f"request for q{msg.q} owned by a{pq.owner}")
        dupes = sorted(q for q, n in Counter(requests).items() if n > 1)
        if dupes:
            report.add("wf-actor-priv", subject, f"repeated conversation requests {dupes}")


def violations_summary(report: WfReport) -> Tuple[str, ...]:
    return tuple(str(v) for v in report.violations)
