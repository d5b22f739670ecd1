"""Drive a single execution of a program under a chosen schedule."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Union

from .ast import Expr, Variant
from .parser import pretty
from .semantics import (
    AtReq,
    Config,
    EndMsg,
    Fn,
    IllegalLabel,
    Label,
    Message,
    Semantics,
    parse_label,
    reference,
)
from .wf import check_wf

Chooser = Callable[[Config, List[Label], int], Optional[Label]]


class ScheduleError(ValueError):
    pass


@dataclass(frozen=True)
class Schedule:
    """``fifo``, ``random:<seed>`` or ``script:<labels>``."""

    kind: str
    seed: int = 0
    script: tuple = ()

    @classmethod
    def parse(cls, text: str, read_file: Callable[[str], str] = None) -> "Schedule":
        if text == "fifo":
            return cls("fifo")
        head, _, rest = text.partition(":")
        if head == "random":
            try:
                return cls("random", seed=int(rest))
            except ValueError:
                raise ScheduleError(f"bad random seed in schedule {text!r}") from None
        if head == "script" and rest:
            reader = read_file or (lambda p: open(p, encoding="utf-8").read())
            labels = []
            for n, line in enumerate(reader(rest).splitlines(), 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                try:
                    labels.append(parse_label(line))
                except ValueError as err:
                    raise ScheduleError(f"{rest}:{n}: {err}") from None
            return cls("script", script=tuple(labels))
        raise ScheduleError(f"unknown schedule {text!r} (expected fifo, random:<seed> or script:<file>)")

    def chooser(self) -> Chooser:
        if self.kind == "fifo":
            # lowest actor first; labels are already listed in actor order
            return lambda cfg, labels, step: labels[0]
        if self.kind == "random":
            rng = random.Random(self.seed)
            return lambda cfg, labels, step: rng.choice(labels)
        script = self.script

        def scripted(cfg: Config, labels: List[Label], step: int) -> Optional[Label]:
            if step >= len(script):
                return None
            if script[step] not in labels:
                raise IllegalLabel(f"step {step + 1}: {script[step]} is not enabled")
            return script[step]

        return scripted


@dataclass
class RunResult:
    labels: List[Label] = field(default_factory=list)
    final: Optional[Config] = None
    quiescent: bool = False
    wf_failures: List[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "schema": 1,
            "trace": [str(l) for l in self.labels],
            "steps": len(self.labels),
            "quiescent": self.quiescent,
            "wfFailures": list(self.wf_failures),
            "final": config_to_dict(self.final) if self.final is not None else None,
        }


def run_program(
    program: Expr,
    variant: Union[Variant, str],
    schedule: Schedule,
    *,
    max_steps: int = 1000,
    wf_every_step: bool = False,
    semantics: Optional[Semantics] = None,
) -> RunResult:
    """Step the program until nothing is enabled, the script ends, or ``max_steps`` is hit."""
    sem = semantics or reference(variant)
    cfg = sem.initial(program)
    choose = schedule.chooser()
    result = RunResult(final=cfg)
    if wf_every_step:
        _note_wf(result, cfg, sem.variant, 0)
    for step in range(max_steps):
        labels = sem.enabled(cfg)
        if not labels:
            result.quiescent = True
            break
        label = choose(cfg, labels, step)
        if label is None:
            break
        cfg = sem.apply(cfg, label)
        result.labels.append(label)
        result.final = cfg
        if wf_every_step:
            _note_wf(result, cfg, sem.variant, step + 1)
    else:
        result.quiescent = not sem.enabled(cfg)
    return result


def _note_wf(result: RunResult, cfg: Config, variant: Variant, step: int) -> None:
    report = check_wf(cfg, variant)
    result.wf_failures.extend(f"after step {step}: {v}" for v in report.violations)


# -- rendering ---------------------------------------------------------------------


def _message(m: Message) -> str:
    if isinstance(m, Fn):
        origin = "" if m.sender is None else f" from a{m.sender}"
        return f"{pretty(m.lam)}{origin}"
    if isinstance(m, AtReq):
        return f"atomic-request q{m.q}"
    if isinstance(m, EndMsg):
        return "end"
    return repr(m)


def config_to_dict(cfg: Config) -> dict:
    return {
        "actors": [
            {
                "id": f"a{i}",
                "this": f"l{a.this}",
                "heap": [f"l{l}" for l in sorted(a.heap)],
                "current": pretty(a.current),
                "queue": [_message(m) for m in a.queue],
                "conversations": {f"a{t}": f"q{q}" for t, q in a.conversations},
            }
            for i, a in enumerate(cfg.actors)
        ],
        "owners": {f"l{l}": f"a{o}" for l, o in cfg.owners},
        "queues": {
            f"q{q}": {"owner": f"a{pq.owner}", "messages": [_message(m) for m in pq.messages]}
            for q, pq in cfg.queues
        },
    }


def render_config(cfg: Config) -> str:
    lines = []
    for i, a in enumerate(cfg.actors):
        heap = ",".join(f"l{l}" for l in sorted(a.heap))
        lines.append(f"a{i} this=l{a.this} heap={{{heap}}}")
        lines.append(f"  current: {pretty(a.current)}")
        for m in a.queue:
            lines.append(f"  queued: {_message(m)}")
        for t, q in a.conversations:
            lines.append(f"  talking to a{t} via q{q}")
    for l, o in cfg.owners:
        lines.append(f"l{l} owned by a{o}")
    for q, pq in cfg.queues:
        lines.append(f"q{q} at a{pq.owner}: " + "; ".join(_message(m) for m in pq.messages))
    return "\n".join(lines)


def replay_labels(sem: Semantics, program: Expr, labels: Sequence[Label]) -> Config:
    cfg = sem.initial(program)
    for label in labels:
        cfg = sem.apply(cfg, label)
    return cfg
