"""Run the same batch of operations as one coalesced envelope and as an atomic block."""

from __future__ import annotations

import copy
import random
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Dict, List, Tuple

from ..runtime import ActorSystem

Op = Callable[[Any], Any]


@dataclass
class Register:
    total: int = 0
    product: int = 1
    log: List[int] = field(default_factory=list)
    tags: Dict[str, int] = field(default_factory=dict)
    last: int = 0


# (name, argument) pairs keep batches printable and reproducible
Step = Tuple[str, int]


def apply_step(reg: Register, step: Step) -> int:
    name, arg = step
    if name == "add":
        reg.total += arg
    elif name == "mul":
        reg.product = (reg.product * arg) % 1_000_003
    elif name == "log":
        reg.log.append(arg)
    elif name == "tag":
        key = f"k{arg % 4}"
        reg.tags[key] = reg.tags.get(key, 0) + arg
    elif name == "swap":
        reg.total, reg.last = reg.last, reg.total
        return reg.total
    else:
        raise ValueError(f"unknown step {name!r}")
    reg.last = arg
    return reg.total


STEP_NAMES = ("add", "mul", "log", "tag", "swap")


def random_batch(rng: random.Random, max_len: int = 8) -> List[Step]:
    return [(rng.choice(STEP_NAMES), rng.randint(-9, 9)) for _ in range(rng.randint(1, max_len))]


def _ops(batch: List[Step]) -> List[Op]:
    return [lambda reg, s=s: apply_step(reg, s) for s in batch]


@dataclass
class BatchOutcome:
    state: dict
    results: List[int]
    envelopes: int


def run_coalesced(batch: List[Step], start: Register, *, deterministic: bool = True, seed: int = 0) -> BatchOutcome:
    with ActorSystem(deterministic=deterministic, seed=seed) as system:
        target = system.spawn(copy.deepcopy(start), "register")
        holder = target.send(lambda reg: system.bestow(reg)).get()
        system.run_until_quiescent()
        before = system.stats.envelopes
        futures = system.coalesce(holder, _ops(batch))
        results = [f.get() for f in futures]
        system.run_until_quiescent()
        spent = system.stats.envelopes - before
        state = target.send(lambda reg: asdict(reg)).get()
    return BatchOutcome(state, results, spent)


def run_atomic(batch: List[Step], start: Register, *, deterministic: bool = True, seed: int = 0) -> BatchOutcome:
    with ActorSystem(deterministic=deterministic, seed=seed) as system:
        target = system.spawn(copy.deepcopy(start), "register")
        holder = target.send(lambda reg: system.bestow(reg)).get()
        system.run_until_quiescent()
        before = system.stats.envelopes

        def body(handle) -> List[int]:
            return [handle.send(op).get() for op in _ops(batch)]

        results = system.atomic(holder, body)
        system.run_until_quiescent()
        spent = system.stats.envelopes - before
        state = target.send(lambda reg: asdict(reg)).get()
    return BatchOutcome(state, results, spent)


@dataclass
class Mismatch:
    index: int
    batch: List[Step]
    coalesced: dict
    atomic: dict


def compare_batches(count: int = 200, *, seed: int = 0, deterministic: bool = True) -> List[Mismatch]:
    """Run ``count`` random batches both ways; return those whose final states differ."""
    rng = random.Random(seed)
    mismatches = []
    for i in range(count):
        start = Register(total=rng.randint(-5, 5), last=rng.randint(0, 3))
        batch = random_batch(rng)
        a = run_coalesced(batch, start, deterministic=deterministic, seed=seed + i)
        b = run_atomic(batch, start, deterministic=deterministic, seed=seed + i)
        if a.state != b.state or a.results != b.results:
            mismatches.append(Mismatch(i, batch, a.state, b.state))
    return mismatches
