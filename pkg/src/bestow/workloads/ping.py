"""Ping-pong throughput: plain actor sends vs bestowed references vs coalesced batches."""

from __future__ import annotations

import enum
import statistics
import time
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Sequence, Union

from ..runtime import ActorSystem, FutureValue


class PingMode(str, enum.Enum):
    DIRECT = "direct"
    BESTOWED = "bestowed"
    BESTOWED_ATOMIC = "bestowed-atomic"


class _Counter:
    __slots__ = ("n",)

    def __init__(self) -> None:
        self.n = 0


class _Pinger:
    def __init__(self, remaining: int, done: FutureValue):
        self.counter = _Counter()
        self.remaining = remaining
        self.done = done


@dataclass
class PingRun:
    seconds: float
    envelopes: int


@dataclass
class PingReport:
    mode: str
    messages: int
    runs: int
    batch: int
    deterministic: bool
    median_seconds: float
    messages_per_second: float
    envelopes: int
    samples: List[PingRun] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def _one_run(mode: PingMode, messages: int, batch: int, deterministic: bool, seed: int) -> PingRun:
    with ActorSystem(workers=2, deterministic=deterministic, seed=seed) as system:
        done = FutureValue(system)
        pinger = system.spawn(_Pinger(messages, done), "ping")
        ponger = system.spawn(_Counter(), "pong")

        if mode is PingMode.DIRECT:

            def pong(counter: _Counter) -> None:
                counter.n += 1
                pinger.send(on_pong)

            def on_pong(st: _Pinger) -> None:
                st.counter.n += 1
                st.remaining -= 1
                if st.remaining:
                    ponger.send(pong)
                else:
                    st.done.fulfill(st.counter.n)

            start = lambda: ponger.send(pong)  # noqa: E731

        else:
            ping_obj = pinger.send(lambda st: system.bestow(st)).get()
            pong_obj = ponger.send(lambda counter: system.bestow(counter)).get()

            if mode is PingMode.BESTOWED:

                def pong_b(counter: _Counter) -> None:
                    counter.n += 1
                    ping_obj.send(on_pong_b)

                def on_pong_b(st: _Pinger) -> None:
                    st.counter.n += 1
                    st.remaining -= 1
                    if st.remaining:
                        pong_obj.send(pong_b)
                    else:
                        st.done.fulfill(st.counter.n)

                start = lambda: pong_obj.send(pong_b)  # noqa: E731

            else:

                def bump(counter: _Counter) -> int:
                    counter.n += 1
                    return counter.n

                def loop(st: _Pinger) -> None:
                    left, last = st.remaining, None
                    while left:
                        size = min(batch, left)
                        last = system.coalesce(pong_obj, [bump] * size)[-1]
                        left -= size
                    st.remaining = 0
                    st.done.fulfill(last.get())

                start = lambda: pinger.send(loop)  # noqa: E731

        system.run_until_quiescent()
        before = system.stats.envelopes
        t0 = time.perf_counter()
        start()
        done.get()
        system.run_until_quiescent()
        elapsed = time.perf_counter() - t0
        return PingRun(elapsed, system.stats.envelopes - before)


def _report(mode: PingMode, messages: int, batch: int, deterministic: bool, samples: List[PingRun]) -> PingReport:
    median = statistics.median(s.seconds for s in samples)
    return PingReport(
        mode.value,
        messages,
        len(samples),
        batch,
        deterministic,
        median,
        messages / median if median > 0 else float("inf"),
        samples[0].envelopes,
        samples,
    )


def _check_args(messages: int, runs: int, batch: int) -> None:
    if messages < 1:
        raise ValueError("messages must be at least 1")
    if runs < 1 or batch < 1:
        raise ValueError("runs and batch must be positive")


def bench_ping(
    messages: int,
    mode: Union[PingMode, str] = PingMode.DIRECT,
    *,
    runs: int = 5,
    batch: int = 1000,
    deterministic: bool = True,
    seed: int = 0,
) -> PingReport:
    """Median wall time over ``runs`` exchanges of ``messages`` pings."""
    _check_args(messages, runs, batch)
    mode = PingMode(mode)
    samples = [_one_run(mode, messages, batch, deterministic, seed + i) for i in range(runs)]
    return _report(mode, messages, batch, deterministic, samples)


def compare_ping(
    messages: int,
    modes: Sequence[Union[PingMode, str]] = tuple(PingMode),
    *,
    runs: int = 5,
    batch: int = 1000,
    deterministic: bool = True,
    seed: int = 0,
) -> Dict[str, PingReport]:
    """Benchmark several modes with their runs interleaved.

    Round ``i`` runs every mode once before round ``i + 1`` starts, so slow
    drift of the machine (thermal, other tenants) hits all modes alike.
    """
    _check_args(messages, runs, batch)
    chosen = [PingMode(m) for m in modes]
    samples: Dict[PingMode, List[PingRun]] = {m: [] for m in chosen}
    for i in range(runs):
        for m in chosen:
            samples[m].append(_one_run(m, messages, batch, deterministic, seed + i))
    return {m.value: _report(m, messages, batch, deterministic, samples[m]) for m in chosen}


def expected_envelopes(mode: Union[PingMode, str], messages: int, batch: int) -> int:
    mode = PingMode(mode)
    if mode is PingMode.BESTOWED_ATOMIC:
        return 1 + -(-messages // batch)
    return 2 * messages

