import pytest

from bestow.calculus.ast import PASSIVE, UNIT_E, ActorId, App, Lam, Loc, Mutate, Send, Val, Variant
from bestow.calculus.explorer import (
    PROPERTIES,
    Trace,
    canonical_key,
    check_atomicity,
    check_drf,
    check_progress,
    explore,
    first_violation,
)
from bestow.calculus.mutants import MUTANTS
from bestow.calculus.parser import parse
from bestow.calculus.semantics import (
    ActorState,
    AtReq,
    Config,
    IllegalLabel,
    PrivateQueue,
    RunExpr,
    TransferOwnership,
    reference,
)
from bestow.corpus import get_program, load_corpus


def actor(this, heap=None, queue=(), current=UNIT_E, conversations=()):
    return ActorState(this, frozenset(heap or {this}), tuple(queue), current, tuple(conversations))


def program(name):
    prog = get_program(name)
    return parse(prog.source, prog.variant), prog.variant


# -- oracles ------------------------------------------------------------------------


def test_drf_examples():
    mut = lambda l: Mutate(Val(Loc(l)))  # noqa: E731
    both = Config((actor(0, {0}, current=mut(1)), actor(2, {1, 2}, current=mut(1))), next_loc=3)
    assert check_drf(both) == [((0, 1), 1)]
    apart = Config((actor(0, {0, 1}, current=mut(1)), actor(2, {2, 3}, current=mut(2))), next_loc=4)
    assert check_drf(apart) == []
    one = Config((actor(0, {0, 1}, current=mut(1)), actor(2)), next_loc=3)
    assert check_drf(one) == []


def test_progress_examples():
    assert check_progress(Config((actor(0),)), Variant.CORE) == []
    blocked = Config(
        (actor(0, conversations=[(1, 0)]), actor(1, queue=[AtReq(0, 0)])),
        queues=((0, PrivateQueue((), 1, 0)),),
        next_loc=2,
        next_queue=1,
    )
    assert check_progress(blocked, Variant.PRIVATE) == []
    stuck = Config((actor(0, current=App(UNIT_E, UNIT_E)),))
    (report,) = check_progress(stuck, Variant.CORE)
    assert report.actor == 0


def test_atomicity_oracle_quiet_without_blocks():
    expr, variant = program("core/ping")
    sem = reference(variant)
    cfg = sem.initial(expr)
    labels = []
    while sem.enabled(cfg):
        labels.append(sem.enabled(cfg)[0])
        cfg = sem.apply(cfg, labels[-1])
    assert check_atomicity(Trace.replay(sem, sem.initial(expr), labels)) == []


# -- exploration ----------------------------------------------------------------------


def test_spawn_only_program():
    report = explore(parse("new c"), Variant.CORE, 10)
    assert report.ok and not report.truncated
    assert 1 < report.states_visited < 10


def test_two_producers_are_race_free():
    expr, variant = program("core/two_producers")
    report = explore(expr, variant, 60)
    assert report.ok and not report.truncated


def test_atomic_with_noise_is_atomic():
    expr, variant = program("private/atomic_with_noise")
    report = explore(expr, variant, 60, canonicalize=True)
    assert report.ok and not report.truncated


def test_rejected_program_is_refused():
    expr, variant = program("rejects/leak")
    with pytest.raises(Exception):
        explore(expr, variant)


def test_state_budget_truncates():
    expr, variant = program("transfer/two_workers")
    report = explore(expr, variant, 60, state_budget=50)
    assert report.truncated and "budget" in report.truncation_reason
    assert report.to_dict()["truncated"] is True


def test_depth_bound_truncates():
    expr, variant = program("core/ping")
    report = explore(expr, variant, 2)
    assert report.truncated and report.max_depth == 2


def test_transfer_cap_limits_transfers():
    expr, variant = program("transfer/transfer_pingpong")
    for cap in (0, 1):
        assert explore(expr, variant, 60, cap, canonicalize=True).ok
    zero = explore(expr, variant, 60, 0, canonicalize=True).states_visited
    two = explore(expr, variant, 60, 2, canonicalize=True).states_visited
    assert zero < two


def test_report_schema_and_determinism():
    expr, variant = program("private/atomic_pair")
    a = explore(expr, variant, 60).to_dict()
    b = explore(expr, variant, 60).to_dict()
    assert a == b
    assert set(a) == {"schema", "statesVisited", "maxDepth", "truncated", "truncationReason", "violations"}
    assert a["schema"] == 1


def test_canonicalization_agrees_on_verdict():
    for name in ("core/relay", "transfer/delegate", "private/atomic_twice"):
        expr, variant = program(name)
        plain = explore(expr, variant, 60)
        canon = explore(expr, variant, 60, canonicalize=True)
        assert plain.ok == canon.ok
        assert canon.states_visited <= plain.states_visited


def test_canonical_key_ignores_location_names():
    a = Config((actor(0, {0, 3}),), next_loc=4)
    b = Config((actor(0, {0, 7}),), next_loc=8)
    assert canonical_key(a) == canonical_key(b)


# -- mutants ----------------------------------------------------------------------------

MUTANT_PROGRAMS = {
    "leak-premise-dropped": "rejects/leak_race",
    "bestowed-send-to-sender": "core/bestow_roundtrip",
    "transfer-mid-message": "transfer/transfer_pingpong",
    "private-send-to-public": "private/atomic_with_noise",
    "end-to-public": "private/atomic_with_noise",
}


def test_five_mutants_registered():
    assert set(MUTANTS) == set(MUTANT_PROGRAMS)


@pytest.mark.parametrize("name", sorted(MUTANT_PROGRAMS))
def test_mutant_detected_with_replayable_minimal_trace(name):
    mutant = MUTANTS[name]
    expr, variant = program(MUTANT_PROGRAMS[name])
    assert variant is mutant.variant
    sem = mutant.semantics()
    report = explore(expr, variant, 60, semantics=sem, canonicalize=True, check_program=False)
    assert report.violations, name
    for v in report.violations:
        assert v.property in PROPERTIES
        replayed = Trace.replay(sem, sem.initial(expr), v.trace.labels)
        assert replayed.final == v.trace.final


def test_leak_mutant_finds_race_reference_does_not():
    expr, variant = program("rejects/leak_race")
    sem = MUTANTS["leak-premise-dropped"].semantics()
    report = explore(expr, variant, 60, semantics=sem, canonicalize=True, check_program=False)
    drf = first_violation(report, "drf")
    assert drf is not None and drf.trace.labels
    final = drf.trace.final
    assert check_drf(final)


def test_private_routing_mutant_breaks_atomicity():
    expr, variant = program("private/atomic_with_noise")
    sem = MUTANTS["private-send-to-public"].semantics()
    report = explore(expr, variant, 60, semantics=sem, canonicalize=True)
    v = first_violation(report, "atomicity")
    assert v is not None
    assert check_atomicity(v.trace)


def test_violation_dict_has_label_strings():
    expr, variant = program("core/bestow_roundtrip")
    report = explore(expr, variant, 60, semantics=MUTANTS["bestowed-send-to-sender"].semantics(), canonicalize=True)
    d = report.to_dict()
    assert d["violations"] and all(isinstance(l, str) for v in d["violations"] for l in v["trace"])


@pytest.mark.parametrize("prog", [p for p in load_corpus() if p.accepted], ids=lambda p: f"{p.group}/{p.name}")
def test_corpus_programs_explore_clean(prog):
    report = explore(parse(prog.source, prog.variant), prog.variant, 60, 2, canonicalize=True)
    assert report.ok, [v.to_dict() for v in report.violations]
    assert not report.truncated


def test_replay_rejects_disabled_label():
    expr, variant = program("core/spawn")
    sem = reference(variant)
    with pytest.raises(IllegalLabel):
        Trace.replay(sem, sem.initial(expr), [RunExpr(5)])
    with pytest.raises(IllegalLabel):
        Trace.replay(sem, sem.initial(expr), [TransferOwnership(1, 1)])


def test_minimized_trace_is_one_minimal():
    from bestow.calculus.explorer import _final_violates

    expr, variant = program("transfer/transfer_pingpong")
    sem = MUTANTS["transfer-mid-message"].semantics()
    report = explore(expr, variant, 60, semantics=sem, canonicalize=True)
    for v in report.violations:
        labels = v.trace.labels
        for i in range(len(labels) - 1):
            shorter = labels[:i] + labels[i + 1 :]
            try:
                t = Trace.replay(sem, sem.initial(expr), shorter)
            except IllegalLabel:
                continue
            assert not _final_violates(sem, t, v.property)


def test_pending_send_is_not_a_race():
    msg = Send(Val(ActorId(0)), Lam("x", PASSIVE, UNIT_E))
    assert check_drf(Config((actor(0, current=msg),))) == []
