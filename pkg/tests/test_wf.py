import dataclasses

from hypothesis import given, settings
from hypothesis import strategies as st

from bestow.calculus.ast import PASSIVE, UNIT_E, ActorId, BestowedLoc, Lam, Loc, Mutate, Send, TransferableLoc, Val, Variant
from bestow.calculus.parser import parse
from bestow.calculus.semantics import ActorState, AtReq, Config, EndMsg, Fn, PrivateQueue, initial_config, reference
from bestow.calculus.wf import check_wf, check_wf_core, check_wf_private, check_wf_transfer
from bestow.corpus import load_corpus


def actor(this, heap=None, queue=(), current=UNIT_E, conversations=()):
    return ActorState(this, frozenset(heap or {this}), tuple(queue), current, tuple(conversations))


def rules(report):
    return {v.rule for v in report.violations}


def test_initial_config_is_wf():
    for prog in load_corpus():
        if prog.accepted:
            cfg = initial_config(parse(prog.source, prog.variant))
            assert check_wf(cfg, prog.variant).ok, prog.name


def test_shared_location_breaks_wf_heap():
    cfg = Config((actor(0, {0, 5}), actor(1, {1, 5})), next_loc=6)
    assert "wf-heap" in rules(check_wf_core(cfg))


def test_foreign_location_breaks_wf_actor():
    cfg = Config((actor(0, current=Mutate(Val(Loc(9)))),), next_loc=10)
    report = check_wf_core(cfg)
    assert not report.ok and rules(report) == {"wf-actor"}


def test_this_outside_heap_and_unknown_references():
    cfg = Config((ActorState(0, frozenset(), (), Send(Val(ActorId(7)), Lam("x", PASSIVE, UNIT_E))),), next_loc=1)
    details = [v.detail for v in check_wf_core(cfg).violations]
    assert any("this" in d for d in details)
    assert any("unknown actor a7" in d for d in details)


def test_bestowed_reference_must_point_at_owner_heap():
    cfg = Config((actor(0, {0, 1}), actor(2, current=Send(Val(BestowedLoc(1, 1)), Lam("x", PASSIVE, UNIT_E)))), next_loc=3)
    assert "wf-actor" in rules(check_wf_core(cfg))


def test_queued_message_may_only_hold_receiver_locations():
    # bestowed wrappers carry a location of the receiving owner; anything else is a leak
    own = Fn(Lam("this", PASSIVE, Mutate(Val(Loc(0)))))
    assert check_wf_core(Config((actor(0, queue=[own]),), next_loc=1)).ok
    foreign = Fn(Lam("x", PASSIVE, Mutate(Val(Loc(1)))))
    cfg = Config((actor(0, queue=[foreign]), actor(2, {1, 2})), next_loc=3)
    assert "wf-queue" in rules(check_wf_core(cfg))


def test_violations_accumulate():
    cfg = Config((actor(0, {0, 5}), actor(1, {1, 5}, current=Mutate(Val(Loc(9))))), next_loc=10)
    assert {"wf-heap", "wf-actor"} <= rules(check_wf_core(cfg))


def test_owners_examples():
    ok = Config((actor(0, {0, 1}),), owners=((1, 0),), next_loc=2)
    assert check_wf_transfer(ok).ok
    bad_this = Config((actor(0, {0, 1}),), owners=((0, 0), (1, 0)), next_loc=2)
    assert "wf-actor-trans" in rules(check_wf_transfer(bad_this))
    missing = Config((actor(0, {0, 1}),), owners=((1, 1),), next_loc=2)
    assert "wf-owners" in rules(check_wf_transfer(missing))


def test_queued_transferable_needs_owner_entry():
    relay = Fn(Lam("this", PASSIVE, Send(Val(TransferableLoc(4)), Lam("x", PASSIVE, UNIT_E))))
    cfg = Config((actor(0, queue=[relay]),), next_loc=5)
    assert "wf-queue-message-trans" in rules(check_wf_transfer(cfg))


def test_private_examples():
    ok = Config((actor(0, conversations=[(1, 0)]), actor(1)), queues=((0, PrivateQueue((), 1, 0)),), next_loc=2, next_queue=1)
    assert check_wf_private(ok).ok
    shared = Config(
        (actor(0, conversations=[(1, 0)]), actor(1), actor(2, conversations=[(1, 0)])),
        queues=((0, PrivateQueue((), 1, 0)),),
        next_loc=3,
        next_queue=1,
    )
    assert "wf-heap-priv" in rules(check_wf_private(shared))
    end_public = Config((actor(0, queue=[EndMsg(1)]), actor(1)), next_loc=2)
    assert "wf-actor-priv" in rules(check_wf_private(end_public))


def test_private_queue_rules():
    dangling = Config((actor(0), actor(1, queue=[AtReq(3, 0)])), next_loc=2)
    assert "wf-queue-atomic" in rules(check_wf_private(dangling))
    nested = Config((actor(0), actor(1)), queues=((0, PrivateQueue((AtReq(1, 0),), 1, 0)),), next_loc=2, next_queue=2)
    assert "wf-queue-map" in rules(check_wf_private(nested))
    ended_but_open = Config(
        (actor(0, conversations=[(1, 0)]), actor(1)), queues=((0, PrivateQueue((EndMsg(0),), 1, 0)),), next_loc=2, next_queue=1
    )
    assert "wf-queue-map" in rules(check_wf_private(ended_but_open))
    wrong_owner = Config((actor(0, conversations=[(1, 0)]), actor(1)), queues=((0, PrivateQueue((), 0, 0)),), next_loc=2, next_queue=1)
    assert "wf-actor-priv" in rules(check_wf_private(wrong_owner))


def test_conversations_outside_private_variant():
    cfg = Config((actor(0, conversations=[(1, 0)]), actor(1)), next_loc=2)
    assert not check_wf_core(cfg).ok


def test_oracle_is_pure():
    cfg = Config((actor(0, {0, 5}), actor(1, {1, 5})), next_loc=6)
    assert check_wf_core(cfg).violations == check_wf_core(cfg).violations


ACCEPTED = [p for p in load_corpus() if p.accepted]


@settings(max_examples=150, deadline=None)
@given(st.sampled_from(ACCEPTED), st.lists(st.integers(0, 999), max_size=40))
def test_reachable_states_are_wf(prog, picks):
    sem = reference(prog.variant)
    cfg = sem.initial(parse(prog.source, prog.variant))
    for pick in picks:
        labels = sem.enabled(cfg)
        if not labels:
            break
        cfg = sem.apply(cfg, labels[pick % len(labels)])
        report = check_wf(cfg, prog.variant)
        assert report.ok, [str(v) for v in report.violations]


def test_broken_copy_of_reachable_state_is_caught():
    prog = next(p for p in ACCEPTED if p.name == "bestow_roundtrip")
    sem = reference(prog.variant)
    cfg = sem.initial(parse(prog.source, prog.variant))
    while sem.enabled(cfg) and len(cfg.actors) < 2:
        cfg = sem.apply(cfg, sem.enabled(cfg)[0])
    a1 = cfg.actors[1]
    broken = cfg.with_actor(1, dataclasses.replace(a1, heap=a1.heap | cfg.actors[0].heap))
    assert "wf-heap" in rules(check_wf(broken, prog.variant))
