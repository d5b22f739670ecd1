import dataclasses

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bestow.calculus.ast import (
    PASSIVE,
    UNIT,
    UNIT_E,
    ActorId,
    App,
    Atomic,
    Bestow,
    BestowedLoc,
    Lam,
    Loc,
    Mutate,
    New,
    Send,
    TransferableLoc,
    Val,
    Var,
    Variant,
)
from bestow.calculus.parser import parse
from bestow.calculus.semantics import (
    ALREADY_VALUE,
    ActorState,
    AtReq,
    Config,
    EndPrivate,
    Fn,
    IllegalLabel,
    PopPrivate,
    PopPublic,
    PrivateQueue,
    RunExpr,
    Stuck,
    TransferOwnership,
    current_redex,
    decompose,
    initial_config,
    parse_label,
    plug,
    reference,
    substitute,
)
from bestow.calculus.statics import typecheck
from bestow.corpus import load_corpus


def rt(src, variant=Variant.CORE):
    return parse(src, variant, allow_runtime=True)


def idle(this, heap=None, queue=(), current=UNIT_E, conversations=()):
    return ActorState(this, frozenset(heap or {this}), tuple(queue), current, tuple(conversations))


# -- decompose / plug ---------------------------------------------------------------


def test_decompose_top_level_redex():
    e = rt("(fn (x : p) => unit) #l1")
    frames, redex = decompose(e)
    assert frames == () and redex == e


def test_decompose_receiver_first():
    e = rt("(bestow (new p)) ! (fn (x : p) => unit)")
    frames, redex = decompose(e)
    assert [k for k, _ in frames] == ["send", "bestow"]
    assert redex == New(PASSIVE)
    assert plug(frames, redex) == e


def test_decompose_value():
    assert decompose(UNIT_E) is ALREADY_VALUE


def test_decompose_stuck_on_free_variable():
    with pytest.raises(Stuck):
        decompose(App(Var("f"), UNIT_E))


def test_argument_evaluated_after_function():
    e = rt("(fn (x : p) => x) (new p)")
    frames, redex = decompose(e)
    assert frames[0][0] == "app-arg" and redex == New(PASSIVE)


# -- substitution -------------------------------------------------------------------


def test_substitute_examples():
    assert substitute(rt("x.mutate()"), "x", Loc(2)) == Mutate(Val(Loc(2)))
    shadow = rt("fn (x : p) => x")
    assert substitute(shadow, "x", UNIT) == shadow
    assert substitute(rt("x y"), "x", ActorId(1)) == App(Val(ActorId(1)), Var("y"))


def test_substitute_under_message():
    e = rt("y ! (fn (x : p) => y ! (fn (z : p) => x.mutate()))")
    out = substitute(e, "y", ActorId(3))
    assert out == rt("@a3 ! (fn (x : p) => @a3 ! (fn (z : p) => x.mutate()))")


# -- enabledness --------------------------------------------------------------------


def test_idle_actor_has_nothing_enabled():
    cfg = Config((idle(0),))
    assert reference(Variant.CORE).enabled(cfg) == []


def test_mutate_redex_enabled():
    cfg = Config((idle(0, {0, 1}, current=rt("#l1.mutate()")),), next_loc=2)
    assert reference(Variant.CORE).enabled(cfg) == [RunExpr(0)]


def test_transfer_enabled_only_for_idle_owner():
    a0 = idle(0, {0, 1})
    cfg = Config((a0, idle(2)), owners=((1, 0),), next_loc=3)
    sem = reference(Variant.TRANSFER)
    assert sem.enabled(cfg) == [TransferOwnership(1, 1)]
    busy = cfg.with_actor(0, dataclasses.replace(a0, current=rt("#l0.mutate()")))
    assert TransferOwnership(1, 1) not in sem.enabled(busy)


def test_illegal_label_rejected():
    cfg = Config((idle(0),))
    with pytest.raises(IllegalLabel):
        reference(Variant.CORE).apply(cfg, RunExpr(0))


# -- apply --------------------------------------------------------------------------


def test_pop_then_run_to_unit():
    msg = Fn(Lam("x", PASSIVE, Mutate(Var("x"))))
    cfg = Config((idle(0, queue=[msg]),))
    sem = reference(Variant.CORE)
    cfg = sem.apply(cfg, PopPublic(0))
    assert cfg.actors[0].current == App(Val(msg.lam), Val(Loc(0)))
    assert cfg.actors[0].queue == ()
    cfg = sem.apply(cfg, RunExpr(0))
    assert cfg.actors[0].current == Mutate(Val(Loc(0)))
    cfg = sem.apply(cfg, RunExpr(0))
    assert cfg.actors[0].current == UNIT_E
    assert sem.enabled(cfg) == []


def test_bestowed_send_wraps_message():
    v = Lam("x", PASSIVE, Mutate(Var("x")))
    a0 = idle(0, {0, 1})
    a1 = idle(2, current=Send(Val(BestowedLoc(1, 0)), v))
    cfg = Config((a0, a1), next_loc=3)
    after = reference(Variant.CORE).apply(cfg, RunExpr(1))
    assert after.actors[1].current == UNIT_E
    (wrapped,) = after.actors[0].queue
    assert wrapped.lam.param_type == PASSIVE
    assert wrapped.lam.body == App(Val(v), Val(Loc(1)))
    assert wrapped.sender == 1


def test_new_passive_and_actor_use_fresh_counters():
    sem = reference(Variant.CORE)
    cfg = initial_config(parse("(fn (a : c) => (fn (b : p) => unit) (new p)) (new c)"))
    labels = []
    while sem.enabled(cfg):
        label = sem.enabled(cfg)[0]
        labels.append(str(label))
        cfg = sem.apply(cfg, label)
    assert len(cfg.actors) == 2
    assert cfg.actors[1].heap == frozenset({1}) and cfg.actors[1].this == 1
    assert cfg.actors[0].heap == frozenset({0, 2})
    assert cfg.next_loc == 3


def test_bestow_tags_owner():
    sem = reference(Variant.CORE)
    cfg = Config((idle(0, {0, 4}, current=Bestow(Val(Loc(4)))),), next_loc=5)
    assert sem.apply(cfg, RunExpr(0)).actors[0].current == Val(BestowedLoc(4, 0))


def test_transferable_send_runs_in_place_for_owner():
    v = Lam("x", PASSIVE, Mutate(Var("x")))
    cfg = Config((idle(0, {0, 1}, current=Send(Val(TransferableLoc(1)), v)),), owners=((1, 0),), next_loc=2)
    after = reference(Variant.TRANSFER).apply(cfg, RunExpr(0))
    assert after.actors[0].current == App(Val(v), Val(Loc(1)))
    assert after.actors[0].queue == ()


def test_transferable_send_relays_to_owner():
    v = Lam("x", PASSIVE, Mutate(Var("x")))
    a0 = idle(0, {0, 1})
    a1 = idle(2, current=Send(Val(TransferableLoc(1)), v))
    cfg = Config((a0, a1), owners=((1, 0),), next_loc=3)
    after = reference(Variant.TRANSFER).apply(cfg, RunExpr(1))
    (relay,) = after.actors[0].queue
    assert relay.lam.body == Send(Val(TransferableLoc(1)), v)


def test_transfer_moves_location():
    cfg = Config((idle(0, {0, 1}), idle(2)), owners=((1, 0),), next_loc=3)
    after = reference(Variant.TRANSFER).apply(cfg, TransferOwnership(1, 1))
    assert 1 not in after.actors[0].heap and 1 in after.actors[1].heap
    assert after.owner_map() == {1: 1}


def test_private_send_lands_in_private_queue():
    v = Lam("x", PASSIVE, UNIT_E)
    sem = reference(Variant.PRIVATE)
    cfg = Config((idle(0, current=Atomic(Val(ActorId(1)))), idle(1)), next_loc=2)
    cfg = sem.apply(cfg, RunExpr(0))
    assert cfg.actors[0].conv_map() == {1: 0}
    assert cfg.actors[1].queue == (AtReq(0, 0),)
    cfg = cfg.with_actor(0, dataclasses.replace(cfg.actors[0], current=Send(Val(ActorId(1)), v)))
    cfg = sem.apply(cfg, RunExpr(0))
    assert cfg.actors[1].queue == (AtReq(0, 0),)
    assert [m.lam for m in cfg.queue_map()[0].messages] == [v]
    assert PopPrivate(1) in sem.enabled(cfg)


def test_atomic_twice_is_noop_and_release_ends():
    sem = reference(Variant.PRIVATE)
    cfg = Config((idle(0, current=Atomic(Val(ActorId(1)))), idle(1)), next_loc=2)
    cfg = sem.apply(cfg, RunExpr(0))
    again = cfg.with_actor(0, dataclasses.replace(cfg.actors[0], current=Atomic(Val(ActorId(1)))))
    again = sem.apply(again, RunExpr(0))
    assert again.queues == cfg.queues and again.actors[1].queue == cfg.actors[1].queue
    rel = cfg.with_actor(0, dataclasses.replace(cfg.actors[0], current=rt("release @a1", Variant.PRIVATE)))
    rel = sem.apply(rel, RunExpr(0))
    assert rel.actors[0].conversations == ()
    assert sem.enabled(rel) == [EndPrivate(1)]
    done = sem.apply(rel, EndPrivate(1))
    assert done.queues == () and done.actors[1].queue == ()


def test_blocked_actor_waits_for_private_message():
    sem = reference(Variant.PRIVATE)
    cfg = Config(
        (idle(0, conversations=[(1, 0)]), idle(1, queue=[AtReq(0, 0), Fn(Lam("x", PASSIVE, UNIT_E), 2)]), idle(2)),
        queues=((0, PrivateQueue((), 1, 0)),),
        next_loc=3,
        next_queue=1,
    )
    assert sem.enabled(cfg) == []
    assert sem.is_blocked(cfg, 1)


def test_label_text_round_trip():
    for label in (RunExpr(0), PopPublic(2), PopPrivate(1), EndPrivate(3), TransferOwnership(4, 1)):
        assert parse_label(str(label)) == label
    with pytest.raises(ValueError):
        parse_label("jump a0")


def test_fifo_queue_order():
    sem = reference(Variant.CORE)
    prog = parse(
        "(fn (a : c) => (fn (u : Unit) => a ! (fn (y : p) => unit)) (a ! (fn (x : p) => x.mutate()))) (new c)"
    )
    cfg = initial_config(prog)
    while sem.enabled(cfg) and not cfg.actors[0].current == UNIT_E:
        cfg = sem.apply(cfg, sem.enabled(cfg)[0])
    bodies = [m.lam.body for m in cfg.actors[1].queue]
    assert bodies == [Mutate(Var("x")), UNIT_E]


# -- properties over random schedules ----------------------------------------------------

ACCEPTED = [p for p in load_corpus() if p.accepted]


@st.composite
def random_run(draw):
    prog = draw(st.sampled_from(ACCEPTED))
    picks = draw(st.lists(st.integers(0, 1000), max_size=40))
    return prog, picks


def _walk(prog, picks):
    sem = reference(prog.variant)
    cfg = sem.initial(parse(prog.source, prog.variant))
    for pick in picks:
        labels = sem.enabled(cfg)
        if not labels:
            break
        label = labels[pick % len(labels)]
        yield sem, cfg, label, sem.apply(cfg, label)
        cfg = sem.apply(cfg, label)


@settings(max_examples=150, deadline=None)
@given(random_run())
def test_apply_is_deterministic(run):
    for sem, cfg, label, after in _walk(*run):
        assert sem.apply(cfg, label) == after


@settings(max_examples=150, deadline=None)
@given(random_run())
def test_locality(run):
    for sem, cfg, label, after in _walk(*run):
        if not isinstance(label, (RunExpr, PopPublic)):
            continue
        me = label.actor
        redex = current_redex(cfg.actors[me].current) if isinstance(label, RunExpr) else None
        assert len(after.actors) in (len(cfg.actors), len(cfg.actors) + 1)
        if len(after.actors) > len(cfg.actors):
            assert isinstance(redex, New)
        touched_queues = 0
        for i, (old, new) in enumerate(zip(cfg.actors, after.actors)):
            if i == me or old == new:
                continue
            # another actor may only have gained a message at the tail of its queue
            assert dataclasses.replace(new, queue=old.queue) == old
            assert new.queue[: len(old.queue)] == old.queue and len(new.queue) == len(old.queue) + 1
            touched_queues += 1
        old_q, new_q = cfg.queue_map(), after.queue_map()
        touched_queues += sum(1 for q in set(old_q) | set(new_q) if old_q.get(q) != new_q.get(q))
        if isinstance(redex, Send):
            assert touched_queues <= 1
        elif isinstance(redex, Atomic):
            assert touched_queues <= 2
        elif redex is not None and type(redex).__name__ == "Release":
            assert touched_queues <= 1
        else:
            assert touched_queues == 0
        if isinstance(label, PopPublic):
            assert after.actors[me].queue == cfg.actors[me].queue[1:]


@settings(max_examples=150, deadline=None)
@given(random_run())
def test_preservation_along_random_runs(run):
    for sem, cfg, label, after in _walk(*run):
        for actor in after.actors:
            typecheck({}, actor.current, sem.variant)
