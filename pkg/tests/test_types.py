import time

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bestow.calculus.ast import (
    ACTOR,
    BESTOWED,
    PASSIVE,
    TRANSFERABLE,
    UNIT,
    UNIT_T,
    ActorId,
    Arrow,
    BestowedLoc,
    Lam,
    Loc,
    TransferableLoc,
    Val,
    Variant,
)
from bestow.calculus.parser import ParseError, parse
from bestow.calculus.semantics import substitute
from bestow.calculus.statics import CalcTypeError, ErrorKind, active_restriction, typecheck, validate_message
from bestow.corpus import load_corpus

from strategies import ACTIVE, closed_value, typed_expr


def verdict(prog) -> str:
    try:
        return str(typecheck({}, parse(prog.source, prog.variant), prog.variant))
    except CalcTypeError as err:
        return err.kind.value
    except ParseError as err:
        return type(err).__name__


def test_active_restriction_examples():
    assert active_restriction({"x": PASSIVE, "y": ACTOR}) == {"y": ACTOR}
    assert active_restriction({}) == {}
    assert active_restriction({"x": BESTOWED, "y": Arrow(PASSIVE, UNIT_T)}) == {"x": BESTOWED}
    assert active_restriction({"t": TRANSFERABLE, "u": UNIT_T}) == {"t": TRANSFERABLE}


def test_send_with_parameter_mutation():
    assert typecheck({}, parse("(new c) ! (fn (x : p) => x.mutate())"), Variant.CORE) == UNIT_T


def test_passive_leak():
    with pytest.raises(CalcTypeError) as info:
        typecheck({"y": PASSIVE}, parse("(new c) ! (fn (x : p) => y.mutate())"), Variant.CORE)
    assert info.value.kind is ErrorKind.PASSIVE_LEAK


def test_receiver_not_active():
    with pytest.raises(CalcTypeError) as info:
        typecheck({}, parse("(new p) ! (fn (x : p) => unit)"), Variant.CORE)
    assert info.value.kind is ErrorKind.RECEIVER_NOT_ACTIVE


def test_bestow_gives_bestowed_type():
    assert typecheck({}, parse("bestow (new p)"), Variant.CORE) == BESTOWED


def test_transfer_body_must_be_unit():
    src = "(new T(p)) ! (fn (x : p) => x)"
    with pytest.raises(CalcTypeError) as info:
        typecheck({}, parse(src, Variant.TRANSFER), Variant.TRANSFER)
    assert info.value.kind is ErrorKind.BODY_NOT_UNIT
    # the same shape of body is fine in the core variant
    assert typecheck({}, parse("(new c) ! (fn (x : p) => x)"), Variant.CORE) == UNIT_T


def test_atomic_and_release_return_unit():
    for src in ("atomic (new c)", "release (bestow (new p))"):
        assert typecheck({}, parse(src, Variant.PRIVATE), Variant.PRIVATE) == UNIT_T


def test_validate_message():
    with pytest.raises(CalcTypeError) as info:
        validate_message(Lam("x", PASSIVE, parse("#l3.mutate()", allow_runtime=True)))
    assert info.value.kind is ErrorKind.PASSIVE_LEAK
    validate_message(Lam("x", PASSIVE, parse("x.mutate()")))
    validate_message(Lam("x", PASSIVE, parse("@a1 ! (fn (y : p) => unit)", allow_runtime=True)))


def test_error_carries_location():
    with pytest.raises(CalcTypeError) as info:
        typecheck({}, parse("(fn (y : p) =>\n  (new c) ! (fn (x : p) => y.mutate())) (new p)"), Variant.CORE)
    assert info.value.pos is not None and info.value.pos[0] == 2
    assert info.value.to_dict()["line"] == 2


@pytest.mark.parametrize(
    "value,ty",
    [(Loc(1), PASSIVE), (ActorId(0), ACTOR), (BestowedLoc(1, 0), BESTOWED), (TransferableLoc(2), TRANSFERABLE), (UNIT, UNIT_T)],
)
def test_runtime_values_carry_their_type(value, ty):
    for variant in Variant:
        assert typecheck({}, Val(value), variant) == ty
        assert typecheck({"x": PASSIVE}, Val(value), variant) == ty


def test_corpus_size_and_coverage():
    corpus = load_corpus()
    for variant in Variant:
        assert sum(1 for p in corpus if p.variant is variant) >= 6
    rejected = {p.expect for p in corpus if not p.accepted}
    assert {"PassiveLeak", "ReceiverNotActive", "BodyNotUnit", "VariantError"} <= rejected


@pytest.mark.parametrize("prog", load_corpus(), ids=lambda p: f"{p.group}/{p.name}")
def test_corpus_verdicts(prog):
    assert verdict(prog) == prog.expect


def test_corpus_is_fast():
    corpus = load_corpus()
    t0 = time.perf_counter()
    for prog in corpus:
        verdict(prog)
    assert time.perf_counter() - t0 < 1.0


TYPES = [UNIT_T, PASSIVE, ACTOR, BESTOWED, TRANSFERABLE, Arrow(PASSIVE, UNIT_T)]


def _available(variant):
    return [t for t in TYPES if not (t == TRANSFERABLE and variant is not Variant.TRANSFER)
            and not (t == BESTOWED and variant is Variant.TRANSFER)]


@st.composite
def lemma_case(draw):
    variant = draw(st.sampled_from(list(Variant)))
    avail = _available(variant)
    x_ty = draw(st.sampled_from([t for t in avail if not isinstance(t, Arrow)]))
    env = {"w": draw(st.sampled_from(avail)), "x": x_ty}
    ty = draw(st.sampled_from(avail))
    e = draw(typed_expr(env, ty, variant, 3))
    v = draw(closed_value(x_ty, variant))
    return variant, env, ty, e, v


@settings(max_examples=300, deadline=None)
@given(lemma_case())
def test_substitution_lemma(case):
    variant, env, ty, e, v = case
    assert typecheck(env, e, variant) == ty  # the generator only builds typed terms
    assert typecheck({}, Val(v), variant) == env["x"]
    rest = {k: t for k, t in env.items() if k != "x"}
    assert typecheck(rest, substitute(e, "x", v), variant) == ty


@settings(max_examples=200, deadline=None)
@given(st.sampled_from(list(Variant)).flatmap(lambda v: st.tuples(st.just(v), typed_expr({}, UNIT_T, v, 4))))
def test_typecheck_is_deterministic(case):
    variant, e = case
    assert typecheck({}, e, variant) == typecheck({}, e, variant) == UNIT_T


@pytest.mark.parametrize("variant", list(Variant))
def test_typecheck_total_on_garbage(variant):
    from strategies import source_exprs

    @settings(max_examples=150, deadline=None)
    @given(source_exprs(variant), st.dictionaries(st.sampled_from("xyzw"), st.sampled_from(TYPES), max_size=3))
    def check(e, env):
        try:
            typecheck(env, e, variant)
        except CalcTypeError:
            pass

    check()


def test_message_active_variables_survive():
    # a message may mention an actor variable from the enclosing scope
    src = "(fn (a : c) => a ! (fn (x : p) => a ! (fn (y : p) => unit))) (new c)"
    assert typecheck({}, parse(src), Variant.CORE) == UNIT_T
    assert ACTIVE[Variant.CORE] == (ACTOR, BESTOWED)
