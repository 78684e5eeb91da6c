import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quantalg.gmet import NAMED_KINDS, MetricKind, SpaceMap, random_space, validate_space
from quantalg.liftings import (LiftedOpDecl, LiftedSpace, Lifting, LiftingError, apply,
                               check_embedding_preservation, custom, discrete, identity, kantorovich, lift_distance,
                               lifted_map, lk, parse_lifting, sample_embedding_preservation, scaled, sup, targets)
from oracles import HALF_MIXTURE_SELF_DISTANCE, kantorovich_cells, lk_naive, mix, two_point_distance

F = Fraction
MET = MetricKind.named("Met")
DMET = MetricKind.named("DMet")


def test_parse_literals():
    assert parse_lifting("sup", 2) == sup(2)
    assert parse_lifting("lk(1/4)", 2) == lk(F(1, 4))
    assert parse_lifting("kantorovich(p)", 2).uses_op_param
    assert parse_lifting("scaled(1/2)", 1) == scaled(F(1, 2))
    for bad in ("lk", "lk(3/2)", "warp", "scaled(x)"):
        with pytest.raises(LiftingError):
            parse_lifting(bad, 2 if bad.startswith("lk") else 1)


def test_arity_checks():
    with pytest.raises(LiftingError):
        Lifting("lk", 3, F(1, 2))
    with pytest.raises(LiftingError):
        LiftedOpDecl("f", 2, identity())


def test_unbound_parameter_cannot_be_evaluated():
    with pytest.raises(LiftingError):
        lift_distance(lk("p"), two_point_distance, ("a", "a"), ("a", "a"), DMET)
    assert lk("p").bind(F(1, 3)) == lk(F(1, 3))


def test_lk_on_diracs_matches_naive_sum():
    value = lift_distance(lk(F(1, 2)), two_point_distance, ("a", "b"), ("a", "b"), DMET)
    oracle = lk_naive(two_point_distance, mix(F(1, 2), {"a": 1}, {"b": 1}), mix(F(1, 2), {"a": 1}, {"b": 1}))
    assert value == oracle == HALF_MIXTURE_SELF_DISTANCE


def test_sup_and_discrete():
    d = two_point_distance
    assert lift_distance(sup(2), d, ("a", "b"), ("a", "b"), DMET) == F(1, 2)
    assert lift_distance(discrete(2), d, ("a", "b"), ("a", "b"), MET) == 0
    assert lift_distance(discrete(2), d, ("a", "b"), ("a", "b"), DMET) == 1
    assert lift_distance(discrete(2), d, ("a", "b"), ("b", "b"), MET) == 1
    assert lift_distance(sup(0), d, (), (), MET) == 0


def test_scaled_and_custom():
    d = two_point_distance
    assert lift_distance(scaled(F(1, 3)), d, ("a",), ("b",), DMET) == F(1, 3)
    avg = custom(2, lambda d, xs, ys, kind: (d(xs[0], ys[0]) + d(xs[1], ys[1])) / 2, "avg")
    assert lift_distance(avg, d, ("a", "a"), ("b", "a"), DMET) == F(3, 4)
    assert str(avg) == "avg"


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 4), st.sampled_from([F(1, 4), F(1, 3), F(1, 2), F(2, 3)]), st.integers(0, 10**6))
def test_kantorovich_lifting_matches_coupling_enumeration(n, p, seed):
    space = random_space(MET, n, random.Random(seed))
    rng = random.Random(seed + 1)
    xs = tuple(rng.choice(space.points) for _ in range(2))
    ys = tuple(rng.choice(space.points) for _ in range(2))
    value = lift_distance(kantorovich(p), space.d, xs, ys, MET)
    oracle = kantorovich_cells(space.d, mix(p, {xs[0]: 1}, {xs[1]: 1}), mix(p, {ys[0]: 1}, {ys[1]: 1}))
    assert value == oracle


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4), st.sampled_from([F(1, 4), F(1, 2), F(2, 3)]), st.integers(0, 10**6))
def test_embedding_preservation(n, p, seed):
    rng = random.Random(seed)
    for lifting, kind in ((lk(p), DMET), (kantorovich(p), MET), (sup(2), MET), (discrete(2), MET)):
        space = random_space(kind, n, rng)
        subset = [x for x in space.points if rng.random() < 0.6] or [space.points[0]]
        assert check_embedding_preservation(lifting, space, subset)


def test_sampled_embedding_preservation_accepts_pointwise_custom_liftings():
    constant = custom(1, lambda d, xs, ys, kind: F(1, 2) if xs == ys else F(1), "constant")
    assert sample_embedding_preservation(constant, MET, random.Random(0)) == []
    leaky = custom(1, lambda d, xs, ys, kind: max(d(xs[0], ys[0]), F(1, 10)), "floor")
    assert sample_embedding_preservation(leaky, MET, random.Random(0)) == []


@pytest.mark.parametrize("kind", NAMED_KINDS, ids=lambda k: k.name)
def test_targets_is_sound_on_random_spaces(kind):
    rng = random.Random(11)
    liftings = [sup(2), discrete(2), identity(), scaled(F(1, 2)), scaled(F(0)), kantorovich(F(1, 3)),
                kantorovich(F(1, 2)), lk(F(1, 3))]
    for lifting in liftings:
        if not targets(lifting, kind):
            continue
        for _ in range(8):
            lifted = apply(lifting, random_space(kind, 3, rng))
            assert validate_space(lifted).ok, (lifting, kind)


def test_targets_exclusions_have_counterexamples():
    x = random_space(MET, 2, random.Random(1))
    assert not targets(kantorovich(F(1, 2)), MET)
    assert not validate_space(apply(kantorovich(F(1, 2)), x)).ok
    assert not targets(lk(F(1, 2)), MET)
    assert not validate_space(apply(lk(F(1, 2)), x)).ok


def test_apply_lazy_above_budget():
    space = random_space(MET, 3, random.Random(2))
    lazy = apply(sup(2), space, budget=4)
    assert isinstance(lazy, LiftedSpace) and len(lazy) == 9
    assert lazy.d(("p0", "p1"), ("p0", "p1")) == 0


def test_lifted_map_of_nonexpansive_map_is_nonexpansive():
    rng = random.Random(5)
    src = random_space(MET, 3, rng)
    f = SpaceMap(src, src, {p: src.points[0] for p in src.points})
    for lifting in (sup(2), kantorovich(F(1, 3))):
        assert lifted_map(lifting, f).is_nonexpansive()
