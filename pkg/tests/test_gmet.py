import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quantalg.gmet import (NAMED_KINDS, Axiom, FiniteSpace, KindMismatchError, MetricKind, SpaceMap,
                           SpaceStructureError, axiom_violations, check_isometric_embedding, coproduct,
                           inclusion, product, random_nonexpansive_map, random_space, restrict, terminal,
                           unit, validate_space)

F = Fraction
MET = MetricKind.named("Met")
DMET = MetricKind.named("DMet")


def two_point(kind=DMET, self_d=F(1, 2), apart=F(1)):
    return FiniteSpace(("a", "b"), ((self_d, apart), (apart, self_d)), kind)


def test_named_kinds_axiom_sets():
    assert MetricKind.named("FRel").axioms == frozenset()
    assert MetricKind.named("DMet").axioms == {Axiom.SYM, Axiom.TRI}
    assert MetricKind.named("Met").axioms == {Axiom.SYM, Axiom.REFL, Axiom.IDOFIND, Axiom.TRI}
    assert MetricKind.named("UMet").axioms == set(Axiom)
    assert len(NAMED_KINDS) == 10


def test_unknown_kind_name():
    with pytest.raises(ValueError):
        MetricKind.named("Nope")


def test_unit_rejects_floats_and_out_of_range():
    assert unit("3/4") == F(3, 4)
    with pytest.raises(TypeError):
        unit(0.5)
    with pytest.raises(ValueError):
        unit(F(3, 2))


def test_diffuse_two_point_space_is_valid_dmet_but_not_met():
    assert validate_space(two_point()).ok
    report = validate_space(two_point().with_kind(MET))
    assert report.by_axiom(Axiom.REFL)


def test_triangle_violation_witness():
    pts = ("a", "b", "c")
    d = {("a", "b"): F(1, 4), ("b", "c"): F(1, 4), ("a", "c"): F(1)}
    space = FiniteSpace.from_entries(pts, d, MET)
    tri = validate_space(space).by_axiom(Axiom.TRI)
    assert tri and tri[0].witness == ("a", "b", "c")


def test_from_entries_defaults():
    space = FiniteSpace.from_entries(("a", "b"), {("a", "b"): F(1, 3)}, MET)
    assert space.d("a", "a") == 0 and space.d("b", "a") == F(1, 3)
    frel = FiniteSpace.from_entries(("a", "b"), {("a", "b"): F(1, 3)}, MetricKind.named("FRel"))
    assert frel.d("a", "a") == 1 and frel.d("b", "a") == 1


def test_structure_errors():
    with pytest.raises(SpaceStructureError):
        FiniteSpace(("a", "a"), ((0, 0), (0, 0)), MET)
    with pytest.raises(SpaceStructureError):
        FiniteSpace(("a",), ((F(2),),), MET)


def test_product_is_pointwise_max():
    x = two_point()
    p = product([x, x])
    assert p.d(("a", "a"), ("a", "b")) == 1
    assert p.d(("a", "a"), ("a", "a")) == F(1, 2)


def test_coproduct_cross_distance_is_one():
    c = coproduct([terminal(MET), terminal(MET)])
    assert c.d((0, "*"), (1, "*")) == 1 and c.d((0, "*"), (0, "*")) == 0


def test_product_rejects_mixed_kinds():
    with pytest.raises(KindMismatchError):
        product([terminal(MET), terminal(DMET)])


def test_terminal_self_distance_follows_reflexivity():
    assert terminal(MET).d("*", "*") == 0
    assert terminal(DMET).d("*", "*") == 1


def test_restriction_is_an_isometric_embedding():
    space = random_space(MET, 4, random.Random(3))
    f = inclusion(space, space.points[:2])
    assert check_isometric_embedding(f)
    assert restrict(space, space.points[:2]).d(space.points[0], space.points[1]) == space.d(*space.points[:2])


def test_space_map_nonexpansiveness():
    x = two_point()
    one = FiniteSpace(("s",), ((F(1, 2),),), DMET)
    assert SpaceMap(x, one, {"a": "s", "b": "s"}).is_nonexpansive()
    tight = FiniteSpace(("s",), ((F(1),),), DMET)
    assert SpaceMap(x, tight, {"a": "s", "b": "s"}).expansion_witnesses() == [("a", "a"), ("b", "b")]


def test_space_map_must_be_total():
    with pytest.raises(ValueError):
        SpaceMap(two_point(), two_point(), {"a": "a"})


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(NAMED_KINDS), st.integers(1, 4), st.integers(0, 10**6))
def test_random_spaces_satisfy_their_kind(kind, n, seed):
    assert validate_space(random_space(kind, n, random.Random(seed))).ok


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(NAMED_KINDS), st.integers(0, 10**6))
def test_product_and_coproduct_preserve_kind(kind, seed):
    rng = random.Random(seed)
    x = random_space(kind, rng.randint(1, 3), rng, prefix="x")
    y = random_space(kind, rng.randint(1, 3), rng, prefix="y")
    assert validate_space(product([x, y])).ok
    assert validate_space(coproduct([x, y])).ok


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(NAMED_KINDS), st.integers(0, 10**6))
def test_projections_are_nonexpansive(kind, seed):
    rng = random.Random(seed)
    x = random_space(kind, 2, rng, prefix="x")
    y = random_space(kind, 2, rng, prefix="y")
    p = product([x, y])
    proj = SpaceMap(p, x, {pt: pt[0] for pt in p.points})
    assert proj.is_nonexpansive()


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(NAMED_KINDS), st.integers(0, 10**6))
def test_random_nonexpansive_maps(kind, seed):
    rng = random.Random(seed)
    dst = random_space(kind, 3, rng)
    f = random_nonexpansive_map(dst, 3, rng)
    assert f.is_nonexpansive() and validate_space(f.src).ok


def test_axiom_violations_first_only():
    d = lambda x, y: F(1)  # noqa: E731
    assert len(axiom_violations(["a", "b"], d, [Axiom.REFL], first_only=True)) == 1
    assert len(axiom_violations(["a", "b"], d, [Axiom.REFL])) == 2
