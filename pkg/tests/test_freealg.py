from dataclasses import replace
from fractions import Fraction

import pytest

from quantalg import distributions as dist
from quantalg.freealg import (ModelMismatchError, check_free_extension, check_monad_laws, check_naturality,
                              check_soundness, check_uniqueness, flatten, free_extension, inductive_extension,
                              map_terms, term_space, unit)
from quantalg.gmet import FiniteSpace, MetricKind, SpaceMap
from quantalg.saturation import SaturationConfig, saturate
from quantalg.terms import parse_term
from quantalg.theoryfile import load_theory

F = Fraction
HALF = F(1, 2)
DMET = MetricKind.named("DMet")


@pytest.fixture(scope="module")
def lk():
    return load_theory("lk.thy")


def test_unit_is_isometric_into_depth_one(lk):
    ts = term_space(lk.theory, lk.space, 1)
    eta = unit(ts)
    for x in lk.space.points:
        for y in lk.space.points:
            assert ts.space.d(eta(x), eta(y)) == lk.space.d(x, y)


def test_unit_on_one_point_space(lk):
    one = FiniteSpace(("s",), ((HALF,),), DMET)
    assert unit(term_space(lk.theory, one, 1)).is_nonexpansive()


def test_generated_names_for_class_points(lk):
    inner = term_space(lk.theory, lk.space, 1)
    outer = term_space(lk.theory, inner.space, 1)
    assert set(outer.names) == set(inner.classes)
    assert all(name.startswith("g") for name in outer.names.values())


def test_identity_map_terms_is_identity(lk):
    ts = term_space(lk.theory, lk.space, 1)
    m = map_terms(SpaceMap.identity(lk.space), ts, ts)
    assert m.ok and all(m(c) == c for c in ts.classes)


def test_collapse_sends_everything_to_one_class(lk):
    one = FiniteSpace(("s",), ((HALF,),), DMET)
    collapse = SpaceMap(lk.space, one, {"a": "s", "b": "s"})
    src, dst = term_space(lk.theory, lk.space, 1), term_space(lk.theory, one, 1)
    m = map_terms(collapse, src, dst)
    assert m.ok and len(dst.classes) == 1 and set(m.table.values()) == set(dst.classes)


def test_left_unit_on_images(lk):
    inner = term_space(lk.theory, lk.space, 1)
    outer = term_space(lk.theory, inner.space, 0)
    mu = flatten(outer, inner)
    eta = unit(outer)
    assert mu.ok and all(mu(eta(c)) == c for c in inner.classes)
    assert any("differs" in n for n in mu.notes)


def test_flatten_partiality_is_reported(lk):
    inner = term_space(lk.theory, lk.space, 1)
    outer = term_space(lk.theory, inner.space, 1)
    mu = flatten(outer, inner)  # depth-2 results, target only has depth 1
    assert not mu.total and mu.partial
    full = flatten(outer, inner, term_space(lk.theory, lk.space, 2))
    assert full.ok


def test_flatten_rejects_mismatched_levels(lk):
    inner = term_space(lk.theory, lk.space, 1)
    with pytest.raises(ValueError):
        flatten(inner, inner)


@pytest.mark.parametrize("name", ["lk.thy", "convex_kantorovich.thy", "semilattice.thy"])
def test_monad_laws(name):
    tf = load_theory(name)
    checks = check_monad_laws(tf.theory, tf.space, 1, 1)
    assert [c.line() for c in checks if not c.ok] == []
    assert {"monad.left-unit", "monad.right-unit", "monad.associativity"} <= {c.name for c in checks}


def test_naturality_of_unit(lk):
    one = FiniteSpace(("s",), ((HALF,),), DMET)
    for f in (SpaceMap(lk.space, one, {"a": "s", "b": "s"}), SpaceMap.identity(lk.space),
              SpaceMap(lk.space, lk.space, {"a": "b", "b": "a"})):
        assert all(c.ok for c in check_naturality(lk.theory, f))


def test_free_extension_into_distributions(lk):
    ts = term_space(lk.theory, lk.space, 1)
    alg = dist.lk_algebra(lk.space, (HALF,))
    h = free_extension(dist.dirac, alg, ts)
    mix = ts.class_of(parse_term("plus(1/2; a, b)", ts.result.sig, allow_vars=False))
    assert h(mix) == dist.parse_dist("{a:1/2, b:1/2}")
    assert all(c.ok for c in check_free_extension(h) + check_uniqueness(h))
    assert inductive_extension(dist.dirac, alg, ts) == h.table


def test_uniqueness_against_a_wrong_candidate(lk):
    ts = term_space(lk.theory, lk.space, 1)
    h = free_extension(dist.dirac, dist.lk_algebra(lk.space, (HALF,)), ts)
    wrong = dict(h.table)
    mix = ts.class_of(parse_term("plus(1/2; a, b)", ts.result.sig, allow_vars=False))
    wrong[mix] = dist.dirac("a")
    checks = {c.name: c for c in check_uniqueness(h, wrong)}
    assert not checks["free.unique-candidate"].ok


def test_representative_dependence_detected(lk):
    ts = term_space(lk.theory, lk.space, 1)
    # Left projection is not commutative, so it cannot model the theory.
    alg = replace(dist.lk_algebra(lk.space, (HALF,)), op_impl=lambda s, p, args: args[0])
    with pytest.raises(ModelMismatchError):
        free_extension(dist.dirac, alg, ts)


def test_soundness_and_corrupted_table(lk):
    r = saturate(lk.extended(), SaturationConfig(depth=2))
    alg = dist.lk_algebra(lk.space, (HALF,))
    assert check_soundness(r, alg).ok
    c = r.classes[-1]
    corrupted = replace(r, dist={x: dict(row) for x, row in r.dist.items()})
    corrupted.dist[c][c] = F(0)
    report = check_soundness(corrupted, alg)
    assert not report.ok and "exceeds" in report.violations[0][2]


def test_soundness_of_empty_theory():
    tf = load_theory("empty.thy")
    r = saturate(tf.extended(), SaturationConfig(depth=0))
    alg = dist.kant_algebra(tf.space, ())
    assert check_soundness(r, alg).ok
