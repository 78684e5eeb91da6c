from fractions import Fraction

import pytest

from quantalg.distributions import lk_distance, term_to_distribution
from quantalg.gmet import FiniteSpace, MetricKind
from quantalg.liftings import discrete, sup
from quantalg.saturation import (SaturationConfig, SaturationError, TermOutsideUniverse, derived_distance, dump_text,
                                 dump_tsv, quotient_algebra, quotient_space, replay_lne_log, same_class, saturate)
from quantalg.terms import OpFamily, Signature, parse_term
from quantalg.theory import Theory, extend_by_space, make_theory
from quantalg.theoryfile import load_theory
from oracles import load_frozen

F = Fraction


def lk_result(depth):
    return saturate(load_theory("lk.thy").extended(), SaturationConfig(depth=depth))


def term(r, text):
    return parse_term(text, r.sig, allow_vars=False)


def test_depth_one_table():
    r = lk_result(1)
    assert dump_text(r) == (
        "# depth 1, rounds 4, fixpoint: yes, classes 3, terms 6\n"
        "# warning: parameter closure of plus is incomplete within denominator bound; kept 1/2\n"
        "0: a\n1: b\n2: plus(1/2; a, b)\n"
        "d(0, 0) = 1/2\nd(0, 1) = 1\nd(0, 2) = 3/4\nd(1, 1) = 1/2\nd(1, 2) = 3/4\nd(2, 2) = 3/4\n"
    )


def test_frozen_lk_values_at_depth_two():
    r = lk_result(2)
    for key, value in load_frozen()["lk_two_point"].items():
        s, t = key.split(" | ")
        assert derived_distance(r, term(r, s), term(r, t)) == F(value), key


def test_frozen_kantorovich_values_at_depth_two():
    tf = load_theory("convex_kantorovich.thy")
    r = saturate(tf.extended(), SaturationConfig(depth=2))
    for key, value in load_frozen()["kantorovich_unit"].items():
        s, t = key.split(" | ")
        assert derived_distance(r, term(r, s), term(r, t)) == F(value), key


def test_idempotency_and_commutativity_merge_classes():
    r = lk_result(1)
    assert same_class(r, term(r, "plus(1/2; a, a)"), term(r, "a"))
    assert same_class(r, term(r, "plus(1/2; a, b)"), term(r, "plus(1/2; b, a)"))
    assert not same_class(r, term(r, "a"), term(r, "b"))


def test_term_outside_universe():
    r = lk_result(0)
    with pytest.raises(TermOutsideUniverse) as info:
        r.class_id(term(r, "plus(1/2; a, b)"))
    assert "larger depth" in str(info.value)


def test_lookup_through_enodes_beyond_depth():
    r = lk_result(1)
    # Not enumerated at depth 1, but its e-node exists through idempotency.
    assert r.lookup(term(r, "plus(1/2; plus(1/2; a, b), plus(1/2; a, b))")) == r.class_id(term(r, "plus(1/2; a, b)"))


def test_trace_is_monotone_at_term_level():
    r = saturate(load_theory("lk.thy").extended(), SaturationConfig(depth=2, trace=True))
    prev = None
    for cls, dist in r.trace:
        if prev is not None:
            pcls, pdist = prev
            for i in range(len(pcls)):
                assert cls[i] == cls[cls[i]]
                for j in range(len(pcls)):
                    assert dist[cls[i]][cls[j]] <= pdist[pcls[i]][pcls[j]]
                    if pcls[i] == pcls[j]:
                        assert cls[i] == cls[j]
        prev = (cls, dist)


def test_lne_log_replays():
    for name in ("lk.thy", "convex_kantorovich.thy", "lk_counterexample.thy"):
        r = saturate(load_theory(name).extended(), SaturationConfig(depth=2))
        assert r.lne_log and replay_lne_log(r) == []


def test_round_budget_reports_no_fixpoint():
    r = saturate(load_theory("lk.thy").extended(), SaturationConfig(depth=2, max_rounds=1))
    assert not r.fixpoint_reached
    assert any("round budget" in w for w in r.warnings)


def test_determinism():
    assert dump_tsv(lk_result(2)) == dump_tsv(lk_result(2))


def test_discrete_lifting_never_lowers_distances():
    tf = load_theory("discrete.thy")
    for depth in (0, 1, 2):
        r = saturate(tf.extended(), SaturationConfig(depth=depth))
        assert len(r.classes) == len(r.universe)
        for x in r.classes:
            for y in r.classes:
                assert r.dist[x][y] == (0 if x == y else 1)


def test_empty_theory_only_one_bounded_facts():
    r = saturate(load_theory("empty.thy").extended(), SaturationConfig(depth=0))
    a, b = (r.class_id(term(r, n)) for n in "ab")
    assert r.dist[a][b] == 1 and r.dist[a][a] == 0


def test_unordered_distances_without_symmetry():
    frel = MetricKind.named("FRel")
    sig = Signature((OpFamily("f", 1, sup(1)),))
    space = FiniteSpace(("a", "b"), ((F(1), F(1, 4)), (F(3, 4), F(1))), frel)
    r = saturate(extend_by_space(Theory(sig, frel), space), SaturationConfig(depth=1))
    fa, fb = term(r, "f(a)"), term(r, "f(b)")
    assert derived_distance(r, fa, fb) == F(1, 4) and derived_distance(r, fb, fa) == F(3, 4)
    assert "dist\t0\t1\t1/4" in dump_tsv(r) and "dist\t1\t0\t3/4" in dump_tsv(r)


def test_identity_of_indiscernibles_merges_zero_distance():
    met = MetricKind.named("Met")
    sig = Signature((OpFamily("f", 1, sup(1)),))
    th = make_theory(sig, met, ["f(x) =[0] x"])
    space = FiniteSpace(("a",), ((0,),), met)
    r = saturate(extend_by_space(th, space), SaturationConfig(depth=1))
    assert same_class(r, term(r, "f(a)"), term(r, "a"))


def test_kantorovich_rule_conclusion_matches_lifting():
    rule = load_theory("convex_kantorovich_rule.thy")
    lifted = load_theory("convex_kantorovich.thy")
    a = saturate(rule.extended(), SaturationConfig(depth=2))
    b = saturate(lifted.extended(), SaturationConfig(depth=2))
    assert a.universe == b.universe
    for i in range(len(a.universe)):
        for j in range(len(a.universe)):
            assert a.dist[a.class_of[i]][a.class_of[j]] == b.dist[b.class_of[i]][b.class_of[j]]


def test_negative_epsilon_is_an_error():
    met = MetricKind.named("Met")
    sig = Signature((OpFamily("f", 1, sup(1)),))
    th = make_theory(sig, met, ["x =[e] y |- f(x) =[e - 1] f(y)"])
    space = FiniteSpace(("a", "b"), ((0, F(1, 2)), (F(1, 2), 0)), met)
    with pytest.raises(SaturationError):
        saturate(extend_by_space(th, space), SaturationConfig(depth=1))


def test_epsilon_above_one_is_clamped_with_warning():
    met = MetricKind.named("Met")
    sig = Signature((OpFamily("f", 1, sup(1)),))
    th = make_theory(sig, met, ["x =[e] y |- f(x) =[e + 1] f(y)"])
    space = FiniteSpace(("a", "b"), ((0, F(1, 2)), (F(1, 2), 0)), met)
    r = saturate(extend_by_space(th, space), SaturationConfig(depth=1))
    assert any("clamped" in w for w in r.warnings)


def test_quotient_views():
    r = lk_result(1)
    q = quotient_space(r)
    assert q.points == ("[a]", "[b]", "[plus(1/2; a, b)]")
    alg = quotient_algebra(r, allow_partial=True)
    assert alg.operation("plus", F(1, 2), ("[a]", "[b]")) == "[plus(1/2; a, b)]"
    assert len(alg.partial) == 4 and not alg.total
    assert alg.nonexpansive_violations() == []


def test_partial_quotient_reported():
    sig = Signature((OpFamily("f", 1, discrete(1)),))
    met = MetricKind.named("Met")
    r = saturate(extend_by_space(Theory(sig, met), FiniteSpace(("a",), ((0,),), met)), SaturationConfig(depth=1))
    with pytest.raises(ValueError):
        quotient_algebra(r)
    assert quotient_algebra(r, allow_partial=True).partial == [("f", None, ("[f(a)]",))]


def test_distances_agree_with_distribution_model_at_depth_two():
    tf = load_theory("lk.thy")
    r = saturate(tf.extended(), SaturationConfig(depth=2))
    for i, s in enumerate(r.universe):
        for j, t in enumerate(r.universe):
            oracle = lk_distance(tf.space, term_to_distribution(s), term_to_distribution(t))
            assert r.dist[r.class_of[i]][r.class_of[j]] == oracle
