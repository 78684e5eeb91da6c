"""Verification suites behind ``quantalg verify``.

Each suite returns :class:`~quantalg.freealg.LawCheck` records in a fixed
order, so a report depends only on the suite name and the seed.
"""

from __future__ import annotations

import itertools
import random
from fractions import Fraction

from . import distributions as dist
from .algebra import satisfies
from .gmet import (NAMED_KINDS, FiniteSpace, MetricKind, SpaceMap, coproduct, product, random_space,
                   validate_space)
from .freealg import (LawCheck, check_free_extension, check_monad_laws, check_naturality, check_soundness,
                      check_uniqueness, free_extension, map_terms, term_space)
from .liftings import check_embedding_preservation, kantorovich, lk
from .saturation import SaturationConfig, derived_distance, quotient_algebra, saturate
from .terms import parse_term
from .theory import parse_clause
from .theoryfile import load_theory

HALF = Fraction(1, 2)
SUITES = ("paper", "props", "monad")
PROPERTY_SAMPLES = 1000


def _check(name: str, failures: list, total: int | None = None) -> LawCheck:
    note = f"{total} cases" if total is not None else ""
    return LawCheck(name, not failures, str(failures[0]) if failures else "", note)


# -- reference-value suite ---------------------------------------------------


def lk_counterexample_values() -> dict:
    """The four ŁK values on the two-point diffuse space with self-distance 1/2."""
    space = load_theory("lk.thy").space
    da, db = dist.dirac("a"), dist.dirac("b")
    mix = dist.convex_combine(HALF, da, db)
    return {
        "aa": dist.lk_distance(space, da, da),
        "bb": dist.lk_distance(space, db, db),
        "mix": dist.lk_distance(space, mix, mix),
    }


def _lk_counterexample_checks() -> list:
    v = lk_counterexample_values()
    expected = {"aa": HALF, "bb": HALF, "mix": Fraction(3, 4)}
    bad = [f"{k}={v[k]}" for k in expected if v[k] != expected[k]]
    checks = [_check("lk.counterexample.values", bad)]
    # The sup-product bound max(d(a,a), d(b,b)) = 1/2 is below the mixture's 3/4.
    checks.append(LawCheck("lk.counterexample.not-nonexpansive", max(v["aa"], v["bb"]) < v["mix"]))

    tf = load_theory("lk.thy")
    alg = dist.lk_algebra(tf.space, (HALF,))
    clause = parse_clause("x1 =[1/2] y1, x2 =[1/2] y2 |- plus(1/2; x1, x2) =[1/2] plus(1/2; y1, y2)",
                          tf.theory.sig)
    verdict = satisfies(alg, clause, samples=500)
    witness = " ".join(f"{k}={v}" for k, v in sorted((verdict.counterexample or {}).items()))
    checks.append(LawCheck("lk.sup-rule.counterexample", not verdict.holds, witness))
    return checks


def _term_algebra_agreement(name: str, ref: str, depth: int, oracle) -> list:
    tf = load_theory(ref)
    r = saturate(tf.extended(), SaturationConfig(depth=depth))
    as_dist = [dist.term_to_distribution(t) for t in r.universe]
    dist_bad, class_bad = [], []
    for i, s in enumerate(r.universe):
        for j, t in enumerate(r.universe):
            expected = oracle(tf.space, as_dist[i], as_dist[j])
            got = r.dist[r.class_of[i]][r.class_of[j]]
            if got != expected and not dist_bad:
                dist_bad.append(f"d({s}, {t}) = {got}, oracle {expected}")
            if (r.class_of[i] == r.class_of[j]) != (as_dist[i] == as_dist[j]) and not class_bad:
                class_bad.append(f"{s} ~ {t}")
    n = len(r.universe) ** 2
    return [
        LawCheck(f"{name}.depth{depth}.fixpoint", r.fixpoint_reached),
        _check(f"{name}.depth{depth}.distance", dist_bad, n),
        _check(f"{name}.depth{depth}.classes", class_bad, n),
    ]


def _cli_examples() -> list:
    out = []
    for ref, s, t, depth, expected in (("lk.thy", "plus(1/2; a, b)", "plus(1/2; a, b)", 1, Fraction(3, 4)),
                                       ("lk.thy", "a", "a", 0, HALF),
                                       ("empty.thy", "a", "b", 0, Fraction(1))):
        tf = load_theory(ref)
        th = tf.extended()
        r = saturate(th, SaturationConfig(depth=depth))
        value = derived_distance(r, parse_term(s, th.sig, allow_vars=False), parse_term(t, th.sig, allow_vars=False))
        out.append(LawCheck(f"dist.{ref.removesuffix('.thy')}.{s.replace(' ', '')}.{t.replace(' ', '')}",
                            value == expected, f"{value} != {expected}" if value != expected else ""))
    return out


def _soundness() -> list:
    tf = load_theory("lk.thy")
    r = saturate(tf.extended(), SaturationConfig(depth=2))
    rep = check_soundness(r, dist.lk_algebra(tf.space, (HALF,)))
    checks = [_check("soundness.lk.depth2", rep.violations, rep.checked)]

    sl = load_theory("semilattice.thy")
    model = quotient_algebra(saturate(sl.extended(), SaturationConfig(depth=1)))
    axioms_ok = [str(h) for h in sl.extended().axioms if not satisfies(model, h)]
    checks.append(_check("soundness.semilattice.model-satisfies-theory", axioms_ok))
    r2 = saturate(sl.extended(), SaturationConfig(depth=2))
    rep = check_soundness(r2, model)
    checks.append(_check("soundness.semilattice.depth2", rep.violations, rep.checked))
    return checks


def _freeness() -> list:
    tf = load_theory("lk.thy")
    ts = term_space(tf.theory, tf.space, 1)
    h = free_extension(dist.dirac, dist.lk_algebra(tf.space, (HALF,)), ts)
    checks = check_free_extension(h) + check_uniqueness(h)
    expected = dist.convex_combine(HALF, dist.dirac("a"), dist.dirac("b"))
    mix = ts.class_of(parse_term("plus(1/2; a, b)", ts.result.sig, allow_vars=False))
    checks.append(LawCheck("free.value.mixture", h(mix) == expected, f"{h(mix)}"))
    return checks


def _discrete_degeneracy() -> list:
    tf = load_theory("discrete.thy")
    out = []
    for depth in (0, 1, 2):
        r = saturate(tf.extended(), SaturationConfig(depth=depth))
        bad = [(x, y) for x in r.classes for y in r.classes if r.dist[x][y] != (0 if x == y else 1)]
        out.append(_check(f"discrete.depth{depth}", bad[:1], len(r.classes) ** 2))
    return out


def reference_suite(seed: int = 0) -> list:
    checks = _lk_counterexample_checks()
    checks += _cli_examples()
    for depth in (0, 1, 2):
        checks += _term_algebra_agreement("term-algebra.lk", "lk.thy", depth, dist.lk_distance)
    checks += _term_algebra_agreement("term-algebra.kantorovich", "convex_kantorovich.thy", 2,
                                      dist.kantorovich_distance)
    checks += _term_algebra_agreement("term-algebra.kantorovich-rule", "convex_kantorovich_rule.thy", 2,
                                      dist.kantorovich_distance)
    checks += _soundness()
    checks += _freeness()
    checks += _discrete_degeneracy()
    return checks


# -- sampled properties -------------------------------------------------------


DMET = MetricKind.named("DMet")
MET = MetricKind.named("Met")
MIX_WEIGHTS = (Fraction(1, 4), HALF, Fraction(2, 3))


def lk_diffuse_failures(rng: random.Random, samples: int) -> list:
    out = []
    for _ in range(samples):
        space = random_space(DMET, rng.randint(1, 5), rng)
        mu, nu, rho = (dist.random_dist(space.points, rng, 24) for _ in range(3))
        d = lambda x, y: dist.lk_distance(space, x, y)  # noqa: E731
        if d(mu, nu) != d(nu, mu):
            out.append(("symmetry", mu, nu))
        if d(mu, rho) > d(mu, nu) + d(nu, rho):
            out.append(("triangle", mu, nu, rho))
    return out


def lk_bilinear_failures(rng: random.Random, samples: int) -> list:
    out = []
    for i in range(samples):
        p = MIX_WEIGHTS[i % len(MIX_WEIGHTS)]
        space = random_space(DMET, rng.randint(1, 5), rng)
        mu, nu, mu2, nu2 = (dist.random_dist(space.points, rng, 24) for _ in range(4))
        lhs = dist.lk_distance(space, dist.convex_combine(p, mu, nu), dist.convex_combine(p, mu2, nu2))
        rhs = dist.lk_bilinear(p, lambda x, y: dist.lk_distance(space, x, y), (mu, nu), (mu2, nu2))
        if lhs != rhs:
            out.append((p, mu, nu, mu2, nu2))
    return out


def embedding_failures(rng: random.Random, spaces: int) -> list:
    out = []
    for i in range(spaces):
        p = MIX_WEIGHTS[i % len(MIX_WEIGHTS)]
        for lifting, kind in ((lk(p), DMET), (kantorovich(p), MET)):
            space = random_space(kind, rng.randint(1, 5), rng)
            for k in range(1, len(space) + 1):
                for subset in itertools.combinations(space.points, k):
                    if not check_embedding_preservation(lifting, space, subset):
                        out.append((str(lifting), space.points, subset))
    return out


def kantorovich_exactness_failures(rng: random.Random, spaces_per_size: int = 1,
                                   denominators=range(1, 7)) -> tuple:
    """Solver against brute force on every grid instance; returns (failures, count)."""
    out, count = [], 0
    for n in range(1, 5):
        for _ in range(spaces_per_size):
            space = random_space(MET, n, rng)
            for den in denominators:
                grid = dist.all_grid_dists(space.points, den, 3)
                for mu in grid:
                    for nu in grid:
                        count += 1
                        fast = dist.kantorovich_distance(space, mu, nu)  # certified inside the solver
                        if fast != dist.kantorovich_brute_force(space, mu, nu):
                            out.append((space.points, mu, nu))
    return out, count


def kantorovich_rule_failures(rng: random.Random, samples: int) -> list:
    out = []
    weights = (Fraction(1, 4), Fraction(1, 3), HALF, Fraction(2, 3), Fraction(3, 4))
    for _ in range(samples):
        p = rng.choice(weights)
        space = random_space(MET, rng.randint(1, 5), rng)
        mu, nu, mu2, nu2 = (dist.random_dist(space.points, rng, 24) for _ in range(4))
        k = lambda x, y: dist.kantorovich_distance(space, x, y)  # noqa: E731
        lhs = k(dist.convex_combine(p, mu, nu), dist.convex_combine(p, mu2, nu2))
        if lhs > p * k(mu, mu2) + (1 - p) * k(nu, nu2):
            out.append((p, mu, nu, mu2, nu2))
    return out


def construction_failures(rng: random.Random, pairs: int) -> list:
    out = []
    for kind in NAMED_KINDS:
        for _ in range(pairs):
            x = random_space(kind, rng.randint(1, 3), rng, prefix="x")
            y = random_space(kind, rng.randint(1, 3), rng, prefix="y")
            if not validate_space(product([x, y])).ok:
                out.append(("product", kind.name))
            if not validate_space(coproduct([x, y])).ok:
                out.append(("coproduct", kind.name))
    return out


def props_suite(seed: int = 0, samples: int | None = None) -> list:
    samples = samples or PROPERTY_SAMPLES

    def rng(tag: int) -> random.Random:
        return random.Random(seed * 1_000_003 + tag)

    checks = [
        _check("lk.diffuse-metric", lk_diffuse_failures(rng(1), samples), samples),
        _check("lk.bilinear", lk_bilinear_failures(rng(2), samples), samples),
        _check("lifting.embedding-preservation", embedding_failures(rng(3), 30), 30),
    ]
    failures, count = kantorovich_exactness_failures(rng(4))
    checks.append(_check("kantorovich.exact", failures, count))
    checks.append(_check("kantorovich.rule", kantorovich_rule_failures(rng(5), samples), samples))
    checks.append(_check("gmet.product-coproduct", construction_failures(rng(6), 200), 200 * len(NAMED_KINDS)))
    return checks


# -- monad suite --------------------------------------------------------------


def monad_suite(seed: int = 0, depth: int = 1) -> list:
    out = []
    for ref in ("lk.thy", "convex_kantorovich.thy", "semilattice.thy"):
        tf = load_theory(ref)
        tag = ref.removesuffix(".thy")
        for c in check_monad_laws(tf.theory, tf.space, depth, depth):
            out.append(LawCheck(f"{tag}.{c.name}", c.ok, c.witness, c.note))
    tf = load_theory("lk.thy")
    one = FiniteSpace(("s",), ((HALF,),), DMET)
    collapse = SpaceMap(tf.space, one, {"a": "s", "b": "s"})
    for f, tag in ((collapse, "collapse"), (SpaceMap.identity(tf.space), "identity")):
        for c in check_naturality(tf.theory, f, depth):
            out.append(LawCheck(f"lk.{tag}.{c.name}", c.ok, c.witness, c.note))
    ts = term_space(tf.theory, tf.space, depth)
    ident = map_terms(SpaceMap.identity(tf.space), ts, ts)
    moved = [ts.show(c) for c in ts.classes if ident.table.get(c) != c]
    out.append(_check("lk.identity.map_terms-is-identity", moved))
    small = term_space(tf.theory, one, depth)
    image = map_terms(collapse, ts, small)
    out.append(_check("lk.collapse.single-class", [] if len(set(image.table.values())) == 1 == len(small.classes)
                      else [f"{len(small.classes)} classes"]))
    return out


def run_suite(name: str, seed: int = 0, depth: int = 1) -> list:
    if name == "paper":
        return reference_suite(seed)
    if name == "props":
        return props_suite(seed)
    if name == "monad":
        return monad_suite(seed, depth)
    raise ValueError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
