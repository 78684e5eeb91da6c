"""Finitely supported probability distributions with exact ŁK and Kantorovich distances."""

from __future__ import annotations

import itertools
import random
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

from . import transport
from .algebra import ProceduralAlgebra
from .gmet import ONE, ZERO, Axiom, FiniteSpace, MetricKind
from .liftings import OP_PARAM, Lifting
from .terms import App, Const, OpFamily, Signature, Term, TermError

DEFAULT_MAX_DENOMINATOR = 24


class UnknownAtomError(KeyError):
    def __str__(self):
        return self.args[0]


def _atom_key(a):
    return (type(a).__name__, str(a))


@dataclass(frozen=True)
class Dist:
    """Atoms with strictly positive rational weights summing to exactly 1."""

    weights: tuple  # ((atom, weight), ...) in canonical atom order

    def __post_init__(self):
        items = tuple(sorted(((a, Fraction(w)) for a, w in self.weights), key=lambda aw: _atom_key(aw[0])))
        atoms = [a for a, _ in items]
        if len(set(atoms)) != len(atoms):
            raise ValueError("repeated atom in distribution")
        if not items:
            raise ValueError("empty distribution")
        if any(w <= 0 for _, w in items):
            raise ValueError("weights must be strictly positive")
        if sum(w for _, w in items) != 1:
            raise ValueError("weights must sum to 1")
        object.__setattr__(self, "weights", items)

    @classmethod
    def of(cls, mapping: Mapping) -> "Dist":
        return cls(tuple((a, w) for a, w in mapping.items() if w != 0))

    def __getitem__(self, atom) -> Fraction:
        for a, w in self.weights:
            if a == atom:
                return w
        return ZERO

    @property
    def support(self) -> tuple:
        return tuple(a for a, _ in self.weights)

    def items(self):
        return iter(self.weights)

    def as_dict(self) -> dict:
        return dict(self.weights)

    def __str__(self):
        return "{" + ", ".join(f"{a}:{w}" for a, w in self.weights) + "}"


def dirac(a) -> Dist:
    return Dist(((a, ONE),))


def convex_combine(p, mu: Dist, nu: Dist) -> Dist:
    """``p·mu + (1-p)·nu`` for ``p`` strictly between 0 and 1."""
    p = Fraction(p)
    if not 0 < p < 1:
        raise ValueError(f"mixing weight {p} must lie strictly between 0 and 1")
    out = {}
    for a, w in mu.items():
        out[a] = out.get(a, ZERO) + p * w
    for a, w in nu.items():
        out[a] = out.get(a, ZERO) + (1 - p) * w
    return Dist.of(out)


_DIST_ITEM = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_']*)\s*:\s*(\d+(?:/\d+)?)\s*$")


def parse_dist(text: str) -> Dist:
    """Parse a literal such as ``{a:1/2, b:1/2}``."""
    s = text.strip()
    if not (s.startswith("{") and s.endswith("}")):
        raise ValueError(f"distribution literal must be braced: {text!r}")
    out = {}
    for item in s[1:-1].split(","):
        m = _DIST_ITEM.match(item)
        if not m:
            raise ValueError(f"malformed distribution entry {item.strip()!r}")
        if m.group(1) in out:
            raise ValueError(f"repeated atom {m.group(1)!r}")
        out[m.group(1)] = Fraction(m.group(2))
    return Dist.of(out)


def _cost(space) -> Callable:
    if isinstance(space, FiniteSpace):
        def d(x, y):
            if x not in space:
                raise UnknownAtomError(f"atom {x!r} is not a point of the space")
            if y not in space:
                raise UnknownAtomError(f"atom {y!r} is not a point of the space")
            return space.d(x, y)
        return d
    return space


def lk_distance(space, mu: Dist, nu: Dist) -> Fraction:
    """Expected ground distance under the independent coupling."""
    d = _cost(space)
    return sum((w * v * d(x, y) for x, w in mu.items() for y, v in nu.items()), ZERO)


def kantorovich_solution(space, mu: Dist, nu: Dist) -> transport.TransportSolution:
    """Optimal coupling with dual potentials (certified by strong duality)."""
    return transport.transport_cost(mu.as_dict(), nu.as_dict(), _cost(space))


def kantorovich_distance(space, mu: Dist, nu: Dist) -> Fraction:
    return kantorovich_solution(space, mu, nu).value


def kantorovich_brute_force(space, mu: Dist, nu: Dist) -> Fraction:
    d = _cost(space)
    xs, ys = mu.support, nu.support
    return transport.brute_force([mu[x] for x in xs], [nu[y] for y in ys], [[d(x, y) for y in ys] for x in xs])


def lk_bilinear(p, d: Callable, pair1: Sequence, pair2: Sequence) -> Fraction:
    p = Fraction(p)
    q = 1 - p
    (a1, a2), (b1, b2) = pair1, pair2
    return p * p * d(a1, b1) + p * q * d(a1, b2) + q * p * d(a2, b1) + q * q * d(a2, b2)


def lk_lift_value(p, space, pair1: Sequence, pair2: Sequence) -> Fraction:
    """ŁK distance of the two mixtures; asserted equal to the closed bilinear form."""
    d = _cost(space)
    value = lk_distance(d, _pair_mix(p, pair1), _pair_mix(p, pair2))
    closed = lk_bilinear(p, d, pair1, pair2)
    if value != closed:
        raise AssertionError(f"ŁK lifting {value} differs from its bilinear form {closed}")
    return value


def kant_lift_value(p, space, pair1: Sequence, pair2: Sequence) -> Fraction:
    return kantorovich_distance(space, _pair_mix(p, pair1), _pair_mix(p, pair2))


def _pair_mix(p, pair):
    a1, a2 = pair
    if a1 == a2:
        return dirac(a1)
    return convex_combine(p, dirac(a1), dirac(a2))


def term_to_distribution(t: Term, space: FiniteSpace | None = None, op: str = "plus") -> Dist:
    """Evaluate a ground term built from constants and ``op`` in the distribution model."""
    if isinstance(t, Const):
        if space is not None and t.name not in space:
            raise UnknownAtomError(f"constant {t.name!r} is not a point of the space")
        return dirac(t.name)
    if isinstance(t, App) and t.symbol == op and len(t.args) == 2 and isinstance(t.param, Fraction):
        return convex_combine(t.param, term_to_distribution(t.args[0], space, op),
                              term_to_distribution(t.args[1], space, op))
    raise TermError(f"{t} is not a ground convex term over '{op}'")


def random_dist(atoms: Sequence, rng: random.Random, max_den: int = DEFAULT_MAX_DENOMINATOR,
                max_support: int | None = None) -> Dist:
    """A random composition of a random denominator over a random subset of ``atoms``."""
    atoms = list(atoms)
    k = rng.randint(1, min(len(atoms), max_support or len(atoms)))
    den = rng.randint(k, max(k, max_den))
    chosen = rng.sample(atoms, k)
    cuts = sorted(rng.sample(range(1, den), k - 1))
    parts = [b - a for a, b in zip([0] + cuts, cuts + [den])]
    return Dist.of({a: Fraction(n, den) for a, n in zip(chosen, parts)})


def all_grid_dists(atoms: Sequence, den: int, max_support: int) -> list:
    """Every distribution on the ``1/den`` grid with support size at most ``max_support``."""
    out = []
    atoms = list(atoms)
    for k in range(1, min(max_support, len(atoms)) + 1):
        for subset in itertools.combinations(atoms, k):
            for parts in _positive_compositions(den, k):
                out.append(Dist.of({a: Fraction(n, den) for a, n in zip(subset, parts)}))
    return out


def _positive_compositions(total, k):
    if k == 1:
        if total >= 1:
            yield (total,)
        return
    for first in range(1, total - k + 2):
        for rest in _positive_compositions(total - first, k - 1):
            yield (first,) + rest


def _convex_signature(op: str, p_set: Iterable, lifting) -> Signature:
    return Signature((OpFamily(op, 2, lifting, tuple(p_set)),))


def _distribution_algebra(space: FiniteSpace, p_set, lifting, distance, op: str, max_den: int) -> ProceduralAlgebra:
    sig = _convex_signature(op, p_set, lifting).with_constants(space.points)

    def operation(symbol, param, args):
        if symbol != op:
            raise TermError(f"unknown operation {symbol!r}")
        return convex_combine(param, *args)

    def constant(name):
        if name not in space:
            raise UnknownAtomError(f"constant {name!r} is not a point of the space")
        return dirac(name)

    return ProceduralAlgebra(
        sig=sig,
        kind=space.kind,
        distance=lambda mu, nu: distance(space, mu, nu),
        op_impl=operation,
        const_impl=constant,
        sampler=lambda rng: random_dist(space.points, rng, max_den),
        seeds=tuple(dirac(a) for a in space.points),
    )


def lk_algebra(space: FiniteSpace, p_set, op: str = "plus", max_den: int = DEFAULT_MAX_DENOMINATOR) -> ProceduralAlgebra:
    """Distributions over a diffuse metric space with the ŁK distance."""
    if space.kind.axioms != MetricKind.named("DMet").axioms:
        raise ValueError(f"the ŁK model is defined over DMet spaces, got {space.kind}")
    return _distribution_algebra(space, p_set, Lifting("lk", 2, OP_PARAM), lk_distance, op, max_den)


def kant_algebra(space: FiniteSpace, p_set, op: str = "plus", max_den: int = DEFAULT_MAX_DENOMINATOR) -> ProceduralAlgebra:
    """Distributions over a metric space with the Kantorovich distance."""
    if Axiom.TRI not in space.kind.axioms:
        raise ValueError(f"the Kantorovich model needs the triangle inequality, got {space.kind}")
    return _distribution_algebra(space, p_set, Lifting("kantorovich", 2, OP_PARAM), kantorovich_distance, op, max_den)
