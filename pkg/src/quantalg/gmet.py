"""Finite generalized metric spaces.

A space is a finite carrier with a ``[0,1]``-valued matrix and a declared
:class:`MetricKind`, i.e. the subset of the five classical constraints the
matrix is supposed to satisfy.  All values are :class:`fractions.Fraction`.
"""

from __future__ import annotations

import enum
import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

ZERO = Fraction(0)
ONE = Fraction(1)


class SpaceStructureError(ValueError):
    """The matrix is not a square ``[0,1]`` table over the points."""


class KindMismatchError(ValueError):
    pass


def unit(value) -> Fraction:
    """Coerce ``value`` (int, Fraction, or ``"p/q"`` text) to a fraction in [0,1]."""
    if isinstance(value, float):
        raise TypeError("floats are not accepted; use Fraction or 'p/q'")
    try:
        x = Fraction(value)
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"malformed rational {value!r}") from exc
    if not ZERO <= x <= ONE:
        raise ValueError(f"{x} is outside [0,1]")
    return x


def fmt(x: Fraction) -> str:
    """Print a fraction as ``p/q`` (integers print bare)."""
    return str(x)


class Axiom(enum.IntEnum):
    SYM = 1
    REFL = 2
    IDOFIND = 3
    TRI = 4
    STRONGTRI = 5


_NAMED = {
    "FRel": (),
    "PSMet": (1, 2),
    "PQMet": (2, 4),
    "DMet": (1, 4),
    "MMet": (1, 3, 4),
    "SMet": (1, 2, 3),
    "QMet": (2, 3, 4),
    "PMet": (1, 2, 4),
    "Met": (1, 2, 3, 4),
    "UMet": (1, 2, 3, 4, 5),
}


@dataclass(frozen=True)
class MetricKind:
    axioms: frozenset
    name: str | None = None

    def __post_init__(self):
        ax = frozenset(Axiom(a) for a in self.axioms)
        if Axiom.STRONGTRI in ax:
            ax |= {Axiom.TRI}
        object.__setattr__(self, "axioms", ax)
        if self.name is None:
            for label, members in _NAMED.items():
                if ax == frozenset(Axiom(m) for m in members):
                    object.__setattr__(self, "name", label)
                    break
        elif self.name not in _NAMED or frozenset(Axiom(m) for m in _NAMED[self.name]) != ax:
            raise ValueError(f"kind name {self.name!r} does not match axioms {sorted(ax)}")

    @classmethod
    def named(cls, name: str) -> "MetricKind":
        if name not in _NAMED:
            raise ValueError(f"unknown metric kind {name!r}; expected one of {', '.join(_NAMED)}")
        return cls(frozenset(_NAMED[name]), name)

    def __contains__(self, axiom) -> bool:
        return Axiom(axiom) in self.axioms

    def __str__(self):
        if self.name:
            return self.name
        return "{" + ",".join(str(int(a)) for a in sorted(self.axioms)) + "}"


NAMED_KINDS = tuple(MetricKind.named(n) for n in _NAMED)


@dataclass(frozen=True)
class FiniteSpace:
    points: tuple
    matrix: tuple
    kind: MetricKind

    _index: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))
        object.__setattr__(self, "matrix", tuple(tuple(Fraction(v) for v in row) for row in self.matrix))
        n = len(self.points)
        if len(set(self.points)) != n:
            raise SpaceStructureError("duplicate point identifiers")
        if len(self.matrix) != n or any(len(row) != n for row in self.matrix):
            raise SpaceStructureError(f"matrix must be {n}x{n}")
        for row in self.matrix:
            for v in row:
                if not ZERO <= v <= ONE:
                    raise SpaceStructureError(f"distance {v} outside [0,1]")
        object.__setattr__(self, "_index", {p: i for i, p in enumerate(self.points)})

    @classmethod
    def from_function(cls, points: Iterable, d: Callable, kind: MetricKind) -> "FiniteSpace":
        pts = tuple(points)
        return cls(pts, tuple(tuple(d(x, y) for y in pts) for x in pts), kind)

    @classmethod
    def from_entries(cls, points: Sequence, entries: dict, kind: MetricKind) -> "FiniteSpace":
        """Build from a partial ``{(x, y): value}`` table.

        Missing diagonal entries default to 0 under REFL and 1 otherwise,
        missing off-diagonal entries to 1, and under SYM a one-sided entry
        is mirrored.
        """
        pts = tuple(points)

        def d(x, y):
            if (x, y) in entries:
                return unit(entries[x, y])
            if Axiom.SYM in kind.axioms and (y, x) in entries:
                return unit(entries[y, x])
            if x == y:
                return ZERO if Axiom.REFL in kind.axioms else ONE
            return ONE

        return cls.from_function(pts, d, kind)

    def __len__(self):
        return len(self.points)

    def index(self, p) -> int:
        try:
            return self._index[p]
        except KeyError:
            raise KeyError(f"unknown point {p!r}") from None

    def __contains__(self, p) -> bool:
        return p in self._index

    def d(self, x, y) -> Fraction:
        return self.matrix[self.index(x)][self.index(y)]

    def with_kind(self, kind: MetricKind) -> "FiniteSpace":
        return FiniteSpace(self.points, self.matrix, kind)


@dataclass(frozen=True)
class SpaceMap:
    src: FiniteSpace
    dst: FiniteSpace
    table: dict

    def __post_init__(self):
        missing = [p for p in self.src.points if p not in self.table]
        if missing:
            raise ValueError(f"map is not total; missing {missing!r}")
        for p in self.src.points:
            if self.table[p] not in self.dst:
                raise ValueError(f"image {self.table[p]!r} of {p!r} is not a point of the target")

    def __call__(self, p):
        return self.table[p]

    @classmethod
    def identity(cls, space: FiniteSpace) -> "SpaceMap":
        return cls(space, space, {p: p for p in space.points})

    def is_nonexpansive(self) -> bool:
        return not self.expansion_witnesses()

    def expansion_witnesses(self) -> list:
        f, d, e = self.table, self.src.d, self.dst.d
        return [(x, y) for x in self.src.points for y in self.src.points if e(f[x], f[y]) > d(x, y)]


# -- validation -------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    axiom: Axiom
    witness: tuple

    def __str__(self):
        return f"({int(self.axiom)}) {self.axiom.name} fails at {self.witness}"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok

    def by_axiom(self, axiom) -> list:
        return [v for v in self.violations if v.axiom == Axiom(axiom)]


def check_structure(space) -> None:
    n = len(space.points)
    if len(space.matrix) != n or any(len(row) != n for row in space.matrix):
        raise SpaceStructureError(f"matrix must be {n}x{n}")


def axiom_violations(points: Sequence, d: Callable, axioms: Iterable, first_only: bool = False) -> list:
    """Exhaustively check the given axioms for ``d`` on ``points``."""
    axioms = set(Axiom(a) for a in axioms)
    out = []
    pts = list(points)

    def push(v):
        out.append(v)
        return first_only

    if Axiom.SYM in axioms:
        for i, x in enumerate(pts):
            for y in pts[i + 1:]:
                if d(x, y) != d(y, x) and push(Violation(Axiom.SYM, (x, y))):
                    return out
    if Axiom.REFL in axioms:
        for x in pts:
            if d(x, x) != 0 and push(Violation(Axiom.REFL, (x,))):
                return out
    if Axiom.IDOFIND in axioms:
        for x in pts:
            for y in pts:
                if x != y and d(x, y) == 0 and push(Violation(Axiom.IDOFIND, (x, y))):
                    return out
    tri, strong = Axiom.TRI in axioms, Axiom.STRONGTRI in axioms
    if tri or strong:
        for x in pts:
            for y in pts:
                dxy = d(x, y)
                for z in pts:
                    dxz, dyz = d(x, z), d(y, z)
                    if tri and dxz > dxy + dyz and push(Violation(Axiom.TRI, (x, y, z))):
                        return out
                    if strong and dxz > max(dxy, dyz) and push(Violation(Axiom.STRONGTRI, (x, y, z))):
                        return out
    return out


def validate_space(space: FiniteSpace) -> ValidationReport:
    check_structure(space)
    return ValidationReport(tuple(axiom_violations(space.points, space.d, space.kind.axioms)))


def satisfies_kind(points: Sequence, d: Callable, kind: MetricKind) -> bool:
    return not axiom_violations(points, d, kind.axioms, first_only=True)


# -- constructions ----------------------------------------------------------


def _shared_kind(spaces: Sequence[FiniteSpace]) -> MetricKind:
    if not spaces:
        raise ValueError("need at least one space")
    kinds = {s.kind.axioms for s in spaces}
    if len(kinds) != 1:
        raise KindMismatchError("all spaces must share one metric kind")
    return spaces[0].kind


def terminal(kind: MetricKind, point="*") -> FiniteSpace:
    self_distance = ZERO if Axiom.REFL in kind.axioms else ONE
    return FiniteSpace((point,), ((self_distance,),), kind)


def product(spaces: Sequence[FiniteSpace]) -> FiniteSpace:
    """Cartesian product with the pointwise-maximum distance."""
    kind = _shared_kind(spaces)
    pts = tuple(itertools.product(*(s.points for s in spaces)))
    idx = [[s.index(c) for c in comp] for s, comp in zip(spaces, zip(*pts))] if pts else []
    mats = [s.matrix for s in spaces]
    rows = []
    for a in range(len(pts)):
        rows.append(tuple(max(m[ix[a]][ix[b]] for m, ix in zip(mats, idx)) for b in range(len(pts))))
    return FiniteSpace(pts, rows, kind)


def coproduct(spaces: Sequence[FiniteSpace]) -> FiniteSpace:
    """Disjoint union; points become ``(component_index, point)``."""
    kind = _shared_kind(spaces)
    pts = tuple((i, p) for i, s in enumerate(spaces) for p in s.points)

    def d(x, y):
        if x[0] != y[0]:
            return ONE
        return spaces[x[0]].d(x[1], y[1])

    return FiniteSpace.from_function(pts, d, kind)


def restrict(space: FiniteSpace, subset: Iterable) -> FiniteSpace:
    sub = tuple(subset)
    for p in sub:
        if p not in space:
            raise KeyError(f"unknown point {p!r}")
    ix = [space.index(p) for p in sub]
    return FiniteSpace(sub, tuple(tuple(space.matrix[i][j] for j in ix) for i in ix), space.kind)


def inclusion(space: FiniteSpace, subset: Iterable) -> SpaceMap:
    sub = restrict(space, subset)
    return SpaceMap(sub, space, {p: p for p in sub.points})


def check_isometric_embedding(f: SpaceMap) -> bool:
    pts = f.src.points
    if len({f(p) for p in pts}) != len(pts):
        return False
    return all(f.dst.d(f(x), f(y)) == f.src.d(x, y) for x in pts for y in pts)


# -- random spaces (for property checks) ------------------------------------


def close_under_kind(points: Sequence, d: dict, kind: MetricKind) -> dict:
    """Lower ``d`` until it satisfies ``kind``; returns a new table.

    Symmetrises by minimum, zeroes the diagonal under REFL and runs a
    capped Floyd-Warshall relaxation for the (strong) triangle inequality.
    Positive off-diagonal input stays positive, so IDOFIND is preserved.
    """
    d = dict(d)
    ax = kind.axioms
    if Axiom.SYM in ax:
        for x in points:
            for y in points:
                m = min(d[x, y], d[y, x])
                d[x, y] = d[y, x] = m
    if Axiom.REFL in ax:
        for x in points:
            d[x, x] = ZERO
    if Axiom.STRONGTRI in ax:
        for y in points:
            for x in points:
                for z in points:
                    c = max(d[x, y], d[y, z])
                    if c < d[x, z]:
                        d[x, z] = c
    elif Axiom.TRI in ax:
        for y in points:
            for x in points:
                for z in points:
                    c = d[x, y] + d[y, z]
                    if c < d[x, z]:
                        d[x, z] = c
    return d


def random_space(kind: MetricKind, n: int, rng: random.Random, max_den: int = 12, prefix: str = "p") -> FiniteSpace:
    pts = tuple(f"{prefix}{i}" for i in range(n))
    d = {}
    for x in pts:
        for y in pts:
            den = rng.randint(1, max_den)
            d[x, y] = Fraction(rng.randint(1, den), den)
    d = close_under_kind(pts, d, kind)
    return FiniteSpace.from_function(pts, lambda x, y: d[x, y], kind)


def random_nonexpansive_map(dst: FiniteSpace, n: int, rng: random.Random, max_den: int = 12) -> SpaceMap:
    """A random source space of ``dst.kind`` with a nonexpansive map into ``dst``."""
    pts = tuple(f"s{i}" for i in range(n))
    table = {p: rng.choice(dst.points) for p in pts}
    d = {}
    for x in pts:
        for y in pts:
            den = rng.randint(1, max_den)
            slack = Fraction(rng.randint(1, den), den)
            d[x, y] = min(ONE, dst.d(table[x], table[y]) + slack)
    d = close_under_kind(pts, d, dst.kind)
    src = FiniteSpace.from_function(pts, lambda x, y: d[x, y], dst.kind)
    return SpaceMap(src, dst, table)
