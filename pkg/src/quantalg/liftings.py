"""Liftings of the n-ary product functor to generalized metric spaces.

A lifting turns a distance on ``A`` into a distance on ``A^n``.  The
built-in rules are evaluated per pair through :func:`lift_distance`;
:func:`apply` tabulates them over a whole space when that is small enough.
"""

from __future__ import annotations

import itertools
import random
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

from . import transport
from .gmet import ONE, ZERO, Axiom, FiniteSpace, MetricKind, SpaceMap, restrict, unit

RULES = ("sup", "discrete", "scaled", "identity", "kantorovich", "lk", "custom")
_UNARY = {"scaled", "identity"}
_BINARY = {"kantorovich", "lk"}

# Stand-in parameter for liftings whose weight is the operation's own parameter.
OP_PARAM = "p"

DEFAULT_MATERIALIZATION_BUDGET = 4096


class LiftingError(ValueError):
    pass


@dataclass(frozen=True)
class Lifting:
    rule: str
    arity: int
    param: Fraction | str | None = None
    func: Callable | None = field(default=None, compare=False)
    name: str | None = None

    def __post_init__(self):
        if self.rule not in RULES:
            raise LiftingError(f"unknown lifting rule {self.rule!r}")
        if self.arity < 0:
            raise LiftingError("arity must be non-negative")
        if self.rule in _UNARY and self.arity != 1:
            raise LiftingError(f"{self.rule} is a unary lifting, got arity {self.arity}")
        if self.rule in _BINARY and self.arity != 2:
            raise LiftingError(f"{self.rule} is a binary lifting, got arity {self.arity}")
        if self.rule in _BINARY or self.rule == "scaled":
            if self.param is None:
                raise LiftingError(f"{self.rule} needs a parameter")
            if self.param != OP_PARAM:
                try:
                    value = unit(self.param)
                except (TypeError, ValueError) as exc:
                    raise LiftingError(f"{self.rule}: {exc}") from None
                if self.rule in _BINARY and not ZERO < value < ONE:
                    raise LiftingError(f"{self.rule} weight must lie strictly between 0 and 1, got {value}")
                object.__setattr__(self, "param", value)
        elif self.rule != "custom" and self.param is not None:
            raise LiftingError(f"{self.rule} takes no parameter")
        if self.rule == "custom" and self.func is None:
            raise LiftingError("custom lifting needs a distance function")

    @property
    def uses_op_param(self) -> bool:
        return self.param == OP_PARAM

    def bind(self, p: Fraction) -> "Lifting":
        """Concrete lifting for an operation instance with parameter ``p``."""
        if not self.uses_op_param:
            return self
        return Lifting(self.rule, self.arity, p)

    def literal(self) -> str:
        if self.rule == "custom":
            return self.name or "custom"
        if self.param is None:
            return self.rule
        return f"{self.rule}({self.param})"

    def __str__(self):
        return self.literal()


def sup(arity: int) -> Lifting:
    return Lifting("sup", arity)


def discrete(arity: int) -> Lifting:
    return Lifting("discrete", arity)


def scaled(r) -> Lifting:
    return Lifting("scaled", 1, r)


def identity() -> Lifting:
    return Lifting("identity", 1)


def kantorovich(p) -> Lifting:
    return Lifting("kantorovich", 2, p)


def lk(p) -> Lifting:
    return Lifting("lk", 2, p)


def custom(arity: int, func: Callable, name: str = "custom") -> Lifting:
    """A user lifting; ``func(d, xs, ys, kind)`` returns the lifted distance."""
    return Lifting("custom", arity, None, func, name)


_LITERAL = re.compile(r"^\s*([a-z]+)\s*(?:\(\s*([^()]*?)\s*\))?\s*$")


def parse_lifting(text: str, arity: int) -> Lifting:
    """Parse ``sup``, ``discrete``, ``scaled(r)``, ``identity``, ``kantorovich(p)`` or ``lk(p)``.

    The argument may be the bare identifier ``p``, meaning the parameter of
    the operation instance the lifting is attached to.
    """
    m = _LITERAL.match(text)
    if not m or m.group(1) not in RULES or m.group(1) == "custom":
        raise LiftingError(f"unknown lifting literal {text!r}")
    rule, arg = m.group(1), m.group(2)
    if arg is None:
        return Lifting(rule, arity)
    if arg == OP_PARAM:
        return Lifting(rule, arity, OP_PARAM)
    try:
        value = Fraction(arg)
    except (ValueError, ZeroDivisionError):
        raise LiftingError(f"malformed rational {arg!r} in lifting {text!r}") from None
    return Lifting(rule, arity, value)


# -- evaluation -------------------------------------------------------------


def _mixture(p, x1, x2):
    w = {x1: p}
    w[x2] = w.get(x2, ZERO) + (ONE - p)
    return w


def lift_distance(l: Lifting, d: Callable, xs: Sequence, ys: Sequence, kind: MetricKind) -> Fraction:
    """Lifted distance between tuples ``xs`` and ``ys`` given the base distance ``d``."""
    if len(xs) != l.arity or len(ys) != l.arity:
        raise LiftingError(f"{l} expects {l.arity}-tuples, got lengths {len(xs)} and {len(ys)}")
    if l.uses_op_param:
        raise LiftingError(f"{l} is unbound; call bind() with the operation parameter")
    rule = l.rule
    if rule == "sup":
        if l.arity == 0:
            return ZERO if Axiom.REFL in kind.axioms else ONE
        return max(d(x, y) for x, y in zip(xs, ys))
    if rule == "discrete":
        if tuple(xs) == tuple(ys):
            return ZERO if Axiom.REFL in kind.axioms else ONE
        return ONE
    if rule == "scaled":
        return l.param * d(xs[0], ys[0])
    if rule == "identity":
        return d(xs[0], ys[0])
    if rule == "lk":
        p = l.param
        q = ONE - p
        return (p * p * d(xs[0], ys[0]) + p * q * d(xs[0], ys[1])
                + q * p * d(xs[1], ys[0]) + q * q * d(xs[1], ys[1]))
    if rule == "kantorovich":
        return transport.transport_cost(_mixture(l.param, *xs), _mixture(l.param, *ys), d).value
    value = Fraction(l.func(d, tuple(xs), tuple(ys), kind))
    return unit(value)


def targets(l: Lifting, kind: MetricKind) -> bool:
    """Whether ``l`` is guaranteed to map spaces of ``kind`` to spaces of ``kind``."""
    ax = kind.axioms
    if l.rule in ("sup", "discrete", "identity"):
        return True
    if l.rule == "scaled":
        return l.uses_op_param or l.param > 0 or Axiom.IDOFIND not in ax
    if l.rule == "kantorovich":
        # p = 1/2 identifies (a, b) with (b, a), which IDOFIND forbids.
        half = l.uses_op_param or l.param == Fraction(1, 2)
        return Axiom.STRONGTRI not in ax and not (half and Axiom.IDOFIND in ax)
    if l.rule == "lk":
        return Axiom.REFL not in ax and Axiom.STRONGTRI not in ax
    return False


@dataclass(frozen=True)
class LiftedSpace:
    """Lazy view of ``l`` applied to ``base``; distances are computed on demand."""

    base: FiniteSpace
    lifting: Lifting

    @property
    def kind(self) -> MetricKind:
        return self.base.kind

    def __len__(self):
        return len(self.base) ** self.lifting.arity

    @property
    def points(self):
        return itertools.product(self.base.points, repeat=self.lifting.arity)

    def d(self, xs, ys) -> Fraction:
        return lift_distance(self.lifting, self.base.d, xs, ys, self.base.kind)

    def materialize(self) -> FiniteSpace:
        pts = tuple(self.points)
        return FiniteSpace.from_function(pts, self.d, self.base.kind)


def apply(l: Lifting, space: FiniteSpace, budget: int = DEFAULT_MATERIALIZATION_BUDGET):
    """The lifted space on ``arity``-tuples of ``space``.

    Returns a tabulated :class:`FiniteSpace` when the tuple count is within
    ``budget``; otherwise a :class:`LiftedSpace` evaluated per pair.
    """
    lazy = LiftedSpace(space, l)
    if len(lazy) <= budget:
        return lazy.materialize()
    return lazy


def lifted_map(l: Lifting, f: SpaceMap, budget: int = DEFAULT_MATERIALIZATION_BUDGET) -> SpaceMap:
    """The tuple-wise image ``L(f)`` between the lifted spaces."""
    src, dst = apply(l, f.src, budget), apply(l, f.dst, budget)
    if isinstance(src, LiftedSpace) or isinstance(dst, LiftedSpace):
        raise LiftingError("lifted map needs materialized spaces; raise the budget")
    return SpaceMap(src, dst, {xs: tuple(f(x) for x in xs) for xs in src.points})


def check_embedding_preservation(l: Lifting, space: FiniteSpace, subset: Sequence) -> bool:
    """Lifting the subspace gives exactly the restriction of the lifted space."""
    sub = restrict(space, subset)
    for xs in itertools.product(sub.points, repeat=l.arity):
        for ys in itertools.product(sub.points, repeat=l.arity):
            inner = lift_distance(l, sub.d, xs, ys, sub.kind)
            outer = lift_distance(l, space.d, xs, ys, space.kind)
            if inner != outer:
                return False
    return True


def sample_embedding_preservation(l: Lifting, kind: MetricKind, rng: random.Random,
                                  trials: int = 50, max_points: int = 4) -> list:
    """Falsification run for (custom) liftings; returns failing (space, subset) pairs."""
    from .gmet import random_space

    failures = []
    for _ in range(trials):
        space = random_space(kind, rng.randint(1, max_points), rng)
        subset = [p for p in space.points if rng.random() < 0.6] or [space.points[0]]
        if not check_embedding_preservation(l, space, subset):
            failures.append((space, subset))
    return failures


@dataclass(frozen=True)
class LiftedOpDecl:
    symbol: str
    arity: int
    lifting: Lifting

    def __post_init__(self):
        if self.lifting.arity != self.arity:
            raise LiftingError(
                f"operation {self.symbol} has arity {self.arity} but its lifting {self.lifting} has arity {self.lifting.arity}")
