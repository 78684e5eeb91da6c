"""Quantitative algebras (models) and clause satisfaction."""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

from . import expr as ex
from .gmet import FiniteSpace, MetricKind
from .liftings import lift_distance
from .terms import App, Signature, Term, evaluate, variables
from .theory import Eq, HornClause

DEFAULT_SAMPLES = 500


class PartialOperationError(LookupError):
    """An operation table has no entry for the requested arguments."""


class ModelMismatchError(ValueError):
    """The model does not satisfy the theory it is being used with."""


@dataclass
class FiniteAlgebra:
    """A tabulated algebra; ``ops`` maps ``(symbol, param)`` to ``{args: element}``."""

    sig: Signature
    space: FiniteSpace
    ops: dict
    consts: dict
    partial: list = field(default_factory=list)

    @property
    def kind(self) -> MetricKind:
        return self.space.kind

    def elements(self) -> tuple:
        return self.space.points

    def distance(self, x, y) -> Fraction:
        return self.space.d(x, y)

    def constant(self, name):
        try:
            return self.consts[name]
        except KeyError:
            table = self.ops.get((name, None))
            if table is not None and () in table:
                return table[()]
            raise KeyError(f"unknown constant {name!r}") from None

    def operation(self, symbol, param, args):
        try:
            return self.ops[symbol, param][tuple(args)]
        except KeyError:
            raise PartialOperationError(f"{symbol}({param}) undefined at {args!r}") from None

    @property
    def total(self) -> bool:
        return not self.partial

    def nonexpansive_violations(self) -> list:
        """Exhaustive check that every operation is nonexpansive up to its lifting."""
        out = []
        kind = self.kind
        for fam in self.sig.families:
            for p in fam.instances():
                lifting = fam.lifting_at(p)
                table = self.ops.get((fam.symbol, p), {})
                for xs, fx in table.items():
                    for ys, fy in table.items():
                        bound = lift_distance(lifting, self.space.d, xs, ys, kind)
                        if self.space.d(fx, fy) > bound:
                            out.append((fam.symbol, p, xs, ys))
        return out


@dataclass
class ProceduralAlgebra:
    """An algebra on a possibly infinite carrier, given by oracles and a sampler."""

    sig: Signature
    kind: MetricKind
    distance: Callable
    op_impl: Callable  # (symbol, param, args) -> element
    const_impl: Callable  # name -> element
    sampler: Callable  # rng -> element
    seeds: tuple = ()  # distinguished elements tried exhaustively before random sampling

    def constant(self, name):
        return self.const_impl(name)

    def operation(self, symbol, param, args):
        return self.op_impl(symbol, param, tuple(args))

    def sample(self, rng: random.Random):
        return self.sampler(rng)


@dataclass(frozen=True)
class Verdict:
    holds: bool
    exhaustive: bool
    checked: int
    counterexample: dict | None = None
    skipped: int = 0
    note: str = ""

    def __bool__(self):
        return self.holds


def ground_params(t: Term, psub: dict) -> Term:
    """Evaluate parameter expressions of ``t`` under the parameter binding ``psub``."""
    if not isinstance(t, App):
        return t
    p = t.param
    if isinstance(p, str):
        p = Fraction(psub[p])
    elif p is not None and not isinstance(p, Fraction):
        p = ex.evaluate(p, psub)
    return App(t.symbol, tuple(ground_params(a, psub) for a in t.args), p)


def clause_vars(h: HornClause) -> list:
    out = set()
    for a in h.atoms():
        out |= variables(a.lhs) | variables(a.rhs)
    return sorted(out)


def _check_instance(alg, h: HornClause, assignment: dict, psub: dict):
    """True/False for the instance, or None if it is undefined (parameter out of range, partial op)."""
    env = dict(psub)
    try:
        for prem in h.premises:
            lhs = evaluate(ground_params(prem.lhs, psub), alg, assignment)
            rhs = evaluate(ground_params(prem.rhs, psub), alg, assignment)
            if isinstance(prem, Eq):
                if lhs != rhs:
                    return True
                continue
            dist = alg.distance(lhs, rhs)
            if isinstance(prem.eps, ex.Name) and prem.eps.ident in h.labels():
                env[prem.eps.ident] = max(env.get(prem.eps.ident, dist), dist)
                continue
            bound = prem.eps if prem.constant_eps else ex.evaluate(prem.eps, env)
            if dist > bound:
                return True
        concl = h.conclusion
        lhs = evaluate(ground_params(concl.lhs, psub), alg, assignment)
        rhs = evaluate(ground_params(concl.rhs, psub), alg, assignment)
        if isinstance(concl, Eq):
            return lhs == rhs
        bound = concl.eps if concl.constant_eps else ex.evaluate(concl.eps, env)
        return alg.distance(lhs, rhs) <= bound
    except (PartialOperationError, ZeroDivisionError):
        return None
    except ValueError:
        # parameter outside (0,1) after evaluation
        return None


def _param_bindings(h: HornClause, sig: Signature):
    names = sorted(h.param_vars())
    values = sig.all_params()
    for combo in itertools.product(values, repeat=len(names)):
        yield dict(zip(names, combo))


def satisfies(alg, h: HornClause, samples: int | None = None, seed: int = 0) -> Verdict:
    """Check ``alg ⊨ h``.

    With ``samples=None`` the check is exhaustive over the carrier (finite
    algebras only).  Otherwise ``samples`` assignments are drawn: first all
    assignments over the algebra's seed elements (while they fit), then
    random elements from its sampler.
    """
    names = clause_vars(h)
    if samples is None:
        if not hasattr(alg, "elements"):
            raise TypeError("exhaustive satisfaction needs a finite algebra")
        elems = alg.elements()
        if names and not elems:
            return Verdict(True, True, 0, note="vacuous: empty carrier")
        assignments = (dict(zip(names, combo)) for combo in itertools.product(elems, repeat=len(names)))
        exhaustive = True
    else:
        rng = random.Random(seed)
        assignments = _sampled_assignments(alg, names, samples, rng)
        exhaustive = False
    checked = skipped = 0
    for assignment in assignments:
        for psub in _param_bindings(h, alg.sig):
            ok = _check_instance(alg, h, assignment, psub)
            if ok is None:
                skipped += 1
                continue
            checked += 1
            if not ok:
                return Verdict(False, exhaustive, checked, {**assignment, **psub}, skipped)
    return Verdict(True, exhaustive, checked, None, skipped)


def _sampled_assignments(alg, names, n, rng):
    seeds = tuple(getattr(alg, "seeds", ()))
    produced = 0
    if seeds and len(seeds) ** len(names) <= n:
        for combo in itertools.product(seeds, repeat=len(names)):
            produced += 1
            yield dict(zip(names, combo))
    while produced < n:
        produced += 1
        yield {v: alg.sample(rng) for v in names}


def sampled_nonexpansive_violations(alg: ProceduralAlgebra, samples: int = DEFAULT_SAMPLES, seed: int = 0) -> list:
    """Falsification of L-nonexpansiveness for every operation instance."""
    rng = random.Random(seed)
    out = []
    for fam in alg.sig.families:
        if fam.arity == 0:
            continue
        for p in fam.instances():
            lifting = fam.lifting_at(p)
            for _ in range(samples):
                xs = tuple(alg.sample(rng) for _ in range(fam.arity))
                ys = tuple(alg.sample(rng) for _ in range(fam.arity))
                bound = lift_distance(lifting, alg.distance, xs, ys, alg.kind)
                if alg.distance(alg.operation(fam.symbol, p, xs), alg.operation(fam.symbol, p, ys)) > bound:
                    out.append((fam.symbol, p, xs, ys))
    return out


def constant_interpretation_ok(alg, points: Sequence, d: Callable) -> bool:
    """The constants of a space extension are interpreted nonexpansively."""
    return all(alg.distance(alg.constant(a), alg.constant(b)) <= d(a, b) for a in points for b in points)

