"""Equations, quantitative equations, Horn clauses and theories."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

from . import expr as ex
from .gmet import FiniteSpace, KindMismatchError, MetricKind
from .terms import App, Const, Signature, Term, TermError, Var, parse_term


class TheoryError(ValueError):
    pass


@dataclass(frozen=True)
class Eq:
    lhs: Term
    rhs: Term

    def __str__(self):
        return f"{self.lhs} = {self.rhs}"


@dataclass(frozen=True)
class QEq:
    """``lhs =[eps] rhs``; ``eps`` is a rational or an expression over labels and parameter variables."""

    lhs: Term
    rhs: Term
    eps: object

    def __post_init__(self):
        if isinstance(self.eps, (int, Fraction)) and not isinstance(self.eps, bool):
            value = Fraction(self.eps)
            if not 0 <= value <= 1:
                raise TheoryError(f"epsilon {value} outside [0,1]")
            object.__setattr__(self, "eps", value)

    @property
    def constant_eps(self) -> bool:
        return isinstance(self.eps, Fraction)

    def __str__(self):
        return f"{self.lhs} =[{self.eps}] {self.rhs}"


def _param_names(t: Term) -> set:
    if not isinstance(t, App):
        return set()
    out = set()
    if isinstance(t.param, str):
        out.add(t.param)
    elif t.param is not None and not isinstance(t.param, Fraction):
        out |= ex.free_names(t.param)
    for a in t.args:
        out |= _param_names(a)
    return out


@dataclass(frozen=True)
class HornClause:
    premises: tuple
    conclusion: Eq | QEq
    text: str | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "premises", tuple(self.premises))
        unbound = self.expression_names() - self.param_vars() - set(self.labels())
        if unbound:
            raise TheoryError(f"unbound names {sorted(unbound)} in clause {self}")

    def atoms(self):
        return self.premises + (self.conclusion,)

    def param_vars(self) -> set:
        out = set()
        for a in self.atoms():
            out |= _param_names(a.lhs) | _param_names(a.rhs)
        return out

    def labels(self) -> list:
        """Premise ε-labels, i.e. bare names that are not parameter variables."""
        pv = self.param_vars()
        out = []
        for a in self.premises:
            if isinstance(a, QEq) and isinstance(a.eps, ex.Name) and a.eps.ident not in pv and a.eps.ident not in out:
                out.append(a.eps.ident)
        return out

    def expression_names(self) -> set:
        out = set()
        for a in self.atoms():
            if isinstance(a, QEq) and not a.constant_eps:
                out |= ex.free_names(a.eps)
        return out

    def __str__(self):
        if self.text:
            return self.text
        prem = ", ".join(map(str, self.premises))
        return f"{prem} |- {self.conclusion}" if prem else f"|- {self.conclusion}"


def check_basic(h: HornClause) -> bool:
    """Every premise relates two variables."""
    return all(isinstance(a.lhs, Var) and isinstance(a.rhs, Var) for a in h.premises)


@dataclass(frozen=True)
class Theory:
    sig: Signature
    kind: MetricKind
    axioms: tuple = ()
    space: FiniteSpace | None = None

    def __post_init__(self):
        object.__setattr__(self, "axioms", tuple(self.axioms))

    @property
    def carrier(self) -> tuple:
        return self.sig.constants


def extend_by_space(th: Theory, space: FiniteSpace) -> Theory:
    """Add a constant per point and the premise-free axioms ``a =[d(a,b)] b``."""
    if space.kind.axioms != th.kind.axioms:
        raise KindMismatchError(f"space kind {space.kind} differs from theory kind {th.kind}")
    for p in space.points:
        if not isinstance(p, str):
            raise TheoryError(f"point {p!r} is not an identifier")
        if p in th.sig.constants or th.sig.has_symbol(p):
            raise TheoryError(f"point {p!r} collides with an existing symbol")
    sig = th.sig.with_constants(space.points)
    new = [HornClause((), QEq(Const(a), Const(b), space.d(a, b))) for a in space.points for b in space.points]
    return Theory(sig, th.kind, th.axioms + tuple(new), space)


# -- clause syntax ----------------------------------------------------------


def _split_top(text: str, sep: str) -> list:
    parts, depth, start = [], 0, 0
    for i, c in enumerate(text):
        if c in "([":
            depth += 1
        elif c in ")]":
            depth -= 1
        elif c == sep and depth == 0:
            parts.append(text[start:i])
            start = i + 1
    parts.append(text[start:])
    return parts


def parse_atom(text: str, sig: Signature) -> Eq | QEq:
    depth = 0
    for i, c in enumerate(text):
        if c in "([":
            depth += 1
        elif c in ")]":
            depth -= 1
        elif c == "=" and depth == 0:
            lhs_text = text[:i]
            rest = text[i + 1:]
            eps = None
            if rest.lstrip().startswith("["):
                rest = rest.lstrip()
                close = rest.find("]")
                if close < 0:
                    raise TheoryError(f"unclosed '[' in {text.strip()!r}")
                eps = _parse_eps(rest[1:close])
                rest = rest[close + 1:]
            lhs = parse_term(lhs_text.strip(), sig, allow_vars=True, param_vars=True)
            rhs = parse_term(rest.strip(), sig, allow_vars=True, param_vars=True)
            return Eq(lhs, rhs) if eps is None else QEq(lhs, rhs, eps)
    raise TheoryError(f"expected 's = t' or 's =[e] t', got {text.strip()!r}")


def _parse_eps(text: str):
    node = ex.parse_expr(text)
    if ex.free_names(node):
        return node
    return ex.evaluate(node, {})


def parse_clause(text: str, sig: Signature) -> HornClause:
    """Parse ``premise, premise |- conclusion`` (the premises are optional)."""
    if "|-" in text:
        prem_text, concl_text = text.split("|-", 1)
    else:
        prem_text, concl_text = "", text
    if "|-" in concl_text:
        raise TheoryError(f"more than one '|-' in {text.strip()!r}")
    try:
        premises = [parse_atom(p, sig) for p in _split_top(prem_text, ",") if p.strip()] if prem_text.strip() else []
        conclusion = parse_atom(concl_text, sig)
    except (TermError, ex.ExprError) as exc:
        raise TheoryError(str(exc)) from exc
    return HornClause(tuple(premises), conclusion, " ".join(text.split()))


def make_theory(sig: Signature, kind: MetricKind, clauses: Iterable[str]) -> Theory:
    return Theory(sig, kind, tuple(parse_clause(c, sig) for c in clauses))
