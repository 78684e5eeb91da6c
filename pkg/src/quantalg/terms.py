"""Terms over a lifted signature with carrier constants.

Parametric families such as ``plus`` are written ``plus(1/2; a, b)``; the
instance ``plus`` at ``1/2`` is a distinct operation symbol.  In axiom
patterns the parameter slot may hold an expression over parameter
variables, e.g. ``plus(p*q; x, y)``.
"""

from __future__ import annotations

import itertools
import random
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from . import expr as ex
from .liftings import LiftedOpDecl, Lifting

DEFAULT_TERM_BUDGET = 200_000
_NO_PARAM = Fraction(-1)  # sort key for non-parametric applications


class TermError(ValueError):
    pass


class BudgetError(RuntimeError):
    """A bounded enumeration would exceed its configured size limit."""


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Const:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class App:
    symbol: str
    args: tuple = ()
    param: object = None  # Fraction, expression node (patterns only) or None

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))

    @property
    def op_name(self) -> str:
        return self.symbol if self.param is None else f"{self.symbol}_{self.param}"

    def __str__(self):
        inner = ", ".join(map(str, self.args))
        if self.param is None:
            return f"{self.symbol}({inner})" if self.args else self.symbol
        return f"{self.symbol}({self.param}; {inner})"


Term = Var | Const | App


# -- signatures -------------------------------------------------------------


@dataclass(frozen=True)
class OpFamily:
    """An operation symbol, or a family of them indexed by ``params``."""

    symbol: str
    arity: int
    lifting: Lifting
    params: tuple | None = None

    def __post_init__(self):
        if self.lifting.arity != self.arity:
            raise TermError(f"operation {self.symbol}: lifting {self.lifting} has arity {self.lifting.arity}, not {self.arity}")
        if self.params is not None:
            ps = tuple(sorted({Fraction(p) for p in self.params}))
            for p in ps:
                if not 0 < p < 1:
                    raise TermError(f"parameter {p} of {self.symbol} must lie strictly between 0 and 1")
            object.__setattr__(self, "params", ps)
        elif self.lifting.uses_op_param:
            raise TermError(f"lifting {self.lifting} of {self.symbol} refers to a parameter, but {self.symbol} has none")

    @property
    def parametric(self) -> bool:
        return self.params is not None

    def lifting_at(self, p) -> Lifting:
        return self.lifting.bind(p) if self.lifting.uses_op_param else self.lifting

    def decl(self, p=None) -> LiftedOpDecl:
        name = self.symbol if p is None else f"{self.symbol}_{p}"
        return LiftedOpDecl(name, self.arity, self.lifting_at(p))

    def instances(self) -> tuple:
        return self.params if self.parametric else (None,)


@dataclass(frozen=True)
class Signature:
    families: tuple = ()
    constants: tuple = ()

    def __post_init__(self):
        fams = tuple(sorted(self.families, key=lambda f: f.symbol))
        object.__setattr__(self, "families", fams)
        object.__setattr__(self, "constants", tuple(self.constants))
        names = [f.symbol for f in fams]
        if len(set(names)) != len(names):
            raise TermError("duplicate operation symbol")
        if len(set(self.constants)) != len(self.constants):
            raise TermError("duplicate constant")
        clash = set(names) & set(self.constants)
        if clash:
            raise TermError(f"name used both as operation and constant: {sorted(clash)}")
        object.__setattr__(self, "_by_symbol", {f.symbol: f for f in fams})

    def family(self, symbol: str) -> OpFamily:
        try:
            return self._by_symbol[symbol]
        except KeyError:
            raise TermError(f"unknown operation symbol {symbol!r}") from None

    def has_symbol(self, name: str) -> bool:
        return name in self._by_symbol

    def decls(self) -> list:
        """All operation instances as lifted declarations."""
        return [f.decl(p) for f in self.families for p in f.instances()]

    def with_constants(self, names: Iterable[str]) -> "Signature":
        return Signature(self.families, self.constants + tuple(names))

    def with_params(self, symbol: str, params: Iterable) -> "Signature":
        fams = [OpFamily(f.symbol, f.arity, f.lifting, tuple(params)) if f.symbol == symbol else f
                for f in self.families]
        return Signature(tuple(fams), self.constants)

    def all_params(self) -> tuple:
        return tuple(sorted({p for f in self.families if f.parametric for p in f.params}))


# -- parsing and printing ---------------------------------------------------

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_']*")


class _TermParser:
    def __init__(self, text: str, sig: Signature, allow_vars: bool, param_vars: bool):
        self.s = text
        self.i = 0
        self.sig = sig
        self.allow_vars = allow_vars
        self.param_vars = param_vars

    def fail(self, msg):
        raise TermError(f"{msg} at position {self.i} in {self.s!r}")

    def ws(self):
        while self.i < len(self.s) and self.s[self.i].isspace():
            self.i += 1

    def peek(self):
        self.ws()
        return self.s[self.i] if self.i < len(self.s) else ""

    def expect(self, ch):
        if self.peek() != ch:
            self.fail(f"expected {ch!r}")
        self.i += 1

    def term(self):
        self.ws()
        m = _IDENT.match(self.s, self.i)
        if not m:
            self.fail("expected an identifier")
        name = m.group(0)
        self.i = m.end()
        if self.peek() == "(":
            self.i += 1
            return self.application(name)
        if self.sig.has_symbol(name):
            fam = self.sig.family(name)
            if fam.arity != 0 or fam.parametric:
                self.fail(f"{name} expects arguments")
            return App(name)
        if name in self.sig.constants:
            return Const(name)
        if not self.allow_vars:
            self.fail(f"unknown constant {name!r}")
        return Var(name)

    def application(self, name):
        fam = self.sig.family(name)
        param = None
        if fam.parametric:
            depth, j = 0, self.i
            while j < len(self.s):
                c = self.s[j]
                if c == "(":
                    depth += 1
                elif c == ")":
                    if depth == 0:
                        break
                    depth -= 1
                elif c == ";" and depth == 0:
                    break
                j += 1
            if j >= len(self.s) or self.s[j] != ";":
                self.fail(f"{name} needs a parameter: {name}(p; ...)")
            param = self.parameter(name, fam, self.s[self.i:j])
            self.i = j + 1
        args = []
        if self.peek() != ")":
            args.append(self.term())
            while self.peek() == ",":
                self.i += 1
                args.append(self.term())
        self.expect(")")
        if len(args) != fam.arity:
            self.fail(f"{name} has arity {fam.arity}, got {len(args)} arguments")
        return App(name, tuple(args), param)

    def parameter(self, name, fam, text):
        try:
            node = ex.parse_expr(text)
        except ex.ExprError as exc:
            self.fail(f"malformed parameter {text.strip()!r}: {exc}")
        if ex.free_names(node):
            if not self.param_vars:
                self.fail(f"parameter {text.strip()!r} must be a rational literal")
            return node.ident if isinstance(node, ex.Name) else node
        try:
            value = ex.evaluate(node, {})
        except ZeroDivisionError:
            self.fail(f"malformed parameter {text.strip()!r}")
        if not 0 < value < 1:
            self.fail(f"parameter {value} of {name} must lie strictly between 0 and 1")
        if value not in fam.params:
            self.fail(f"parameter {value} is not declared for {name}")
        return value


def parse_term(text: str, sig: Signature, allow_vars: bool = True, param_vars: bool = False) -> Term:
    """Parse ``text``; unknown identifiers become variables when ``allow_vars``.

    With ``param_vars`` the parameter slot may mention parameter variables;
    a bare name is kept as a string, anything larger as an expression node.
    """
    p = _TermParser(text, sig, allow_vars, param_vars)
    t = p.term()
    if p.peek():
        p.fail("trailing input")
    return t


# -- structural operations --------------------------------------------------


def substitute(t: Term, mapping: Mapping) -> Term:
    """Replace variables homomorphically; keys may be :class:`Var` or names."""
    names = {(k.name if isinstance(k, Var) else k): v for k, v in mapping.items()}

    def go(u):
        if isinstance(u, Var):
            return names.get(u.name, u)
        if isinstance(u, App) and u.args:
            return App(u.symbol, tuple(go(a) for a in u.args), u.param)
        return u

    return go(t)


def rename_constants(t: Term, table: Mapping) -> Term:
    """Relabel carrier constants through ``table`` (unmapped ones stay)."""
    if isinstance(t, Const):
        target = table.get(t.name, t.name)
        return target if isinstance(target, (Var, Const, App)) else Const(target)
    if isinstance(t, App) and t.args:
        return App(t.symbol, tuple(rename_constants(a, table) for a in t.args), t.param)
    return t


def variables(t: Term) -> set:
    if isinstance(t, Var):
        return {t.name}
    if isinstance(t, App):
        return set().union(*(variables(a) for a in t.args)) if t.args else set()
    return set()


def constants(t: Term) -> set:
    if isinstance(t, Const):
        return {t.name}
    if isinstance(t, App):
        return set().union(*(constants(a) for a in t.args)) if t.args else set()
    return set()


def depth(t: Term) -> int:
    if isinstance(t, App) and t.args:
        return 1 + max(depth(a) for a in t.args)
    return 0


def term_key(t: Term) -> tuple:
    """Canonical order: depth, then symbol name, then parameter, then arguments."""
    if isinstance(t, App):
        param = t.param if isinstance(t.param, Fraction) else _NO_PARAM
        return (depth(t), t.symbol, param, tuple(term_key(a) for a in t.args))
    return (0, t.name, _NO_PARAM, ())


def is_ground(t: Term) -> bool:
    return not variables(t)


def enumerate_ground_terms(sig: Signature, carrier: Sequence[str], max_depth: int,
                           budget: int = DEFAULT_TERM_BUDGET) -> list:
    """All ground terms of depth at most ``max_depth`` in canonical order."""
    if max_depth < 0:
        raise ValueError("depth must be non-negative")
    level = [Const(c) for c in carrier]
    level += [App(f.symbol, (), p) for f in sig.families if f.arity == 0 for p in f.instances()]
    everything = list(level)
    by_depth = [level]
    for k in range(1, max_depth + 1):
        new = []
        for f in sig.families:
            if f.arity == 0:
                continue
            count = len(everything) ** f.arity - (len(everything) - len(by_depth[-1])) ** f.arity
            if len(everything) + len(new) + count * len(f.instances()) > budget:
                raise BudgetError(f"term universe at depth {k} exceeds the budget of {budget} terms")
            fresh = set(by_depth[-1])
            for p in f.instances():
                for args in itertools.product(everything, repeat=f.arity):
                    if any(a in fresh for a in args):
                        new.append(App(f.symbol, args, p))
        by_depth.append(new)
        everything.extend(new)
    return sorted(everything, key=term_key)


def random_term(sig: Signature, carrier: Sequence[str], max_depth: int, rng: random.Random,
                leaf_names: Sequence[str] = ()) -> Term:
    """A random term; leaves are carrier constants or variables from ``leaf_names``."""
    leaves = [Const(c) for c in carrier] + [Var(v) for v in leaf_names]
    ops = [f for f in sig.families if f.arity > 0]
    if max_depth == 0 or not ops or rng.random() < 0.3:
        return rng.choice(leaves)
    f = rng.choice(ops)
    p = rng.choice(f.params) if f.parametric else None
    return App(f.symbol, tuple(random_term(sig, carrier, max_depth - 1, rng, leaf_names) for _ in range(f.arity)), p)


def evaluate(t: Term, algebra, assignment: Mapping | None = None):
    """Interpret ``t`` in ``algebra``.

    The algebra supplies ``constant(name)`` and ``operation(symbol, param, args)``.
    """
    assignment = assignment or {}
    if isinstance(t, Var):
        try:
            return assignment[t.name]
        except KeyError:
            raise TermError(f"variable {t.name} is not assigned") from None
    if isinstance(t, Const):
        return algebra.constant(t.name)
    return algebra.operation(t.symbol, t.param, tuple(evaluate(a, algebra, assignment) for a in t.args))


# -- parameter closure ------------------------------------------------------


def close_params(params: Iterable, max_denominator: int | None = None) -> tuple:
    """Close under ``p*q``, ``p*(1-q)/(1-p*q)`` and ``1-p``.

    Only values with denominator at most ``max_denominator`` are kept
    (default: the largest denominator among ``params``).  Returns the closed
    tuple and whether the closure is complete, i.e. nothing was dropped.
    """
    ps = {Fraction(p) for p in params}
    if not ps:
        return (), True
    bound = max_denominator or max(p.denominator for p in ps)
    complete = True
    frontier = set(ps)
    while frontier:
        new = set()
        for p in ps:
            for q in ps:
                if not (p in frontier or q in frontier):
                    continue
                for r in (p * q, p * (1 - q) / (1 - p * q), 1 - p):
                    if r in ps or r in new:
                        continue
                    if r.denominator > bound:
                        complete = False
                    else:
                        new.add(r)
        ps |= new
        frontier = new
    return tuple(sorted(ps)), complete
