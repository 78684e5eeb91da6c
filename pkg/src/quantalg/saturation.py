"""Bounded saturation of a quantitative theory over a ground-term universe.

The state is an e-graph: union-find classes over the universe, a hash-cons
table of e-nodes ``(symbol, param, child classes)``, and a distance table
on classes.  Every step only merges classes or lowers distances, and each
is an instance of a sound inference, so the table is an upper bound on the
derivable distance.

Terms are inserted depth level by depth level.  A new term whose e-node
already exists joins that class at once, which keeps the number of live
classes close to the number of semantically distinct terms.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

from . import expr as ex
from .algebra import FiniteAlgebra
from .gmet import ONE, ZERO, Axiom, FiniteSpace, satisfies_kind
from .liftings import lift_distance
from .terms import (DEFAULT_TERM_BUDGET, App, Const, Term, Var, close_params, depth,
                    enumerate_ground_terms, variables)
from .theory import Eq, HornClause, Theory


class SaturationError(RuntimeError):
    pass


class TermOutsideUniverse(KeyError):
    def __str__(self):
        return self.args[0] if self.args else "term outside universe"


class PartialAlgebraError(ValueError):
    pass


@dataclass(frozen=True)
class SaturationConfig:
    depth: int = 1
    max_rounds: int = 64
    materialization_budget: int = DEFAULT_TERM_BUDGET
    grow: bool = True
    param_closure: bool = True
    closure_denominator: int | None = None
    trace: bool = False

    def __post_init__(self):
        if self.depth < 0:
            raise ValueError("depth must be non-negative")
        if self.max_rounds < 1:
            raise ValueError("max_rounds must be positive")


@dataclass(frozen=True)
class LneStep:
    """One application of the nonexpansiveness rule that lowered a distance."""

    round: int
    symbol: str
    param: Fraction | None
    lhs_args: tuple
    rhs_args: tuple
    lhs_class: int
    rhs_class: int
    points: tuple
    delta: tuple
    value: Fraction
    previous: Fraction


@dataclass
class SaturationResult:
    theory: Theory
    config: SaturationConfig
    universe: tuple
    class_of: tuple
    classes: tuple
    dist: dict
    nodes: dict
    fixpoint_reached: bool
    round_count: int
    lne_log: tuple = ()
    warnings: tuple = ()
    params_complete: bool = True
    trace: tuple = ()
    index: dict = field(default_factory=dict, repr=False)

    @property
    def kind(self):
        return self.theory.kind

    @property
    def sig(self):
        return self.theory.sig

    def lookup(self, t: Term) -> int | None:
        """Class of ``t``: through the universe, else through the e-node table."""
        i = self.index.get(t)
        if i is not None:
            return self.class_of[i]
        if isinstance(t, Const):
            return self.nodes.get((t.name, None, ()))
        if isinstance(t, App):
            kids = []
            for a in t.args:
                k = self.lookup(a)
                if k is None:
                    return None
                kids.append(k)
            return self.nodes.get((t.symbol, t.param, tuple(kids)))
        return None

    def class_id(self, t: Term) -> int:
        c = self.lookup(t)
        if c is None:
            raise TermOutsideUniverse(
                f"term {t} is outside the depth-{self.config.depth} universe; try a larger depth")
        return c

    def representative(self, c: int) -> Term:
        return self.universe[c]

    def members(self, c: int) -> list:
        return [t for t, k in zip(self.universe, self.class_of) if k == c]

    def d(self, c1: int, c2: int) -> Fraction:
        return self.dist[c1][c2]

    def label(self, c: int) -> str:
        return f"[{self.universe[c]}]"


def derived_distance(r: SaturationResult, s: Term, t: Term) -> Fraction:
    return r.dist[r.class_id(s)][r.class_id(t)]


def same_class(r: SaturationResult, s: Term, t: Term) -> bool:
    return r.class_id(s) == r.class_id(t)


# -- engine -----------------------------------------------------------------


class _Engine:
    def __init__(self, th: Theory, cfg: SaturationConfig):
        self.cfg = cfg
        self.kind = th.kind
        self.ax = th.kind.axioms
        self.warnings = []
        sig = th.sig
        self.params_complete = True
        if cfg.param_closure:
            for fam in sig.families:
                if fam.parametric:
                    closed, ok = close_params(fam.params, cfg.closure_denominator)
                    if not ok:
                        self.params_complete = False
                        self.warnings.append(
                            f"parameter closure of {fam.symbol} is incomplete within denominator bound; kept {', '.join(map(str, closed))}")
                    sig = sig.with_params(fam.symbol, closed)
        self.theory = Theory(sig, th.kind, th.axioms, th.space)
        self.sig = sig
        self.all_params = sig.all_params()
        self.universe = enumerate_ground_terms(sig, sig.constants, cfg.depth, cfg.materialization_budget)
        self.index = {t: i for i, t in enumerate(self.universe)}
        self.parent = list(range(len(self.universe)))
        self.inserted = 0
        self.hashcons = {}
        self.dist = {}
        self.classes = []
        self.by_class = {}
        self.round_no = 0
        self.lne_log = []
        self.trace = []
        self._clamped = set()
        self._lift_cache = {}

    # union-find ----------------------------------------------------------

    def find(self, i: int) -> int:
        root = i
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[i] != root:
            self.parent[i], i = root, self.parent[i]
        return root

    def canon(self, key):
        sym, param, kids = key
        return (sym, param, tuple(self.find(k) for k in kids))

    def new_class(self, i: int):
        self_d = ZERO if Axiom.REFL in self.ax else ONE
        row = {c: ONE for c in self.classes}
        for c in self.classes:
            self.dist[c][i] = ONE
        row[i] = self_d
        self.dist[i] = row
        self.classes.append(i)
        self.classes.sort()

    def merge(self, a: int, b: int) -> bool:
        a, b = self.find(a), self.find(b)
        if a == b:
            return False
        r, o = min(a, b), max(a, b)
        self.parent[o] = r
        d = self.dist
        diag = min(d[r][r], d[o][o], d[r][o], d[o][r])
        for c in self.classes:
            if c in (r, o):
                continue
            d[r][c] = min(d[r][c], d[o][c])
            d[c][r] = min(d[c][r], d[c][o])
            del d[c][o]
        d[r][r] = diag
        del d[r][o]
        del d[o]
        self.classes.remove(o)
        return True

    def rebuild(self) -> bool:
        """Restore congruence: equal canonical e-nodes must share a class."""
        changed = False
        while True:
            table, pending = {}, []
            for key, c in self.hashcons.items():
                ck, rc = self.canon(key), self.find(c)
                prev = table.get(ck)
                if prev is not None and self.find(prev) != rc:
                    pending.append((prev, rc))
                else:
                    table[ck] = rc
            self.hashcons = table
            if not pending:
                break
            for a, b in pending:
                changed |= self.merge(a, b)
        self.hashcons = {k: self.find(v) for k, v in self.hashcons.items()}
        self.by_class = {c: {} for c in self.classes}
        for (sym, param, kids), c in self.hashcons.items():
            self.by_class[c].setdefault(sym, []).append((param, kids))
        return changed

    def insert_level(self, k: int):
        while self.inserted < len(self.universe) and depth(self.universe[self.inserted]) <= k:
            i = self.inserted
            t = self.universe[i]
            if isinstance(t, Const):
                key = (t.name, None, ())
            else:
                key = (t.symbol, t.param, tuple(self.find(self.index[a]) for a in t.args))
            hit = self.hashcons.get(key)
            if hit is not None:
                self.parent[i] = self.find(hit)
            else:
                self.hashcons[key] = i
                self.new_class(i)
            self.inserted += 1
        self.rebuild()

    # matching ------------------------------------------------------------

    def match(self, pat: Term, c: int, sub: dict, psub: dict):
        if isinstance(pat, Var):
            bound = sub.get(pat.name)
            if bound is None:
                yield {**sub, pat.name: c}, psub
            elif bound == c:
                yield sub, psub
            return
        if isinstance(pat, Const):
            if self.hashcons.get((pat.name, None, ())) == c:
                yield sub, psub
            return
        for param, kids in self.by_class[c].get(pat.symbol, ()):
            if len(kids) != len(pat.args):
                continue
            for ps in self.match_param(pat, param, psub):
                yield from self.match_args(pat.args, kids, 0, sub, ps)

    def match_args(self, pats, kids, i, sub, psub):
        if i == len(pats):
            yield sub, psub
            return
        for s2, p2 in self.match(pats[i], kids[i], sub, psub):
            yield from self.match_args(pats, kids, i + 1, s2, p2)

    def match_param(self, pat: App, value, psub: dict):
        want = pat.param
        if want is None or isinstance(want, Fraction):
            if want == value:
                yield psub
            return
        if value is None:
            return
        if isinstance(want, str):
            bound = psub.get(want)
            if bound is None:
                yield {**psub, want: value}
            elif bound == value:
                yield psub
            return
        free = sorted(ex.free_names(want) - psub.keys())
        choices = self.sig.family(pat.symbol).params
        for combo in itertools.product(choices, repeat=len(free)):
            env = {**psub, **dict(zip(free, combo))}
            try:
                if ex.evaluate(want, env) == value:
                    yield env
            except ZeroDivisionError:
                continue

    def param_value(self, pat: App, psub: dict):
        p = pat.param
        if p is None or isinstance(p, Fraction):
            return p
        if isinstance(p, str):
            return psub[p]
        return ex.evaluate(p, psub)

    def lookup(self, pat: Term, sub: dict, psub: dict):
        if isinstance(pat, Var):
            return sub[pat.name]
        if isinstance(pat, Const):
            return self.hashcons.get((pat.name, None, ()))
        kids = []
        for a in pat.args:
            k = self.lookup(a, sub, psub)
            if k is None:
                return None
            kids.append(k)
        try:
            pv = self.param_value(pat, psub)
        except ZeroDivisionError:
            return None
        return self.hashcons.get((pat.symbol, pv, tuple(kids)))

    def grow_key(self, pat: App, sub: dict, psub: dict):
        """E-node for ``pat`` when all its children exist, else None."""
        try:
            pv = self.param_value(pat, psub)
        except ZeroDivisionError:
            return None
        fam = self.sig.family(pat.symbol)
        if fam.parametric and pv not in fam.params:
            return None
        kids = []
        for a in pat.args:
            k = self.lookup(a, sub, psub)
            if k is None:
                return None
            kids.append(k)
        return (pat.symbol, pv, tuple(kids))

    def complete_params(self, names: Iterable[str], psub: dict):
        free = sorted(set(names) - psub.keys())
        for combo in itertools.product(self.all_params, repeat=len(free)):
            yield {**psub, **dict(zip(free, combo))}

    def targets(self, q: Term, sub: dict, psub: dict, allow_grow: bool):
        if variables(q) - sub.keys():
            for c2 in self.classes:
                for s2, p2 in self.match(q, c2, sub, psub):
                    yield s2, p2, c2, None
            return
        for p2 in self.complete_params(_param_names(q), psub):
            c2 = self.lookup(q, sub, p2)
            if c2 is not None:
                yield sub, p2, c2, None
            elif allow_grow and isinstance(q, App) and q.args:
                key = self.grow_key(q, sub, p2)
                if key is not None:
                    yield sub, p2, None, key

    def complete(self, h: HornClause, sub: dict, psub: dict):
        free_terms = sorted(_clause_vars(h) - sub.keys())
        for combo in itertools.product(self.classes, repeat=len(free_terms)):
            s2 = {**sub, **dict(zip(free_terms, combo))}
            for p2 in self.complete_params(h.param_vars(), psub):
                yield s2, p2

    def premises_env(self, h: HornClause, sub: dict, psub: dict):
        env = dict(psub)
        labels = h.labels()
        for prem in h.premises:
            l, r = self.lookup(prem.lhs, sub, psub), self.lookup(prem.rhs, sub, psub)
            if l is None or r is None:
                return None
            if isinstance(prem, Eq):
                if l != r:
                    return None
                continue
            d = self.dist[l][r]
            if isinstance(prem.eps, ex.Name) and prem.eps.ident in labels:
                env[prem.eps.ident] = max(env.get(prem.eps.ident, d), d)
                continue
            try:
                bound = prem.eps if prem.constant_eps else ex.evaluate(prem.eps, env)
            except ZeroDivisionError:
                return None
            if d > bound:
                return None
        return env

    def conclusion_eps(self, h: HornClause, env: dict):
        concl = h.conclusion
        if concl.constant_eps:
            return concl.eps
        try:
            value = ex.evaluate(concl.eps, env)
        except ZeroDivisionError:
            return None
        if value < 0:
            raise SaturationError(f"clause {h} yields negative epsilon {value}")
        if value > 1:
            if str(h) not in self._clamped:
                self._clamped.add(str(h))
                self.warnings.append(f"epsilon {value} of clause {h} clamped to 1")
            return ONE
        return value

    def axiom_actions(self) -> list:
        actions = []
        for h in self.theory.axioms:
            concl = h.conclusion
            is_eq = isinstance(concl, Eq)
            dirs = [(concl.lhs, concl.rhs, False)]
            if is_eq:
                dirs.append((concl.rhs, concl.lhs, True))
            for pat, other, flipped in dirs:
                for c in list(self.classes):
                    for sub, psub in self.match(pat, c, {}, {}):
                        for s2, p2, c2, key in self.targets(other, sub, psub, is_eq and self.cfg.grow):
                            for s3, p3 in self.complete(h, s2, p2):
                                env = self.premises_env(h, s3, p3)
                                if env is None:
                                    continue
                                if is_eq:
                                    actions.append(("grow", c, key) if c2 is None else ("merge", c, c2))
                                    continue
                                eps = self.conclusion_eps(h, env)
                                if eps is not None:
                                    a, b = (c2, c) if flipped else (c, c2)
                                    actions.append(("lower", a, b, eps))
        return actions

    def apply_actions(self, actions) -> bool:
        changed = False
        for act in actions:
            if act[0] == "lower":
                a, b = self.find(act[1]), self.find(act[2])
                if act[3] < self.dist[a][b]:
                    self.dist[a][b] = act[3]
                    changed = True
        for act in actions:
            if act[0] == "grow":
                key = self.canon(act[2])
                c = self.find(act[1])
                hit = self.hashcons.get(key)
                if hit is None:
                    self.hashcons[key] = c
                    changed = True
                else:
                    changed |= self.merge(hit, c)
            elif act[0] == "merge":
                changed |= self.merge(act[1], act[2])
        changed |= self.rebuild()
        return changed

    # kind closure ----------------------------------------------------------

    def close_kind(self) -> bool:
        changed = False
        d, cls, ax = self.dist, self.classes, self.ax
        if Axiom.SYM in ax:
            for i, x in enumerate(cls):
                for y in cls[i + 1:]:
                    a, b = d[x][y], d[y][x]
                    if a != b:
                        d[x][y] = d[y][x] = min(a, b)
                        changed = True
        if Axiom.REFL in ax:
            for x in cls:
                if d[x][x] != 0:
                    d[x][x] = ZERO
                    changed = True
        if Axiom.TRI in ax:
            changed |= self._relax(Axiom.STRONGTRI in ax)
        if Axiom.IDOFIND in ax:
            zero = [(x, y) for x in cls for y in cls if x != y and d[x][y] == 0]
            for x, y in zero:
                changed |= self.merge(x, y)
            if zero:
                self.rebuild()
        return changed

    def _relax(self, strong: bool) -> bool:
        """Floyd-Warshall on integers scaled by the common denominator."""
        cls, d = self.classes, self.dist
        n = len(cls)
        scale = 1
        for x in cls:
            for v in d[x].values():
                scale = math.lcm(scale, v.denominator)
        m = [[int(d[x][y] * scale) for y in cls] for x in cls]
        before = [row[:] for row in m]
        for k in range(n):
            row_k = m[k]
            for i in range(n):
                dik = m[i][k]
                if strong:
                    m[i] = [a if a <= dik or a <= b else (dik if dik > b else b) for a, b in zip(m[i], row_k)]
                else:
                    m[i] = [a if a <= dik + b else dik + b for a, b in zip(m[i], row_k)]
        changed = False
        for i, x in enumerate(cls):
            for j, y in enumerate(cls):
                if m[i][j] != before[i][j]:
                    d[x][y] = Fraction(m[i][j], scale)
                    changed = True
        return changed

    # nonexpansiveness rule -------------------------------------------------

    def lne(self) -> bool:
        d, kind = self.dist, self.kind
        groups = {}
        for (sym, param, kids), c in self.hashcons.items():
            if self.sig.has_symbol(sym):
                groups.setdefault((sym, param), []).append((kids, c))
        proviso = {}
        lowered = {}
        self._lift_cache.clear()

        def restricted(pts):
            def delta(x, y):
                if x not in pts or y not in pts:
                    raise KeyError("distance outside the premise set")
                return d[x][y]
            return delta

        for (sym, param), nodes in groups.items():
            lifting = self.sig.family(sym).lifting_at(param)
            for kids1, c1 in nodes:
                for kids2, c2 in nodes:
                    current = min(d[c1][c2], lowered.get((c1, c2), ONE))
                    if current == 0:
                        continue
                    pts = tuple(sorted(set(kids1) | set(kids2)))
                    ok = proviso.get(pts)
                    if ok is None:
                        ok = proviso[pts] = satisfies_kind(pts, lambda x, y: d[x][y], kind)
                    if not ok:
                        continue
                    ck = (sym, param, kids1, kids2)
                    value = self._lift_cache.get(ck)
                    if value is None:
                        value = self._lift_cache[ck] = lift_distance(lifting, restricted(set(pts)), kids1, kids2, kind)
                    if value < current:
                        lowered[c1, c2] = value
                        self.lne_log.append(LneStep(
                            self.round_no, sym, param, kids1, kids2, c1, c2, pts,
                            tuple(tuple(d[x][y] for y in pts) for x in pts), value, current))
        for (c1, c2), value in lowered.items():
            d[c1][c2] = value
        return bool(lowered)

    # driver ----------------------------------------------------------------

    def one_round(self) -> bool:
        self.round_no += 1
        changed = self.rebuild()
        changed |= self.apply_actions(self.axiom_actions())
        changed |= self.close_kind()
        changed |= self.lne()
        if self.cfg.trace:
            self.trace.append(self.snapshot())
        return changed

    def snapshot(self):
        n = self.inserted
        cls = tuple(self.find(i) for i in range(n))
        return cls, {c: dict(row) for c, row in self.dist.items()}

    def run(self) -> SaturationResult:
        # Only the last level decides: it re-runs every rule over the whole universe.
        fixpoint = False
        for k in range(self.cfg.depth + 1):
            self.insert_level(k)
            if self.cfg.trace:
                self.trace.append(self.snapshot())
            fixpoint = False
            for _ in range(self.cfg.max_rounds):
                if not self.one_round():
                    fixpoint = True
                    break
            if not fixpoint:
                self.warnings.append(f"round budget {self.cfg.max_rounds} exhausted at depth level {k}")
        class_of = tuple(self.find(i) for i in range(len(self.universe)))
        return SaturationResult(
            theory=self.theory,
            config=self.cfg,
            universe=tuple(self.universe),
            class_of=class_of,
            classes=tuple(self.classes),
            dist={c: dict(row) for c, row in self.dist.items()},
            nodes=dict(self.hashcons),
            fixpoint_reached=fixpoint,
            round_count=self.round_no,
            lne_log=tuple(self.lne_log),
            warnings=tuple(self.warnings),
            params_complete=self.params_complete,
            trace=tuple(self.trace),
            index=self.index,
        )


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


def _clause_vars(h: HornClause) -> set:
    out = set()
    for a in h.atoms():
        out |= variables(a.lhs) | variables(a.rhs)
    return out


def saturate(th: Theory, cfg: SaturationConfig | None = None) -> SaturationResult:
    return _Engine(th, cfg or SaturationConfig()).run()


# -- views on a result --------------------------------------------------------


def quotient_space(r: SaturationResult) -> FiniteSpace:
    """Classes as points (labelled ``[representative]``) with the derived distance."""
    labels = [r.label(c) for c in r.classes]
    m = [[r.dist[x][y] for y in r.classes] for x in r.classes]
    return FiniteSpace(tuple(labels), tuple(map(tuple, m)), r.kind)


def quotient_algebra(r: SaturationResult, allow_partial: bool = False) -> FiniteAlgebra:
    """The term algebra modulo the derived congruence, tabulated on classes.

    Applications whose result lies beyond the depth bound are missing from
    the tables; they are listed in ``partial`` and rejected unless
    ``allow_partial``.
    """
    space = quotient_space(r)
    label = {c: r.label(c) for c in r.classes}
    consts = {name: label[r.class_id(Const(name))] for name in r.sig.constants}
    ops, partial = {}, []
    for fam in r.sig.families:
        for p in fam.instances():
            table = {}
            for args in itertools.product(r.classes, repeat=fam.arity):
                hit = r.nodes.get((fam.symbol, p, args))
                key = tuple(label[a] for a in args)
                if hit is None:
                    partial.append((fam.symbol, p, key))
                else:
                    table[key] = label[hit]
            ops[fam.symbol, p] = table
    if partial and not allow_partial:
        sym, p, args = partial[0]
        raise PartialAlgebraError(
            f"{len(partial)} applications exceed the depth bound, e.g. {sym}({p}) at {args}; raise the depth or allow a partial algebra")
    return FiniteAlgebra(r.sig, space, ops, consts, partial)


def replay_lne_log(r: SaturationResult) -> list:
    """Re-verify every logged application; returns the failing steps."""
    bad = []
    for step in r.lne_log:
        space = FiniteSpace(step.points, step.delta, r.kind)
        ok = satisfies_kind(space.points, space.d, r.kind)
        lifting = r.sig.family(step.symbol).lifting_at(step.param)
        value = lift_distance(lifting, space.d, step.lhs_args, step.rhs_args, r.kind)
        if not ok or value != step.value or not step.value < step.previous:
            bad.append(step)
    return bad


def dump_text(r: SaturationResult) -> str:
    ids = {c: i for i, c in enumerate(r.classes)}
    lines = [
        f"# depth {r.config.depth}, rounds {r.round_count}, fixpoint: {'yes' if r.fixpoint_reached else 'no'}, "
        f"classes {len(r.classes)}, terms {len(r.universe)}"
    ]
    lines += [f"# warning: {w}" for w in r.warnings]
    lines += [f"{ids[c]}: {r.representative(c)}" for c in r.classes]
    for x, y in _pairs(r):
        lines.append(f"d({ids[x]}, {ids[y]}) = {r.dist[x][y]}")
    return "\n".join(lines) + "\n"


def dump_tsv(r: SaturationResult) -> str:
    ids = {c: i for i, c in enumerate(r.classes)}
    lines = [
        f"meta\tdepth\t{r.config.depth}",
        f"meta\trounds\t{r.round_count}",
        f"meta\tfixpoint\t{'yes' if r.fixpoint_reached else 'no'}",
    ]
    lines += [f"class\t{ids[c]}\t{r.representative(c)}" for c in r.classes]
    lines += [f"member\t{ids[k]}\t{t}" for t, k in zip(r.universe, r.class_of)]
    lines += [f"dist\t{ids[x]}\t{ids[y]}\t{r.dist[x][y]}" for x, y in _pairs(r)]
    return "\n".join(lines) + "\n"


def _pairs(r: SaturationResult):
    sym = Axiom.SYM in r.kind.axioms
    for i, x in enumerate(r.classes):
        for y in r.classes[i if sym else 0:]:
            yield x, y
