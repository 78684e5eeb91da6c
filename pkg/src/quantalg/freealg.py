"""The term monad over a theory and free extensions into models.

A :class:`TermSpace` is the bounded term algebra of a theory over a finite
space, saturated to a fixed depth; its points are the class ids of the
saturation result.  Unit, multiplication and the functor action are class
maps between such spaces, and every law is checked exhaustively on the
classes that exist.  Anything that falls outside a depth bound is reported
as partial rather than dropped.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from typing import Mapping

from .algebra import (FiniteAlgebra, ModelMismatchError, PartialOperationError, ProceduralAlgebra,
                      Verdict, constant_interpretation_ok, sampled_nonexpansive_violations, satisfies)
from .gmet import FiniteSpace, SpaceMap
from .saturation import (SaturationConfig, SaturationResult, quotient_algebra, quotient_space,
                         saturate)
from .terms import App, Const, Term, constants, rename_constants
from .theory import Theory, extend_by_space

__all__ = [
    "ClassMap", "FiniteAlgebra", "Homomorphism", "LawCheck", "ModelMismatchError", "ProceduralAlgebra",
    "SoundnessReport", "TermSpace", "Verdict", "check_free_extension", "check_monad_laws",
    "check_naturality", "check_soundness", "check_uniqueness", "constant_interpretation_ok", "flatten",
    "free_extension", "map_terms", "quotient_algebra", "quotient_space", "sampled_nonexpansive_violations",
    "satisfies", "term_space", "unit",
]

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_']*\Z")
_COMBINATION_CAP = 64


@dataclass(frozen=True)
class LawCheck:
    """Outcome of one named check; ``witness`` describes the first failure."""

    name: str
    ok: bool
    witness: str = ""
    note: str = ""

    def line(self) -> str:
        head = f"{'PASS' if self.ok else 'FAIL'} {self.name}"
        extra = " ".join(x for x in (self.witness, f"({self.note})" if self.note else "") if x)
        return f"{head} {extra}" if extra else head


# -- term spaces --------------------------------------------------------------


@dataclass
class TermSpace:
    """Saturated term algebra of ``theory`` over ``base``; points are class ids."""

    theory: Theory
    base: FiniteSpace
    names: dict  # base point -> constant name
    result: SaturationResult
    space: FiniteSpace

    @property
    def depth(self) -> int:
        return self.result.config.depth

    @property
    def classes(self) -> tuple:
        return self.result.classes

    def point_of(self, name: str):
        return self._inverse()[name]

    def _inverse(self) -> dict:
        return {v: k for k, v in self.names.items()}

    def class_of(self, t: Term) -> int | None:
        return self.result.lookup(t)

    def show(self, c: int) -> str:
        """Representative with generated constant names replaced by the base points."""
        inv = self._inverse()
        return str(rename_constants(self.result.representative(c), {n: str(p) for n, p in inv.items()}))


def _constant_names(points, theory: Theory) -> dict:
    taken = {f.symbol for f in theory.sig.families} | set(theory.sig.constants)
    if all(isinstance(p, str) and _IDENT.match(p) and p not in taken for p in points):
        return {p: p for p in points}
    prefix = "g"
    while any(t.startswith(prefix) for t in taken):
        prefix += "_"
    return {p: f"{prefix}{i}" for i, p in enumerate(points)}


def term_space(theory: Theory, base: FiniteSpace, depth: int, max_rounds: int = 64,
               closure_denominator: int | None = None) -> TermSpace:
    """Extend ``theory`` by ``base`` and saturate at ``depth``.

    Points that are not usable as constant names (class ids of an inner
    level, say) get generated names; the choice depends only on the point
    order, so two spaces over the same base agree on names.
    """
    names = _constant_names(base.points, theory)
    inv = {v: k for k, v in names.items()}
    named = FiniteSpace.from_function([names[p] for p in base.points], lambda x, y: base.d(inv[x], inv[y]), base.kind)
    cfg = SaturationConfig(depth=depth, max_rounds=max_rounds, closure_denominator=closure_denominator)
    r = saturate(extend_by_space(theory, named), cfg)
    matrix = [[r.dist[x][y] for y in r.classes] for x in r.classes]
    return TermSpace(theory, base, names, r, FiniteSpace(r.classes, matrix, r.kind))


def unit(ts: TermSpace) -> SpaceMap:
    """``a ↦ [a]`` from the base space into the term space."""
    return SpaceMap(ts.base, ts.space, {p: ts.result.class_id(Const(ts.names[p])) for p in ts.base.points})


# -- class maps ---------------------------------------------------------------


@dataclass
class ClassMap:
    src: TermSpace
    dst: TermSpace
    table: dict
    partial: list = field(default_factory=list)  # source classes whose image is outside dst
    ill_defined: list = field(default_factory=list)  # (source class, image classes)
    expansions: list = field(default_factory=list)  # (c1, c2, source distance, image distance)
    notes: tuple = ()

    @property
    def total(self) -> bool:
        return not self.partial

    @property
    def ok(self) -> bool:
        return self.total and not self.ill_defined and not self.expansions

    def __call__(self, c: int) -> int:
        return self.table[c]

    def as_space_map(self) -> SpaceMap:
        if not self.total:
            raise ValueError(f"class map is partial on {len(self.partial)} classes")
        return SpaceMap(self.src.space, self.dst.space, dict(self.table))


def _finish(src: TermSpace, dst: TermSpace, images: dict, notes=()) -> ClassMap:
    table, partial, ill = {}, [], []
    for c in src.classes:
        found = images[c]
        if not found:
            partial.append(c)
            continue
        if len(set(found)) > 1:
            ill.append((c, tuple(sorted(set(found)))))
        table[c] = found[0]
    expansions = []
    for x in table:
        for y in table:
            before, after = src.result.dist[x][y], dst.result.dist[table[x]][table[y]]
            if after > before:
                expansions.append((x, y, before, after))
    return ClassMap(src, dst, table, partial, ill, expansions, tuple(notes))


def _images(ts: TermSpace, terms) -> list:
    """Classes of the given terms in ``ts`` (terms outside it are skipped)."""
    out = []
    for t in terms:
        c = ts.result.lookup(t)
        if c is not None:
            out.append(c)
    return out


def map_terms(f: SpaceMap, src: TermSpace, dst: TermSpace) -> ClassMap:
    """Functor action: relabel constants through ``f``, then look the term up in ``dst``."""
    if tuple(f.src.points) != tuple(src.base.points) or tuple(f.dst.points) != tuple(dst.base.points):
        raise ValueError("map does not go between the base spaces of the two term spaces")
    rename = {src.names[p]: dst.names[f(p)] for p in src.base.points}
    images = {c: _images(dst, (rename_constants(t, rename) for t in src.result.members(c)))
              for c in src.classes}
    notes = () if f.is_nonexpansive() else ("generator map is not nonexpansive",)
    return _finish(src, dst, images, notes)


def _same_base(a: FiniteSpace, b: FiniteSpace) -> bool:
    return tuple(a.points) == tuple(b.points) and a.matrix == b.matrix


def flatten(outer: TermSpace, inner: TermSpace, target: TermSpace | None = None) -> ClassMap:
    """Multiplication: substitute inner representatives into outer terms.

    ``outer`` must be built over ``inner.space``.  The flattened terms are
    looked up in ``target`` (default ``inner``), which must share the base of
    ``inner``; a depth-``j`` outer over a depth-``k`` inner needs a target of
    depth ``j + k`` to be total.  Each outer class is flattened through all
    its members and, for its representative, through combinations of inner
    members, so representative dependence shows up as ``ill_defined``.
    """
    target = target or inner
    if not _same_base(outer.base, inner.space):
        raise ValueError("outer term space is not built over the inner term space")
    if not _same_base(target.base, inner.base) or target.names != inner.names:
        raise ValueError("target does not share the base of the inner term space")
    inner_of = {outer.names[c]: c for c in inner.classes}
    rep = {outer.names[c]: inner.result.representative(c) for c in inner.classes}

    images = {}
    for c in outer.classes:
        terms = [rename_constants(t, rep) for t in outer.result.members(c)]
        terms += _member_variants(outer.result.representative(c), inner, inner_of)
        images[c] = _images(target, terms)
    notes = []
    if outer.depth != inner.depth:
        notes.append(f"outer depth {outer.depth} differs from inner depth {inner.depth}")
    return _finish(outer, target, images, notes)


def _member_variants(t: Term, inner: TermSpace, inner_of: dict) -> list:
    names = sorted(constants(t))
    choices = [inner.result.members(inner_of[n]) for n in names]
    out = []
    for combo in itertools.islice(itertools.product(*choices), _COMBINATION_CAP):
        out.append(rename_constants(t, dict(zip(names, combo))))
    return out


def compose(first, second) -> dict:
    """``second ∘ first`` as a table; entries whose image is undefined are dropped."""
    a = first.table if isinstance(first, ClassMap) else first
    b = second.table if isinstance(second, ClassMap) else second
    return {x: b[y] for x, y in a.items() if y in b}


def _map_problems(name: str, m: ClassMap) -> list:
    out = []
    if m.partial:
        out.append(LawCheck(f"{name}.total", False, f"class {m.src.show(m.partial[0])} has no image",
                            f"{len(m.partial)} partial"))
    else:
        out.append(LawCheck(f"{name}.total", True))
    if m.ill_defined:
        c, imgs = m.ill_defined[0]
        out.append(LawCheck(f"{name}.well-defined", False,
                            f"{m.src.show(c)} -> {', '.join(m.dst.show(i) for i in imgs)}"))
    else:
        out.append(LawCheck(f"{name}.well-defined", True))
    if m.expansions:
        x, y, before, after = m.expansions[0]
        out.append(LawCheck(f"{name}.nonexpansive", False,
                            f"d({m.src.show(x)}, {m.src.show(y)}) = {before} < {after}"))
    else:
        out.append(LawCheck(f"{name}.nonexpansive", True))
    return [LawCheck(c.name, c.ok, c.witness, "; ".join(x for x in (c.note, *m.notes) if x)) for c in out]


def _identity_check(name: str, table: dict, ts: TermSpace) -> LawCheck:
    for c in ts.classes:
        if c not in table:
            return LawCheck(name, False, f"{ts.show(c)} has no image")
        if table[c] != c:
            return LawCheck(name, False, f"{ts.show(c)} -> {ts.show(table[c])}")
    return LawCheck(name, True)


# -- monad laws ---------------------------------------------------------------


def check_monad_laws(theory: Theory, base: FiniteSpace, inner_depth: int = 1, outer_depth: int = 1,
                     max_rounds: int = 64, closure_denominator: int | None = None) -> list:
    """Unit laws and associativity of the multiplication on a bounded tower.

    With ``k = inner_depth`` and ``j = outer_depth`` the tower is
    ``T_k X``, ``T_j T_k X`` and ``T_j T_j T_k X``; multiplications land in
    term spaces of the summed depth so that they can be total.
    """
    k, j = inner_depth, outer_depth

    def build(space, d):
        return term_space(theory, space, d, max_rounds, closure_denominator)

    checks = []
    tx = build(base, k)
    eta = unit(tx)
    checks.append(LawCheck("unit.nonexpansive", eta.is_nonexpansive(),
                           _pair_witness(eta.expansion_witnesses())))

    # left unit: mu . eta_T = id
    t0tx = build(tx.space, 0)
    mu_left = flatten(t0tx, tx, tx)
    checks += _map_problems("flatten.left", mu_left)
    checks.append(_identity_check("monad.left-unit", compose(unit(t0tx).table, mu_left), tx))

    # right unit: mu . T(eta) = id
    t0x = build(base, 0)
    tkt0x = build(t0x.space, k)
    t_eta = map_terms(unit(t0x), tx, tkt0x)
    mu_right = flatten(tkt0x, t0x, tx)
    checks += _map_problems("map_terms.unit", t_eta)
    checks += _map_problems("flatten.right", mu_right)
    checks.append(_identity_check("monad.right-unit", compose(t_eta, mu_right), tx))

    # associativity: mu . mu_T = mu . T(mu)
    l2 = build(tx.space, j)
    l3 = build(l2.space, j)
    t2j_tx = build(tx.space, 2 * j)
    top = build(base, 2 * j + k)
    mu_t = flatten(l3, l2, t2j_tx)
    mu_a = flatten(t2j_tx, tx, top)
    path_a = compose(mu_t, mu_a)

    mid = build(base, j + k)
    mu_x = flatten(l2, tx, mid)
    checks += _map_problems("flatten.assoc-inner", mu_x)
    checks += _map_problems("flatten.assoc-outer", mu_t)
    checks += _map_problems("flatten.assoc-top", mu_a)
    if mu_x.total:
        over_mid = build(mid.space, j)
        t_mu = map_terms(mu_x.as_space_map(), l3, over_mid)
        mu_b = flatten(over_mid, mid, top)
        checks += _map_problems("map_terms.flatten", t_mu)
        path_b = compose(t_mu, mu_b)
        checks.append(_agreement("monad.associativity", l3, path_a, path_b, top))
    else:
        checks.append(LawCheck("monad.associativity", False, "inner multiplication is partial"))
    return checks


def _agreement(name: str, ts: TermSpace, left: dict, right: dict, dst: TermSpace) -> LawCheck:
    for c in ts.classes:
        if c not in left or c not in right:
            return LawCheck(name, False, f"{ts.show(c)} has no image on one side")
        if left[c] != right[c]:
            return LawCheck(name, False, f"{ts.show(c)}: {dst.show(left[c])} vs {dst.show(right[c])}")
    return LawCheck(name, True)


def _pair_witness(pairs) -> str:
    return f"({pairs[0][0]}, {pairs[0][1]})" if pairs else ""


def check_naturality(theory: Theory, f: SpaceMap, depth: int = 1, max_rounds: int = 64) -> list:
    """``map_terms(f) ∘ unit = unit ∘ f`` on points, plus well-definedness of ``map_terms(f)``."""
    src = term_space(theory, f.src, depth, max_rounds)
    dst = term_space(theory, f.dst, depth, max_rounds)
    tf = map_terms(f, src, dst)
    checks = _map_problems("map_terms", tf)
    eta_src, eta_dst = unit(src), unit(dst)
    bad = [p for p in f.src.points if tf.table.get(eta_src(p)) != eta_dst(f(p))]
    checks.append(LawCheck("naturality.unit", not bad, f"point {bad[0]}" if bad else ""))
    return checks


# -- free extension -----------------------------------------------------------


@dataclass
class Homomorphism:
    """``f*``: the term space's classes mapped into a model."""

    source: TermSpace
    alg: object
    generators: dict  # base point -> model element
    table: dict  # class -> model element

    def __call__(self, c: int):
        return self.table[c]


def _generator_table(f, points) -> dict:
    if isinstance(f, Mapping):
        return {p: f[p] for p in points}
    return {p: f(p) for p in points}


def _interpret(t: Term, alg, gens: dict, memo: dict):
    hit = memo.get(t)
    if hit is not None:
        return hit
    if isinstance(t, Const):
        value = gens[t.name] if t.name in gens else alg.constant(t.name)
    else:
        value = alg.operation(t.symbol, t.param, tuple(_interpret(a, alg, gens, memo) for a in t.args))
    memo[t] = value
    return value


def free_extension(f, alg, ts: TermSpace) -> Homomorphism:
    """Evaluate every member of every class with generators sent through ``f``.

    Raises :class:`ModelMismatchError` when two members of one class evaluate
    differently, since then ``alg`` cannot satisfy the theory.
    """
    gens = _generator_table(f, ts.base.points)
    by_name = {ts.names[p]: v for p, v in gens.items()}
    memo, table = {}, {}
    for c in ts.classes:
        values = []
        for t in ts.result.members(c):
            try:
                values.append((t, _interpret(t, alg, by_name, memo)))
            except PartialOperationError:
                continue
        if not values:
            raise ModelMismatchError(f"no member of class {ts.show(c)} can be evaluated in the model")
        t0, v0 = values[0]
        for t, v in values[1:]:
            if v != v0:
                raise ModelMismatchError(
                    f"representative dependence: {t0} and {t} are identified but evaluate to {v0} and {v}")
        table[c] = v0
    return Homomorphism(ts, alg, gens, table)


def check_free_extension(h: Homomorphism) -> list:
    """Factorization through the unit, homomorphism property and nonexpansiveness."""
    ts, alg, r = h.source, h.alg, h.source.result
    eta = unit(ts)
    bad = [p for p in ts.base.points if h(eta(p)) != h.generators[p]]
    checks = [LawCheck("free.factor-through-unit", not bad, f"point {bad[0]}" if bad else "")]

    generator_names = set(ts.names.values())
    failure = ""
    count = 0
    for (sym, param, kids), c in sorted(r.nodes.items(), key=lambda kv: (kv[1], str(kv[0]))):
        if not kids and sym in generator_names:
            continue
        if c not in h.table or any(k not in h.table for k in kids):
            continue
        try:
            value = alg.operation(sym, param, tuple(h(k) for k in kids))
        except PartialOperationError:
            continue
        count += 1
        if value != h(c) and not failure:
            failure = f"{App(sym, tuple(r.representative(k) for k in kids), param)}"
    checks.append(LawCheck("free.homomorphism", not failure, failure, f"{count} e-nodes"))

    worst = ""
    for x in ts.classes:
        for y in ts.classes:
            model = alg.distance(h(x), h(y))
            if model > r.dist[x][y] and not worst:
                worst = f"d({ts.show(x)}, {ts.show(y)}) = {r.dist[x][y]} < {model}"
    checks.append(LawCheck("free.nonexpansive", not worst, worst))
    return checks


def inductive_extension(f, alg, ts: TermSpace) -> dict:
    """The only candidate for ``f*``: structural recursion over representatives."""
    gens = {ts.names[p]: v for p, v in _generator_table(f, ts.base.points).items()}
    out = {}
    for c in sorted(ts.classes, key=lambda c: (_depth(ts.result.representative(c)), c)):
        t = ts.result.representative(c)
        if isinstance(t, Const):
            out[c] = gens[t.name] if t.name in gens else alg.constant(t.name)
        else:
            kids = tuple(out[ts.result.class_id(a)] for a in t.args)
            out[c] = alg.operation(t.symbol, t.param, kids)
    return out


def _depth(t: Term) -> int:
    return 1 + max(map(_depth, t.args)) if isinstance(t, App) and t.args else 0


def check_uniqueness(h: Homomorphism, candidate: Mapping | None = None) -> list:
    """Any homomorphism agreeing with the generators agrees with ``f*``.

    The inductive extension is always compared; a user-supplied candidate
    table is first checked to be a homomorphism on generators and then
    compared class by class.
    """
    ts = h.source
    induced = inductive_extension(h.generators, h.alg, ts)
    diff = [c for c in ts.classes if induced[c] != h(c)]
    checks = [LawCheck("free.unique", not diff, ts.show(diff[0]) if diff else "")]
    if candidate is not None:
        eta = unit(ts)
        agrees = all(candidate.get(eta(p)) == h.generators[p] for p in ts.base.points)
        other = [c for c in ts.classes if candidate.get(c) != h(c)]
        if agrees:
            checks.append(LawCheck("free.unique-candidate", not other, ts.show(other[0]) if other else ""))
        else:
            checks.append(LawCheck("free.unique-candidate", True, "", "candidate differs on generators"))
    return checks


# -- soundness ----------------------------------------------------------------


@dataclass
class SoundnessReport:
    checked: int
    violations: list  # (s, t, reason)

    @property
    def ok(self) -> bool:
        return not self.violations


def check_soundness(r: SaturationResult, alg, generators: Mapping | None = None,
                    limit: int | None = None) -> SoundnessReport:
    """Every universe pair: model distance within the derived bound, equal classes equal in the model."""
    gens = dict(generators or {})
    memo = {}
    values = [_interpret(t, alg, gens, memo) for t in r.universe]
    dcache = {}
    violations = []
    checked = 0
    for i, s in enumerate(r.universe):
        for j, t in enumerate(r.universe):
            checked += 1
            ci, cj = r.class_of[i], r.class_of[j]
            if ci == cj and values[i] != values[j]:
                violations.append((s, t, f"identified but {values[i]} != {values[j]}"))
            key = (values[i], values[j])
            if key not in dcache:
                dcache[key] = alg.distance(*key)
            if dcache[key] > r.dist[ci][cj]:
                violations.append((s, t, f"model distance {dcache[key]} exceeds derived {r.dist[ci][cj]}"))
            if limit is not None and len(violations) >= limit:
                return SoundnessReport(checked, violations)
    return SoundnessReport(checked, violations)
