"""Line-oriented theory files.

::

    # comment
    kind DMet
    op plus arity 2 lifting lk(p)
    params plus { 1/2 }
    axiom plus(p; x, x) = x
    space { points a, b; d a a = 1/2; d a b = 1 }
    option closure 4

Space blocks may span several lines; items are separated by ``;`` or
newlines.  Unlisted distances default to 0 (diagonal, REFL kinds) or 1,
and symmetric kinds mirror one-sided entries.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path

from .gmet import FiniteSpace, MetricKind, unit
from .liftings import LiftingError, parse_lifting
from .terms import OpFamily, Signature, TermError
from .theory import Theory, TheoryError, extend_by_space, parse_clause

_IDENT = r"[A-Za-z_][A-Za-z0-9_']*"
_OP = re.compile(rf"^op\s+({_IDENT})\s+arity\s+(\d+)\s+lifting\s+(.+)$")
_PARAMS = re.compile(rf"^params\s+({_IDENT})\s*\{{(.*)\}}\s*$")
_DIST = re.compile(rf"^d\s+({_IDENT})\s+({_IDENT})\s*=\s*(\S+)$")
_POINTS = re.compile(r"^points\s+(.*)$")
_OPTION = re.compile(rf"^option\s+({_IDENT})\s+(\S+)$")
OPTIONS = {"closure": int, "depth": int, "rounds": int}


class TheoryFileError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass
class TheoryFile:
    theory: Theory
    space: FiniteSpace | None = None
    options: dict = field(default_factory=dict)
    name: str = "<text>"

    def extended(self) -> Theory:
        return extend_by_space(self.theory, self.space) if self.space is not None else self.theory


def _rational(text: str, line: int) -> Fraction:
    try:
        return unit(text.strip())
    except (ValueError, TypeError) as exc:
        raise TheoryFileError(line, str(exc)) from None


def parse_theory_file(text: str, name: str = "<text>") -> TheoryFile:
    kind = None
    ops = []  # (line, symbol, arity, lifting)
    params = {}
    axioms = []  # (line, text)
    space_items = None
    space_line = 0
    options = {}
    lines = text.splitlines()
    i = 0
    while i < len(lines):
        n = i + 1
        raw = lines[i].split("#", 1)[0].strip()
        i += 1
        if not raw:
            continue
        head = raw.split(None, 1)[0]
        if head == "kind":
            if kind is not None:
                raise TheoryFileError(n, "kind declared twice")
            try:
                kind = MetricKind.named(raw.split(None, 1)[1].strip() if " " in raw else "")
            except ValueError as exc:
                raise TheoryFileError(n, str(exc)) from None
        elif head == "op":
            m = _OP.match(raw)
            if not m:
                raise TheoryFileError(n, "expected 'op <symbol> arity <n> lifting <lifting>'")
            try:
                lifting = parse_lifting(m.group(3), int(m.group(2)))
            except LiftingError as exc:
                raise TheoryFileError(n, str(exc)) from None
            if any(o[1] == m.group(1) for o in ops):
                raise TheoryFileError(n, f"operation {m.group(1)} declared twice")
            ops.append((n, m.group(1), int(m.group(2)), lifting))
        elif head == "params":
            m = _PARAMS.match(raw)
            if not m:
                raise TheoryFileError(n, "expected 'params <symbol> { p/q, ... }'")
            values = [v for v in (x.strip() for x in m.group(2).split(",")) if v]
            if not values:
                raise TheoryFileError(n, "empty parameter set")
            params[m.group(1)] = (n, tuple(_rational(v, n) for v in values))
        elif head == "axiom":
            axioms.append((n, raw[len("axiom"):].strip()))
        elif head == "option":
            m = _OPTION.match(raw)
            if not m or m.group(1) not in OPTIONS:
                raise TheoryFileError(n, f"unknown option; known: {', '.join(OPTIONS)}")
            try:
                options[m.group(1)] = OPTIONS[m.group(1)](m.group(2))
            except ValueError:
                raise TheoryFileError(n, f"malformed value for option {m.group(1)}") from None
        elif head.startswith("space"):
            if space_items is not None:
                raise TheoryFileError(n, "space declared twice")
            space_line = n
            body = raw[len("space"):].strip()
            if not body.startswith("{"):
                raise TheoryFileError(n, "expected 'space {'")
            body = body[1:]
            chunks = []
            while "}" not in body:
                chunks.append((n, body))
                if i >= len(lines):
                    raise TheoryFileError(space_line, "unterminated space block")
                n = i + 1
                body = lines[i].split("#", 1)[0]
                i += 1
            before, after = body.split("}", 1)
            if after.strip():
                raise TheoryFileError(n, "unexpected text after '}'")
            chunks.append((n, before))
            space_items = [(ln, item.strip()) for ln, chunk in chunks for item in chunk.split(";") if item.strip()]
        else:
            raise TheoryFileError(n, f"unknown declaration {head!r}")
    if kind is None:
        raise TheoryFileError(max(len(lines), 1), "missing 'kind' declaration")

    for sym, (n, _) in params.items():
        if not any(o[1] == sym for o in ops):
            raise TheoryFileError(n, f"params for undeclared operation {sym}")
    families = []
    for n, sym, arity, lifting in ops:
        try:
            families.append(OpFamily(sym, arity, lifting, params[sym][1] if sym in params else None))
        except (TermError, LiftingError) as exc:
            raise TheoryFileError(n, str(exc)) from None
    try:
        sig = Signature(tuple(families))
    except TermError as exc:
        raise TheoryFileError(1, str(exc)) from None

    space = None
    if space_items is not None:
        space = _parse_space(space_items, kind, space_line)
        try:
            sig = sig.with_constants(space.points)
        except TermError as exc:
            raise TheoryFileError(space_line, str(exc)) from None
    clauses = []
    for n, text_ in axioms:
        try:
            clauses.append(parse_clause(text_, sig))
        except (TheoryError, TermError) as exc:
            raise TheoryFileError(n, str(exc)) from None
    base_sig = Signature(sig.families)
    theory = Theory(base_sig, kind, tuple(clauses))
    return TheoryFile(theory, space, options, name)


def _parse_space(items, kind: MetricKind, line: int) -> FiniteSpace:
    points = None
    entries = {}
    for n, item in items:
        m = _POINTS.match(item)
        if m:
            if points is not None:
                raise TheoryFileError(n, "points declared twice")
            points = [p.strip() for p in m.group(1).split(",") if p.strip()]
            for p in points:
                if not re.fullmatch(_IDENT, p):
                    raise TheoryFileError(n, f"malformed point name {p!r}")
            if len(set(points)) != len(points):
                raise TheoryFileError(n, "duplicate point")
            continue
        m = _DIST.match(item)
        if not m:
            raise TheoryFileError(n, f"expected 'points ...' or 'd <x> <y> = <p/q>', got {item!r}")
        if points is None:
            raise TheoryFileError(n, "distance given before 'points'")
        x, y = m.group(1), m.group(2)
        for p in (x, y):
            if p not in points:
                raise TheoryFileError(n, f"unknown point {p!r}")
        if (x, y) in entries:
            raise TheoryFileError(n, f"distance d {x} {y} given twice")
        entries[x, y] = _rational(m.group(3), n)
    if points is None:
        raise TheoryFileError(line, "space without 'points'")
    return FiniteSpace.from_entries(points, entries, kind)


def bundled_names() -> list:
    return sorted(p.name for p in resources.files("quantalg.theories").iterdir() if p.name.endswith(".thy"))


def read_theory_text(ref: str) -> tuple:
    """Text of a theory file given as a path or as the name of a bundled file (``.thy`` optional)."""
    path = Path(ref)
    if path.is_file():
        return path.read_text(), str(path)
    root = resources.files("quantalg.theories")
    for name in (ref, ref + ".thy"):
        bundled = root.joinpath(name)
        if bundled.is_file():
            return bundled.read_text(), name
    raise FileNotFoundError(f"no theory file {ref!r} (bundled: {', '.join(bundled_names())})")


def load_theory(ref: str) -> TheoryFile:
    text, name = read_theory_text(ref)
    return parse_theory_file(text, name)
