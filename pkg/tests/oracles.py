"""Independent reference computations used by the tests.

These deliberately avoid the package's own solvers: the ŁK distance is a
plain double sum and the Kantorovich distance enumerates every coupling on
the common-denominator grid cell by cell.
"""

from __future__ import annotations

import json
import math
from fractions import Fraction
from pathlib import Path

FROZEN = Path(__file__).with_name("data") / "frozen_values.json"

# Values stated for the two-point diffuse space in the source material.
TWO_POINT_SELF = Fraction(1, 2)
TWO_POINT_APART = Fraction(1)
DIRAC_SELF_DISTANCE = Fraction(1, 2)
HALF_MIXTURE_SELF_DISTANCE = Fraction(3, 4)


def two_point_distance(x, y):
    return TWO_POINT_SELF if x == y else TWO_POINT_APART


def unit_metric(x, y):
    return Fraction(0) if x == y else Fraction(1)


def lk_naive(d, mu: dict, nu: dict) -> Fraction:
    total = Fraction(0)
    for x, wx in mu.items():
        for y, wy in nu.items():
            total += wx * wy * d(x, y)
    return total


def mix(p, mu: dict, nu: dict) -> dict:
    out = {}
    for x, w in mu.items():
        out[x] = out.get(x, 0) + p * w
    for x, w in nu.items():
        out[x] = out.get(x, 0) + (1 - p) * w
    return {k: Fraction(v) for k, v in out.items() if v}


def kantorovich_cells(d, mu: dict, nu: dict) -> Fraction:
    """Minimum cost over all grid couplings, filling one cell at a time."""
    xs, ys = sorted(mu), sorted(nu)
    den = math.lcm(*(Fraction(w).denominator for w in list(mu.values()) + list(nu.values())))
    rows = [int(mu[x] * den) for x in xs]
    cols = [int(nu[y] * den) for y in ys]
    cells = [(i, j) for i in range(len(xs)) for j in range(len(ys))]
    best = [None]

    def go(k, rows, cols, acc):
        if best[0] is not None and acc >= best[0]:
            return
        if k == len(cells):
            if not any(rows) and not any(cols):
                best[0] = acc
            return
        i, j = cells[k]
        for m in range(min(rows[i], cols[j]) + 1):
            rows[i] -= m
            cols[j] -= m
            go(k + 1, rows, cols, acc + m * d(xs[i], ys[j]))
            rows[i] += m
            cols[j] += m

    go(0, rows, cols, Fraction(0))
    return best[0] / den


def convex_term_distribution(text: str) -> dict:
    """Distribution of a ground convex term written as ``plus(p; s, t)`` over atom names."""
    text = text.replace(" ", "")
    pos = [0]

    def term():
        if text.startswith("plus(", pos[0]):
            pos[0] += len("plus(")
            semi = text.index(";", pos[0])
            p = Fraction(text[pos[0]:semi])
            pos[0] = semi + 1
            left = term()
            assert text[pos[0]] == ","
            pos[0] += 1
            right = term()
            assert text[pos[0]] == ")"
            pos[0] += 1
            return mix(p, left, right)
        start = pos[0]
        while pos[0] < len(text) and (text[pos[0]].isalnum() or text[pos[0]] == "_"):
            pos[0] += 1
        return {text[start:pos[0]]: Fraction(1)}

    return term()


def compute_frozen() -> dict:
    """The table stored in ``data/frozen_values.json``."""
    terms = ["a", "b", "plus(1/2; a, b)", "plus(1/2; a, plus(1/2; a, b))", "plus(1/2; plus(1/2; a, b), b)"]
    lk_table, kant_table = {}, {}
    for s in terms:
        for t in terms:
            mu, nu = convex_term_distribution(s), convex_term_distribution(t)
            lk_table[f"{s} | {t}"] = str(lk_naive(two_point_distance, mu, nu))
            kant_table[f"{s} | {t}"] = str(kantorovich_cells(unit_metric, mu, nu))
    line = {"p0": {"p0": 0, "p1": Fraction(1, 3), "p2": Fraction(2, 3)},
            "p1": {"p0": Fraction(1, 3), "p1": 0, "p2": Fraction(1, 3)},
            "p2": {"p0": Fraction(2, 3), "p1": Fraction(1, 3), "p2": 0}}
    line_d = lambda x, y: Fraction(line[x][y])  # noqa: E731
    transport = {
        "line.shift": str(kantorovich_cells(line_d, {"p0": Fraction(1, 2), "p1": Fraction(1, 2)},
                                            {"p1": Fraction(1, 2), "p2": Fraction(1, 2)})),
        "line.spread": str(kantorovich_cells(line_d, {"p1": Fraction(1)},
                                             {"p0": Fraction(1, 3), "p2": Fraction(2, 3)})),
        "line.swap": str(kantorovich_cells(line_d, {"p0": Fraction(1, 6), "p2": Fraction(5, 6)},
                                           {"p0": Fraction(5, 6), "p2": Fraction(1, 6)})),
    }
    return {"lk_two_point": lk_table, "kantorovich_unit": kant_table, "transport_line": transport}


def load_frozen() -> dict:
    return json.loads(FROZEN.read_text())


if __name__ == "__main__":
    FROZEN.write_text(json.dumps(compute_frozen(), indent=1, sort_keys=True) + "\n")
