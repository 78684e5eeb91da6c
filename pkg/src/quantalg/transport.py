"""Exact optimal transport between finitely supported weightings.

The solver is the transportation simplex (MODI method) run in exact rational
arithmetic.  Entering and leaving cells follow Bland's smallest-index rule,
which rules out cycling on degenerate bases.  Every solution carries dual
potentials and is certified by strong duality before it is returned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence


class CertificateError(AssertionError):
    """The primal/dual pair failed verification (a solver bug, never a data error)."""


@dataclass(frozen=True)
class TransportSolution:
    value: Fraction
    coupling: dict  # (i, j) -> mass, positive entries only
    u: tuple  # row potentials
    v: tuple  # column potentials

    def dual_value(self, supply: Sequence[Fraction], demand: Sequence[Fraction]) -> Fraction:
        return sum(a * u for a, u in zip(supply, self.u)) + sum(b * v for b, v in zip(demand, self.v))


def _northwest_corner(supply, demand):
    m, n = len(supply), len(demand)
    ra, rb = list(supply), list(demand)
    basis = {}
    i = j = 0
    while True:
        x = min(ra[i], rb[j])
        basis[i, j] = x
        ra[i] -= x
        rb[j] -= x
        if i == m - 1 and j == n - 1:
            break
        if ra[i] == 0 and i < m - 1:
            i += 1
        else:
            j += 1
    return basis


def _potentials(basis, cost, m, n):
    u = [None] * m
    v = [None] * n
    u[0] = Fraction(0)
    rows = [[] for _ in range(m)]
    cols = [[] for _ in range(n)]
    for i, j in basis:
        rows[i].append(j)
        cols[j].append(i)
    stack = [("r", 0)]
    while stack:
        side, k = stack.pop()
        if side == "r":
            for j in rows[k]:
                if v[j] is None:
                    v[j] = cost[k][j] - u[k]
                    stack.append(("c", j))
        else:
            for i in cols[k]:
                if u[i] is None:
                    u[i] = cost[i][k] - v[k]
                    stack.append(("r", i))
    return u, v


def _tree_path(basis, m, n, start_row, end_col):
    """Cells on the basis-tree path from row node ``start_row`` to column node ``end_col``."""
    adj = {}
    for i, j in basis:
        adj.setdefault(("r", i), []).append(("c", j))
        adj.setdefault(("c", j), []).append(("r", i))
    prev = {("r", start_row): None}
    stack = [("r", start_row)]
    while stack:
        node = stack.pop()
        if node == ("c", end_col):
            break
        for nxt in sorted(adj.get(node, ())):
            if nxt not in prev:
                prev[nxt] = node
                stack.append(nxt)
    path = []
    node = ("c", end_col)
    while prev[node] is not None:
        p = prev[node]
        cell = (p[1], node[1]) if p[0] == "r" else (node[1], p[1])
        path.append(cell)
        node = p
    path.reverse()
    return path


def solve(supply: Sequence[Fraction], demand: Sequence[Fraction], cost: Sequence[Sequence[Fraction]],
          max_iter: int = 10_000) -> TransportSolution:
    supply = [Fraction(a) for a in supply]
    demand = [Fraction(b) for b in demand]
    cost = [[Fraction(c) for c in row] for row in cost]
    m, n = len(supply), len(demand)
    if m == 0 or n == 0:
        raise ValueError("empty support")
    if sum(supply) != sum(demand):
        raise ValueError("unbalanced transportation problem")
    basis = _northwest_corner(supply, demand)
    for _ in range(max_iter):
        u, v = _potentials(basis, cost, m, n)
        entering = None
        for i in range(m):
            for j in range(n):
                if (i, j) not in basis and cost[i][j] - u[i] - v[j] < 0:
                    entering = (i, j)
                    break
            if entering:
                break
        if entering is None:
            sol = TransportSolution(
                sum(x * cost[i][j] for (i, j), x in basis.items()),
                {c: x for c, x in sorted(basis.items()) if x > 0},
                tuple(u), tuple(v),
            )
            certify(sol, supply, demand, cost)
            return sol
        i0, j0 = entering
        # Cycle: entering (+), then along the tree from column j0 back to row i0.
        path = _tree_path(basis, m, n, i0, j0)
        cycle = [entering] + list(reversed(path))
        minus = cycle[1::2]
        theta = min(basis[c] for c in minus)
        leaving = min(c for c in minus if basis[c] == theta)
        for k, c in enumerate(cycle):
            if k == 0:
                continue
            basis[c] += theta if k % 2 == 0 else -theta
        basis[entering] = theta
        del basis[leaving]
    raise RuntimeError("transportation simplex did not converge")


def certify(sol: TransportSolution, supply, demand, cost) -> None:
    m, n = len(supply), len(demand)
    for i in range(m):
        if sum(sol.coupling.get((i, j), 0) for j in range(n)) != supply[i]:
            raise CertificateError(f"row {i} marginal violated")
    for j in range(n):
        if sum(sol.coupling.get((i, j), 0) for i in range(m)) != demand[j]:
            raise CertificateError(f"column {j} marginal violated")
    if any(x < 0 for x in sol.coupling.values()):
        raise CertificateError("negative mass")
    for i in range(m):
        for j in range(n):
            if sol.u[i] + sol.v[j] > cost[i][j]:
                raise CertificateError(f"dual infeasible at {(i, j)}")
    if sol.dual_value(supply, demand) != sol.value:
        raise CertificateError("primal and dual values differ")


def transport_cost(mu: dict, nu: dict, d: Callable) -> TransportSolution:
    """Optimal coupling of two ``{atom: weight}`` tables under cost ``d``."""
    xs, ys = list(mu), list(nu)
    return solve([mu[x] for x in xs], [nu[y] for y in ys], [[d(x, y) for y in ys] for x in xs])


def brute_force(supply: Sequence[Fraction], demand: Sequence[Fraction], cost) -> Fraction:
    """Minimum over all couplings on the common-denominator grid.

    With integral marginals the transportation polytope has integral
    vertices, so the grid minimum is the exact optimum.
    """
    den = math.lcm(*(Fraction(w).denominator for w in list(supply) + list(demand)))
    a = [int(Fraction(w) * den) for w in supply]
    b = [int(Fraction(w) * den) for w in demand]
    m, n = len(a), len(b)
    best = None

    def fill_row(i, cols_left, acc):
        nonlocal best
        if i == m:
            if all(c == 0 for c in cols_left) and (best is None or acc < best):
                best = acc
            return
        if i == m - 1:
            # last row is forced
            total = acc + sum(cols_left[j] * cost[i][j] for j in range(n))
            if sum(cols_left) == a[i] and (best is None or total < best):
                best = total
            return
        for row in _compositions(a[i], cols_left):
            fill_row(i + 1, [c - r for c, r in zip(cols_left, row)], acc + sum(r * cost[i][j] for j, r in enumerate(row)))

    fill_row(0, b, Fraction(0))
    return best / den


def _compositions(total, caps):
    if not caps:
        if total == 0:
            yield ()
        return
    first, rest = caps[0], caps[1:]
    room = sum(rest)
    for x in range(max(0, total - room), min(first, total) + 1):
        for tail in _compositions(total - x, rest):
            yield (x,) + tail
