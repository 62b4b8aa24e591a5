"""Exact-rational simplex over difference constraint systems.

Arbiter for the float LP fast path: verdicts computed here carry no floating
point error.  Sized for desk-scale systems; the solver works on a dense
Fraction tableau with Bland's rule, so callers keep instances small (the
hybrid driver in linear.py only sends small systems or final confirmations).

Input rows are (pos, neg, rhs): sum(x[pos]) - sum(x[neg]) >= rhs over free
variables, optionally with box bounds.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

Rhs = int | Fraction
RowSpec = tuple[Sequence[int], Sequence[int], Rhs]

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


@dataclass
class ExactResult:
    status: str
    x: list[Fraction] | None = None
    objective: Fraction | None = None


def _to_standard(n_vars: int, rows: Sequence[RowSpec], box: Fraction | None):
    """Ax >= b over free x  ->  equality tableau columns [x+ | x- | -s]."""
    specs = list(rows)
    if box is not None:
        for j in range(n_vars):
            specs.append(((j,), (), -box))  # x_j >= -box
            specs.append(((), (j,), -box))  # -x_j >= -box
    m = len(specs)
    ncols = 2 * n_vars + m
    table = [[Fraction(0)] * (ncols + 1) for _ in range(m)]
    for i, (pos, neg, rhs) in enumerate(specs):
        row = table[i]
        for j in pos:
            row[j] += 1
            row[n_vars + j] -= 1
        for j in neg:
            row[j] -= 1
            row[n_vars + j] += 1
        row[2 * n_vars + i] = Fraction(-1)
        row[ncols] = Fraction(rhs)
        if row[ncols] < 0:
            table[i] = [-v for v in row]
    return table, m, ncols


def _pivot(table, basis, obj, row: int, col: int) -> None:
    piv = table[row][col]
    table[row] = [v / piv for v in table[row]]
    for r, line in enumerate(table):
        if r != row and line[col]:
            factor = line[col]
            table[r] = [a - factor * b for a, b in zip(line, table[row])]
    if obj[col]:
        factor = obj[col]
        for j, b in enumerate(table[row]):
            obj[j] -= factor * b
    basis[row] = col


def _run_simplex(table, basis, obj, ncols: int, art_from: int | None) -> str:
    """Minimize obj via Bland's rule; columns >= art_from never re-enter."""
    while True:
        col = -1
        for j in range(ncols):
            if obj[j] < 0 and (art_from is None or j < art_from):
                col = j
                break
        if col < 0:
            return OPTIMAL
        row = -1
        best = None
        for r, line in enumerate(table):
            a = line[col]
            if a > 0:
                ratio = line[-1] / a
                if best is None or ratio < best or (ratio == best and basis[r] < basis[row]):
                    best = ratio
                    row = r
        if row < 0:
            return UNBOUNDED
        _pivot(table, basis, obj, row, col)


def solve(
    n_vars: int,
    rows: Sequence[RowSpec],
    objective: Sequence[Rhs] | None = None,
    maximize: bool = False,
    box: Rhs | None = None,
) -> ExactResult:
    """Two-phase exact simplex.  objective is over the original variables;
    None means feasibility only."""
    box_f = Fraction(box) if box is not None else None
    table, m, ncols = _to_standard(n_vars, rows, box_f)
    if m == 0:
        return ExactResult(OPTIMAL, [Fraction(0)] * n_vars, Fraction(0))

    # phase 1: artificial per row, minimize their sum
    total = ncols + m
    for i, line in enumerate(table):
        rhs = line.pop()
        line.extend(Fraction(1) if j == i else Fraction(0) for j in range(m))
        line.append(rhs)
    basis = [ncols + i for i in range(m)]
    obj = [Fraction(0)] * (total + 1)
    for j in range(ncols, total):
        obj[j] = Fraction(1)
    for line in table:  # price out the initial basis
        for j in range(total + 1):
            obj[j] -= line[j]
    status = _run_simplex(table, basis, obj, total, None)
    assert status == OPTIMAL  # phase 1 is bounded below by zero
    if -obj[-1] > 0:
        return ExactResult(INFEASIBLE)

    # drive any lingering artificials out of the basis
    for r in range(m):
        if basis[r] >= ncols:
            col = next((j for j in range(ncols) if table[r][j] != 0), None)
            if col is None:
                continue  # redundant row
            _pivot(table, basis, obj, r, col)

    # phase 2
    sign = Fraction(-1) if maximize else Fraction(1)
    obj2 = [Fraction(0)] * (total + 1)
    if objective is not None:
        for j, c in enumerate(objective):
            obj2[j] = sign * Fraction(c)
            obj2[n_vars + j] = -sign * Fraction(c)
        for r, b in enumerate(basis):
            if obj2[b]:
                factor = obj2[b]
                for j in range(total + 1):
                    obj2[j] -= factor * table[r][j]
        status = _run_simplex(table, basis, obj2, ncols, ncols)
        if status == UNBOUNDED:
            return ExactResult(UNBOUNDED)

    x = [Fraction(0)] * (2 * n_vars)
    for r, b in enumerate(basis):
        if b < 2 * n_vars:
            x[b] = table[r][-1]
    point = [x[j] - x[n_vars + j] for j in range(n_vars)]
    value = sign * -obj2[-1] if objective is not None else Fraction(0)
    return ExactResult(OPTIMAL, point, value)


def feasible(n_vars: int, rows: Sequence[RowSpec]) -> bool:
    return solve(n_vars, rows).status == OPTIMAL


def irreducible_infeasible_subset(
    n_vars: int, rows: Sequence[RowSpec], limit: int = 120
) -> list[int]:
    """Deletion-filter an infeasible system down to an irreducible core.

    Returns indices into rows.  Systems larger than `limit` are returned
    whole (the full conflict report) rather than filtered.
    """
    idx = list(range(len(rows)))
    if len(rows) > limit:
        return idx
    keep = list(idx)
    for i in idx:
        trial = [k for k in keep if k != i]
        if not feasible(n_vars, [rows[k] for k in trial]):
            keep = trial
    return keep
