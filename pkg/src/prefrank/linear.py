"""Hybrid LP driver with exact feasibility verdicts.

Every constraint row is a difference of factor-table entries with a margin of
0 or 1, so the system is homogeneous: any strictly feasible point scales to
one with integer margins.  The driver exploits that to keep verdicts exact
without paying for rational pivoting on every solve:

1. solve in floats (HiGHS via scipy.optimize.linprog),
2. round the point to an integer grid and re-verify every hard row in exact
   integer arithmetic (a valid point because of homogeneity),
3. fall back to the exact-rational simplex when rounding fails or the float
   solver reports infeasibility, so infeasible verdicts on desk-scale systems
   are certified too.

Soft rows (used by the additive-baseline experiments) get a penalized slack
variable and never affect feasibility.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm
from typing import Sequence

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from . import simplex

BOX_BOUND = 1000
SOFT_WEIGHT = 1000
GRIDS = (1 << 20, 1 << 40)
EXACT_CELL_LIMIT = 300_000

L1 = "l1"
RANDOM_VERTEX = "random-vertex"


class SolverFailure(Exception):
    """Numerical breakdown distinct from a proven infeasibility verdict."""


@dataclass(frozen=True)
class Row:
    """sum(entries[pos]) - sum(entries[neg]) >= rhs."""

    pos: tuple[int, ...]
    neg: tuple[int, ...]
    rhs: int = 1
    soft: bool = False
    provenance: tuple = ()


@dataclass
class SolveResult:
    feasible: bool
    point: list[int] | None = None
    conflict: list[int] = field(default_factory=list)  # indices into rows
    certified: bool = True


def verify_point(rows: Sequence[Row], point: Sequence[int]) -> list[int]:
    """Indices of hard rows the integer point violates."""
    bad = []
    for i, row in enumerate(rows):
        if row.soft:
            continue
        value = sum(point[j] for j in row.pos) - sum(point[j] for j in row.neg)
        if value < row.rhs:
            bad.append(i)
    return bad


def _float_solve(n_vars: int, rows: Sequence[Row], policy: str, seed) -> np.ndarray | None:
    """Returns the entry part of the float optimum, or None when HiGHS
    declares the system infeasible."""
    soft_rows = [i for i, r in enumerate(rows) if r.soft]
    n_t = n_vars if policy == L1 else 0
    t_base = n_vars
    u_base = n_vars + n_t
    total = u_base + len(soft_rows)
    slack_col = {ri: u_base + k for k, ri in enumerate(soft_rows)}

    data, rix, cix, b_ub = [], [], [], []

    def add_term(r, c, v):
        rix.append(r)
        cix.append(c)
        data.append(v)

    nr = 0
    for i, row in enumerate(rows):
        for j in row.pos:
            add_term(nr, j, -1.0)
        for j in row.neg:
            add_term(nr, j, 1.0)
        if row.soft:
            add_term(nr, slack_col[i], -1.0)
        b_ub.append(-float(row.rhs))
        nr += 1
    for j in range(n_t):  # e_j - t_j <= 0 and -e_j - t_j <= 0
        add_term(nr, j, 1.0)
        add_term(nr, t_base + j, -1.0)
        b_ub.append(0.0)
        nr += 1
        add_term(nr, j, -1.0)
        add_term(nr, t_base + j, -1.0)
        b_ub.append(0.0)
        nr += 1

    c = np.zeros(total)
    if policy == L1:
        c[t_base:u_base] = 1.0
    elif policy == RANDOM_VERTEX:
        rng = random.Random(seed)
        c[:n_vars] = [-rng.uniform(-1.0, 1.0) for _ in range(n_vars)]
    else:
        raise ValueError(f"unknown objective policy {policy!r}")
    c[u_base:] = SOFT_WEIGHT

    entry_bound = (-float(BOX_BOUND), float(BOX_BOUND)) if policy == RANDOM_VERTEX else (None, None)
    bounds = [entry_bound] * n_vars + [(0, None)] * (n_t + len(soft_rows))
    a_ub = sparse.csr_matrix(
        (data, (rix, cix)), shape=(nr, total)
    ) if nr else sparse.csr_matrix((0, total))
    res = linprog(c, A_ub=a_ub, b_ub=b_ub, bounds=bounds, method="highs")
    if res.status == 2:
        return None
    if res.status != 0:
        raise SolverFailure(f"float LP failed with status {res.status}: {res.message}")
    return res.x[:n_vars]


def _exact_rows(rows: Sequence[Row]) -> list[simplex.RowSpec]:
    return [(r.pos, r.neg, r.rhs) for r in rows if not r.soft]


def _exact_solve(
    n_vars: int, rows: Sequence[Row], policy: str, seed, conflict_hint: bool
) -> SolveResult:
    hard = _exact_rows(rows)
    hard_index = [i for i, r in enumerate(rows) if not r.soft]
    m = len(hard)
    cols = 2 * n_vars + m
    if m * (cols + m) > EXACT_CELL_LIMIT:
        raise SolverFailure(
            f"system too large for the exact fallback ({m} rows, {n_vars} entries)"
        )
    if policy == L1:
        # entries plus |entry| majorants; minimize their sum
        specs = list(hard)
        for j in range(n_vars):
            specs.append(((n_vars + j,), (j,), 0))
            specs.append(((n_vars + j, j), (), 0))
        objective = [Fraction(0)] * n_vars + [Fraction(1)] * n_vars
        result = simplex.solve(2 * n_vars, specs, objective=objective)
    else:
        rng = random.Random(seed)
        objective = [Fraction(rng.randint(-10**6, 10**6), 10**6) for _ in range(n_vars)]
        result = simplex.solve(n_vars, hard, objective=objective, maximize=True, box=BOX_BOUND)
    if result.status == simplex.INFEASIBLE:
        if conflict_hint:
            subset = simplex.irreducible_infeasible_subset(n_vars, hard)
        else:
            subset = range(m)
        return SolveResult(False, conflict=[hard_index[k] for k in subset])
    if result.status != simplex.OPTIMAL:
        raise SolverFailure(f"exact solver returned {result.status}")
    fractions = result.x[:n_vars]
    scale = lcm(*(f.denominator for f in fractions)) if fractions else 1
    point = [int(f * scale) for f in fractions]
    assert not verify_point(rows, point)
    return SolveResult(True, point=point)


def solve_rows(
    n_vars: int,
    rows: Sequence[Row],
    policy: str = L1,
    seed=None,
    *,
    exact_confirm: bool = True,
    conflict_hint: bool = True,
) -> SolveResult:
    """Solve the system.  Feasible results always carry an exactly-verified
    integer point.  Infeasible verdicts are confirmed by the exact simplex
    (with an irreducible conflict subset when conflict_hint is set) unless
    exact_confirm is off - callers like the relaxation ladder only steer on
    the verdict and skip the rational arithmetic."""
    for i, row in enumerate(rows):
        if not row.soft and not row.pos and not row.neg and row.rhs > 0:
            return SolveResult(False, conflict=[i])
    if not rows:
        return SolveResult(True, point=[0] * n_vars)

    floats = _float_solve(n_vars, rows, policy, seed)
    if floats is not None:
        for grid in GRIDS:
            point = [round(x * grid) for x in floats]
            if not verify_point(rows, point):
                return SolveResult(True, point=point)
    elif not exact_confirm:
        return SolveResult(False, conflict=list(range(len(rows))), certified=False)
    try:
        return _exact_solve(n_vars, rows, policy, seed, conflict_hint)
    except SolverFailure:
        if floats is None:
            # too big to certify; report the float verdict as-is
            return SolveResult(False, conflict=list(range(len(rows))), certified=False)
        raise
