"""Compile a TCP-net into a linear system over factor-table entries.

Each variable X owns one factor whose scope is its tcp-family (variable +
cp-parents + selector union; this collapses to the plain cp-family on nets
without ci-arcs).  One LP variable stands for each factor-table entry.  Three
row families encode the qualitative statements with a unit margin:

* value rows: for every CPT covering pair x1 > x2 under parent row u and
  every assignment to the rest of the extended tcp-family, the total of all
  entries touching X must drop when x1 is swapped for x2;
* importance rows: for every i-arc and every ci-arc CIT row naming a dominant
  endpoint, a better value of the dominant variable must outweigh an
  arbitrary move of the subordinate one, over every shared context;
* feedback rows (added by the elicitation engine) comparing two item scores.

Only covering pairs of each CPT row order are emitted: rows for transitively
implied pairs are sums of covering rows, so they cannot change feasibility.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from . import linear
from .model import FamilySets, TcpNet, check_acyclic, derive_families, transitive_reduction
from .ranking import Factor, GaValueFunction


class NetNotAcyclic(Exception):
    def __init__(self, witness):
        self.witness = witness
        super().__init__(f"net contains a semi-directed cycle: {witness}")


class HasCiArcs(Exception):
    """i-condition generation is only defined for nets without ci-arcs."""


class Infeasible(Exception):
    """The linear system has no solution; carries conflicting provenance."""

    def __init__(self, conflict: list[tuple], certified: bool = True):
        self.conflict = conflict
        self.certified = certified
        detail = "; ".join(str(c) for c in conflict[:8])
        super().__init__(f"no consistent value function ({detail})")


@dataclass(frozen=True)
class LpVariable:
    """One factor-table entry: values are aligned with the owner's scope."""

    owner: str
    values: tuple[str, ...]


@dataclass
class LinearSystem:
    net: TcpNet
    scopes: Mapping[str, tuple[str, ...]]
    lp_variables: tuple[LpVariable, ...]
    rows: list[linear.Row]
    status: str = "unsolved"
    point: list[int] | None = None

    @property
    def entry_index(self) -> dict[LpVariable, int]:
        if not hasattr(self, "_entry_index"):
            self._entry_index = {v: i for i, v in enumerate(self.lp_variables)}
        return self._entry_index

    def dump(self) -> dict:
        """Debug/cross-check form: entries plus provenance-tagged rows."""
        return {
            "lp_variables": [
                {"owner": v.owner, "scope": list(self.scopes[v.owner]), "values": list(v.values)}
                for v in self.lp_variables
            ],
            "constraints": [
                {
                    "pos": list(r.pos),
                    "neg": list(r.neg),
                    "rhs": r.rhs,
                    "soft": r.soft,
                    "provenance": repr(r.provenance),
                }
                for r in self.rows
            ],
        }


def factor_scopes(net: TcpNet, fams: FamilySets | None = None) -> dict[str, tuple[str, ...]]:
    """Factor scope per variable: the tcp-family, in declaration order."""
    report = check_acyclic(net)
    if not report.acyclic:
        raise NetNotAcyclic(report.witness)
    fams = fams or derive_families(net)
    return {n: net.sort_vars(fams.tcp_family[n]) for n in net.names}


def enumerate_entries(net: TcpNet, scopes: Mapping[str, tuple[str, ...]]) -> tuple[LpVariable, ...]:
    out = []
    for name in net.names:
        for values in itertools.product(*(net.domains[v] for v in scopes[name])):
            out.append(LpVariable(name, values))
    return tuple(out)


class _Generator:
    def __init__(self, net: TcpNet):
        self.net = net
        self.fams = derive_families(net)
        self.scopes = factor_scopes(net, self.fams)
        self.entries = enumerate_entries(net, self.scopes)
        self.index = {v: i for i, v in enumerate(self.entries)}

    def entry(self, owner: str, context: Mapping[str, str]) -> int:
        return self.index[LpVariable(owner, tuple(context[v] for v in self.scopes[owner]))]

    def covering_pairs(self, name: str, u_key) -> list[tuple[str, str]]:
        order = self.net.cpts[name].rows.get(u_key)
        if not order:
            return []
        pos = {v: i for i, v in enumerate(self.net.domains[name])}
        return sorted(transitive_reduction(order), key=lambda p: (pos[p[0]], pos[p[1]]))

    def _contexts(self, owners: Iterable[str], flips: set[str], fixed: dict[str, str]):
        """Assignments to the union of the owners' scopes minus the flip
        variables, honoring fixed values; yields complete context dicts."""
        context_vars = set()
        for z in owners:
            context_vars.update(self.scopes[z])
        context_vars -= flips
        free = self.net.sort_vars(context_vars - set(fixed))
        for values in itertools.product(*(self.net.domains[v] for v in free)):
            ctx = dict(fixed)
            ctx.update(zip(free, values))
            yield ctx

    def _row(self, owners: Sequence[str], ctx: dict, win: dict, lose: dict, prov: tuple):
        pos = tuple(self.entry(z, {**ctx, **win}) for z in owners)
        neg = tuple(self.entry(z, {**ctx, **lose}) for z in owners)
        return linear.Row(pos=pos, neg=neg, rhs=1, provenance=prov)

    def value_rows(self) -> list[linear.Row]:
        rows = []
        for x in self.net.names:
            owners = (x, *self.net.sort_vars(self.fams.dependents[x]))
            for u in self.net.assignments(self.net.parents[x]):
                u_key = tuple(sorted(u.items()))
                for x1, x2 in self.covering_pairs(x, u_key):
                    for ctx in self._contexts(owners, {x}, dict(u)):
                        prov = ("cp", x, tuple(sorted(ctx.items())), x1, x2)
                        rows.append(self._row(owners, ctx, {x: x1}, {x: x2}, prov))
        return rows

    def importance_rows(self) -> list[linear.Row]:
        rows = []
        for x, x2, gate in self.net.importance_relations():
            if x2 in self.net.parents[x]:
                continue  # the shared context cannot agree on X's parents
            owners = self.net.sort_vars(
                {x, x2} | self.fams.dependents[x] | self.fams.dependents[x2]
            )
            dom2 = self.net.domains[x2]
            for u in self.net.assignments(self.net.parents[x]):
                if any(gate.get(v, val) != val for v, val in u.items()):
                    continue  # CPT row contradicts the CIT selector row
                u_key = tuple(sorted(u.items()))
                fixed = {**gate, **u}
                for x1v, x2v in self.covering_pairs(x, u_key):
                    for b1, b2 in itertools.product(dom2, dom2):
                        if b1 == b2:
                            continue  # collapses to a value row
                        for ctx in self._contexts(owners, {x, x2}, fixed):
                            prov = (
                                "imp", x, x2, tuple(sorted(gate.items())),
                                tuple(sorted(ctx.items())), x1v, x2v, b1, b2,
                            )
                            rows.append(
                                self._row(owners, ctx, {x: x1v, x2: b1}, {x: x2v, x2: b2}, prov)
                            )
        return rows


def gen_cp_conditions(net: TcpNet) -> list[linear.Row]:
    """Value rows for every variable (over tcp-family scopes)."""
    return _Generator(net).value_rows()


def gen_i_conditions(net: TcpNet) -> list[linear.Row]:
    """Importance rows for a net whose importance arcs are all unconditional."""
    if net.ci_arcs:
        raise HasCiArcs("net has ci-arcs; use gen_ci_conditions")
    return _Generator(net).importance_rows()


def gen_ci_conditions(net: TcpNet) -> list[linear.Row]:
    """Importance rows for all i-arcs and ci-arc CIT rows uniformly."""
    return _Generator(net).importance_rows()


def compile_net(net: TcpNet) -> LinearSystem:
    gen = _Generator(net)
    rows = gen.value_rows()
    if net.i_arcs or net.ci_arcs:
        rows.extend(gen.importance_rows())
    return LinearSystem(
        net=net,
        scopes=gen.scopes,
        lp_variables=gen.entries,
        rows=rows,
    )


def value_function_from_point(system: LinearSystem, point: Sequence[int]) -> GaValueFunction:
    tables: dict[str, dict[tuple[str, ...], int]] = {n: {} for n in system.net.names}
    for entry, value in zip(system.lp_variables, point):
        tables[entry.owner][entry.values] = int(value)
    return GaValueFunction(
        factors=tuple(
            Factor(owner=n, scope=system.scopes[n], table=tables[n]) for n in system.net.names
        )
    )


def solve(
    system: LinearSystem, policy: str = linear.L1, seed=None
) -> GaValueFunction:
    """Solve the compiled system; updates system.status and returns the value
    function at the solution point.  Raises Infeasible with provenance tags of
    a conflicting row subset otherwise."""
    result = linear.solve_rows(len(system.lp_variables), system.rows, policy=policy, seed=seed)
    if not result.feasible:
        system.status = "infeasible"
        conflict = [system.rows[i].provenance for i in result.conflict]
        raise Infeasible(conflict, certified=result.certified)
    system.status = "feasible"
    system.point = result.point
    return value_function_from_point(system, result.point)


@dataclass(frozen=True)
class SizeReport:
    lp_variable_count: int
    constraint_count: int
    domain_bound: int  # d: largest domain
    family_bound: int  # lambda: largest tcp-family
    extended_bound: int  # mu: largest extended tcp-family
    variable_limit: int  # n * d**lambda
    constraint_limit: int  # (n + arcs) * d**(2*mu)


def size_report(net: TcpNet) -> SizeReport:
    """Exact system size plus the locally-exponential bounds it must respect."""
    system = compile_net(net)
    fams = derive_families(net)
    n = len(net.names)
    d = max(len(v.domain) for v in net.variables)
    lam = max(len(fams.tcp_family[x]) for x in net.names)
    mu = max(len(fams.extended_tcp_family[x]) for x in net.names)
    arc_count = len(net.i_arcs) + len(net.ci_arcs)
    report = SizeReport(
        lp_variable_count=len(system.lp_variables),
        constraint_count=len(system.rows),
        domain_bound=d,
        family_bound=lam,
        extended_bound=mu,
        variable_limit=n * d**lam,
        constraint_limit=(n + arc_count) * d ** (2 * mu),
    )
    assert report.lp_variable_count <= report.variable_limit
    assert report.constraint_count <= report.constraint_limit
    return report
