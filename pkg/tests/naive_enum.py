"""Independent literal-quantifier constraint enumerator.

Deliberately structured unlike the compiler: per-definition nested loops over
full assignment products with explicit compatibility filters, and entries
represented as (owner, frozenset of variable/value pairs).  Used to
cross-check the compiler's constraint counts and row contents.

Preconditions (the random net generator guarantees both): importance pairs
are never cp-adjacent, and never appear in each other's selector unions.
"""

from __future__ import annotations

import itertools
from collections import Counter

from prefrank.model import TcpNet, derive_families, transitive_reduction

Entry = tuple[str, frozenset]
Constraint = tuple[frozenset, frozenset]  # (winning entries, losing entries)

COVERING = "covering"
CLOSURE = "closure"


def _product(net: TcpNet, names) -> list[dict[str, str]]:
    names = sorted(names)
    return [
        dict(zip(names, values))
        for values in itertools.product(*(net.domains[v] for v in names))
    ]


def _compatible(a: dict, b: dict) -> bool:
    return all(b[k] == v for k, v in a.items() if k in b)


def _entry(net: TcpNet, fams, owner: str, sources: list[dict]) -> Entry:
    scope = fams.tcp_family[owner]
    merged: dict[str, str] = {}
    for src in sources:
        merged.update(src)
    return (owner, frozenset((v, merged[v]) for v in scope))


def _row_pairs(net: TcpNet, x: str, u: dict, mode: str):
    order = net.cpts[x].rows.get(tuple(sorted(u.items())))
    if not order:
        return []
    if mode == CLOSURE:
        return sorted(order)
    return transitive_reduction(order)


def value_conditions(net: TcpNet, mode: str = COVERING) -> list[Constraint]:
    fams = derive_families(net)
    out: list[Constraint] = []
    for x in net.names:
        dependents = sorted(fams.dependents[x])
        context_vars = fams.extended_tcp_family[x] - {x}
        for u in _product(net, fams.parents[x]):
            for x1, x2 in _row_pairs(net, x, u, mode):
                for v in _product(net, context_vars):
                    if not _compatible(u, v):
                        continue
                    win = [_entry(net, fams, x, [v, {x: x1}])]
                    lose = [_entry(net, fams, x, [v, {x: x2}])]
                    for y in dependents:
                        win.append(_entry(net, fams, y, [v, {x: x1}]))
                        lose.append(_entry(net, fams, y, [v, {x: x2}]))
                    out.append((frozenset(win), frozenset(lose)))
    return out


def _relations(net: TcpNet):
    """(dominant, subordinate, selector row) in the same orientation logic the
    model exposes, but walked literally from the arc lists."""
    for a, b in net.i_arcs:
        yield a, b, {}
    for cit in net.ci_arcs:
        for ordered in (cit.pair, tuple(reversed(cit.pair))):
            x, x2 = ordered
            for values in itertools.product(*(net.domains[s] for s in cit.selector)):
                s = dict(zip(cit.selector, values))
                if cit.rows.get(tuple(sorted(s.items()))) == x:
                    yield x, x2, s


def importance_conditions(net: TcpNet, mode: str = COVERING) -> list[Constraint]:
    fams = derive_families(net)
    out: list[Constraint] = []
    for x, x2, gate in _relations(net):
        assert x2 not in fams.parents[x] and x not in fams.parents[x2]
        assert x2 not in fams.selector_union[x] and x not in fams.selector_union[x2]
        y_x = sorted(fams.dependents[x])
        y_x2 = sorted(fams.dependents[x2] - fams.dependents[x])
        ef_x = fams.extended_tcp_family[x] - {x, x2}
        ef_x2 = fams.extended_tcp_family[x2] - {x, x2}
        for s_full in _product(net, fams.selector_union[x]):
            if any(s_full.get(k) != v for k, v in gate.items()):
                continue
            for u in _product(net, fams.parents[x]):
                if not _compatible(u, s_full):
                    continue
                for x1v, x2v in _row_pairs(net, x, u, mode):
                    for b1 in net.domains[x2]:
                        for b2 in net.domains[x2]:
                            if b1 == b2:
                                continue
                            for u2 in _product(net, fams.parents[x2]):
                                if not (_compatible(u2, u) and _compatible(u2, s_full)):
                                    continue
                                for s2 in _product(net, fams.selector_union[x2]):
                                    if not all(
                                        _compatible(s2, other) for other in (u, u2, s_full)
                                    ):
                                        continue
                                    for v in _product(net, ef_x):
                                        if not all(
                                            _compatible(v, other)
                                            for other in (u, u2, s_full, s2)
                                        ):
                                            continue
                                        for v2 in _product(net, ef_x2):
                                            if not all(
                                                _compatible(v2, other)
                                                for other in (u, u2, s_full, s2, v)
                                            ):
                                                continue
                                            ctx = [v, v2, u, u2, s_full, s2]
                                            win = [
                                                _entry(net, fams, x, ctx + [{x: x1v, x2: b1}]),
                                                _entry(net, fams, x2, ctx + [{x: x1v, x2: b1}]),
                                            ]
                                            lose = [
                                                _entry(net, fams, x, ctx + [{x: x2v, x2: b2}]),
                                                _entry(net, fams, x2, ctx + [{x: x2v, x2: b2}]),
                                            ]
                                            for y in y_x:
                                                win.append(
                                                    _entry(net, fams, y, ctx + [{x: x1v, x2: b1}])
                                                )
                                                lose.append(
                                                    _entry(net, fams, y, ctx + [{x: x2v, x2: b2}])
                                                )
                                            for y in y_x2:
                                                win.append(
                                                    _entry(net, fams, y, ctx + [{x: x1v, x2: b1}])
                                                )
                                                lose.append(
                                                    _entry(net, fams, y, ctx + [{x: x2v, x2: b2}])
                                                )
                                            out.append((frozenset(win), frozenset(lose)))
    return out


def all_conditions(net: TcpNet, mode: str = COVERING) -> list[Constraint]:
    return value_conditions(net, mode) + importance_conditions(net, mode)


def system_to_constraints(system) -> list[Constraint]:
    """Compiler rows in the enumerator's representation, for comparison."""
    scopes = system.scopes
    out = []
    for row in system.rows:
        win = frozenset(
            (
                system.lp_variables[i].owner,
                frozenset(zip(scopes[system.lp_variables[i].owner], system.lp_variables[i].values)),
            )
            for i in row.pos
        )
        lose = frozenset(
            (
                system.lp_variables[i].owner,
                frozenset(zip(scopes[system.lp_variables[i].owner], system.lp_variables[i].values)),
            )
            for i in row.neg
        )
        out.append((win, lose))
    return out


def same_multiset(a: list[Constraint], b: list[Constraint]) -> bool:
    return Counter(a) == Counter(b)
