"""Ground-truth ceteris paribus semantics by brute force.

Intended for desk-scale instances only: the full outcome space is enumerated,
direct dominance edges are materialized, and entailment is graph reachability.
Two edge patterns generate dominance, mirroring how the qualitative statements
are read:

* value flip: two outcomes differ on exactly one variable and the CPT row
  under the shared parent assignment orders the two values;
* importance flip: two outcomes differ on exactly two variables, the first of
  which is more important than the second (by i-arc, or by a ci-arc whose CIT
  row under the shared selector assignment names it), the shared assignment
  covers the first variable's parents, and its values are CPT-ordered - the
  less important variable may move anywhere.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping

from .accel import kernels
from .model import TcpNet, freeze

ORACLE_CAP = 4096

OutcomeTuple = tuple[str, ...]


class InstanceTooLarge(Exception):
    """The outcome space exceeds the configured oracle cap."""


def outcome_tuple(net: TcpNet, o: Mapping[str, str] | OutcomeTuple) -> OutcomeTuple:
    if isinstance(o, tuple):
        return o
    missing = set(net.names) - set(o)
    if missing:
        raise ValueError(f"outcome must assign every variable; missing {sorted(missing)}")
    return tuple(o[n] for n in net.names)


def outcome_dict(net: TcpNet, o: OutcomeTuple) -> dict[str, str]:
    return dict(zip(net.names, o))


def all_outcomes(net: TcpNet) -> Iterable[OutcomeTuple]:
    return itertools.product(*(v.domain for v in net.variables))


def _check_cap(net: TcpNet, cap: int) -> None:
    if net.outcome_count > cap:
        raise InstanceTooLarge(
            f"{net.outcome_count} outcomes exceeds the oracle cap of {cap}"
        )


class _FlipTables:
    """Per-variable lookup: parent assignment key -> value -> worse values."""

    def __init__(self, net: TcpNet):
        self.net = net
        self.positions = {n: i for i, n in enumerate(net.names)}
        self.parent_slots = {
            n: tuple((p, self.positions[p]) for p in sorted(net.parents[n]))
            for n in net.names
        }
        self.worse: dict[str, dict[tuple, dict[str, tuple[str, ...]]]] = {}
        for n in net.names:
            by_row: dict[tuple, dict[str, tuple[str, ...]]] = {}
            for u, order in net.cpts[n].rows.items():
                worse_of: dict[str, list[str]] = {}
                for a, b in order:
                    worse_of.setdefault(a, []).append(b)
                by_row[u] = {a: tuple(sorted(bs)) for a, bs in worse_of.items()}
            self.worse[n] = by_row

    def row_key(self, name: str, o: OutcomeTuple):
        return tuple((p, o[i]) for p, i in self.parent_slots[name])

    def worse_than(self, name: str, o: OutcomeTuple) -> tuple[str, ...]:
        row = self.worse[name].get(self.row_key(name, o))
        if not row:
            return ()
        return row.get(o[self.positions[name]], ())


def _importance_instances(net: TcpNet):
    """(dominant, subordinate, gate-slots) triples with positional gates;
    relations whose subordinate is a cp-parent of the dominant can never fire
    (the shared context cannot agree on the parents)."""
    pos = {n: i for i, n in enumerate(net.names)}
    out = []
    for x, x2, gate in net.importance_relations():
        if x2 in net.parents[x]:
            continue
        out.append((x, pos[x], x2, pos[x2], tuple((pos[v], val) for v, val in sorted(gate.items()))))
    return out


def direct_dominance(
    net: TcpNet, o: Mapping[str, str] | OutcomeTuple, o2: Mapping[str, str] | OutcomeTuple
) -> bool:
    """True iff o dominates o2 in one step (value flip or importance flip)."""
    a = outcome_tuple(net, o)
    b = outcome_tuple(net, o2)
    diff = [i for i, (x, y) in enumerate(zip(a, b)) if x != y]
    tables = _FlipTables(net)
    if len(diff) == 1:
        name = net.names[diff[0]]
        return b[diff[0]] in tables.worse_than(name, a)
    if len(diff) == 2:
        for x, xi, x2, x2i, gate in _importance_instances(net):
            if {xi, x2i} != set(diff):
                continue
            if any(a[i] != val for i, val in gate):
                continue
            if b[xi] in tables.worse_than(x, a):
                return True
    return False


@dataclass(frozen=True)
class DominanceGraph:
    """All outcomes of a net plus direct-dominance successor bitmasks."""

    net: TcpNet
    outcomes: tuple[OutcomeTuple, ...]
    adj: tuple[int, ...]

    @cached_property
    def index(self) -> dict[OutcomeTuple, int]:
        return {o: i for i, o in enumerate(self.outcomes)}

    @cached_property
    def closure(self) -> list[int]:
        """closure[i] = bitmask of outcomes reachable from i by >= 1 edge."""
        return kernels.reach_closure(len(self.outcomes), list(self.adj))

    def edge_count(self) -> int:
        return sum(m.bit_count() for m in self.adj)

    def entails(self, o: OutcomeTuple, o2: OutcomeTuple) -> bool:
        i, j = self.index[o], self.index[o2]
        # single-source BFS; cheaper than full closure for point queries
        seen = self.adj[i]
        frontier = seen
        target = 1 << j
        while frontier:
            if seen & target:
                return True
            nxt = 0
            f = frontier
            while f:
                low = f & -f
                nxt |= self.adj[low.bit_length() - 1]
                f ^= low
            frontier = nxt & ~seen
            seen |= frontier
        return bool(seen & target)

    def is_consistent(self) -> bool:
        """True iff the dominance relation is acyclic (a topological order of
        the graph is then a witness total ranking)."""
        n = len(self.outcomes)
        state = bytearray(n)  # 0 unseen, 1 on path, 2 done
        for root in range(n):
            if state[root]:
                continue
            stack = [(root, self._succ_iter(root))]
            state[root] = 1
            while stack:
                node, it = stack[-1]
                for nxt in it:
                    if state[nxt] == 1:
                        return False
                    if state[nxt] == 0:
                        state[nxt] = 1
                        stack.append((nxt, self._succ_iter(nxt)))
                        break
                else:
                    state[node] = 2
                    stack.pop()
        return True

    def _succ_iter(self, i: int):
        m = self.adj[i]
        while m:
            low = m & -m
            yield low.bit_length() - 1
            m ^= low

    def entailed_pairs(self) -> set[tuple[OutcomeTuple, OutcomeTuple]]:
        pairs = set()
        for i, mask in enumerate(self.closure):
            src = self.outcomes[i]
            m = mask
            while m:
                low = m & -m
                pairs.add((src, self.outcomes[low.bit_length() - 1]))
                m ^= low
        return pairs

    def maximal_indices(self) -> list[int]:
        """Outcomes no other outcome is entailed to beat."""
        beaten = 0
        for mask in self.closure:
            beaten |= mask
        return [i for i in range(len(self.outcomes)) if not (beaten >> i) & 1]


def build_dominance_graph(net: TcpNet, cap: int = ORACLE_CAP) -> DominanceGraph:
    _check_cap(net, cap)
    outcomes = tuple(all_outcomes(net))
    index = {o: i for i, o in enumerate(outcomes)}
    tables = _FlipTables(net)
    relations = _importance_instances(net)
    domains = [v.domain for v in net.variables]
    adj = [0] * len(outcomes)
    for i, o in enumerate(outcomes):
        mask = 0
        for vi, name in enumerate(net.names):
            for worse in tables.worse_than(name, o):
                mask |= 1 << index[o[:vi] + (worse,) + o[vi + 1:]]
        for x, xi, x2, x2i, gate in relations:
            if any(o[gi] != val for gi, val in gate):
                continue
            for worse in tables.worse_than(x, o):
                for other in domains[x2i]:
                    if other == o[x2i]:
                        continue
                    t = list(o)
                    t[xi] = worse
                    t[x2i] = other
                    mask |= 1 << index[tuple(t)]
        adj[i] = mask
    return DominanceGraph(net=net, outcomes=outcomes, adj=tuple(adj))


def entails(
    net: TcpNet,
    o: Mapping[str, str] | OutcomeTuple,
    o2: Mapping[str, str] | OutcomeTuple,
    cap: int = ORACLE_CAP,
) -> bool:
    graph = build_dominance_graph(net, cap)
    return graph.entails(outcome_tuple(net, o), outcome_tuple(net, o2))


def consistent(net: TcpNet, cap: int = ORACLE_CAP) -> bool:
    return build_dominance_graph(net, cap).is_consistent()


def all_entailed_pairs(
    net: TcpNet, cap: int = ORACLE_CAP
) -> set[tuple[OutcomeTuple, OutcomeTuple]]:
    return build_dominance_graph(net, cap).entailed_pairs()
