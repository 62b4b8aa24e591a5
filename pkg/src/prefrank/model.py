"""TCP-net data model.

A TCP-net organizes two kinds of qualitative statements over a set of
categorical variables:

* conditional value preferences (cp-arcs + per-variable conditional
  preference tables, CPTs), and
* relative importance between variables, either unconditional (directed
  i-arcs) or conditional on a selector set (undirected ci-arcs + conditional
  importance tables, CITs).

Nets are immutable after construction.  This module owns parsing/serialization
of the JSON interchange format, structural validation, the derived
family/neighborhood sets used by the compiler, and mixed-graph acyclicity.
"""

from __future__ import annotations

import itertools
import json
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping

# An assignment is a tuple of (variable, value) pairs sorted by variable name.
Assignment = tuple[tuple[str, str], ...]
Pair = tuple[str, str]


class ModelError(Exception):
    """Base class for net-model errors."""


class WrongConditioningSet(ModelError):
    """A CPT lookup supplied an assignment that is not exactly the parent set."""


class NoSuchImportanceRelation(ModelError):
    """An importance lookup named a pair with no i-arc or ci-arc."""


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str

    def __str__(self) -> str:
        return f"{self.code}: {self.message}"


class NetValidationError(ModelError):
    """Raised by parse_net with every violation found, not just the first."""

    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = diagnostics
        super().__init__("; ".join(str(d) for d in diagnostics))


def freeze(assignment: Mapping[str, str] | Iterable[tuple[str, str]]) -> Assignment:
    """Canonical hashable form of an assignment (sorted by variable name)."""
    items = assignment.items() if isinstance(assignment, Mapping) else assignment
    return tuple(sorted(items))


def transitive_closure(pairs: Iterable[Pair]) -> frozenset[Pair] | None:
    """Close a strict-order pair set; None if the result would not be a
    strict partial order (reflexive pair or cycle)."""
    succ: dict[str, set[str]] = {}
    nodes: set[str] = set()
    for a, b in pairs:
        if a == b:
            return None
        succ.setdefault(a, set()).add(b)
        nodes.update((a, b))
    closed: dict[str, set[str]] = {}

    def reach(x: str) -> set[str]:
        if x in closed:
            return closed[x]
        closed[x] = set()  # cycle guard: refer back to partial set
        out: set[str] = set()
        for y in succ.get(x, ()):
            out.add(y)
            out |= reach(y)
        closed[x] = out
        return out

    result: set[Pair] = set()
    for x in nodes:
        for y in reach(x):
            if x == y:
                return None
            result.add((x, y))
    # a cycle hidden by the memo guard shows up as mutual reachability
    for a, b in result:
        if (b, a) in result:
            return None
    return frozenset(result)


def transitive_reduction(closure: frozenset[Pair]) -> list[Pair]:
    """Covering pairs of a transitively closed strict partial order."""
    return sorted(
        (a, b)
        for a, b in closure
        if not any((a, m) in closure and (m, b) in closure for m in {x for _, x in closure})
    )


@dataclass(frozen=True)
class Variable:
    name: str
    domain: tuple[str, ...]


@dataclass(frozen=True)
class Cpt:
    """Per-variable map from parent assignments to strict partial orders,
    stored transitively closed.  Rows may be absent (partial CPT)."""

    variable: str
    rows: Mapping[Assignment, frozenset[Pair]]

    def row(self, u: Assignment) -> frozenset[Pair]:
        return self.rows.get(u, frozenset())


@dataclass(frozen=True)
class Cit:
    """Conditional importance table of one ci-arc: selector assignments map to
    the dominant endpoint.  Rows may be absent (partial CIT)."""

    pair: tuple[str, str]
    selector: tuple[str, ...]
    rows: Mapping[Assignment, str]


@dataclass(frozen=True)
class AcyclicityReport:
    acyclic: bool
    witness: tuple[str, ...] | None = None


@dataclass(frozen=True)
class TcpNet:
    variables: tuple[Variable, ...]
    cp_arcs: tuple[Pair, ...] = ()
    i_arcs: tuple[Pair, ...] = ()
    ci_arcs: tuple[Cit, ...] = ()
    cpts: Mapping[str, Cpt] = field(default_factory=dict)

    @cached_property
    def names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    @cached_property
    def order(self) -> dict[str, int]:
        return {v.name: i for i, v in enumerate(self.variables)}

    @cached_property
    def domains(self) -> dict[str, tuple[str, ...]]:
        return {v.name: v.domain for v in self.variables}

    def domain(self, name: str) -> tuple[str, ...]:
        return self.domains[name]

    @cached_property
    def parents(self) -> dict[str, tuple[str, ...]]:
        up: dict[str, list[str]] = {n: [] for n in self.names}
        for p, c in self.cp_arcs:
            up[c].append(p)
        return {n: self.sort_vars(v) for n, v in up.items()}

    @cached_property
    def outcome_count(self) -> int:
        n = 1
        for v in self.variables:
            n *= len(v.domain)
        return n

    def sort_vars(self, names: Iterable[str]) -> tuple[str, ...]:
        """Declaration-order canonical ordering of a variable subset."""
        return tuple(sorted(names, key=self.order.__getitem__))

    def assignments(self, names: Iterable[str]) -> Iterable[dict[str, str]]:
        """All assignments to the given variables, in canonical order."""
        names = self.sort_vars(names)
        for values in itertools.product(*(self.domains[n] for n in names)):
            yield dict(zip(names, values))

    def importance_relations(self):
        """Every (dominant, subordinate, gate) importance instance, in
        declaration order: i-arcs first (empty gate), then ci-arc CIT rows."""
        for a, b in self.i_arcs:
            yield a, b, {}
        for cit in self.ci_arcs:
            for s in self.assignments(cit.selector):
                winner = cit.rows.get(freeze(s))
                if winner is None:
                    continue
                loser = cit.pair[1] if winner == cit.pair[0] else cit.pair[0]
                yield winner, loser, s


@dataclass(frozen=True)
class FamilySets:
    """All derived neighborhood sets of a net, per variable.

    parents/children come from cp-arcs.  family = variable + parents;
    extended_family adds the families of all children.  selector_union is the
    union of selector sets of ci-arcs touching the variable; selector_clients
    are the ci-arc endpoints for which the variable acts as a selector.
    dependents = children + selector_clients.  tcp_family = family +
    selector_union, and extended_tcp_family closes over dependents'
    tcp-families.  For nets without ci-arcs the starred sets coincide with
    the plain ones.
    """

    net: TcpNet
    parents: Mapping[str, frozenset[str]]
    children: Mapping[str, frozenset[str]]
    family: Mapping[str, frozenset[str]]
    extended_family: Mapping[str, frozenset[str]]
    selector_union: Mapping[str, frozenset[str]]
    selector_clients: Mapping[str, frozenset[str]]
    dependents: Mapping[str, frozenset[str]]
    tcp_family: Mapping[str, frozenset[str]]
    extended_tcp_family: Mapping[str, frozenset[str]]

    def dominators(self, name: str, selector_assignment: Mapping[str, str]) -> frozenset[str]:
        """Variables directly more important than `name` given values for its
        selector union (i-arcs contribute unconditionally, ci-arcs via their
        CIT row under the projected selector assignment)."""
        out = {a for a, b in self.net.i_arcs if b == name}
        for cit in self.net.ci_arcs:
            if name not in cit.pair:
                continue
            other = cit.pair[1] if name == cit.pair[0] else cit.pair[0]
            try:
                row_key = freeze({v: selector_assignment[v] for v in cit.selector})
            except KeyError as exc:
                raise WrongConditioningSet(
                    f"selector assignment for {name} must cover {cit.selector}"
                ) from exc
            if cit.rows.get(row_key) == other:
                out.add(other)
        return frozenset(out)


def derive_families(net: TcpNet) -> FamilySets:
    parents = {n: frozenset(net.parents[n]) for n in net.names}
    children: dict[str, set[str]] = {n: set() for n in net.names}
    for p, c in net.cp_arcs:
        children[p].add(c)
    family = {n: frozenset({n}) | parents[n] for n in net.names}
    extended_family = {
        n: family[n] | frozenset().union(*(family[y] for y in children[n]), frozenset())
        for n in net.names
    }
    selector_union: dict[str, set[str]] = {n: set() for n in net.names}
    selector_clients: dict[str, set[str]] = {n: set() for n in net.names}
    for cit in net.ci_arcs:
        for endpoint in cit.pair:
            selector_union[endpoint].update(cit.selector)
            for s in cit.selector:
                selector_clients[s].add(endpoint)
    dependents = {n: frozenset(children[n]) | frozenset(selector_clients[n]) for n in net.names}
    tcp_family = {n: family[n] | frozenset(selector_union[n]) for n in net.names}
    extended_tcp_family = {
        n: tcp_family[n] | frozenset().union(*(tcp_family[y] for y in dependents[n]), frozenset())
        for n in net.names
    }
    return FamilySets(
        net=net,
        parents=parents,
        children={n: frozenset(children[n]) for n in net.names},
        family=family,
        extended_family=extended_family,
        selector_union={n: frozenset(selector_union[n]) for n in net.names},
        selector_clients={n: frozenset(selector_clients[n]) for n in net.names},
        dependents=dependents,
        tcp_family=tcp_family,
        extended_tcp_family=extended_tcp_family,
    )


def cpt_lookup(net: TcpNet, name: str, u: Mapping[str, str]) -> frozenset[Pair]:
    """Transitively closed order over D(name) for the given parent assignment;
    empty when the row is absent."""
    if set(u) != set(net.parents[name]):
        raise WrongConditioningSet(
            f"{name} is conditioned on {net.parents[name]}, got {tuple(u)}"
        )
    return net.cpts[name].row(freeze(u))


def importance_lookup(
    net: TcpNet, pair: tuple[str, str], s: Mapping[str, str] | None = None
) -> str | None:
    """Dominant endpoint of an importance relation, or None when a ci-arc's
    CIT row is absent.  i-arcs take an empty selector assignment."""
    s = s or {}
    a, b = pair
    for more, less in net.i_arcs:
        if {more, less} == {a, b}:
            if s:
                raise WrongConditioningSet(f"i-arc ({more},{less}) takes no selector")
            return more
    for cit in net.ci_arcs:
        if set(cit.pair) == {a, b}:
            if set(s) != set(cit.selector):
                raise WrongConditioningSet(
                    f"ci-arc {cit.pair} is selected by {cit.selector}, got {tuple(s)}"
                )
            return cit.rows.get(freeze(s))
    raise NoSuchImportanceRelation(f"no importance relation between {a} and {b}")


def check_acyclic(net: TcpNet) -> AcyclicityReport:
    """Detect semi-directed cycles in the mixed dependency graph.

    The graph holds the directed cp- and i-arcs, the undirected ci-arcs, and
    one directed arc from every ci-arc selector variable to each endpoint of
    its arc: a selector gates which endpoint matters more, so it is a
    dependency source exactly like a cp-parent.  Without the selector arcs,
    importance flips interleaved with selector value flips can build a
    dominance cycle even though the plain arc graph looks acyclic.

    A semi-directed cycle is a simple cycle whose directed arcs (possibly
    zero) all point the same way along it.  Two checks realize this:
    (a) any cycle in the undirected ci-only subgraph, and (b) for each
    directed arc u->v, a return path v~>u using directed arcs forward-only
    and ci-arcs in either direction.
    """
    ci_adj: dict[str, list[str]] = {n: [] for n in net.names}
    selector_arcs: list[Pair] = []
    for cit in net.ci_arcs:
        a, b = cit.pair
        ci_adj[a].append(b)
        ci_adj[b].append(a)
        for s in cit.selector:
            selector_arcs.append((s, a))
            selector_arcs.append((s, b))

    # (a) undirected cycle among ci-arcs; true DFS so every back edge points
    # to an ancestor on the current path, giving an exact witness
    state: dict[str, int] = {}  # 1 = on path, 2 = finished
    parent: dict[str, str | None] = {}
    for root in net.names:
        if root in state:
            continue
        state[root] = 1
        parent[root] = None
        stack = [(root, None, iter(ci_adj[root]))]
        while stack:
            node, prev, neighbors = stack[-1]
            advanced = False
            for nxt in neighbors:
                if nxt == prev:
                    continue  # the arrival edge; ci pairs are unique
                if state.get(nxt, 0) == 1:
                    cycle = [node]
                    walk = parent[node]
                    while cycle[-1] != nxt:
                        cycle.append(walk)
                        walk = parent[walk]
                    return AcyclicityReport(False, tuple(reversed(cycle)))
                if state.get(nxt, 0) == 0:
                    state[nxt] = 1
                    parent[nxt] = node
                    stack.append((nxt, node, iter(ci_adj[nxt])))
                    advanced = True
                    break
            if not advanced:
                state[node] = 2
                stack.pop()

    directed = list(net.cp_arcs) + list(net.i_arcs) + selector_arcs
    fwd: dict[str, list[str]] = {n: [] for n in net.names}
    for a, b in directed:
        fwd[a].append(b)

    # (b) for each directed arc u->v, search v~>u over forward arcs + ci edges
    for u, v in directed:
        prev_node: dict[str, str | None] = {v: None}
        queue = deque([v])
        found = False
        while queue and not found:
            node = queue.popleft()
            for nxt in itertools.chain(fwd[node], ci_adj[node]):
                if nxt == u:
                    prev_node[u] = node
                    found = True
                    break
                if nxt not in prev_node:
                    prev_node[nxt] = node
                    queue.append(nxt)
        if found:
            chain = [u]
            walk: str | None = prev_node[u]
            while walk is not None:
                chain.append(walk)
                walk = prev_node[walk]
            chain.reverse()  # v .. u along the return path
            return AcyclicityReport(False, (u, *chain[:-1]))
    return AcyclicityReport(True, None)


def _check_row_pairs(pairs, domain: tuple[str, ...], where: str, diags: list[Diagnostic]):
    for p in pairs:
        if len(p) != 2:
            diags.append(Diagnostic("SchemaError", f"{where}: order entries are [better, worse]"))
            return None
        for val in p:
            if val not in domain:
                diags.append(Diagnostic("UnknownValue", f"{where}: value {val!r} not in domain"))
                return None
    closure = transitive_closure(tuple((a, b) for a, b in pairs))
    if closure is None:
        diags.append(
            Diagnostic("CptRowNotPartialOrder", f"{where}: pair set is not a strict partial order")
        )
    return closure


def parse_net(document: Mapping) -> TcpNet:
    """Build a TcpNet from its JSON document, collecting every violation."""
    diags: list[Diagnostic] = []
    try:
        return _parse_net(document, diags)
    except NetValidationError:
        raise
    except (TypeError, ValueError, AttributeError, KeyError) as exc:
        diags.append(Diagnostic("SchemaError", f"malformed net document: {exc}"))
        raise NetValidationError(diags) from exc


def _parse_net(document: Mapping, diags: list[Diagnostic]) -> TcpNet:

    variables: list[Variable] = []
    seen_names: set[str] = set()
    for spec_var in document.get("variables", []):
        name = spec_var.get("name")
        domain = tuple(spec_var.get("domain", ()))
        if not name:
            diags.append(Diagnostic("UnknownVariable", "variable without a name"))
            continue
        if name in seen_names:
            diags.append(Diagnostic("DuplicateVariable", f"variable {name!r} declared twice"))
            continue
        seen_names.add(name)
        if len(domain) < 2 or len(set(domain)) != len(domain):
            diags.append(
                Diagnostic("DomainTooSmall", f"{name}: needs >=2 distinct values, got {domain}")
            )
        variables.append(Variable(name, domain))
    names = {v.name for v in variables}
    domains = {v.name: v.domain for v in variables}

    def check_endpoint(n: str, where: str) -> bool:
        if n not in names:
            diags.append(Diagnostic("UnknownVariable", f"{where}: unknown variable {n!r}"))
            return False
        return True

    def read_arcs(key: str) -> list[Pair]:
        arcs: list[Pair] = []
        for raw in document.get(key, []):
            a, b = raw
            if not (check_endpoint(a, key) and check_endpoint(b, key)):
                continue
            if a == b:
                diags.append(Diagnostic("DuplicateArc", f"{key}: self-arc on {a!r}"))
                continue
            if (a, b) in arcs:
                diags.append(Diagnostic("DuplicateArc", f"{key}: ({a},{b}) repeated"))
                continue
            arcs.append((a, b))
        return arcs

    cp_arcs = read_arcs("cp_arcs")
    i_arcs = read_arcs("i_arcs")

    ci_arcs: list[Cit] = []
    ci_pairs_seen: set[frozenset[str]] = set()
    for raw in document.get("ci_arcs", []):
        a, b = raw.get("pair", (None, None))
        where = f"ci_arc ({a},{b})"
        if not (check_endpoint(a, where) and check_endpoint(b, where)):
            continue
        if a == b:
            diags.append(Diagnostic("DuplicateArc", f"{where}: self-arc"))
            continue
        key = frozenset((a, b))
        if key in ci_pairs_seen or any(frozenset(arc) == key for arc in i_arcs):
            diags.append(
                Diagnostic("DuplicateArc", f"{where}: pair already carries an importance arc")
            )
            continue
        ci_pairs_seen.add(key)
        selector = tuple(raw.get("selector", ()))
        bad_selector = False
        for s in selector:
            if not check_endpoint(s, where):
                bad_selector = True
            elif s in (a, b):
                diags.append(
                    Diagnostic("SelectorOverlapsEndpoints", f"{where}: selector contains {s!r}")
                )
                bad_selector = True
        if bad_selector:
            continue
        rows: dict[Assignment, str] = {}
        for row in raw.get("rows", []):
            given = row.get("given", {})
            more = row.get("more")
            if set(given) != set(selector):
                diags.append(
                    Diagnostic(
                        "WrongConditioningSet",
                        f"{where}: row given {tuple(given)} != selector {selector}",
                    )
                )
                continue
            if any(domains.get(v) and val not in domains[v] for v, val in given.items()):
                diags.append(Diagnostic("UnknownValue", f"{where}: bad selector value in {given}"))
                continue
            if more not in (a, b):
                diags.append(Diagnostic("UnknownVariable", f"{where}: 'more' must be {a} or {b}"))
                continue
            rows[freeze(given)] = more
        ci_arcs.append(Cit(pair=(a, b), selector=selector, rows=rows))

    parents: dict[str, list[str]] = {v.name: [] for v in variables}
    for p, c in cp_arcs:
        parents[c].append(p)

    cpts: dict[str, Cpt] = {}
    for raw in document.get("cpts", []):
        name = raw.get("variable")
        if not check_endpoint(name, "cpts"):
            continue
        if name in cpts:
            diags.append(Diagnostic("DuplicateCpt", f"cpt for {name!r} declared twice"))
            continue
        rows: dict[Assignment, frozenset[Pair]] = {}
        for row in raw.get("rows", []):
            given = row.get("given", {})
            if set(given) != set(parents.get(name, [])):
                diags.append(
                    Diagnostic(
                        "WrongConditioningSet",
                        f"cpt {name}: row given {tuple(given)} != parents {tuple(parents[name])}",
                    )
                )
                continue
            closure = _check_row_pairs(
                row.get("order", []), domains[name], f"cpt {name} given {given}", diags
            )
            if closure is not None:
                rows[freeze(given)] = closure
        cpts[name] = Cpt(variable=name, rows=rows)
    for v in variables:
        cpts.setdefault(v.name, Cpt(variable=v.name, rows={}))

    if diags:
        raise NetValidationError(diags)
    return TcpNet(
        variables=tuple(variables),
        cp_arcs=tuple(cp_arcs),
        i_arcs=tuple(i_arcs),
        ci_arcs=tuple(ci_arcs),
        cpts=cpts,
    )


def serialize_net(net: TcpNet) -> dict:
    """JSON document for a net; CPT/CIT orders are emitted as covering pairs."""
    return {
        "variables": [{"name": v.name, "domain": list(v.domain)} for v in net.variables],
        "cp_arcs": [list(a) for a in net.cp_arcs],
        "i_arcs": [list(a) for a in net.i_arcs],
        "ci_arcs": [
            {
                "pair": list(cit.pair),
                "selector": list(cit.selector),
                "rows": [
                    {"given": dict(k), "more": v} for k, v in sorted(cit.rows.items())
                ],
            }
            for cit in net.ci_arcs
        ],
        "cpts": [
            {
                "variable": name,
                "rows": [
                    {"given": dict(u), "order": [list(p) for p in transitive_reduction(order)]}
                    for u, order in sorted(net.cpts[name].rows.items())
                ],
            }
            for name in net.names
        ],
    }


def load_net(path: str) -> TcpNet:
    with open(path, encoding="utf-8") as fh:
        return parse_net(json.load(fh))
