"""Simulation harness: random acyclic nets, sampled ground-truth value
functions, simulated pick-best users, and convergence experiments.

A simulated user owns a hidden value function sampled from the solution
polytope of the same net the engine sees (random-vertex objective), then
nudged by a per-entry power-of-two perturbation.  The nudge keeps every base
row satisfied (margins shrink by strictly less than the added scale) and
makes distinct item assignments score distinctly, so a user's argmax answer
is always strictly consistent with some value function and feedback never
needs the relaxation ladder.

The additive baseline forces singleton factor scopes; conflicting conditional
rows then become soft (penalized slack) so the engine fits the best additive
approximation while feedback rows stay hard.
"""

from __future__ import annotations

import itertools
import json
import math
import os
import random
from dataclasses import dataclass, field
from typing import Mapping

from . import compiler, linear, ranking, session
from .model import TcpNet, check_acyclic, parse_net, transitive_reduction
from .ranking import GaValueFunction, Item, ItemTable

GA = "ga"
ADDITIVE = "additive_baseline"

TOTAL = "total"
PARTIAL = "partial"

PARTIAL_PAIR_PROB = 0.5


class ParamsInfeasible(Exception):
    pass


@dataclass(frozen=True)
class GeneratorParams:
    variable_count: tuple[int, int] = (3, 8)
    domain_size: tuple[int, int] = (2, 3)
    cp_edge_probability: float = 0.4
    max_in_degree: int = 2
    i_arc_count: tuple[int, int] = (0, 0)
    ci_arc_count: tuple[int, int] = (0, 0)
    selector_size_max: int = 2
    cpt_completeness: float = 1.0
    cpt_row_order: str = TOTAL

    def validate(self) -> None:
        for lo, hi in (self.variable_count, self.domain_size, self.i_arc_count, self.ci_arc_count):
            if lo > hi or lo < 0:
                raise ParamsInfeasible(f"empty range ({lo}, {hi})")
        if self.variable_count[0] < 1 or self.domain_size[0] < 2:
            raise ParamsInfeasible("need >=1 variable with >=2 values")
        if not 0.0 < self.cpt_completeness <= 1.0:
            raise ParamsInfeasible("cpt_completeness must be in (0, 1]")
        if self.ci_arc_count[0] > 0 and self.variable_count[0] < 3:
            raise ParamsInfeasible("ci-arcs need a selector variable outside the endpoints")
        if self.cpt_row_order not in (TOTAL, PARTIAL):
            raise ParamsInfeasible(f"unknown cpt_row_order {self.cpt_row_order!r}")


def _random_order_pairs(domain: tuple[str, ...], rng: random.Random, style: str) -> list[list[str]]:
    perm = list(domain)
    rng.shuffle(perm)
    if style == TOTAL:
        return [[perm[i], perm[i + 1]] for i in range(len(perm) - 1)]
    pairs = []
    for i, j in itertools.combinations(range(len(perm)), 2):
        if rng.random() < PARTIAL_PAIR_PROB:
            pairs.append([perm[i], perm[j]])
    return pairs


def _keep_rows(keys: list, frac: float, rng: random.Random) -> list:
    count = max(1, math.ceil(frac * len(keys))) if keys else 0
    if count >= len(keys):
        return list(keys)
    kept = set(rng.sample(range(len(keys)), count))
    return [k for i, k in enumerate(keys) if i in kept]


def gen_random_net(params: GeneratorParams, seed: int) -> TcpNet:
    """Random acyclic TCP-net: a cp-DAG over a fixed topological order with
    bounded in-degree, importance arcs added only between cp-non-adjacent
    pairs that keep the mixed graph acyclic, and CPT/CIT rows thinned to the
    requested completeness."""
    params.validate()
    rng = random.Random(seed)
    n = rng.randint(*params.variable_count)
    names = [f"X{i}" for i in range(n)]
    domains = {
        name: tuple("abcdefg"[: rng.randint(*params.domain_size)]) for name in names
    }

    cp_arcs: list[list[str]] = []
    parents: dict[str, list[str]] = {name: [] for name in names}
    for j, child in enumerate(names):
        candidates = [names[i] for i in range(j) if rng.random() < params.cp_edge_probability]
        if len(candidates) > params.max_in_degree:
            candidates = rng.sample(candidates, params.max_in_degree)
        for parent in sorted(candidates, key=names.index):
            cp_arcs.append([parent, child])
            parents[child].append(parent)

    cp_adjacent = {frozenset(a) for a in cp_arcs}
    importance_pairs: set[frozenset] = set()

    def acyclic_with(i_arcs, ci_list) -> bool:
        doc = {
            "variables": [{"name": m, "domain": list(domains[m])} for m in names],
            "cp_arcs": cp_arcs,
            "i_arcs": [list(a) for a in i_arcs],
            "ci_arcs": [
                {"pair": list(p), "selector": list(sel), "rows": []} for p, sel in ci_list
            ],
            "cpts": [],
        }
        return check_acyclic(parse_net(doc)).acyclic

    i_arcs: list[tuple[str, str]] = []
    ci_list: list[tuple[tuple[str, str], list[str]]] = []
    i_want = rng.randint(*params.i_arc_count) if n >= 2 else 0
    for _ in range(i_want):
        for _attempt in range(40):
            a, b = rng.sample(names, 2)
            key = frozenset((a, b))
            if key in cp_adjacent or key in importance_pairs:
                continue
            if acyclic_with(i_arcs + [(a, b)], ci_list):
                i_arcs.append((a, b))
                importance_pairs.add(key)
                break
    ci_want = rng.randint(*params.ci_arc_count)
    if ci_want and n < 3:
        if params.ci_arc_count[0] > 0:
            raise ParamsInfeasible("ci-arcs need a selector variable outside the endpoints")
        ci_want = 0
    ci_specs = []
    for _ in range(ci_want):
        for _attempt in range(40):
            a, b = rng.sample(names, 2)
            key = frozenset((a, b))
            if key in cp_adjacent or key in importance_pairs:
                continue
            # selectors stay disjoint from importance partners of the
            # endpoints so factor arguments are never double-assigned
            others = [
                m
                for m in names
                if m not in (a, b)
                and frozenset((m, a)) not in importance_pairs
                and frozenset((m, b)) not in importance_pairs
            ]
            if not others:
                continue
            size = rng.randint(1, min(params.selector_size_max, len(others)))
            selector = sorted(rng.sample(others, size), key=names.index)
            if not acyclic_with(i_arcs, ci_list + [((a, b), selector)]):
                continue
            all_rows = list(itertools.product(*(domains[s] for s in selector)))
            rows = [
                {"given": dict(zip(selector, values)), "more": rng.choice((a, b))}
                for values in _keep_rows(all_rows, params.cpt_completeness, rng)
            ]
            ci_specs.append({"pair": [a, b], "selector": selector, "rows": rows})
            ci_list.append(((a, b), selector))
            importance_pairs.add(key)
            break

    cpts = []
    for name in names:
        par = parents[name]
        all_rows = list(itertools.product(*(domains[p] for p in par)))
        rows = []
        for values in _keep_rows(all_rows, params.cpt_completeness, rng):
            rows.append(
                {
                    "given": dict(zip(par, values)),
                    "order": _random_order_pairs(domains[name], rng, params.cpt_row_order),
                }
            )
        cpts.append({"variable": name, "rows": rows})

    return parse_net(
        {
            "variables": [{"name": m, "domain": list(domains[m])} for m in names],
            "cp_arcs": cp_arcs,
            "i_arcs": [list(a) for a in i_arcs],
            "ci_arcs": ci_specs,
            "cpts": cpts,
        }
    )


def sample_user_value_fn(net: TcpNet, seed: int) -> GaValueFunction:
    """A point of the net's solution polytope via a random bounded objective,
    perturbed to make all distinct outcomes score distinctly (see module doc)."""
    system = compiler.compile_net(net)
    result = linear.solve_rows(
        len(system.lp_variables), system.rows, policy=linear.RANDOM_VERTEX, seed=seed
    )
    if not result.feasible:
        raise compiler.Infeasible(
            [system.rows[i].provenance for i in result.conflict], result.certified
        )
    m = len(result.point)
    point = [(value << (m + 1)) + (1 << e) for e, value in enumerate(result.point)]
    assert not linear.verify_point(system.rows, point)
    return compiler.value_function_from_point(system, point)


def sample_items(net: TcpNet, size: int, seed: int) -> ItemTable:
    """Uniform sample of distinct outcomes (all of them when the space is
    small); ids are zero-padded so lexicographic order is stable."""
    total = net.outcome_count
    outcomes = list(itertools.product(*(v.domain for v in net.variables)))
    if total <= size:
        chosen = outcomes
    else:
        rng = random.Random(seed)
        chosen = [outcomes[i] for i in sorted(rng.sample(range(total), size))]
    rows = tuple(
        Item(item_id=f"i{idx:06d}", attributes=dict(zip(net.names, values)))
        for idx, values in enumerate(chosen)
    )
    return ItemTable(schema=net.names, rows=rows, provenance="sampled")


def additive_system(net: TcpNet) -> compiler.LinearSystem:
    """Singleton-scope system: every conditional row becomes a soft row, so
    conflicting conditionals trade off through slack instead of making the
    base system infeasible."""
    scopes = {name: (name,) for name in net.names}
    entries = compiler.enumerate_entries(net, scopes)
    index = {v: i for i, v in enumerate(entries)}

    def e(name: str, value: str) -> int:
        return index[compiler.LpVariable(name, (value,))]

    rows: list[linear.Row] = []
    for x in net.names:
        dom = net.domains[x]
        pos = {v: i for i, v in enumerate(dom)}
        for u in net.assignments(net.parents[x]):
            order = net.cpts[x].rows.get(tuple(sorted(u.items())))
            if not order:
                continue
            covering = sorted(transitive_reduction(order), key=lambda p: (pos[p[0]], pos[p[1]]))
            for x1, x2 in covering:
                rows.append(
                    linear.Row(
                        pos=(e(x, x1),),
                        neg=(e(x, x2),),
                        rhs=1,
                        soft=True,
                        provenance=("cp-soft", x, tuple(sorted(u.items())), x1, x2),
                    )
                )
    for x, x2, gate in net.importance_relations():
        if x2 in net.parents[x]:
            continue
        dom2 = net.domains[x2]
        for u in net.assignments(net.parents[x]):
            order = net.cpts[x].rows.get(tuple(sorted(u.items())))
            if not order:
                continue
            dom = net.domains[x]
            pos = {v: i for i, v in enumerate(dom)}
            covering = sorted(transitive_reduction(order), key=lambda p: (pos[p[0]], pos[p[1]]))
            for x1v, x2v in covering:
                for b1, b2 in itertools.product(dom2, dom2):
                    if b1 == b2:
                        continue
                    coeff: dict[int, int] = {}
                    for idx, sign in ((e(x, x1v), 1), (e(x2, b1), 1), (e(x, x2v), -1), (e(x2, b2), -1)):
                        coeff[idx] = coeff.get(idx, 0) + sign
                    rows.append(
                        linear.Row(
                            pos=tuple(sorted(i for i, c in coeff.items() if c > 0)),
                            neg=tuple(sorted(i for i, c in coeff.items() if c < 0)),
                            rhs=1,
                            soft=True,
                            provenance=("imp-soft", x, x2, tuple(sorted(gate.items())), x1v, x2v, b1, b2),
                        )
                    )
    return compiler.LinearSystem(net=net, scopes=scopes, lp_variables=entries, rows=rows)


def simulate_session(
    net: TcpNet,
    user_v: GaValueFunction,
    items: ItemTable,
    k: int = 10,
    cap: int = session.ROUND_CAP,
    mode: str = GA,
) -> tuple[int | None, session.Session]:
    """Run the loop with a simulated user (argmax of user_v over the displayed
    list, ties by ascending id).  Returns (feedback rounds to convergence or
    None when capped, the finished session)."""
    system = additive_system(net) if mode == ADDITIVE else None
    sess = session.start_session(net, items, k=k, round_cap=cap, system=system)
    by_id = items.by_id()
    while sess.status == session.ACTIVE:
        displayed = sess.displayed
        choice = min(
            displayed,
            key=lambda item_id: (-ranking.evaluate(user_v, by_id[item_id].attributes), item_id),
        )
        session.feedback(sess, choice)
    if sess.status == session.CAPPED:
        return None, sess
    return sess.feedback_rounds(), sess


@dataclass
class ExperimentStats:
    runs: int
    histogram: dict[int, int] = field(default_factory=dict)
    capped_count: int = 0
    relaxed_runs: int = 0

    @property
    def fraction_immediate(self) -> float:
        return self.histogram.get(0, 0) / self.runs if self.runs else 0.0

    @property
    def fraction_within_3(self) -> float:
        converged = sum(c for r, c in self.histogram.items() if r <= 3)
        return converged / self.runs if self.runs else 0.0

    @property
    def median_rounds(self) -> float:
        values: list[float] = []
        for r, c in sorted(self.histogram.items()):
            values.extend([float(r)] * c)
        values.extend([math.inf] * self.capped_count)
        if not values:
            return 0.0
        mid = len(values) // 2
        if len(values) % 2:
            return values[mid]
        return (values[mid - 1] + values[mid]) / 2

    def to_json(self) -> dict:
        return {
            "runs": self.runs,
            "histogram": {str(r): c for r, c in sorted(self.histogram.items())},
            "capped_count": self.capped_count,
            "relaxed_runs": self.relaxed_runs,
            "fraction_immediate": self.fraction_immediate,
            "fraction_within_3": self.fraction_within_3,
            "median_rounds": self.median_rounds if math.isfinite(self.median_rounds) else "inf",
        }

    def text_histogram(self, width: int = 50) -> str:
        lines = [f"runs: {self.runs}  capped: {self.capped_count}"]
        top = max(self.histogram.values(), default=1)
        for r, c in sorted(self.histogram.items()):
            bar = "#" * max(1, round(width * c / top))
            lines.append(f"{r:>4} rounds | {bar} {c}")
        lines.append(
            f"immediate: {self.fraction_immediate:.1%}   within 3: {self.fraction_within_3:.1%}"
        )
        return "\n".join(lines)


@dataclass(frozen=True)
class ExperimentConfig:
    params: GeneratorParams = GeneratorParams()
    mode: str = GA
    items_size: int = 200
    k: int = 10
    runs: int = 100
    cap: int = session.ROUND_CAP
    seed: int = 0

    @staticmethod
    def from_json(doc: Mapping) -> "ExperimentConfig":
        raw = dict(doc)
        p = raw.pop("params", {})
        params = GeneratorParams(
            **{
                key: tuple(value) if isinstance(value, list) else value
                for key, value in p.items()
            }
        )
        return ExperimentConfig(params=params, **raw)


def run_experiment(config: ExperimentConfig, out_dir: str | None = None) -> ExperimentStats:
    config.params.validate()
    rng = random.Random(config.seed)
    stats = ExperimentStats(runs=config.runs)
    for _ in range(config.runs):
        net_seed, user_seed, item_seed = (rng.randrange(1 << 48) for _ in range(3))
        net = gen_random_net(config.params, net_seed)
        user_v = sample_user_value_fn(net, user_seed)
        items = sample_items(net, config.items_size, item_seed)
        rounds, sess = simulate_session(
            net, user_v, items, k=config.k, cap=config.cap, mode=config.mode
        )
        if rounds is None:
            stats.capped_count += 1
        else:
            stats.histogram[rounds] = stats.histogram.get(rounds, 0) + 1
        if sess.relaxations:
            stats.relaxed_runs += 1
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, f"stats_{config.mode}.json"), "w", encoding="utf-8") as fh:
            json.dump(stats.to_json(), fh, indent=1, sort_keys=True)
        with open(os.path.join(out_dir, f"histogram_{config.mode}.txt"), "w", encoding="utf-8") as fh:
            fh.write(stats.text_histogram() + "\n")
    return stats
