import itertools

import pytest

from prefrank import (
    GaValueFunction,
    build_dominance_graph,
    compile_net,
    evaluate,
    factor_scopes,
    gen_cp_conditions,
    gen_ci_conditions,
    gen_i_conditions,
    gen_random_net,
    parse_net,
    size_report,
    solve,
)
from prefrank.compiler import HasCiArcs, Infeasible, LpVariable, NetNotAcyclic
from prefrank.linear import Row, solve_rows, verify_point
from prefrank.oracle import outcome_dict
from prefrank.simulate import GeneratorParams

import naive_enum
from test_model import BINARY, net_doc

# frozen via the literal-quantifier enumerator's first run on the fixture
FLIGHT_CONSTRAINT_COUNT = 54
FLIGHT_CP_COUNT = 34
FLIGHT_IMPORTANCE_COUNT = 20


def chain_net():
    doc = net_doc(
        [("X", BINARY), ("Y", BINARY)],
        cp=[("X", "Y")],
        cpts=[
            {"variable": "X", "rows": [{"given": {}, "order": [["a", "b"]]}]},
            {
                "variable": "Y",
                "rows": [
                    {"given": {"X": "a"}, "order": [["a", "b"]]},
                    {"given": {"X": "b"}, "order": [["b", "a"]]},
                ],
            },
        ],
    )
    return parse_net(doc)


def arc_free_net(n, domain=BINARY):
    return parse_net(
        net_doc(
            [(f"V{i}", domain) for i in range(n)],
            cpts=[
                {"variable": f"V{i}", "rows": [{"given": {}, "order": [["a", "b"]]}]}
                for i in range(n)
            ],
        )
    )


class TestFactorScopes:
    def test_arc_free_scopes_are_singletons(self):
        net = arc_free_net(4)
        assert all(scope == (name,) for name, scope in factor_scopes(net).items())

    def test_flight_scopes_and_entry_count(self, flight_net):
        scopes = factor_scopes(flight_net)
        assert scopes == {
            "D": ("D",),
            "A": ("A",),
            "T": ("D", "T"),
            "S": ("A", "T", "S"),
            "C": ("A", "T", "C"),
        }
        system = compile_net(flight_net)
        assert len(system.lp_variables) == 2 + 2 + 4 + 8 + 8 == 24

    def test_chain_scopes(self):
        system = compile_net(chain_net())
        assert len(system.lp_variables) == 6

    def test_cyclic_net_rejected(self):
        net = parse_net(net_doc([("X", BINARY), ("Y", BINARY)], cp=[("X", "Y"), ("Y", "X")]))
        with pytest.raises(NetNotAcyclic):
            factor_scopes(net)

    def test_entry_count_is_scope_domain_product(self, flight_net):
        for seed in range(10):
            net = gen_random_net(
                GeneratorParams(variable_count=(2, 6), i_arc_count=(0, 2), ci_arc_count=(0, 2)),
                seed,
            )
            system = compile_net(net)
            expected = sum(
                max(1, len(list(itertools.product(*(net.domains[v] for v in scope)))))
                for scope in system.scopes.values()
            )
            assert len(system.lp_variables) == expected


class TestValueConditions:
    def test_single_variable_single_row(self):
        net = arc_free_net(1)
        rows = gen_cp_conditions(net)
        assert len(rows) == 1
        row = rows[0]
        assert len(row.pos) == 1 and len(row.neg) == 1 and row.rhs == 1

    def test_chain_counts(self):
        rows = gen_cp_conditions(chain_net())
        assert len(rows) == 4  # 2 contexts for X's pair + 1 per Y row

    def test_flight_counts_match_enumerator(self, flight_net):
        rows = gen_cp_conditions(flight_net)
        ref = naive_enum.value_conditions(flight_net)
        assert len(rows) == len(ref) == FLIGHT_CP_COUNT


class TestImportanceConditions:
    def test_two_independent_variables(self):
        doc = net_doc(
            [("X", ("x1", "x2")), ("Y", ("a", "b"))],
            i=[("X", "Y")],
            cpts=[{"variable": "X", "rows": [{"given": {}, "order": [["x1", "x2"]]}]}],
        )
        net = parse_net(doc)
        rows = gen_i_conditions(net)
        assert len(rows) == 2  # (a,b) and (b,a); equal pairs excluded
        system = compile_net(net)
        forms = naive_enum.system_to_constraints(system)[-2:]
        expected = (
            frozenset({("X", frozenset({("X", "x1")})), ("Y", frozenset({("Y", "a")}))}),
            frozenset({("X", frozenset({("X", "x2")})), ("Y", frozenset({("Y", "b")}))}),
        )
        assert expected in forms

    def test_equal_subordinate_values_excluded(self):
        doc = net_doc(
            [("X", BINARY), ("Y", BINARY)],
            i=[("X", "Y")],
            cpts=[{"variable": "X", "rows": [{"given": {}, "order": [["a", "b"]]}]}],
        )
        rows = gen_i_conditions(parse_net(doc))
        for row in rows:
            assert set(row.pos) != set(row.neg)
        assert len(rows) == 2

    def test_gen_i_requires_no_ci_arcs(self, flight_net):
        with pytest.raises(HasCiArcs):
            gen_i_conditions(flight_net)

    def test_no_ci_net_gen_ci_equals_gen_i(self):
        doc = net_doc(
            [("X", BINARY), ("Y", BINARY), ("Z", BINARY)],
            cp=[("X", "Y")],
            i=[("X", "Z")],
            cpts=[
                {"variable": "X", "rows": [{"given": {}, "order": [["a", "b"]]}]},
                {"variable": "Z", "rows": [{"given": {}, "order": [["b", "a"]]}]},
            ],
        )
        net = parse_net(doc)
        assert gen_ci_conditions(net) == gen_i_conditions(net)

    def test_empty_cit_contributes_nothing(self):
        doc = net_doc(
            [("X", BINARY), ("Y", BINARY), ("Z", BINARY)],
            ci=[{"pair": ["X", "Y"], "selector": ["Z"], "rows": []}],
            cpts=[{"variable": "X", "rows": [{"given": {}, "order": [["a", "b"]]}]}],
        )
        assert gen_ci_conditions(parse_net(doc)) == []

    def test_flight_ci_row_witness(self, flight_net):
        # the day/KLM CIT row makes a better stop-over beat any class move
        system = compile_net(flight_net)
        forms = naive_enum.system_to_constraints(system)
        win = frozenset(
            {
                ("S", frozenset({("S", "1s"), ("T", "day"), ("A", "klm")})),
                ("C", frozenset({("C", "business"), ("T", "day"), ("A", "klm")})),
            }
        )
        lose = frozenset(
            {
                ("S", frozenset({("S", "0s"), ("T", "day"), ("A", "klm")})),
                ("C", frozenset({("C", "economy"), ("T", "day"), ("A", "klm")})),
            }
        )
        assert (win, lose) in forms

    def test_flight_importance_count(self, flight_net):
        rows = gen_ci_conditions(flight_net)
        ref = naive_enum.importance_conditions(flight_net)
        assert len(rows) == len(ref) == FLIGHT_IMPORTANCE_COUNT


class TestCompile:
    def test_arc_free_totals(self):
        net = arc_free_net(5)
        system = compile_net(net)
        assert len(system.lp_variables) == 10
        assert len(system.rows) == 5
        assert system.status == "unsolved"

    def test_flight_frozen_counts(self, flight_net):
        system = compile_net(flight_net)
        assert len(system.lp_variables) == 24
        assert len(system.rows) == FLIGHT_CONSTRAINT_COUNT

    def test_deterministic_row_order(self, flight_net):
        a = compile_net(flight_net)
        b = compile_net(flight_net)
        assert a.rows == b.rows
        assert a.lp_variables == b.lp_variables

    @pytest.mark.parametrize("seed", range(40))
    def test_counts_match_literal_enumerator(self, seed):
        params = GeneratorParams(
            variable_count=(2, 5), domain_size=(2, 3), cp_edge_probability=0.5,
            i_arc_count=(0, 2), ci_arc_count=(0, 1), cpt_completeness=0.8,
        )
        net = gen_random_net(params, seed)
        system = compile_net(net)
        ref = naive_enum.all_conditions(net)
        assert naive_enum.same_multiset(naive_enum.system_to_constraints(system), ref)

    def test_closure_mode_constraints_implied_by_covering_solution(self, flight_net):
        import random

        system = compile_net(flight_net)
        vf = solve(system)
        entry_value = {
            (v.owner, frozenset(zip(system.scopes[v.owner], v.values))): value
            for v, value in zip(system.lp_variables, system.point)
        }
        closure_rows = naive_enum.all_conditions(flight_net, mode=naive_enum.CLOSURE)
        covering_rows = naive_enum.all_conditions(flight_net, mode=naive_enum.COVERING)
        assert len(closure_rows) >= len(covering_rows)
        rng = random.Random(7)
        for win, lose in rng.sample(closure_rows, min(20, len(closure_rows))):
            margin = sum(entry_value[e] for e in win) - sum(entry_value[e] for e in lose)
            assert margin >= 1


class TestSolve:
    def test_single_variable_margin(self):
        net = arc_free_net(1)
        system = compile_net(net)
        vf = solve(system)
        assert evaluate(vf, {"V0": "a"}) >= evaluate(vf, {"V0": "b"}) + 1

    def test_contradictory_system_infeasible(self):
        net = arc_free_net(1)
        system = compile_net(net)
        e = {v: i for i, v in enumerate(system.lp_variables)}
        a, b = e[LpVariable("V0", ("a",))], e[LpVariable("V0", ("b",))]
        system.rows.append(Row(pos=(b,), neg=(a,), rhs=1, provenance=("test", "reverse")))
        with pytest.raises(Infeasible) as err:
            solve(system)
        assert err.value.certified
        assert len(err.value.conflict) == 2

    @pytest.mark.parametrize("seed", range(15))
    def test_random_acyclic_nets_feasible(self, seed):
        params = GeneratorParams(
            variable_count=(3, 6), i_arc_count=(0, 2), ci_arc_count=(0, 1),
            cp_edge_probability=0.5,
        )
        net = gen_random_net(params, seed)
        system = compile_net(net)
        solve(system)
        assert system.status == "feasible"

    def test_homogeneity_scaling(self, flight_net):
        system = compile_net(flight_net)
        solve(system)
        for c in (2, 3, 10):
            assert not verify_point(system.rows, [c * x for x in system.point])

    def test_solution_satisfies_all_rows_exactly(self, flight_net):
        system = compile_net(flight_net)
        solve(system)
        assert not verify_point(system.rows, system.point)


class TestSizeReport:
    def test_flight(self, flight_net):
        report = size_report(flight_net)
        assert report.domain_bound == 2
        assert report.family_bound == 3
        assert report.lp_variable_count == 24 <= report.variable_limit == 40

    def test_arc_free(self):
        report = size_report(arc_free_net(6))
        assert report.family_bound == 1
        assert report.lp_variable_count == 12 == report.variable_limit

    def test_chain(self):
        report = size_report(chain_net())
        assert report.family_bound == 2
        assert report.lp_variable_count == 6 <= report.variable_limit == 8

    @pytest.mark.parametrize("seed", range(10))
    def test_bounds_hold_on_random_nets(self, seed):
        params = GeneratorParams(variable_count=(2, 6), i_arc_count=(0, 2), ci_arc_count=(0, 2))
        report = size_report(gen_random_net(params, seed))
        assert report.lp_variable_count <= report.variable_limit
        assert report.constraint_count <= report.constraint_limit


@pytest.mark.parametrize("seed", range(12))
def test_compiled_function_respects_oracle(seed):
    params = GeneratorParams(
        variable_count=(2, 4), domain_size=(2, 3), cp_edge_probability=0.5,
        i_arc_count=(0, 1), ci_arc_count=(0, 1), cpt_completeness=0.9,
    )
    net = gen_random_net(params, seed)
    system = compile_net(net)
    vf = solve(system)
    graph = build_dominance_graph(net)
    for a, b in graph.entailed_pairs():
        assert evaluate(vf, outcome_dict(net, a)) > evaluate(vf, outcome_dict(net, b))
