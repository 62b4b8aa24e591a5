"""Command-line entry points over the library.

Exit codes: 0 success, 1 usage errors, 2 domain errors (invalid/inconsistent
nets, infeasible systems) with diagnostics on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import compiler, linear, oracle, ranking, simulate
from .model import NetValidationError, check_acyclic, load_net

USAGE_ERROR = 1
DOMAIN_ERROR = 2


def _load_net_or_fail(path: str):
    try:
        net = load_net(path)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        raise SystemExit(USAGE_ERROR)
    except (NetValidationError, json.JSONDecodeError) as exc:
        print(f"invalid net: {exc}", file=sys.stderr)
        raise SystemExit(DOMAIN_ERROR)
    return net


def cmd_validate(args) -> int:
    net = _load_net_or_fail(args.net)
    report = check_acyclic(net)
    payload = {
        "valid": True,
        "acyclic": report.acyclic,
        "variables": len(net.variables),
        "witness": list(report.witness) if report.witness else None,
    }
    print(json.dumps(payload, indent=1))
    if not report.acyclic:
        print(f"semi-directed cycle: {list(report.witness)}", file=sys.stderr)
        return DOMAIN_ERROR
    return 0


def cmd_compile(args) -> int:
    net = _load_net_or_fail(args.net)
    try:
        system = compiler.compile_net(net)
        vf = compiler.solve(system, policy=args.policy, seed=args.seed)
    except compiler.NetNotAcyclic as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DOMAIN_ERROR
    except compiler.Infeasible as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return DOMAIN_ERROR
    ranking.save_value_function(vf, args.output)
    if args.dump_system:
        with open(args.dump_system, "w", encoding="utf-8") as fh:
            json.dump(system.dump(), fh, indent=1)
    report = compiler.size_report(net)
    print(
        f"wrote {args.output}: {report.lp_variable_count} entries, "
        f"{report.constraint_count} constraints"
    )
    return 0


def cmd_rank(args) -> int:
    vf = ranking.load_value_function(args.value_function)
    scope_vars = sorted({v for f in vf.factors for v in f.scope})
    # rebuild enough of a net to validate the item file against
    from .model import parse_net

    domains: dict[str, set[str]] = {v: set() for v in scope_vars}
    for f in vf.factors:
        for values in f.table:
            for var, val in zip(f.scope, values):
                domains[var].add(val)
    net = parse_net(
        {
            "variables": [{"name": v, "domain": sorted(domains[v])} for v in scope_vars],
            "cpts": [],
        }
    )
    try:
        items = ranking.load_items(args.items, net)
    except ranking.ItemError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DOMAIN_ERROR
    for rank, (item_id, score) in enumerate(ranking.top_k(vf, items, args.k), start=1):
        print(f"{rank},{item_id},{score}")
    return 0


def cmd_oracle(args) -> int:
    net = _load_net_or_fail(args.net)
    try:
        graph = oracle.build_dominance_graph(net, cap=args.cap)
    except oracle.InstanceTooLarge as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DOMAIN_ERROR
    if args.consistent:
        ok = graph.is_consistent()
        print("consistent" if ok else "inconsistent")
        return 0 if ok else DOMAIN_ERROR
    if args.pairs:
        pairs = graph.entailed_pairs()
        print(f"outcomes: {len(graph.outcomes)}")
        print(f"direct edges: {graph.edge_count()}")
        print(f"entailed pairs: {len(pairs)}")
        return 0
    print(f"outcomes: {len(graph.outcomes)}; direct edges: {graph.edge_count()}")
    return 0


def cmd_simulate(args) -> int:
    with open(args.config, encoding="utf-8") as fh:
        config = simulate.ExperimentConfig.from_json(json.load(fh))
    stats = simulate.run_experiment(config, out_dir=args.out)
    print(stats.text_histogram())
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import ServiceConfig, create_app

    host, _, port = args.addr.rpartition(":")
    app = create_app(
        ServiceConfig(
            snapshot_dir=args.snapshot_dir,
            items_dir=args.items_dir,
            default_k=args.k,
            static_dir=args.static_dir,
        )
    )
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port))
    return 0


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, domain errors exit 2
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_ERROR)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="prefrank",
        description="Compile qualitative preference networks and rank items interactively",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a net document")
    p.add_argument("net")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("compile", help="compile a net into a value-function file")
    p.add_argument("net")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--policy", choices=[linear.L1, linear.RANDOM_VERTEX], default=linear.L1)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--dump-system", default=None, help="also write the constraint system")
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("rank", help="rank an item file under a value function")
    p.add_argument("value_function")
    p.add_argument("items")
    p.add_argument("-k", type=int, default=10)
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("oracle", help="brute-force semantics checks on small nets")
    p.add_argument("net")
    p.add_argument("--pairs", action="store_true", help="count entailed outcome pairs")
    p.add_argument("--consistent", action="store_true", help="exit 2 when inconsistent")
    p.add_argument("--cap", type=int, default=oracle.ORACLE_CAP)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("simulate", help="run a convergence experiment from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--addr", default="127.0.0.1:8000")
    p.add_argument("--snapshot-dir", default=None)
    p.add_argument("--items-dir", default=None)
    p.add_argument("--static-dir", default=None, help="serve a built web client from here")
    p.add_argument("-k", type=int, default=10)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SystemExit as exc:
        return int(exc.code or 0)


if __name__ == "__main__":
    sys.exit(main())
