"""Command-line entry points: solve instance files, generate instances,
run benchmark scenarios.

Exit codes: 0 optimal, 1 usage or I/O error, 2 infeasible, 3 iteration or
time limit reached.
"""

import argparse
import io
import json
import sys

from .apps import benchmark_csv, gen_dslr, gen_sqcqp, run_benchmark
from .driver import (
    STATUS_INFEASIBLE,
    STATUS_OPTIMAL,
    RunReport,
    SolverConfig,
    solve,
)
from .network import block_topology, load_topology
from .problem import load_instance, save_instance
from .rhadmm import AdmmConfig

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INFEASIBLE = 2
EXIT_LIMIT = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        print(f"error: {message}", file=sys.stderr)
        self.print_help(sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _build_parser() -> _Parser:
    parser = _Parser(prog="sparseoa", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("solve", help="solve a JSON instance file")
    ps.add_argument("instance", help="instance JSON path")
    ps.add_argument("--topology", help="topology JSON path")
    ps.add_argument("--N", type=int, help="node count (must match the instance)")
    ps.add_argument("--K", type=int, default=1, help="LFC count for the default block topology (default 1)")
    ps.add_argument("--eps-gap", type=float, default=0.1, help="relative-gap termination tolerance in percent (default 0.1)")
    ps.add_argument("--et-tol", type=float, default=0.1, help="event-trigger tolerance for second-order cuts (default 0.1)")
    ps.add_argument("--no-sfp", action="store_true", help="skip the feasibility-pump initialization")
    ps.add_argument("--max-iter", type=int, default=200, help="outer iteration limit (default 200)")
    ps.add_argument("--time-limit", type=float, default=600.0, help="wall-clock limit in seconds (default 600)")
    ps.add_argument("--seed", type=int, default=0, help="seed for validation probes (default 0)")
    ps.add_argument("--scheduler", choices=["sequential", "threads"], default="sequential", help="worker scheduler (default sequential)")
    ps.add_argument("--single-z", action="store_true", help="share one binary support vector across LFCs")
    ps.add_argument("--dump-master", metavar="DIR", help="write the master model in LP format each iteration")
    ps.add_argument("--trace", metavar="PATH", help="write the accepted primal solve's residual trace CSV")
    ps.add_argument("--no-timing", action="store_true", help="zero timing fields for reproducible reports")
    ps.add_argument("--out", help="report path (default: stdout)")
    ps.add_argument("--format", choices=["json", "csv"], default="json", help="report format (default json)")

    pg = sub.add_parser("gen", help="generate an instance file")
    gsub = pg.add_subparsers(dest="app", required=True)

    gq = gsub.add_parser("sqcqp", help="sparse QCQP generator")
    gq.add_argument("--n", type=int, required=True, help="dimension")
    gq.add_argument("--nodes", type=int, default=2, help="node count (default 2)")
    gq.add_argument("--m", type=int, default=1, help="number of quadratic constraints (default 1)")
    gq.add_argument("--density", type=float, default=1.0, help="Hessian factor density (default 1.0)")
    gq.add_argument("--kappa", type=int, help="cardinality bound (default n//2)")
    gq.add_argument("--seed", type=int, default=0)
    gq.add_argument("--out", help="output path (default: stdout)")

    gd = gsub.add_parser("dslr", help="sparse logistic regression generator")
    gd.add_argument("--n", type=int, required=True, help="feature count")
    gd.add_argument("--nodes", type=int, default=2, help="node count (default 2)")
    gd.add_argument("--p-total", type=int, default=200, help="total sample count (default 200)")
    gd.add_argument("--kappa-true", type=int, required=True, help="planted support size")
    gd.add_argument("--lam", type=float, default=0.1, help="ridge parameter (default 0.1)")
    gd.add_argument("--kappa", type=int, help="cardinality bound (default kappa-true)")
    gd.add_argument("--seed", type=int, default=0)
    gd.add_argument("--out", help="output path (default: stdout)")

    pb = sub.add_parser("bench", help="run a benchmark scenario")
    pb.add_argument("scenario", help="scenario JSON path")
    pb.add_argument("--out", help="CSV output path (default: stdout)")

    return parser


def _report_csv(report: RunReport) -> str:
    buf = io.StringIO()
    data = report.to_dict()
    for key in (
        "status",
        "objective",
        "lower_bound",
        "rel_gap",
        "iters",
        "time_primal_s",
        "time_master_s",
        "time_total_s",
    ):
        buf.write(f"# {key}={data[key]}\n")
    buf.write("iter,ub,lb,rel_gap,event,cut_kind\n")
    for row in data["bound_trace"]:
        buf.write(
            f"{row['iter']},{row['ub']},{row['lb']},{row['rel_gap']},"
            f"{row['event']},{row['cut_kind']}\n"
        )
    return buf.getvalue()


def _emit(text, out):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        print(text, end="" if text.endswith("\n") else "\n")


def _cmd_solve(args) -> int:
    inst = load_instance(args.instance)
    if args.topology:
        h = load_topology(args.topology)
    else:
        n_nodes = args.N if args.N is not None else inst.N
        if n_nodes != inst.N:
            print(
                f"error: --N {n_nodes} does not match the instance ({inst.N} nodes)",
                file=sys.stderr,
            )
            return EXIT_USAGE
        h = block_topology(inst.N, args.K)
    cfg = SolverConfig(
        use_sfp=not args.no_sfp,
        eps_gap=args.eps_gap,
        et_tol=args.et_tol,
        max_iter=args.max_iter,
        time_limit_s=args.time_limit,
        admm=AdmmConfig(scheduler=args.scheduler),
        seed=args.seed,
        record_timing=not args.no_timing,
        single_z=args.single_z,
        dump_master_dir=args.dump_master,
        keep_admm_trace=bool(args.trace),
    )

    last_row = {}
    try:
        report = solve(inst, h, cfg, on_iteration=lambda row: last_row.update(row))
    except KeyboardInterrupt:
        report = RunReport(
            status="TimeLimit",
            objective=last_row.get("ub", float("inf")),
            lower_bound=last_row.get("lb", float("-inf")),
            rel_gap=last_row.get("rel_gap", float("inf")),
            iters=last_row.get("iter", 0),
            cut_counts={},
            time_primal_s=0.0,
            time_master_s=0.0,
            time_total_s=0.0,
            bound_trace=[last_row] if last_row else [],
            solution=None,
        )
        print("interrupted; emitting partial report", file=sys.stderr)

    if args.trace and report.best_primal is not None:
        with open(args.trace, "w") as fh:
            fh.write(report.best_primal.trace_csv())
    text = report.to_json() + "\n" if args.format == "json" else _report_csv(report)
    _emit(text, args.out)

    if report.status == STATUS_OPTIMAL:
        return EXIT_OK
    if report.status == STATUS_INFEASIBLE:
        return EXIT_INFEASIBLE
    return EXIT_LIMIT


def _cmd_gen(args) -> int:
    if args.app == "sqcqp":
        inst = gen_sqcqp(
            N=args.nodes,
            n=args.n,
            m=args.m,
            density=args.density,
            seed=args.seed,
            kappa=args.kappa,
        )
    else:
        inst = gen_dslr(
            N=args.nodes,
            p_total=args.p_total,
            n=args.n,
            kappa_true=args.kappa_true,
            lam=args.lam,
            seed=args.seed,
            kappa=args.kappa,
        )
    if args.out:
        save_instance(inst, args.out)
    else:
        from .problem import instance_to_dict

        print(json.dumps(instance_to_dict(inst), indent=2, sort_keys=True))
    return EXIT_OK


def _cmd_bench(args) -> int:
    rows = run_benchmark(args.scenario, out_path=args.out)
    if not args.out:
        print(benchmark_csv(rows), end="")
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "solve":
            return _cmd_solve(args)
        if args.command == "gen":
            return _cmd_gen(args)
        return _cmd_bench(args)
    except (OSError, json.JSONDecodeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
