"""Instance generators and benchmark scenarios: sparse logistic regression
over distributed data, and sparse quadratically constrained programs."""

import csv
import io
import itertools
import json
import math

import numpy as np

from .driver import SolverConfig, solve
from .network import Hypergraph, block_topology
from .problem import Polytope, ScpInstance
from .rhadmm import AdmmConfig


def gen_dslr(N, p_total, n, kappa_true, lam=0.1, seed=0, kappa=None) -> ScpInstance:
    """Distributed sparse logistic regression instance.

    Draws a Gaussian design matrix, standardizes columns to zero mean and
    unit l2 norm, plants kappa_true nonzero coefficients, and produces
    labels by rounding the logistic response (half rounds up, then mapped
    to {-1, +1}).  Rows are split evenly across the N nodes; each node's
    objective carries its own ridge term, so every node is lam-strongly
    convex.
    """
    if p_total < N:
        raise ValueError("need at least one sample per node")
    if kappa_true > n:
        raise ValueError("kappa_true cannot exceed n")
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((p_total, n))
    X -= X.mean(axis=0, keepdims=True)
    X /= np.linalg.norm(X, axis=0, keepdims=True)

    theta = np.zeros(n)
    support = rng.choice(n, size=kappa_true, replace=False)
    # column scale is ~1/sqrt(p); this keeps the margins O(1)
    magnitude = (2.0 + rng.uniform(0.0, 1.0, size=kappa_true)) * math.sqrt(p_total)
    theta[support] = rng.choice([-1.0, 1.0], size=kappa_true) * magnitude / max(
        kappa_true, 1
    )

    margin = X @ theta
    labels = np.where(margin >= 0.0, 1.0, -1.0)  # round-half-up of the sigmoid

    splits = np.array_split(np.arange(p_total), N)
    objective_specs = []
    for rows in splits:
        objective_specs.append(
            {
                "kind": "logistic",
                "X": X[rows].tolist(),
                "labels": labels[rows].tolist(),
                "lambda": lam,
            }
        )

    # any optimum satisfies lam/2 ||theta||^2 <= loss(0) = p_total log 2
    radius = math.sqrt(2.0 * p_total * math.log(2.0) / lam) + 1.0
    big_m = np.full(n, radius)
    from .problem import instance_from_dict

    return instance_from_dict(
        {
            "n": n,
            "N": N,
            "kappa": int(kappa if kappa is not None else kappa_true),
            "polytope": None,
            "objectives": objective_specs,
            "constraints": [],
            "big_m": big_m.tolist(),
        }
    )


def gen_sqcqp(N, n, m=0, density=1.0, seed=0, kappa=None) -> ScpInstance:
    """Sparse QCQP instance with strongly convex objectives.

    Each node's Hessian is L L' + 0.1 I, so the strong-convexity floor is
    0.1; constraint offsets keep x = 0 strictly feasible, so every support
    admits a feasible point.
    """
    rng = np.random.default_rng(seed)
    objective_specs = []
    q_sum = np.zeros(n)
    for _ in range(N):
        L = rng.standard_normal((n, n)) / math.sqrt(n)
        if density < 1.0:
            L *= rng.random((n, n)) < density
        Q = L @ L.T + 0.1 * np.eye(n)
        q = rng.standard_normal(n)
        d = rng.uniform(0.0, 1.0)
        q_sum += q
        objective_specs.append(
            {"kind": "quadratic", "Q": Q.tolist(), "q": q.tolist(), "d": d}
        )

    constraint_specs = []
    for _ in range(m):
        B = rng.standard_normal((n, n)) / math.sqrt(n)
        P = B @ B.T
        c = 0.1 * rng.standard_normal(n)
        r = -(0.5 + rng.uniform(0.0, 1.0))  # g(0) = r < 0: strictly feasible
        constraint_specs.append(
            {"kind": "quadratic", "Q": P.tolist(), "q": c.tolist(), "d": r}
        )

    # sublevel bound: x = 0 is feasible for every support, so any optimum
    # satisfies (N * 0.1 / 2) ||x||^2 <= ||sum q|| ||x||
    radius = 2.0 * float(np.linalg.norm(q_sum)) / (N * 0.1) + 1.0
    big_m = np.full(n, radius)
    from .problem import instance_from_dict

    return instance_from_dict(
        {
            "n": n,
            "N": N,
            "kappa": int(kappa if kappa is not None else max(1, n // 2)),
            "polytope": None,
            "objectives": objective_specs,
            "constraints": constraint_specs,
            "big_m": big_m.tolist(),
        }
    )


_GENERATORS = {"dslr": gen_dslr, "sqcqp": gen_sqcqp}

_REPORT_COLUMNS = [
    "objective",
    "rel_gap",
    "total_cuts",
    "time_primal_s",
    "time_master_s",
    "time_total_s",
    "status",
]


def solver_config_from_dict(data: dict) -> SolverConfig:
    data = dict(data or {})
    admm = AdmmConfig(**data.pop("admm", {}))
    return SolverConfig(admm=admm, **data)


def run_benchmark(scenario, out_path=None):
    """Run a scenario grid and return one row per cell.

    ``scenario`` is a dict or a path to a JSON file with keys:
    app ("dslr" | "sqcqp"), base (fixed generator parameters), grid
    (parameter name -> list of values, swept as a cartesian product),
    config (solver settings, with an optional "admm" sub-dict), topology
    ({"K": ...} or {"edges": [...]}), seed.  A "kappa_pct" grid entry is
    the percentage alias ceil(pct * n / 100) for kappa.

    Cell failures are recorded in the status column and the run continues.
    """
    if not isinstance(scenario, dict):
        with open(scenario) as fh:
            scenario = json.load(fh)
    app = scenario["app"]
    if app not in _GENERATORS:
        raise ValueError(f"unknown app {app!r}")
    gen = _GENERATORS[app]
    base = dict(scenario.get("base", {}))
    base.setdefault("seed", scenario.get("seed", 0))
    grid = scenario.get("grid", {})
    cfg = solver_config_from_dict(scenario.get("config", {}))

    keys = sorted(grid)
    cells = [dict(zip(keys, combo)) for combo in itertools.product(*(grid[k] for k in keys))]
    if not cells:
        cells = [{}]

    rows = []
    for cell in cells:
        params = dict(base)
        params.update(cell)
        if "kappa_pct" in params:
            pct = params.pop("kappa_pct")
            params["kappa"] = max(1, math.ceil(pct * params["n"] / 100.0))
        row = {k: params.get(k) for k in sorted(params)}
        try:
            inst = gen(**params)
            topo = scenario.get("topology") or {}
            if "edges" in topo:
                h = Hypergraph(inst.N, topo["edges"])
            else:
                h = block_topology(inst.N, int(topo.get("K", 1)))
            report = solve(inst, h, cfg)
            row.update(
                {
                    "objective": report.objective,
                    "rel_gap": report.rel_gap,
                    "total_cuts": sum(report.cut_counts.values()),
                    "time_primal_s": report.time_primal_s,
                    "time_master_s": report.time_master_s,
                    "time_total_s": report.time_total_s,
                    "status": report.status,
                }
            )
        except Exception as exc:  # record and continue with the next cell
            row.update({k: None for k in _REPORT_COLUMNS[:-1]})
            row["status"] = f"error: {exc}"
        rows.append(row)

    if out_path is not None:
        text = benchmark_csv(rows)
        with open(out_path, "w") as fh:
            fh.write(text)
    return rows


def benchmark_csv(rows) -> str:
    if not rows:
        return ""
    fields = [k for k in rows[0] if k not in _REPORT_COLUMNS] + _REPORT_COLUMNS
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=fields)
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()
