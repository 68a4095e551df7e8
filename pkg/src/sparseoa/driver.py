"""Outer-approximation driver: primal/master loop with bound bookkeeping,
event-triggered second-order cuts, infeasibility handling, and reporting."""

import json
import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .cuts import (
    CutPool,
    KIND_SECOND_ORDER,
    event_trigger,
    make_feasibility_cut,
    make_linear_cut,
    make_socut,
    relative_gap,
)
from .heuristics import detect_infeasibility, run_sfp
from .master import build_master_model, solve_master, write_lp_format
from .network import DisconnectedTopology, WorkerPool, block_topology, check_connected
from .rhadmm import AdmmConfig, solve_primal
from .problem import validate_instance

STATUS_OPTIMAL = "Optimal"
STATUS_ITER_LIMIT = "IterLimit"
STATUS_TIME_LIMIT = "TimeLimit"
STATUS_INFEASIBLE = "Infeasible"


class InvalidInstance(Exception):
    """Instance validation reported findings; fix them or skip validation."""


@dataclass
class SolverConfig:
    """Outer-loop parameters.

    eps_gap is the termination tolerance on the relative gap, in percent.
    et_tol is the event-trigger tolerance on the gap-improvement ratio.
    """

    use_sfp: bool = True
    eps_gap: float = 0.1
    et_tol: float = 0.1
    max_iter: int = 200
    time_limit_s: float = 600.0
    admm: AdmmConfig = field(default_factory=AdmmConfig)
    seed: int = 0
    record_timing: bool = True
    single_z: bool = False
    validate: bool = True
    dump_master_dir: Optional[str] = None
    keep_admm_trace: bool = False

    def __post_init__(self):
        if self.eps_gap <= 0:
            raise ValueError("eps_gap must be positive")
        if self.max_iter < 0:
            raise ValueError("max_iter must be nonnegative")


def _json_num(v):
    if v is None:
        return None
    v = float(v)
    if math.isinf(v) or math.isnan(v):
        return None
    return v


@dataclass
class RunReport:
    status: str
    objective: float
    lower_bound: float
    rel_gap: float
    iters: int
    cut_counts: dict
    time_primal_s: float
    time_master_s: float
    time_total_s: float
    bound_trace: list
    solution: Optional[dict]
    nogood_count: int = 0
    consensus_residual: Optional[float] = None
    cut_pool: object = None  # in-memory only, not serialized
    best_primal: object = None  # in-memory only, not serialized

    def to_dict(self) -> dict:
        trace = []
        for row in self.bound_trace:
            out = dict(row)
            for key in ("ub", "lb", "rel_gap", "event"):
                out[key] = _json_num(out.get(key))
            trace.append(out)
        return {
            "status": self.status,
            "objective": _json_num(self.objective),
            "lower_bound": _json_num(self.lower_bound),
            "rel_gap": _json_num(self.rel_gap),
            "iters": self.iters,
            "cut_counts": dict(self.cut_counts),
            "time_primal_s": self.time_primal_s,
            "time_master_s": self.time_master_s,
            "time_total_s": self.time_total_s,
            "bound_trace": trace,
            "solution": self.solution,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def initialize(inst, h, cfg: SolverConfig, workers=None):
    """Initial supports, bounds, and seeded cut pool.

    With the feasibility pump: supports from the projected relaxation, the
    restricted objective as upper bound, the relaxation objective as lower
    bound, and seed cuts in the pool.  Without it: the first kappa unit
    coordinates, infinite bounds, empty pool.
    """
    pool = CutPool()
    if cfg.use_sfp:
        sfp = run_sfp(inst, h, cfg.admm, pool=workers)
        for cut in sfp.seed_cuts:
            pool.add(cut, iteration=0, source="sfp")
        best = sfp.restricted
        warm = (sfp.restricted or sfp.relaxed).warm_start()
        return sfp.z0, sfp.ub0, sfp.relax_obj, pool, best, warm
    z0 = np.zeros((h.K, inst.n), dtype=int)
    z0[:, : inst.kappa] = 1
    return z0, np.inf, -np.inf, pool, None, None


def _supports_of(z) -> list:
    return [sorted(int(c) for c in np.nonzero(row)[0]) for row in np.asarray(z)]


def solve(inst, h=None, cfg: Optional[SolverConfig] = None, on_iteration=None) -> RunReport:
    """Run the full outer-approximation algorithm on an instance.

    Alternates the fixed-support consensus primal (upper bounds, cut points)
    with the branch-and-bound master (lower bounds, new supports) until the
    relative gap falls below eps_gap.  Supports certified infeasible by the
    constraint-sum problem contribute feasibility cuts instead of objective
    cuts.
    """
    cfg = cfg or SolverConfig()
    if h is None:
        h = block_topology(inst.N, 1)
    if not check_connected(h):
        raise DisconnectedTopology("hypergraph must be connected")
    if h.N != inst.N:
        raise ValueError(f"topology has {h.N} nodes but instance has {inst.N}")
    if cfg.validate:
        report = validate_instance(inst, seed=cfg.seed)
        if report.errors:
            msgs = "; ".join(f.message for f in report.errors)
            raise InvalidInstance(msgs)
    inst.ensure_big_m()

    t0 = time.perf_counter()
    time_primal = 0.0
    time_master = 0.0
    nogoods = []
    visited = set()
    tangent_cache = {}
    trace = []
    status = None
    best = None
    soc_active = False

    workers = WorkerPool(inst.N, scheduler=cfg.admm.scheduler, timeout=cfg.admm.timeout_s)
    try:
        tp = time.perf_counter()
        z, ub, lb, pool, best, warm = initialize(inst, h, cfg, workers=workers)
        time_primal += time.perf_counter() - tp

        r = relative_gap(ub, lb)
        trace.append(
            {
                "iter": 0,
                "ub": ub,
                "lb": lb,
                "rel_gap": r,
                "event": None,
                "cut_kind": "seed" if cfg.use_sfp else "init",
                "soc_active": False,
                "supports": _supports_of(z),
            }
        )

        k = 0
        while r >= cfg.eps_gap:
            if k >= cfg.max_iter:
                status = STATUS_ITER_LIMIT
                break
            if time.perf_counter() - t0 > cfg.time_limit_s:
                status = STATUS_TIME_LIMIT
                break
            k += 1

            # primal phase: upper bound and cut points for the fixed support
            cut_kind = None
            tp = time.perf_counter()
            support_infeasible = False
            if inst.m >= 1:
                cert = detect_infeasibility(inst, h, z, cfg.admm, pool=workers)
                if cert.infeasible:
                    support_infeasible = True
                    for i, hh in cert.violated:
                        pool.add(
                            make_feasibility_cut(hh, cert.xbars[i], inst.constraints[hh]),
                            iteration=k,
                            source="infeasibility",
                        )
                    cut_kind = "feasibility"
            if not support_infeasible:
                sol = solve_primal(
                    inst,
                    h,
                    z,
                    cfg.admm,
                    warm=warm,
                    pool=workers,
                    keep_trace=cfg.keep_admm_trace,
                )
                warm = sol.warm_start()
                accepted = (
                    sol.primal_residual <= cfg.admm.eps_primal
                    and sol.constraint_violation <= 1e-6
                )
                # the bound is evaluated at the consensus point y, which obeys
                # the support box exactly, so it is a value of a true sparse point
                cand = inst.total_value(sol.y[0]) if accepted else np.inf
                if accepted and cand < ub:
                    ub = cand
                    best = sol
                made_soc = False
                for i in range(inst.N):
                    oracle = inst.objectives[i]
                    if soc_active and oracle.strong_convexity > 0.0:
                        cut = make_socut(i, sol.x[i], oracle)
                        made_soc = True
                    else:
                        cut = make_linear_cut(i, sol.x[i], oracle)
                    pool.add(cut, iteration=k, source="primal")
                cut_kind = KIND_SECOND_ORDER if made_soc else "linear"
            time_primal += time.perf_counter() - tp

            # master phase: lower bound and the next support
            tm = time.perf_counter()
            ms = solve_master(
                pool,
                inst,
                h,
                incumbent_ub=ub,
                nogoods=nogoods,
                single_z=cfg.single_z,
                tangent_cache=tangent_cache,
            )
            retries = 0
            while (
                ms.status == "Optimal"
                and ms.z.tobytes() in visited
                and ms.lower_bound <= lb + 1e-9
                and retries < inst.n * h.K
            ):
                # repeated support with a flat bound: exclude it and re-solve
                nogoods.append(ms.z.copy())
                ms = solve_master(
                    pool,
                    inst,
                    h,
                    incumbent_ub=ub,
                    nogoods=nogoods,
                    single_z=cfg.single_z,
                    tangent_cache=tangent_cache,
                )
                retries += 1
            time_master += time.perf_counter() - tm
            if cfg.dump_master_dir:
                model = build_master_model(
                    pool, inst, h, nogoods=nogoods, single_z=cfg.single_z
                )
                write_lp_format(model, f"{cfg.dump_master_dir}/master_{k:04d}.lp")

            if ms.status == STATUS_INFEASIBLE:
                status = STATUS_INFEASIBLE
                break
            visited.add(ms.z.tobytes())
            lb = max(lb, ms.lower_bound)
            z = ms.z

            # once supports were excluded heuristically, the certified global
            # bound is capped by the best value among the visited ones
            lb_eff = min(lb, ub) if nogoods else lb
            if trace:
                lb_eff = max(lb_eff, trace[-1]["lb"])
            lb_eff = min(lb_eff, ub)  # gap is never negative
            r_prev = r
            r = relative_gap(ub, lb_eff)
            if r_prev == 0.0 or math.isinf(r_prev) or math.isnan(r_prev):
                e_val = None
            else:
                e_val = (r_prev - r) / r_prev
            soc_active = event_trigger(r_prev, r, cfg.et_tol)
            trace.append(
                {
                    "iter": k,
                    "ub": ub,
                    "lb": lb_eff,
                    "rel_gap": r,
                    "event": e_val,
                    "cut_kind": cut_kind,
                    "soc_active": soc_active,
                    "supports": _supports_of(z),
                }
            )
            if on_iteration is not None:
                on_iteration(trace[-1])
        else:
            status = STATUS_OPTIMAL
    finally:
        workers.close()

    lb_final = trace[-1]["lb"] if len(trace) > 1 else min(lb, ub) if nogoods else lb
    solution = None
    consensus_residual = None
    if best is not None:
        yglob = best.y[0]
        solution = {
            "x": [float(v) for v in yglob],
            "support": [int(c) for c in np.nonzero(np.abs(yglob) > 0)[0]],
        }
        consensus_residual = best.primal_residual

    total = time.perf_counter() - t0
    if not cfg.record_timing:
        time_primal = time_master = total = 0.0
    return RunReport(
        status=status,
        objective=ub,
        lower_bound=lb_final,
        rel_gap=trace[-1]["rel_gap"],
        iters=k,
        cut_counts=pool.counts(),
        time_primal_s=time_primal,
        time_master_s=time_master,
        time_total_s=total,
        bound_trace=trace,
        solution=solution,
        nogood_count=len(nogoods),
        consensus_residual=consensus_residual,
        cut_pool=pool,
        best_primal=best,
    )
