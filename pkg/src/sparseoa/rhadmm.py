"""Relaxed, adaptive-penalty consensus ADMM over a hypergraph.

Each node i holds a local copy x_i and solves a smooth subproblem; each
hyperedge j hosts an LFC variable y_j obtained by projecting the relaxed
member average onto the LFC's feasible set (an indicator box for a fixed
support, or an l1 ball for the relaxed feasibility-pump problem).  Penalty
adaptation balances the primal and dual residuals.
"""

import io
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .network import WorkerPool
from .smooth import AugLagState, minimize_auglag, minimize_bfgs

STATUS_CONVERGED = "Converged"
STATUS_ITER_LIMIT = "IterLimit"


class SubproblemFailure(Exception):
    """A local subproblem produced a non-finite iterate."""


@dataclass
class AdmmConfig:
    """Engine parameters.

    relax_alpha is the over-relaxation weight on the x-contribution in the
    y- and dual-updates; mu/tau drive residual-balancing penalty adaptation.
    """

    rho0: float = 1.0
    relax_alpha: float = 1.6
    mu: float = 10.0
    tau: float = 2.0
    eps_primal: float = 1e-6
    eps_dual: float = 1e-6
    max_iter: int = 5000
    grad_tol: float = 1e-8
    scheduler: str = "sequential"
    timeout_s: Optional[float] = None

    def __post_init__(self):
        if not 0.0 < self.relax_alpha < 2.0:
            raise ValueError("relax_alpha must lie in (0, 2)")
        for name in ("rho0", "mu", "tau", "eps_primal", "eps_dual", "grad_tol"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


@dataclass
class WarmStart:
    x: np.ndarray
    y: np.ndarray
    duals: list
    rho: float
    al_states: list


@dataclass
class PrimalSolution:
    """Result of a consensus solve."""

    x: np.ndarray  # (N, n) per-node minimizers
    y: np.ndarray  # (K, n) LFC variables
    duals: list  # per node: (len(membership[i]), n) scaled multipliers
    objective: float
    primal_residual: float
    dual_residual: float
    status: str
    iterations: int
    rho: float
    constraint_violation: float = 0.0
    trace: list = field(default_factory=list)  # (iter, primal_res, dual_res, rho)
    al_states: list = field(default_factory=list)

    @property
    def converged(self) -> bool:
        return self.status == STATUS_CONVERGED

    def warm_start(self) -> WarmStart:
        return WarmStart(
            x=self.x.copy(),
            y=self.y.copy(),
            duals=[u.copy() for u in self.duals],
            rho=self.rho,
            al_states=self.al_states,
        )

    def trace_csv(self) -> str:
        buf = io.StringIO()
        buf.write("iter,primal_res,dual_res,rho\n")
        for it, pr, dr, rho in self.trace:
            buf.write(f"{it},{pr:.16e},{dr:.16e},{rho:.16e}\n")
        return buf.getvalue()


def project_box(v, lo, hi):
    return np.minimum(np.maximum(v, lo), hi)


def project_l1_ball(v, radius):
    """Exact Euclidean projection onto {y : ||y||_1 <= radius} by sorting."""
    v = np.asarray(v, dtype=float)
    if radius <= 0:
        return np.zeros_like(v)
    a = np.abs(v)
    if a.sum() <= radius:
        return v.copy()
    u = np.sort(a)[::-1]
    css = np.cumsum(u)
    ks = np.arange(1, v.size + 1)
    rho = int(np.max(np.nonzero(u * ks > css - radius)[0])) + 1
    theta = (css[rho - 1] - radius) / rho
    return np.sign(v) * np.maximum(a - theta, 0.0)


def adapt_penalty(primal_res, dual_res, rho, cfg: AdmmConfig) -> float:
    """Residual balancing: grow rho when the primal residual dominates,
    shrink it when the dual residual does."""
    if primal_res > cfg.mu * dual_res:
        return rho * cfg.tau
    if dual_res > cfg.mu * primal_res:
        return rho / cfg.tau
    return rho


def _feasible_at(x, constraints, polytope, tol=1e-10):
    for g in constraints:
        if g.value(x) > tol:
            return False
    return polytope is None or polytope.violation(x) <= tol


def local_x_update(
    oracle,
    v_targets,
    rho,
    constraints=(),
    polytope=None,
    x0=None,
    al_state=None,
    grad_tol=1e-8,
    curvature=None,
):
    """argmin f(x) + (rho/2) sum_j ||x - v_j||^2 over the node's feasible set.

    ``v_targets`` holds one (y_j - u_ij) vector per LFC containing the node.
    Returns (x, al_state, info).  Quadratic oracles take a closed-form prox
    step when it lands inside the feasible set (or no set is given).
    """
    V = np.atleast_2d(np.asarray(v_targets, dtype=float))
    k = V.shape[0]
    vbar = V.mean(axis=0)
    if x0 is None:
        x0 = vbar.copy()
    rk = rho * k

    has_poly = polytope is not None and polytope.has_rows
    constrained = bool(constraints) or has_poly

    if oracle.prox is not None:
        lam_zero = al_state is None or al_state.multipliers_zero
        if not constrained or lam_zero:
            x = oracle.prox(vbar, rk)
            if not constrained or _feasible_at(x, constraints, polytope if has_poly else None):
                if not np.all(np.isfinite(x)):
                    raise SubproblemFailure("prox step produced a non-finite iterate")
                return x, al_state, {"grad_norm": 0.0, "violation": 0.0}

    def value(x):
        dx = x - vbar
        return oracle.value(x) + 0.5 * rk * float(dx @ dx)

    def gradient(x):
        return np.asarray(oracle.gradient(x), dtype=float) + rk * (x - vbar)

    if not constrained:
        H0 = curvature.get("H") if curvature is not None else None
        x, gnorm, ok, H = minimize_bfgs(value, gradient, x0, grad_tol=grad_tol, H0=H0)
        if curvature is not None:
            curvature["H"] = H
        info = {"grad_norm": gnorm, "violation": 0.0}
    else:
        x, al_state, info = minimize_auglag(
            value,
            gradient,
            x0,
            constraints=constraints,
            polytope=polytope if has_poly else None,
            state=al_state,
            grad_tol=grad_tol,
        )
    if not np.all(np.isfinite(x)):
        raise SubproblemFailure("local subproblem produced a non-finite iterate")
    return x, al_state, info


def lfc_y_update(xs, duals, box=None, l1_radius=None):
    """Project the member average of (x_i + u_ij) onto the LFC feasible set."""
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    us = np.atleast_2d(np.asarray(duals, dtype=float))
    avg = (xs + us).mean(axis=0)
    if box is not None:
        lo, hi = box
        return project_box(avg, lo, hi)
    if l1_radius is not None:
        return project_l1_ball(avg, l1_radius)
    return avg


def solve_consensus(
    objectives,
    h,
    n,
    cfg: AdmmConfig,
    project_y,
    constraints=(),
    polytope=None,
    warm: Optional[WarmStart] = None,
    pool: Optional[WorkerPool] = None,
    keep_trace: bool = False,
):
    """Generic consensus engine: min sum_i f_i(x_i) subject to per-node
    constraints, consensus x_i = y_j for i in edge j, and y_j in an
    LFC-specific set implemented by ``project_y(j, v)``."""
    N, K = h.N, h.K
    member = h.membership
    edges = h.edges
    alpha = cfg.relax_alpha

    if warm is not None:
        x = warm.x.copy()
        y = warm.y.copy()
        u = [d.copy() for d in warm.duals]
        rho = warm.rho
        al_states = list(warm.al_states) if warm.al_states else [None] * N
    else:
        x = np.zeros((N, n))
        y = np.zeros((K, n))
        u = [np.zeros((len(member[i]), n)) for i in range(N)]
        rho = cfg.rho0
        al_states = [None] * N

    own_pool = pool is None
    if own_pool:
        pool = WorkerPool(N, scheduler=cfg.scheduler, timeout=cfg.timeout_s)

    owners = [min(e) for e in edges]  # LFC j is hosted by its lowest member
    owned = [[j for j in range(K) if owners[j] == i] for i in range(N)]

    trace = []
    status = STATUS_ITER_LIMIT
    primal_res = dual_res = np.inf
    last_info = [{} for _ in range(N)]
    curvatures = [{} for _ in range(N)]
    it = 0

    def x_phase(i, arg):
        y_snap, rho_k, tol_k = arg
        targets = [y_snap[j] - u[i][t] for t, j in enumerate(member[i])]
        xi, al, info = local_x_update(
            objectives[i],
            targets,
            rho_k,
            constraints=constraints,
            polytope=polytope,
            x0=x[i],
            al_state=al_states[i],
            grad_tol=tol_k,
            curvature=curvatures[i],
        )
        x[i] = xi
        al_states[i] = al
        last_info[i] = info
        xhat = {j: alpha * xi + (1.0 - alpha) * y_snap[j] for j in member[i]}
        contrib = {j: xhat[j] + u[i][t] for t, j in enumerate(member[i])}
        return xhat, contrib

    def y_phase(i, arg):
        contribs = arg  # {j: (len(edge), n) stacked contributions}
        return {j: project_y(j, c.mean(axis=0)) for j, c in contribs.items()}

    def dual_phase(i, arg):
        y_new, xhat_i = arg
        res = 0.0
        for t, j in enumerate(member[i]):
            u[i][t] += xhat_i[j] - y_new[j]
            res = max(res, float(np.max(np.abs(x[i] - y_new[j]))))
        return res

    try:
        for it in range(1, cfg.max_iter + 1):
            y_snap = y.copy()
            # inner tolerance anneals with the residuals and reaches the
            # target gradient tolerance exactly at the convergence threshold
            res_scale = max(primal_res, dual_res)
            tol_k = (
                1e-4
                if not np.isfinite(res_scale)
                else min(max(cfg.grad_tol, 0.01 * res_scale), 1e-4)
            )
            node_out = pool.run_phase(x_phase, [(y_snap, rho, tol_k)] * N)
            xhats = [o[0] for o in node_out]
            contribs = [o[1] for o in node_out]

            lfc_args = []
            for i in range(N):
                tasks = {}
                for j in owned[i]:
                    stacked = np.stack([contribs[m][j] for m in edges[j]])
                    tasks[j] = stacked
                lfc_args.append(tasks)
            lfc_out = pool.run_phase(y_phase, lfc_args)
            for d in lfc_out:
                for j, yj in d.items():
                    y[j] = yj

            res_parts = pool.run_phase(dual_phase, [(y, xhats[i]) for i in range(N)])
            primal_res = max(res_parts)
            dual_res = rho * float(np.max(np.abs(y - y_snap)))

            trace.append((it, primal_res, dual_res, rho))
            if primal_res <= cfg.eps_primal and dual_res <= cfg.eps_dual:
                status = STATUS_CONVERGED
                break

            rho_new = adapt_penalty(primal_res, dual_res, rho, cfg)
            if rho_new != rho:
                scale = rho / rho_new
                for i in range(N):
                    u[i] *= scale
                rho = rho_new
    finally:
        if own_pool:
            pool.close()

    objective = float(sum(objectives[i].value(x[i]) for i in range(N)))
    violation = max((info.get("violation", 0.0) for info in last_info), default=0.0)
    return PrimalSolution(
        x=x,
        y=y,
        duals=u,
        objective=objective,
        primal_residual=primal_res,
        dual_residual=dual_res,
        status=status,
        iterations=it,
        rho=rho,
        constraint_violation=violation,
        trace=trace if keep_trace else trace[-1:],
        al_states=al_states,
    )


def solve_primal(inst, h, z, cfg: AdmmConfig, warm=None, pool=None, keep_trace=False):
    """Solve the fixed-support primal problem: supports given by the binary
    matrix z of shape (K, n); coordinates with z_jc = 0 are pinned to zero
    through the LFC box projection."""
    z = np.asarray(z)
    M = inst.ensure_big_m()
    if z.shape != (h.K, inst.n):
        raise ValueError(f"z must have shape ({h.K}, {inst.n})")
    if np.any(z.sum(axis=1) > inst.kappa):
        raise ValueError("a support exceeds the cardinality bound")
    hi = M * z
    lo = -hi

    def project(j, v):
        return project_box(v, lo[j], hi[j])

    return solve_consensus(
        inst.objectives,
        h,
        inst.n,
        cfg,
        project,
        constraints=inst.constraints,
        polytope=inst.polytope if inst.polytope.has_rows else None,
        warm=warm,
        pool=pool,
        keep_trace=keep_trace,
    )


def solve_relaxed_l1(inst, h, cfg: AdmmConfig, warm=None, pool=None, keep_trace=False):
    """Solve the l1-ball relaxation of the sparse program: each LFC variable
    lies in {||y||_1 <= kappa * max_c M_c}.  Its objective lower-bounds the
    sparse optimum."""
    M = inst.ensure_big_m()
    radius = float(inst.kappa) * float(np.max(M))

    def project(j, v):
        return project_l1_ball(v, radius)

    return solve_consensus(
        inst.objectives,
        h,
        inst.n,
        cfg,
        project,
        constraints=inst.constraints,
        polytope=inst.polytope if inst.polytope.has_rows else None,
        warm=warm,
        pool=pool,
        keep_trace=keep_trace,
    )
