"""Feasibility pump and practical infeasibility detection.

The pump does one relax-project-restrict pass: solve the l1-ball relaxation,
project each LFC variable onto the kappa-sparse set, then re-solve the primal
restricted to the projected support.  The relaxation objective is a valid
lower bound, the restricted objective a valid upper bound, and the solution
points seed the cut pool.

Infeasibility of a fixed support is certified by minimizing the plain sum of
the nonlinear constraint values over the same consensus set, which is always
feasible; a positive optimum proves no feasible point exists.
"""

from dataclasses import dataclass

import numpy as np

from .cuts import make_linear_cut
from .problem import ObjectiveOracle, quadratic_objective
from .rhadmm import solve_consensus, solve_primal, solve_relaxed_l1, project_box


def project_sparsity(y, kappa):
    """Keep the kappa largest-magnitude entries, zero the rest; among equal
    magnitudes the earlier index wins."""
    y = np.asarray(y, dtype=float)
    if kappa >= y.size:
        return y.copy()
    order = np.argsort(-np.abs(y), kind="stable")  # stable: ties keep index order
    out = np.zeros_like(y)
    keep = order[:kappa]
    out[keep] = y[keep]
    return out


def binaries_from_support(ystar):
    """Binary indicator of the nonzero pattern."""
    return (np.abs(np.asarray(ystar)) > 0).astype(int)


@dataclass
class SfpResult:
    z0: np.ndarray  # (K, n) initial supports
    ub0: float
    seed_cuts: list
    relax_obj: float
    relaxed: object = None  # PrimalSolution of the l1 relaxation
    restricted: object = None  # PrimalSolution of the support-restricted solve


@dataclass
class InfeasibilityCertificate:
    objective: float
    xbars: np.ndarray  # (N, n) minimizers of the constraint-sum problem
    violated: list  # (node, constraint) pairs with g_h(xbar_i) > 1e-8

    @property
    def infeasible(self) -> bool:
        return self.objective > 1e-8


def run_sfp(inst, h, cfg, pool=None) -> SfpResult:
    """One pass of the specialized feasibility pump."""
    relaxed = solve_relaxed_l1(inst, h, cfg, pool=pool)
    relax_obj = relaxed.objective

    z0 = np.zeros((h.K, inst.n), dtype=int)
    for j in range(h.K):
        z0[j] = binaries_from_support(project_sparsity(relaxed.y[j], inst.kappa))

    seed_cuts = [
        make_linear_cut(i, relaxed.x[i], inst.objectives[i]) for i in range(inst.N)
    ]

    restricted = None
    ub0 = np.inf
    feasible = True
    if inst.m >= 1:
        cert = detect_infeasibility(inst, h, z0, cfg, pool=pool)
        feasible = not cert.infeasible
    if feasible:
        restricted = solve_primal(inst, h, z0, cfg, pool=pool)
        if (
            restricted.primal_residual <= cfg.eps_primal
            and restricted.constraint_violation <= 1e-6
        ):
            ub0 = restricted.objective
            seed_cuts += [
                make_linear_cut(i, restricted.x[i], inst.objectives[i])
                for i in range(inst.N)
            ]
        else:
            restricted = None
    return SfpResult(
        z0=z0,
        ub0=ub0,
        seed_cuts=seed_cuts,
        relax_obj=relax_obj,
        relaxed=relaxed,
        restricted=restricted,
    )


def detect_infeasibility(inst, h, z, cfg, pool=None) -> InfeasibilityCertificate:
    """Minimize sum_i sum_h g_h(x_i) over consensus, the polytope, and the
    fixed-support box (always feasible).  A positive optimum certifies that
    the primal problem has no feasible point for this support."""
    if inst.m < 1:
        raise ValueError("instance has no nonlinear constraints to test")
    z = np.asarray(z)
    M = inst.ensure_big_m()
    constraints = inst.constraints

    if all(g.quad is not None for g in constraints):
        Qs = sum(np.asarray(g.quad[0]) for g in constraints)
        qs = sum(np.asarray(g.quad[1]) for g in constraints)
        ds = sum(float(g.quad[2]) for g in constraints)
        sum_oracle = quadratic_objective(Qs, qs, ds)
    else:

        def value(x):
            return float(sum(g.value(x) for g in constraints))

        def gradient(x):
            out = np.zeros(inst.n)
            for g in constraints:
                out += np.asarray(g.gradient(x), dtype=float)
            return out

        sum_oracle = ObjectiveOracle(value=value, gradient=gradient)
    hi = M * z
    lo = -hi

    def project(j, v):
        return project_box(v, lo[j], hi[j])

    sol = solve_consensus(
        [sum_oracle] * inst.N,
        h,
        inst.n,
        cfg,
        project,
        constraints=(),
        polytope=inst.polytope if inst.polytope.has_rows else None,
        pool=pool,
    )
    violated = [
        (i, hh)
        for i in range(inst.N)
        for hh in range(inst.m)
        if inst.constraints[hh].value(sol.x[i]) > 1e-8
    ]
    return InfeasibilityCertificate(
        objective=sol.objective, xbars=sol.x, violated=violated
    )
