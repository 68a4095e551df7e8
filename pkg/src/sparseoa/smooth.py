"""Smooth local minimization: quasi-second-order descent with backtracking,
plus an augmented-Lagrangian wrapper for constrained subproblems."""

from dataclasses import dataclass, field

import numpy as np


def minimize_bfgs(value, gradient, x0, grad_tol=1e-8, max_iter=300, H0=None):
    """Minimize a smooth convex function with BFGS and Armijo backtracking.

    Returns (x, grad_inf_norm, converged, H).  Convergence means the
    infinity norm of the gradient dropped to grad_tol.  Passing the H from
    a previous related solve warm-starts the curvature model.
    """
    x = np.asarray(x0, dtype=float).copy()
    n = x.size
    H = np.eye(n) if H0 is None else H0
    f = value(x)
    g = np.asarray(gradient(x), dtype=float)
    for _ in range(max_iter):
        gnorm = float(np.max(np.abs(g))) if n else 0.0
        if gnorm <= grad_tol:
            return x, gnorm, True, H
        p = -H @ g
        slope = float(p @ g)
        if not np.isfinite(slope) or slope >= -1e-14 * max(1.0, gnorm):
            H = np.eye(n)  # restart on a non-descent direction
            p = -g
            slope = float(p @ g)
        alpha = 1.0
        f_new = None
        for _ in range(60):
            x_new = x + alpha * p
            f_new = value(x_new)
            if np.isfinite(f_new) and f_new <= f + 1e-4 * alpha * slope:
                break
            # quadratic interpolation on the step size, clipped to [0.1, 0.5]
            denom = 2.0 * (f_new - f - alpha * slope)
            trial = -slope * alpha * alpha / denom if denom > 0 else 0.5 * alpha
            alpha = min(max(trial, 0.1 * alpha), 0.5 * alpha)
        else:
            return x, gnorm, False, H  # line search stalled at numerical floor
        g_new = np.asarray(gradient(x_new), dtype=float)
        s = x_new - x
        yv = g_new - g
        sy = float(s @ yv)
        if sy > 1e-12 * float(np.linalg.norm(s)) * float(np.linalg.norm(yv)):
            rho = 1.0 / sy
            Hy = H @ yv
            H = H - rho * (np.outer(s, Hy) + np.outer(Hy, s)) + rho * (
                rho * float(yv @ Hy) + 1.0
            ) * np.outer(s, s)
        x, f, g = x_new, f_new, g_new
    gnorm = float(np.max(np.abs(g))) if n else 0.0
    return x, gnorm, gnorm <= grad_tol, H


@dataclass
class AugLagState:
    """Multiplier and curvature state carried across warm-started solves."""

    lam_cons: np.ndarray = field(default_factory=lambda: np.zeros(0))
    lam_rows: np.ndarray = field(default_factory=lambda: np.zeros(0))
    lam_eq: np.ndarray = field(default_factory=lambda: np.zeros(0))
    mu: float = 10.0
    H: np.ndarray = None

    @property
    def multipliers_zero(self) -> bool:
        return (
            not self.lam_cons.any()
            and not self.lam_rows.any()
            and not self.lam_eq.any()
        )


def minimize_auglag(
    value,
    gradient,
    x0,
    constraints=(),
    polytope=None,
    state=None,
    grad_tol=1e-8,
    ctol=1e-8,
    max_outer=25,
):
    """Minimize value(x) subject to oracle constraints g(x) <= 0 and an
    optional polytope, via an augmented Lagrangian over minimize_bfgs.

    Returns (x, state, info) where info carries the final gradient norm of
    the augmented objective and the worst constraint violation.
    """
    x = np.asarray(x0, dtype=float).copy()
    n_rows = polytope.D.shape[0] if polytope is not None else 0
    n_eq = polytope.A.shape[0] if polytope is not None else 0
    if state is None:
        state = AugLagState(
            lam_cons=np.zeros(len(constraints)),
            lam_rows=np.zeros(n_rows),
            lam_eq=np.zeros(n_eq),
        )
    D = polytope.D if n_rows else None
    d = polytope.d if n_rows else None
    A = polytope.A if n_eq else None
    b = polytope.b if n_eq else None

    def violation(xx):
        v = 0.0
        for g in constraints:
            v = max(v, float(g.value(xx)))
        if D is not None:
            v = max(v, float(np.max(D @ xx - d)))
        if A is not None:
            v = max(v, float(np.max(np.abs(A @ xx - b))))
        return v

    prev_viol = np.inf
    gnorm = np.inf
    for outer in range(max_outer):
        mu = state.mu
        lam_c, lam_r, lam_e = state.lam_cons, state.lam_rows, state.lam_eq

        def al_value(xx):
            out = value(xx)
            for k, g in enumerate(constraints):
                t = max(0.0, lam_c[k] + mu * float(g.value(xx)))
                out += (t * t - lam_c[k] * lam_c[k]) / (2.0 * mu)
            if D is not None:
                t = np.maximum(0.0, lam_r + mu * (D @ xx - d))
                out += float(np.sum(t * t - lam_r * lam_r)) / (2.0 * mu)
            if A is not None:
                r = A @ xx - b
                out += float(lam_e @ r) + 0.5 * mu * float(r @ r)
            return out

        def al_gradient(xx):
            out = np.asarray(gradient(xx), dtype=float).copy()
            for k, g in enumerate(constraints):
                t = max(0.0, lam_c[k] + mu * float(g.value(xx)))
                if t > 0.0:
                    out += t * np.asarray(g.gradient(xx), dtype=float)
            if D is not None:
                t = np.maximum(0.0, lam_r + mu * (D @ xx - d))
                out += D.T @ t
            if A is not None:
                out += A.T @ (lam_e + mu * (A @ xx - b))
            return out

        inner_tol = max(grad_tol, min(1e-4, 0.1 * prev_viol if np.isfinite(prev_viol) else 1e-4))
        if outer >= max_outer - 2:
            inner_tol = grad_tol
        x, gnorm, _, state.H = minimize_bfgs(
            al_value, al_gradient, x, grad_tol=inner_tol, max_iter=150, H0=state.H
        )

        viol = violation(x)
        if viol <= ctol and inner_tol <= grad_tol:
            break
        # first-order multiplier updates
        state.lam_cons = np.array(
            [max(0.0, lam_c[k] + mu * float(g.value(x))) for k, g in enumerate(constraints)]
        )
        if D is not None:
            state.lam_rows = np.maximum(0.0, lam_r + mu * (D @ x - d))
        if A is not None:
            state.lam_eq = lam_e + mu * (A @ x - b)
        if viol > 0.25 * prev_viol:
            state.mu = min(mu * 10.0, 1e10)
            state.H = None  # curvature changes with the penalty
        prev_viol = viol

    return x, state, {"grad_norm": gnorm, "violation": violation(x)}
