"""Problem instances: function oracles, polytopes, validation, big-M bounds.

An instance bundles N per-node convex objectives, m shared convex inequality
constraints, a polytope of linear constraints, and a cardinality bound kappa
on the number of nonzero coordinates of the decision vector.
"""

import json
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import linprog


class UnboundedPolytope(Exception):
    """The polytope admits an unbounded coordinate, so no big-M exists."""


class EmptyPolytope(Exception):
    """The polytope has no feasible point."""


@dataclass(frozen=True)
class Polytope:
    """Linear constraint set {x : D x <= d, A x = b}. Any block may be empty."""

    D: np.ndarray
    d: np.ndarray
    A: np.ndarray
    b: np.ndarray

    @staticmethod
    def empty(n: int) -> "Polytope":
        return Polytope(
            D=np.zeros((0, n)), d=np.zeros(0), A=np.zeros((0, n)), b=np.zeros(0)
        )

    @staticmethod
    def box(lo, hi) -> "Polytope":
        """Box lo <= x <= hi encoded as inequality rows."""
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        n = lo.size
        eye = np.eye(n)
        return Polytope(
            D=np.vstack([eye, -eye]),
            d=np.concatenate([hi, -lo]),
            A=np.zeros((0, n)),
            b=np.zeros(0),
        )

    @property
    def has_rows(self) -> bool:
        return self.D.shape[0] > 0 or self.A.shape[0] > 0

    def violation(self, x, tol=0.0) -> float:
        """Largest constraint violation at x (0 when feasible)."""
        v = 0.0
        if self.D.shape[0]:
            v = max(v, float(np.max(self.D @ x - self.d)))
        if self.A.shape[0]:
            v = max(v, float(np.max(np.abs(self.A @ x - self.b))))
        return max(v - tol, 0.0)


@dataclass(frozen=True)
class ObjectiveOracle:
    """Black-box convex function: value, gradient, and a strong-convexity
    coefficient (0 when unknown; must be positive for second-order cuts).

    ``prox``, when available, solves argmin f(x) + (c/2)||x - v||^2 in
    closed form; ``quad`` exposes (Q, q) for quadratic oracles so derived
    problems can stay on the fast path.  Both are optional accelerators;
    every consumer falls back to value/gradient.
    """

    value: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    strong_convexity: float = 0.0
    prox: Optional[Callable] = None
    quad: Optional[tuple] = None


@dataclass(frozen=True)
class ConstraintOracle:
    """Black-box convex constraint g(x) <= 0: value and gradient."""

    value: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    quad: Optional[tuple] = None


def _quadratic_prox(Q, q):
    """Closed-form prox of 0.5 x'Qx + q'x: solves (Q + cI)x = cv - q with a
    cached factorization per penalty value c."""
    from scipy.linalg import cho_factor, cho_solve

    cache = {}

    def prox(v, c):
        fact = cache.get(c)
        if fact is None:
            fact = cho_factor(Q + c * np.eye(Q.shape[0]))
            cache[c] = fact
        return cho_solve(fact, c * v - q)

    return prox


def quadratic_objective(Q, q, d=0.0) -> ObjectiveOracle:
    """Oracle for f(x) = 0.5 x'Qx + q'x + d with Q symmetric PSD.

    The strong-convexity coefficient is the smallest eigenvalue of Q
    (clipped at zero), computed once at construction.
    """
    Q = np.asarray(Q, dtype=float)
    q = np.asarray(q, dtype=float)
    d = float(d)
    m = float(max(np.min(np.linalg.eigvalsh(0.5 * (Q + Q.T))), 0.0))
    return ObjectiveOracle(
        value=lambda x: float(0.5 * x @ Q @ x + q @ x + d),
        gradient=lambda x: Q @ x + q,
        strong_convexity=m,
        prox=_quadratic_prox(Q, q),
        quad=(Q, q),
    )


def logistic_objective(X, labels, lam) -> ObjectiveOracle:
    """Oracle for ridge-regularized logistic loss.

    f(theta) = sum_l log(1 + exp(-labels_l * x_l'theta)) + lam/2 ||theta||^2
    with labels in {-1, +1}.  The ridge term makes f lam-strongly convex.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(labels, dtype=float)
    lam = float(lam)
    if lam <= 0:
        raise ValueError("ridge parameter must be positive")

    def value(theta):
        t = y * (X @ theta)
        return float(np.sum(np.logaddexp(0.0, -t)) + 0.5 * lam * theta @ theta)

    def gradient(theta):
        t = y * (X @ theta)
        s = 1.0 / (1.0 + np.exp(t))  # sigma(-t)
        return X.T @ (-y * s) + lam * theta

    return ObjectiveOracle(value=value, gradient=gradient, strong_convexity=lam)


def quadratic_constraint(Q, q, d) -> ConstraintOracle:
    """Oracle for g(x) = 0.5 x'Qx + q'x + d <= 0 with Q PSD."""
    Q = np.asarray(Q, dtype=float)
    q = np.asarray(q, dtype=float)
    d = float(d)
    return ConstraintOracle(
        value=lambda x: float(0.5 * x @ Q @ x + q @ x + d),
        gradient=lambda x: Q @ x + q,
        quad=(Q, q, d),
    )


@dataclass
class ScpInstance:
    """Sparse convex program: min sum_i f_i(x) s.t. g_h(x) <= 0, x in polytope,
    ||x||_0 <= kappa.

    ``big_m`` is the per-coordinate bound used to link continuous variables
    to binary indicators; when None it is computed from the polytope on
    demand (which must then be bounded).
    """

    n: int
    N: int
    kappa: int
    objectives: list
    constraints: list = field(default_factory=list)
    polytope: Optional[Polytope] = None
    big_m: Optional[np.ndarray] = None
    # JSON payloads used for round-tripping generated instances; None for
    # instances built from ad-hoc callables.
    objective_specs: Optional[list] = None
    constraint_specs: Optional[list] = None

    def __post_init__(self):
        if self.polytope is None:
            self.polytope = Polytope.empty(self.n)
        if self.big_m is not None:
            self.big_m = np.asarray(self.big_m, dtype=float)

    @property
    def m(self) -> int:
        return len(self.constraints)

    def total_value(self, x) -> float:
        return float(sum(f.value(x) for f in self.objectives))

    def ensure_big_m(self) -> np.ndarray:
        """Return big_m, computing it from the polytope when absent."""
        if self.big_m is None:
            self.big_m = compute_big_m(self.polytope)
        return self.big_m


@dataclass(frozen=True)
class Finding:
    code: str
    message: str
    level: str = "error"


@dataclass
class ValidationReport:
    findings: list

    @property
    def ok(self) -> bool:
        return not self.findings

    @property
    def errors(self) -> list:
        return [f for f in self.findings if f.level == "error"]


def validate_instance(inst: ScpInstance, seed: int = 0) -> ValidationReport:
    """Check an instance for structural defects.

    Reports (never raises): dimension mismatches, a non-strict cardinality
    bound (kappa >= n) or kappa < 1, an empty node list, and gradient oracles
    inconsistent with central finite differences (step 1e-6, tolerance 1e-5)
    at 10 random points.
    """
    findings = []
    n = inst.n

    if inst.N < 1 or len(inst.objectives) == 0:
        findings.append(Finding("empty-nodes", "instance has no objective nodes"))
    if inst.N != len(inst.objectives):
        findings.append(
            Finding(
                "node-count",
                f"N={inst.N} but {len(inst.objectives)} objectives supplied",
            )
        )
    if inst.kappa >= n:
        # solvable (every support fits) but defeats the point of the bound
        findings.append(
            Finding(
                "cardinality",
                f"cardinality bound not strict: kappa={inst.kappa} >= n={n}",
                level="warning",
            )
        )
    if inst.kappa < 1:
        findings.append(Finding("cardinality", f"kappa={inst.kappa} < 1"))

    poly = inst.polytope
    if poly.D.shape[0] and poly.D.shape[1] != n:
        findings.append(Finding("dim", f"polytope D has {poly.D.shape[1]} columns, expected {n}"))
    if poly.A.shape[0] and poly.A.shape[1] != n:
        findings.append(Finding("dim", f"polytope A has {poly.A.shape[1]} columns, expected {n}"))
    if poly.D.shape[0] != poly.d.shape[0]:
        findings.append(Finding("dim", "polytope D/d row mismatch"))
    if poly.A.shape[0] != poly.b.shape[0]:
        findings.append(Finding("dim", "polytope A/b row mismatch"))
    if inst.big_m is not None:
        if inst.big_m.shape != (n,):
            findings.append(Finding("dim", f"big_m has shape {inst.big_m.shape}, expected ({n},)"))
        elif np.any(inst.big_m <= 0):
            findings.append(Finding("big-m", "big_m must be strictly positive"))

    rng = np.random.default_rng(seed)
    probes = rng.standard_normal((10, n))
    oracles = [("objective", i, f) for i, f in enumerate(inst.objectives)]
    oracles += [("constraint", h, g) for h, g in enumerate(inst.constraints)]
    for kind, idx, oracle in oracles:
        bad = _gradient_mismatch(oracle, probes, n)
        if bad is not None:
            findings.append(
                Finding(
                    "gradient",
                    f"{kind} {idx}: gradient disagrees with central differences "
                    f"(rel err {bad:.2e} > 1e-5)",
                )
            )
    return ValidationReport(findings=findings)


def _gradient_mismatch(oracle, probes, n, step=1e-6, tol=1e-5):
    """Worst relative finite-difference error if above tol, else None."""
    worst = 0.0
    for x in probes:
        g = np.asarray(oracle.gradient(x), dtype=float)
        if g.shape != (n,):
            return float("inf")
        fd = np.empty(n)
        for c in range(n):
            e = np.zeros(n)
            e[c] = step
            fd[c] = (oracle.value(x + e) - oracle.value(x - e)) / (2 * step)
        scale = max(1.0, float(np.max(np.abs(g))))
        worst = max(worst, float(np.max(np.abs(fd - g))) / scale)
    return worst if worst > tol else None


def compute_big_m(poly: Polytope, slack: float = 1e-6) -> np.ndarray:
    """Per-coordinate bound M_c = max_{x in polytope} |x_c| + slack.

    Solves 2n linear programs (max x_c and max -x_c).  Raises
    UnboundedPolytope / EmptyPolytope when the polytope is unbounded or
    infeasible.
    """
    n = poly.D.shape[1] if poly.D.shape[0] else poly.A.shape[1]
    if n == 0:
        raise UnboundedPolytope("polytope has no rows; big_m must be supplied")
    A_ub = poly.D if poly.D.shape[0] else None
    b_ub = poly.d if poly.D.shape[0] else None
    A_eq = poly.A if poly.A.shape[0] else None
    b_eq = poly.b if poly.A.shape[0] else None

    M = np.zeros(n)
    for c in range(n):
        for sign in (1.0, -1.0):
            cost = np.zeros(n)
            cost[c] = -sign  # maximize sign * x_c
            res = linprog(
                cost,
                A_ub=A_ub,
                b_ub=b_ub,
                A_eq=A_eq,
                b_eq=b_eq,
                bounds=[(None, None)] * n,
                method="highs",
            )
            if res.status == 3:
                raise UnboundedPolytope(f"coordinate {c} is unbounded")
            if res.status == 2:
                raise EmptyPolytope("polytope is infeasible")
            if res.status != 0:
                raise RuntimeError(f"LP failed with status {res.status}: {res.message}")
            M[c] = max(M[c], abs(float(res.x[c])))
    return M + slack


# ---------------------------------------------------------------------------
# JSON instance files


def _oracle_from_spec(spec: dict, kind: str):
    payload = dict(spec)
    what = payload.pop("kind")
    if kind == "objective":
        if what == "quadratic":
            return quadratic_objective(payload["Q"], payload["q"], payload.get("d", 0.0))
        if what == "logistic":
            return logistic_objective(payload["X"], payload["labels"], payload["lambda"])
        raise ValueError(f"unknown objective kind {what!r}")
    if what == "quadratic":
        return quadratic_constraint(payload["Q"], payload["q"], payload.get("d", 0.0))
    raise ValueError(f"unknown constraint kind {what!r}")


def instance_from_dict(data: dict) -> ScpInstance:
    n = int(data["n"])
    poly_data = data.get("polytope") or {}

    def block(key, shape):
        rows = poly_data.get(key)
        if rows is None or len(rows) == 0:
            return np.zeros(shape)
        return np.asarray(rows, dtype=float)

    poly = Polytope(
        D=block("D", (0, n)),
        d=block("d", (0,)),
        A=block("A", (0, n)),
        b=block("b", (0,)),
    )
    objective_specs = data["objectives"]
    constraint_specs = data.get("constraints", [])
    big_m = data.get("big_m")
    return ScpInstance(
        n=n,
        N=int(data["N"]),
        kappa=int(data["kappa"]),
        objectives=[_oracle_from_spec(s, "objective") for s in objective_specs],
        constraints=[_oracle_from_spec(s, "constraint") for s in constraint_specs],
        polytope=poly,
        big_m=None if big_m is None else np.asarray(big_m, dtype=float),
        objective_specs=objective_specs,
        constraint_specs=constraint_specs,
    )


def instance_to_dict(inst: ScpInstance) -> dict:
    if inst.objective_specs is None:
        raise ValueError("instance has no JSON payloads (built from ad-hoc callables)")
    poly = inst.polytope
    return {
        "n": inst.n,
        "N": inst.N,
        "kappa": inst.kappa,
        "polytope": {
            "D": poly.D.tolist(),
            "d": poly.d.tolist(),
            "A": poly.A.tolist(),
            "b": poly.b.tolist(),
        },
        "objectives": inst.objective_specs,
        "constraints": inst.constraint_specs or [],
        "big_m": None if inst.big_m is None else inst.big_m.tolist(),
    }


def load_instance(path) -> ScpInstance:
    with open(path) as fh:
        return instance_from_dict(json.load(fh))


def save_instance(inst: ScpInstance, path) -> None:
    with open(path, "w") as fh:
        json.dump(instance_to_dict(inst), fh, indent=2, sort_keys=True)
        fh.write("\n")
