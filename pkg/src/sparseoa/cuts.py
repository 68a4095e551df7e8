"""Cut generation and bookkeeping for the outer-approximation master.

Three kinds of cuts are produced from oracle data at a linearization point:
linear supporting hyperplanes, second-order (quadratic) underestimators for
strongly convex objectives, and feasibility cuts from violated or active
nonlinear constraints.  The pool also owns the relative-gap formula and the
event trigger that switches second-order cut generation on.
"""

import json
import math
from dataclasses import dataclass

import numpy as np

KIND_LINEAR = "linear"
KIND_SECOND_ORDER = "second-order"
KIND_FEASIBILITY = "feasibility"

# feasibility cuts at points with |g| below this are treated as boundary
# cuts and drop the constant term
_ACTIVE_TOL = 1e-8


class NotStronglyConvex(Exception):
    """Second-order cuts need a positive strong-convexity coefficient."""


class GapInconsistency(Exception):
    """Upper bound fell below the lower bound beyond numerical tolerance."""


@dataclass(frozen=True)
class Cut:
    """One cut: for objectives, alpha_i >= value_at(x); for constraints,
    0 >= value_at(x).  ``node`` is the owning node index (or the constraint
    index for feasibility cuts)."""

    kind: str
    node: int
    xbar: np.ndarray
    fval: float
    grad: np.ndarray
    m: float = 0.0

    def value_at(self, x) -> float:
        dx = np.asarray(x, dtype=float) - self.xbar
        val = self.fval + float(self.grad @ dx)
        if self.kind == KIND_SECOND_ORDER:
            val += 0.5 * self.m * float(dx @ dx)
        return val

    def feasibility_constant(self) -> float:
        """Constant used in the master row: dropped for boundary cuts."""
        return 0.0 if abs(self.fval) <= _ACTIVE_TOL else self.fval


def make_linear_cut(node, xbar, oracle) -> Cut:
    """Supporting hyperplane of a convex objective at xbar."""
    xbar = np.asarray(xbar, dtype=float).copy()
    return Cut(
        kind=KIND_LINEAR,
        node=node,
        xbar=xbar,
        fval=float(oracle.value(xbar)),
        grad=np.asarray(oracle.gradient(xbar), dtype=float).copy(),
    )


def make_socut(node, xbar, oracle) -> Cut:
    """Quadratic global underestimator f(xbar) + grad'(x-xbar)
    + (m/2)||x-xbar||^2; the curvature uses the scalar strong-convexity
    coefficient times identity, never the Hessian."""
    m = float(oracle.strong_convexity)
    if m <= 0.0:
        raise NotStronglyConvex(f"node {node}: strong_convexity must be positive")
    xbar = np.asarray(xbar, dtype=float).copy()
    return Cut(
        kind=KIND_SECOND_ORDER,
        node=node,
        xbar=xbar,
        fval=float(oracle.value(xbar)),
        grad=np.asarray(oracle.gradient(xbar), dtype=float).copy(),
        m=m,
    )


def make_feasibility_cut(h, xbar, oracle) -> Cut:
    """Cut from constraint g_h at xbar.  At violated points the full
    linearization 0 >= g(xbar) + grad'(x - xbar) cuts the point off; at
    boundary points (|g| <= 1e-8) the constant is dropped."""
    xbar = np.asarray(xbar, dtype=float).copy()
    return Cut(
        kind=KIND_FEASIBILITY,
        node=h,
        xbar=xbar,
        fval=float(oracle.value(xbar)),
        grad=np.asarray(oracle.gradient(xbar), dtype=float).copy(),
    )


def relative_gap(ub, lb) -> float:
    """r = (ub - lb) / max(ub, 0.001) * 100, with infinite bounds giving
    an infinite gap."""
    if ub < lb - 1e-9:
        raise GapInconsistency(f"ub={ub} < lb={lb} beyond tolerance")
    if math.isinf(ub) or math.isinf(lb):
        return float("inf")
    return (ub - lb) / max(ub, 0.001) * 100.0


def event_trigger(r_prev, r_cur, tol=0.1) -> bool:
    """True when the relative-gap improvement ratio (r_prev - r_cur)/r_prev
    drops to tol, i.e. the gap is flattening out."""
    if r_prev == 0.0:
        return True
    if math.isinf(r_prev):
        return bool(math.isinf(r_cur))  # no finite progress measurable yet
    e = (r_prev - r_cur) / r_prev
    return e <= tol


class CutPool:
    """Append-only cut store with per-iteration provenance and
    deduplication at tolerance 1e-10 on the linearization point."""

    def __init__(self):
        self._cuts = []
        self._meta = []  # (iteration, source) aligned with _cuts

    def __len__(self):
        return len(self._cuts)

    def __iter__(self):
        return iter(self._cuts)

    @property
    def cuts(self):
        return list(self._cuts)

    def add(self, cut: Cut, iteration=0, source="primal") -> bool:
        """Insert unless an equal (kind, node, xbar) cut exists."""
        for old in self._cuts:
            if (
                old.kind == cut.kind
                and old.node == cut.node
                and old.xbar.shape == cut.xbar.shape
                and float(np.max(np.abs(old.xbar - cut.xbar), initial=0.0)) <= 1e-10
            ):
                return False
        self._cuts.append(cut)
        self._meta.append((iteration, source))
        return True

    def counts(self) -> dict:
        out = {KIND_LINEAR: 0, KIND_SECOND_ORDER: 0, KIND_FEASIBILITY: 0}
        for c in self._cuts:
            out[c.kind] += 1
        return out

    def entries(self):
        """(cut, iteration, source) triples in insertion order."""
        return [(c, m[0], m[1]) for c, m in zip(self._cuts, self._meta)]

    def objective_cuts(self, node=None):
        sel = [c for c in self._cuts if c.kind != KIND_FEASIBILITY]
        if node is not None:
            sel = [c for c in sel if c.node == node]
        return sel

    def feasibility_cuts(self):
        return [c for c in self._cuts if c.kind == KIND_FEASIBILITY]

    def to_json(self) -> str:
        rows = []
        for c, (it, source) in zip(self._cuts, self._meta):
            rows.append(
                {
                    "kind": c.kind,
                    "node": c.node,
                    "xbar": c.xbar.tolist(),
                    "fval": c.fval,
                    "grad": c.grad.tolist(),
                    "m": c.m,
                    "iteration": it,
                    "source": source,
                }
            )
        return json.dumps(rows, indent=2, sort_keys=True)
