"""Master problem: branch-and-bound over binary support indicators.

The continuous part collapses onto a single vector w because the consensus
rows x_i = y_j chain every copy together on a connected hypergraph.  Node
relaxations are linear programs in (alpha, w, z); second-order cut rows
enter through an outer linearization whose tangent rows are shared across
the whole tree (every tangent is a globally valid row).  Fixed-support
leaves are polished by a smooth solve, and the incumbent value is always
the achievable lifted value sum_i max_k cut_ik(w).
"""

import heapq
import itertools
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog, minimize

from .cuts import KIND_FEASIBILITY, KIND_SECOND_ORDER

STATUS_OPTIMAL = "Optimal"
STATUS_INFEASIBLE = "Infeasible"

MODE_MILP = "milp"
MODE_MIQCP = "miqcp"

_LP_OPTIONS = {
    "primal_feasibility_tolerance": 1e-10,
    "dual_feasibility_tolerance": 1e-10,
}


class NumericalFailure(Exception):
    """The LP backend failed on a node relaxation."""


def _solve_lp(c, A_ub, b_ub, A_eq, b_eq, bounds):
    """linprog with a tolerance-relaxation retry ladder for degenerate LPs."""
    for options in (_LP_OPTIONS, {}, {"presolve": False}):
        res = linprog(
            c,
            A_ub=A_ub,
            b_ub=b_ub,
            A_eq=A_eq,
            b_eq=b_eq,
            bounds=bounds,
            method="highs",
            options=options,
        )
        if res.status in (0, 2, 3):
            return res
    raise NumericalFailure(f"LP failed: status {res.status} ({res.message})")


@dataclass
class MasterSolution:
    z: np.ndarray  # (K, n) binary supports
    lower_bound: float
    xstar: np.ndarray  # (N, n), all rows equal by consensus
    ystar: np.ndarray  # (K, n)
    alpha: np.ndarray  # (N,)
    status: str
    w: np.ndarray = None
    nodes_explored: int = 0


@dataclass
class MasterModel:
    """Assembled master data: variable layout [alpha (N), w (n), z (K*n)]."""

    N: int
    n: int
    K: int
    kappa: int
    M: np.ndarray
    c: np.ndarray
    A_ub: np.ndarray
    b_ub: np.ndarray
    A_eq: np.ndarray
    b_eq: np.ndarray
    socuts: list  # second-order cuts, quadratic rows
    node_cuts: list  # per node: every objective cut, for value lifting
    single_z: bool

    @property
    def dim(self):
        return self.N + self.n + self.K * self.n

    def lift_value(self, w):
        """Achievable objective sum_i max_k cut_ik(w): the alpha vector that
        makes (alpha, w) satisfy every objective cut exactly."""
        return np.array(
            [max(c.value_at(w) for c in cuts) for cuts in self.node_cuts]
        )


@dataclass
class BnbNode:
    zlo: np.ndarray
    zhi: np.ndarray
    value: float = np.inf
    alpha: np.ndarray = None
    w: np.ndarray = None
    depth: int = 0


def build_master_model(pool, inst, h, mode=None, nogoods=(), single_z=False) -> MasterModel:
    """Assemble the shared rows: objective cuts, feasibility cuts, polytope,
    big-M links, cardinality, and no-good exclusions."""
    N, n = inst.N, inst.n
    K = 1 if single_z else h.K
    M = np.asarray(inst.ensure_big_m(), dtype=float)
    dim = N + n + K * n
    if mode is None:
        mode = (
            MODE_MIQCP
            if any(c.kind == KIND_SECOND_ORDER for c in pool.objective_cuts())
            else MODE_MILP
        )

    rows, rhs = [], []
    socuts = []
    node_cuts = [[] for _ in range(N)]
    for cut in pool:
        if cut.kind == KIND_FEASIBILITY:
            row = np.zeros(dim)
            row[N : N + n] = cut.grad
            rows.append(row)
            rhs.append(float(cut.grad @ cut.xbar) - cut.feasibility_constant())
            continue
        node_cuts[cut.node].append(cut)
        if cut.kind == KIND_SECOND_ORDER and mode == MODE_MIQCP:
            socuts.append(cut)  # handled by tangent rows
            continue
        # linear cut (second-order cuts degrade to their linear part in MILP mode)
        row = np.zeros(dim)
        row[cut.node] = -1.0
        row[N : N + n] = cut.grad
        rows.append(row)
        rhs.append(float(cut.grad @ cut.xbar) - cut.fval)
    if not all(node_cuts):
        missing = [i for i, cuts in enumerate(node_cuts) if not cuts]
        raise ValueError(f"pool lacks an objective cut for nodes {missing}")

    poly = inst.polytope
    for r in range(poly.D.shape[0]):
        row = np.zeros(dim)
        row[N : N + n] = poly.D[r]
        rows.append(row)
        rhs.append(float(poly.d[r]))

    for j in range(K):
        for c in range(n):
            zc = N + n + j * n + c
            row = np.zeros(dim)
            row[N + c] = 1.0
            row[zc] = -M[c]
            rows.append(row)
            rhs.append(0.0)
            row = np.zeros(dim)
            row[N + c] = -1.0
            row[zc] = -M[c]
            rows.append(row)
            rhs.append(0.0)
        row = np.zeros(dim)
        row[N + n + j * n : N + n + (j + 1) * n] = 1.0
        rows.append(row)
        rhs.append(float(inst.kappa))

    for profile in nogoods:
        prof = np.asarray(profile)
        if single_z:
            prof = prof[:1]
        prof = prof.reshape(K, n)
        row = np.zeros(dim)
        for j in range(K):
            for c in range(n):
                zc = N + n + j * n + c
                row[zc] = 1.0 if prof[j, c] else -1.0
        rows.append(row)
        rhs.append(float(prof.sum()) - 1.0)

    eq_rows, eq_rhs = [], []
    for r in range(poly.A.shape[0]):
        row = np.zeros(dim)
        row[N : N + n] = poly.A[r]
        eq_rows.append(row)
        eq_rhs.append(float(poly.b[r]))

    c_obj = np.zeros(dim)
    c_obj[:N] = 1.0
    return MasterModel(
        N=N,
        n=n,
        K=K,
        kappa=inst.kappa,
        M=M,
        c=c_obj,
        A_ub=np.array(rows) if rows else np.zeros((0, dim)),
        b_ub=np.array(rhs),
        A_eq=np.array(eq_rows) if eq_rows else np.zeros((0, dim)),
        b_eq=np.array(eq_rhs),
        socuts=socuts,
        node_cuts=node_cuts,
        single_z=single_z,
    )


def _socut_tangent_row(model, cut, wtilde):
    """Valid row alpha_i >= q(wtilde) + q'(wtilde) . (w - wtilde)."""
    N, n = model.N, model.n
    dx = wtilde - cut.xbar
    qval = cut.fval + float(cut.grad @ dx) + 0.5 * cut.m * float(dx @ dx)
    slope = cut.grad + cut.m * dx
    row = np.zeros(model.dim)
    row[cut.node] = -1.0
    row[N : N + n] = slope
    return row, float(slope @ wtilde) - qval


def _cut_key(cut):
    return (cut.node, cut.xbar.tobytes(), cut.m)


class _Tangents:
    """Tangent rows of second-order cuts, shared by every node relaxation
    and optionally seeded from points remembered across master solves."""

    def __init__(self, model, cache=None):
        self.model = model
        self.rows = []
        self.rhs = []
        self.points = []  # (socut index, point) pairs in insertion order
        self._seen = set()
        for s, cut in enumerate(model.socuts):
            self.add(s, cut.xbar)
            if cache:
                for w in cache.get(_cut_key(cut), []):
                    self.add(s, w)

    def add(self, s, wtilde):
        key = (s, np.round(wtilde, 12).tobytes())
        if key in self._seen:
            return False
        row, b = _socut_tangent_row(self.model, self.model.socuts[s], wtilde)
        self.rows.append(row)
        self.rhs.append(b)
        self.points.append((s, np.asarray(wtilde, dtype=float).copy()))
        self._seen.add(key)
        return True

    def add_at(self, w):
        added = False
        for s in range(len(self.model.socuts)):
            added |= self.add(s, w)
        return added

    def export(self, cache, keep=25):
        """Remember the latest refinement points per socut for the next
        master solve."""
        per = {}
        for s, w in self.points:
            per.setdefault(s, []).append(w)
        for s, pts in per.items():
            key = _cut_key(self.model.socuts[s])
            cache[key] = pts[-keep:]


def solve_node_relaxation(
    model: MasterModel, zlo, zhi, tangents=None, max_rounds=40, rel_tol=1e-9
):
    """Continuous relaxation with z in [zlo, zhi]: an LP refined by tangent
    rows for the second-order cuts.

    Returns (status, bound, alpha, w, z_lp).  The bound is valid after any
    number of refinement rounds because the tangent rows are relaxations of
    the quadratic rows.
    """
    N, n = model.N, model.n
    if tangents is None:
        tangents = _Tangents(model)
    bounds = [(None, None)] * (N + n) + [
        (float(lo), float(hi)) for lo, hi in zip(np.ravel(zlo), np.ravel(zhi))
    ]
    result = None
    for _ in range(max_rounds):
        if tangents.rows:
            A_ub = np.vstack([model.A_ub, np.array(tangents.rows)])
            b_ub = np.concatenate([model.b_ub, np.array(tangents.rhs)])
        else:
            A_ub, b_ub = model.A_ub, model.b_ub
        res = _solve_lp(
            model.c,
            A_ub,
            b_ub,
            model.A_eq if model.A_eq.shape[0] else None,
            model.b_eq if model.A_eq.shape[0] else None,
            bounds,
        )
        if res.status == 2:
            return STATUS_INFEASIBLE, np.inf, None, None, None
        if res.status != 0:
            raise NumericalFailure(f"node LP failed: status {res.status} ({res.message})")
        alpha = res.x[:N]
        w = res.x[N : N + n]
        zlp = res.x[N + n :].reshape(model.K, n)
        result = (STATUS_OPTIMAL, float(res.fun), alpha, w, zlp)
        if not model.socuts:
            return result
        worst = max(cut.value_at(w) - alpha[cut.node] for cut in model.socuts)
        if worst <= rel_tol * max(1.0, abs(res.fun)):
            return result
        if not tangents.add_at(w):
            return result  # at the LP tolerance floor: bound is as tight as it gets
    return result


def _leaf_value(model: MasterModel, zfix, tangents, gap_tol):
    """Solve the fixed-support problem: returns (status, value, bound,
    alpha, w) where value = sum_i max_k cut_ik(w) is achievable and bound
    is a valid lower bound on the leaf optimum."""
    out = solve_node_relaxation(model, zfix, zfix, tangents, max_rounds=8)
    status, bound, _, w, _ = out
    if status == STATUS_INFEASIBLE:
        return status, np.inf, np.inf, None, None
    alpha_lift = model.lift_value(w)
    value = float(alpha_lift.sum())
    if not model.socuts or value - bound <= max(gap_tol, 1e-9 * max(1.0, abs(value))):
        return STATUS_OPTIMAL, value, bound, alpha_lift, w

    # polish with a smooth solve over (alpha, w); z enters only through the
    # w box, which the fixed support determines exactly
    w_polished = _polish_leaf(model, zfix, w)
    if w_polished is not None:
        alpha_p = model.lift_value(w_polished)
        value_p = float(alpha_p.sum())
        if value_p < value:
            value, alpha_lift, w = value_p, alpha_p, w_polished
        tangents.add_at(w_polished)
        out = solve_node_relaxation(model, zfix, zfix, tangents, max_rounds=3)
        if out[0] == STATUS_OPTIMAL:
            bound = max(bound, out[1])
    return STATUS_OPTIMAL, value, min(bound, value), alpha_lift, w


def _polish_leaf(model: MasterModel, zfix, w0):
    """SLSQP on min sum alpha s.t. objective cuts, w-space rows, and the
    support box; returns the optimized w or None on failure."""
    N, n = model.N, model.n
    zmax = np.max(np.asarray(zfix).reshape(model.K, n), axis=0)
    zmin = np.min(np.asarray(zfix).reshape(model.K, n), axis=0)
    hi = model.M * zmin  # a coordinate is free only if every LFC opens it
    lo = -hi

    def fun(v):
        return float(np.sum(v[:N]))

    def jac(v):
        g = np.zeros(N + n)
        g[:N] = 1.0
        return g

    cons = []
    for i, cuts in enumerate(model.node_cuts):
        for cut in cuts:
            def c_fun(v, i=i, cut=cut):
                return v[i] - cut.value_at(v[N:])

            def c_jac(v, i=i, cut=cut):
                g = np.zeros(N + n)
                g[i] = 1.0
                dx = v[N:] - cut.xbar
                slope = cut.grad + (cut.m * dx if cut.kind == KIND_SECOND_ORDER else 0.0)
                g[N:] = -slope
                return g

            cons.append({"type": "ineq", "fun": c_fun, "jac": c_jac})
    # rows acting on w alone: feasibility cuts and the polytope, which sit in
    # A_ub with zero alpha/z coefficients
    wcols = slice(N, N + n)
    for r in range(model.A_ub.shape[0]):
        row = model.A_ub[r]
        if np.any(row[: N]) or np.any(row[N + n :]):
            continue
        a = row[wcols].copy()
        b = float(model.b_ub[r])
        cons.append(
            {
                "type": "ineq",
                "fun": lambda v, a=a, b=b: b - float(a @ v[N:]),
                "jac": lambda v, a=a: np.concatenate([np.zeros(N), -a]),
            }
        )
    for r in range(model.A_eq.shape[0]):
        a = model.A_eq[r, wcols].copy()
        b = float(model.b_eq[r])
        cons.append(
            {
                "type": "eq",
                "fun": lambda v, a=a, b=b: float(a @ v[N:]) - b,
                "jac": lambda v, a=a: np.concatenate([np.zeros(N), a]),
            }
        )
    v0 = np.concatenate([model.lift_value(w0) + 1e-6, w0])
    var_bounds = [(None, None)] * N + [(float(l), float(u)) for l, u in zip(lo, hi)]
    res = minimize(
        fun,
        v0,
        jac=jac,
        bounds=var_bounds,
        constraints=cons,
        method="SLSQP",
        options={"ftol": 1e-12, "maxiter": 200},
    )
    if not np.all(np.isfinite(res.x)):
        return None
    w = np.clip(res.x[N:], lo, hi)
    return w


def _support_counts(model, node: BnbNode, wtol):
    """Per-LFC count of coordinates an integral completion must open."""
    counts = np.zeros(model.K, dtype=int)
    for j in range(model.K):
        for c in range(model.n):
            if node.zlo[j, c] >= 1.0:
                counts[j] += 1
            elif node.zhi[j, c] > 0.0 and abs(node.w[c]) > wtol[c]:
                counts[j] += 1
    return counts


def _completion(model, node: BnbNode, wtol):
    z = np.zeros((model.K, model.n))
    for j in range(model.K):
        for c in range(model.n):
            if node.zlo[j, c] >= 1.0 or (
                node.zhi[j, c] > 0.0 and abs(node.w[c]) > wtol[c]
            ):
                z[j, c] = 1.0
    return z


def branch(model: MasterModel, node: BnbNode):
    """Children fixing the most-fractional indicator (computed from the
    minimal feasible z given w); ties break on the lowest (j, c)."""
    zt = np.maximum(node.zlo, np.abs(node.w)[None, :] / model.M[None, :])
    zt = np.minimum(zt, node.zhi)
    best, best_score = None, -1.0
    for j in range(model.K):
        for c in range(model.n):
            if node.zhi[j, c] - node.zlo[j, c] < 0.5:
                continue  # already fixed
            score = min(zt[j, c], 1.0 - zt[j, c])
            if score > best_score + 1e-12:
                best, best_score = (j, c), score
    if best is None:
        return None
    j, c = best
    child0 = BnbNode(zlo=node.zlo.copy(), zhi=node.zhi.copy(), depth=node.depth + 1)
    child0.zhi[j, c] = 0.0
    child1 = BnbNode(zlo=node.zlo.copy(), zhi=node.zhi.copy(), depth=node.depth + 1)
    child1.zlo[j, c] = 1.0
    return child0, child1


def solve_master(
    pool,
    inst,
    h,
    mode=None,
    incumbent_ub=np.inf,
    nogoods=(),
    gap_tol=1e-9,
    single_z=False,
    tangent_cache=None,
) -> MasterSolution:
    """Globally solve the relaxed master problem by best-first
    branch-and-bound on the binary indicators.

    The returned lower_bound is a certified bound on the master optimum
    (and hence on the sparse program).  Status is Infeasible only when
    every branch was pruned infeasible.  ``tangent_cache`` carries tangent
    points of the second-order rows across repeated solves.
    """
    model = build_master_model(pool, inst, h, mode=mode, nogoods=nogoods, single_z=single_z)
    wtol = 1e-8 * np.maximum(1.0, model.M)
    tangents = _Tangents(model, cache=tangent_cache)

    root = BnbNode(
        zlo=np.zeros((model.K, model.n)), zhi=np.ones((model.K, model.n))
    )
    status, val, alpha, w, _ = solve_node_relaxation(
        model, root.zlo, root.zhi, tangents, max_rounds=10, rel_tol=1e-7
    )
    if status == STATUS_INFEASIBLE:
        return MasterSolution(
            z=None,
            lower_bound=np.inf,
            xstar=None,
            ystar=None,
            alpha=None,
            status=STATUS_INFEASIBLE,
        )
    root.value, root.alpha, root.w = val, alpha, w

    counter = itertools.count()
    heap = [(root.value, next(counter), root)]
    best_val, best_pt = np.inf, None
    # pruning against the caller's upper bound leaves a margin covering the
    # primal engine's objective inexactness, so a valid support is never lost
    ub_cut = (
        incumbent_ub + 1e-3 * max(1.0, abs(incumbent_ub))
        if np.isfinite(incumbent_ub)
        else np.inf
    )
    ub_pruned = False
    explored = 0
    open_bound = None  # bound of the unexplored mass at the stopping point
    soft_bound = np.inf  # worst shortfall among inexactly solved leaves
    seen_leaves = set()

    while heap:
        val, _, node = heapq.heappop(heap)
        if val >= best_val - gap_tol or val > ub_cut:
            open_bound = val
            ub_pruned = ub_pruned or val > ub_cut
            break  # best-first: every open node is at least this bound
        explored += 1

        counts = _support_counts(model, node, wtol)
        took_leaf = False
        if np.all(counts <= model.kappa):
            zfix = _completion(model, node, wtol)
            key = zfix.tobytes()
            if key not in seen_leaves:
                seen_leaves.add(key)
                stat_c, val_c, bound_c, alpha_c, w_c = _leaf_value(
                    model, zfix, tangents, gap_tol
                )
                if stat_c == STATUS_OPTIMAL:
                    if val_c < best_val - 1e-12:
                        best_val, best_pt = val_c, (zfix, alpha_c, w_c)
                    if val_c - bound_c > gap_tol:
                        soft_bound = min(soft_bound, bound_c)
                    if val_c <= node.value + gap_tol:
                        took_leaf = True  # completion matches the bound: node solved
        if took_leaf:
            continue
        children = branch(model, node)
        if children is None:
            continue  # fully fixed node already handled by the completion path
        for child in children:
            stat, cval, calpha, cw, _ = solve_node_relaxation(
                model, child.zlo, child.zhi, tangents, max_rounds=3, rel_tol=1e-6
            )
            if stat == STATUS_INFEASIBLE:
                continue
            child.value, child.alpha, child.w = cval, calpha, cw
            heapq.heappush(heap, (cval, next(counter), child))

    if tangent_cache is not None:
        tangents.export(tangent_cache)
    if best_pt is None:
        if ub_pruned:
            # numerically impossible in exact arithmetic; retry unpruned
            return solve_master(
                pool,
                inst,
                h,
                mode=mode,
                incumbent_ub=np.inf,
                nogoods=nogoods,
                gap_tol=gap_tol,
                single_z=single_z,
                tangent_cache=tangent_cache,
            )
        return MasterSolution(
            z=None,
            lower_bound=np.inf,
            xstar=None,
            ystar=None,
            alpha=None,
            status=STATUS_INFEASIBLE,
            nodes_explored=explored,
        )

    lower = best_val if open_bound is None else min(best_val, open_bound)
    lower = min(lower, soft_bound)
    zsol, alpha_sol, w_sol = best_pt
    if model.single_z:
        zsol = np.tile(zsol[0], (h.K, 1))
    return MasterSolution(
        z=zsol.astype(int),
        lower_bound=float(lower),
        xstar=np.tile(w_sol, (inst.N, 1)),
        ystar=np.tile(w_sol, (h.K, 1)),
        alpha=alpha_sol,
        status=STATUS_OPTIMAL,
        w=w_sol,
        nodes_explored=explored,
    )


# ---------------------------------------------------------------------------
# Support-enumeration oracle (independent of the branch-and-bound path):
# solves the convex restriction for every support directly.


def solve_restriction(inst, support):
    """Exact convex solve with x supported on the given coordinate set,
    subject to the constraints, polytope, and big-M box.

    Returns (value, x_full); value is +inf when the restriction is
    infeasible.
    """
    n = inst.n
    support = sorted(support)
    s = len(support)
    M = inst.ensure_big_m()
    idx = np.asarray(support, dtype=int)

    def embed(t):
        x = np.zeros(n)
        x[idx] = t
        return x

    if s == 0:
        x0_full = np.zeros(n)
        viol = max((g.value(x0_full) for g in inst.constraints), default=0.0)
        viol = max(viol, inst.polytope.violation(x0_full))
        return (inst.total_value(x0_full), x0_full) if viol <= 1e-9 else (np.inf, None)

    objectives = inst.objectives

    def fun(t):
        x = embed(t)
        return float(sum(f.value(x) for f in objectives))

    def jac(t):
        x = embed(t)
        g = np.zeros(n)
        for f in objectives:
            g += np.asarray(f.gradient(x), dtype=float)
        return g[idx]

    bounds = [(-float(M[c]), float(M[c])) for c in support]
    cons = []
    for g in inst.constraints:
        cons.append(
            {
                "type": "ineq",
                "fun": lambda t, g=g: -float(g.value(embed(t))),
                "jac": lambda t, g=g: -np.asarray(g.gradient(embed(t)))[idx],
            }
        )
    poly = inst.polytope
    if poly.D.shape[0]:
        Ds = poly.D[:, idx]
        cons.append(
            {
                "type": "ineq",
                "fun": lambda t: poly.d - Ds @ t,
                "jac": lambda t: -Ds,
            }
        )
    if poly.A.shape[0]:
        As = poly.A[:, idx]
        cons.append(
            {
                "type": "eq",
                "fun": lambda t: As @ t - poly.b,
                "jac": lambda t: As,
            }
        )

    starts = [np.zeros(s), 0.1 * np.minimum(M[idx], 1.0)]
    best = (np.inf, None)
    for x0 in starts:
        if cons:
            res = minimize(
                fun,
                x0,
                jac=jac,
                bounds=bounds,
                constraints=cons,
                method="SLSQP",
                options={"ftol": 1e-12, "maxiter": 300},
            )
            feasible = res.success
            if feasible:
                x_full = embed(res.x)
                v = max((g.value(x_full) for g in inst.constraints), default=0.0)
                v = max(v, poly.violation(x_full))
                feasible = v <= 1e-6
        else:
            res = minimize(
                fun,
                x0,
                jac=jac,
                bounds=bounds,
                method="L-BFGS-B",
                options={"ftol": 1e-14, "gtol": 1e-10, "maxiter": 500},
            )
            feasible = res.success or res.status == 2  # precision-loss stop is fine
        if feasible and res.fun < best[0]:
            best = (float(res.fun), embed(res.x))
        if feasible and not inst.constraints:
            break  # unconstrained restriction: one solve is exact
    return best


def solve_by_support_enumeration(inst, kappa=None):
    """Exact sparse optimum by enumerating all supports of size kappa and
    solving each convex restriction directly.

    Desk-scale only (n <= ~12).  Returns (value, support, x).
    """
    n = inst.n
    kappa = inst.kappa if kappa is None else kappa
    size = min(kappa, n)
    best = (np.inf, None, None)
    for support in itertools.combinations(range(n), size):
        val, x = solve_restriction(inst, support)
        if val < best[0] - 1e-12:
            best = (val, support, x)
    return best


def write_lp_format(model: MasterModel, path, tangents=None):
    """Dump the master model (second-order rows as their current tangent
    linearization) in CPLEX LP format for external cross-checking."""
    N, n = model.N, model.n

    def vname(k):
        if k < N:
            return f"a{k}"
        if k < N + n:
            return f"w{k - N}"
        off = k - N - n
        return f"z{off // n}_{off % n}"

    def term(coef, k):
        return f"{'+' if coef >= 0 else '-'} {abs(coef):.12g} {vname(k)} "

    lines = ["Minimize", " obj: " + "".join(term(1.0, i) for i in range(N))]
    lines.append("Subject To")
    rows = [model.A_ub]
    rhs = [model.b_ub]
    if tangents is not None and tangents.rows:
        rows.append(np.array(tangents.rows))
        rhs.append(np.array(tangents.rhs))
    A = np.vstack(rows)
    b = np.concatenate(rhs)
    for r in range(A.shape[0]):
        body = "".join(term(A[r, k], k) for k in np.nonzero(A[r])[0])
        lines.append(f" c{r}: {body}<= {b[r]:.12g}")
    for r in range(model.A_eq.shape[0]):
        body = "".join(term(model.A_eq[r, k], k) for k in np.nonzero(model.A_eq[r])[0])
        lines.append(f" e{r}: {body}= {model.b_eq[r]:.12g}")
    lines.append("Bounds")
    for k in range(N + n):
        lines.append(f" {vname(k)} free")
    lines.append("Binary")
    for k in range(N + n, model.dim):
        lines.append(f" {vname(k)}")
    lines.append("End")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
