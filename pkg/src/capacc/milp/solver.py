"""Branch-and-bound MILP solver over dual-simplex LP relaxations.

Node LPs are solved with the HiGHS dual simplex shipped in scipy
(``linprog(method="highs-ds")``). Nodes are explored best-bound first once an
incumbent exists; before that the search dives depth-first to find one.
"""
from __future__ import annotations

import heapq
import itertools
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.optimize import Bounds, LinearConstraint, linprog, milp

from ..errors import SolverError
from .model import MilpArrays, MilpModel

log = logging.getLogger(__name__)

OPTIMAL = "optimal"
TIME_LIMIT = "time_limit"
NODE_LIMIT = "node_limit"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
EXPORTED = "exported"

BRANCH_RULES = ("most_fractional", "first_fractional")


@dataclass
class SolverOptions:
    mode: str = "bundled"  # bundled | export
    engine: str = "highs"  # highs (scipy.optimize.milp) | bnb (own branch-and-bound)
    mip_gap_abs: float = 1e-6
    mip_gap_rel: float = 0.0
    time_limit: float = 600.0
    node_limit: int = 1_000_000
    feasibility_tol: float = 1e-6
    integrality_tol: float = 1e-6
    branching: str = "most_fractional"
    export_path: str | None = None

    def __post_init__(self):
        if self.mip_gap_abs < 0 or self.mip_gap_rel < 0:
            raise ValueError("MIP gaps must be >= 0")
        if self.mode not in ("bundled", "export"):
            raise ValueError(f"unknown solver mode {self.mode!r}")
        if self.engine not in ("bnb", "highs"):
            raise ValueError(f"unknown engine {self.engine!r}")
        if self.branching not in BRANCH_RULES:
            raise ValueError(f"unknown branching rule {self.branching!r}")


@dataclass
class MilpResult:
    status: str
    x: np.ndarray | None
    objective: float
    bound: float
    nodes: int = 0
    hint: str | None = None
    message: str = ""
    export: object | None = None

    @property
    def gap(self) -> float:
        if self.x is None or not math.isfinite(self.bound):
            return math.inf
        return max(0.0, self.objective - self.bound)

    @property
    def ok(self) -> bool:
        return self.x is not None and self.status in (OPTIMAL, TIME_LIMIT, NODE_LIMIT)


class _LP:
    """LP relaxation with fixed rows; only column bounds change between nodes."""

    def __init__(self, a: MilpArrays, drop_rows: np.ndarray | None = None):
        A = a.A
        lo, hi = a.row_lo, a.row_hi
        if drop_rows is not None and len(drop_rows):
            keep = np.ones(A.shape[0], bool)
            keep[drop_rows] = False
            A, lo, hi = A[keep], lo[keep], hi[keep]
        eq = np.isfinite(lo) & np.isfinite(hi) & (lo == hi)
        up = np.isfinite(hi) & ~eq
        dn = np.isfinite(lo) & ~eq
        self.c = a.c
        self.A_eq = A[eq] if eq.any() else None
        self.b_eq = hi[eq] if eq.any() else None
        parts, rhs = [], []
        if up.any():
            parts.append(A[up])
            rhs.append(hi[up])
        if dn.any():
            parts.append(-A[dn])
            rhs.append(-lo[dn])
        self.A_ub = sp.vstack(parts).tocsr() if parts else None
        self.b_ub = np.concatenate(rhs) if rhs else None

    def solve(self, lb: np.ndarray, ub: np.ndarray):
        if np.any(lb > ub):
            return "infeasible", None, math.inf
        res = linprog(
            self.c,
            A_ub=self.A_ub,
            b_ub=self.b_ub,
            A_eq=self.A_eq,
            b_eq=self.b_eq,
            bounds=np.column_stack([lb, ub]),
            method="highs-ds",
        )
        if res.status == 0:
            return "optimal", res.x, float(res.fun)
        if res.status == 2:
            return "infeasible", None, math.inf
        if res.status == 3:
            return "unbounded", None, -math.inf
        return "error", None, math.nan


def _pick_branch(x, integer, tol, rule):
    frac = np.abs(x - np.round(x))
    cand = np.where(integer & (frac > tol))[0]
    if len(cand) == 0:
        return None
    if rule == "first_fractional":
        return int(cand[0])
    dist = np.abs(x[cand] - np.floor(x[cand]) - 0.5)
    return int(cand[np.argmin(dist)])


def infeasibility_hint(model: MilpModel) -> str:
    """Name the row families whose removal makes the LP relaxation feasible."""
    a = model.arrays()
    fam = np.array([n.split("_", 1)[0] for n in model.row_names])
    culprits = []
    for f in sorted(set(fam.tolist())):
        lp = _LP(a, np.where(fam == f)[0])
        status, _, _ = lp.solve(a.lb, a.ub)
        if status in ("optimal", "unbounded"):
            culprits.append(f)
    if culprits:
        return "constraint families: " + ", ".join(culprits)
    return "conflict involves several constraint families or variable bounds"


def _solve_bnb(model: MilpModel, opt: SolverOptions) -> MilpResult:
    a = model.arrays()
    t0 = time.monotonic()
    lp = _LP(a)
    integer = a.integer
    # integer bounds are rounded once so that branching stays exact
    root_lb = np.where(integer, np.ceil(a.lb - opt.integrality_tol), a.lb)
    root_ub = np.where(integer, np.floor(a.ub + opt.integrality_tol), a.ub)

    status, x, val = lp.solve(root_lb, root_ub)
    if status == "infeasible":
        return MilpResult(INFEASIBLE, None, math.inf, math.inf, 1, hint=infeasibility_hint(model))
    if status == "unbounded":
        raise SolverError("LP relaxation is unbounded", status=UNBOUNDED)
    if status != "optimal":
        raise SolverError("LP solver failed at root", status="error")

    inc_x, inc_val = None, math.inf

    def try_incumbent(xc, vc):
        nonlocal inc_x, inc_val
        if vc < inc_val - 1e-12:
            inc_x, inc_val = xc.copy(), vc
            inc_x[integer] = np.round(inc_x[integer])

    def cutoff():
        return inc_val - max(opt.mip_gap_abs, opt.mip_gap_rel * abs(inc_val))

    # rounding heuristics at the root
    if _pick_branch(x, integer, opt.integrality_tol, opt.branching) is None:
        try_incumbent(x, val)
    else:
        for rnd in (np.round, np.ceil):
            fixed = np.clip(rnd(x - 1e-9 if rnd is np.ceil else x), root_lb, root_ub)
            lb = np.where(integer, fixed, root_lb)
            ub = np.where(integer, fixed, root_ub)
            st, xh, vh = lp.solve(lb, ub)
            if st == "optimal":
                try_incumbent(xh, vh)
                break

    counter = itertools.count()
    # node: (key..., lb, ub, parent bound, depth, lp solution, lp value)
    open_nodes: list = []
    diving = inc_x is None

    def key(bound, depth):
        return (-depth, bound) if diving else (bound, -depth)

    def push(bound, depth, lb, ub, xs, vs):
        heapq.heappush(open_nodes, (*key(bound, depth), next(counter), bound, depth, lb, ub, xs, vs))

    push(val, 0, root_lb, root_ub, x, val)
    nodes = 1
    pruned_min = math.inf
    status_out = OPTIMAL
    last_log = t0

    while open_nodes:
        if diving and inc_x is not None:
            diving = False
            items = [(*key(it[3], it[4]), *it[2:]) for it in open_nodes]
            heapq.heapify(items)
            open_nodes = items
        item = heapq.heappop(open_nodes)
        _, _, _, bound, depth, lb, ub, xs, vs = item
        if inc_x is not None and bound >= cutoff():
            pruned_min = min(pruned_min, bound)
            continue
        if xs is None:
            st, xs, vs = lp.solve(lb, ub)
            nodes += 1
            if st != "optimal":
                continue
            if inc_x is not None and vs >= cutoff():
                pruned_min = min(pruned_min, vs)
                continue
        j = _pick_branch(xs, integer, opt.integrality_tol, opt.branching)
        if j is None:
            try_incumbent(xs, vs)
            continue
        if time.monotonic() - t0 > opt.time_limit:
            status_out = TIME_LIMIT
            heapq.heappush(open_nodes, item)
            break
        if nodes >= opt.node_limit:
            status_out = NODE_LIMIT
            heapq.heappush(open_nodes, item)
            break
        down_ub = ub.copy()
        down_ub[j] = math.floor(xs[j])
        up_lb = lb.copy()
        up_lb[j] = math.ceil(xs[j])
        # when diving, the child nearer the LP value is explored first (pushed last)
        children = [(lb, down_ub), (up_lb, ub)]
        if xs[j] - math.floor(xs[j]) >= 0.5:
            children.reverse()
        for clb, cub in children[::-1] if not diving else children:
            push(vs, depth + 1, clb, cub, None, None)
        if time.monotonic() - last_log > 5.0:
            last_log = time.monotonic()
            best = min((it[3] for it in open_nodes), default=vs)
            log.debug("%d, %.10g, %.10g, %.3g", nodes, best, inc_val, inc_val - best)

    if inc_x is None:
        if status_out == OPTIMAL:
            return MilpResult(INFEASIBLE, None, math.inf, math.inf, nodes, hint=infeasibility_hint(model))
        raise SolverError(f"{status_out} reached without an incumbent", status=status_out)
    bound = min([it[3] for it in open_nodes] + [inc_val, pruned_min])
    log.debug("%d, %.10g, %.10g, %.3g", nodes, bound, inc_val, inc_val - bound)
    return MilpResult(status_out, inc_x, inc_val + a.obj_constant, bound + a.obj_constant, nodes)


def _solve_highs(model: MilpModel, opt: SolverOptions) -> MilpResult:
    a = model.arrays()
    cons = [LinearConstraint(a.A, a.row_lo, a.row_hi)] if a.A.shape[0] else []
    res = milp(
        a.c,
        constraints=cons,
        integrality=a.integer.astype(int),
        bounds=Bounds(a.lb, a.ub),
        options={
            "time_limit": opt.time_limit,
            "mip_rel_gap": opt.mip_gap_rel,
            "presolve": True,
            "disp": False,
            "node_limit": opt.node_limit,
        },
    )
    if res.status == 2:
        return MilpResult(INFEASIBLE, None, math.inf, math.inf, hint=infeasibility_hint(model))
    if res.status == 3:
        raise SolverError("model is unbounded", status=UNBOUNDED)
    if res.x is None:
        raise SolverError(f"HiGHS returned no solution: {res.message}", status="error")
    x = res.x.copy()
    x[a.integer] = np.round(x[a.integer])
    st = OPTIMAL if res.status == 0 else TIME_LIMIT
    bound = getattr(res, "mip_dual_bound", None)
    bound = res.fun if bound is None or not np.isfinite(bound) else bound
    return MilpResult(st, x, float(res.fun) + a.obj_constant, float(bound) + a.obj_constant,
                      int(getattr(res, "mip_node_count", 0) or 0))


def solve_milp(model: MilpModel, options: SolverOptions | None = None) -> MilpResult:
    """Solve (bundled mode) or write the model and return an import handle (export mode)."""
    opt = options or SolverOptions()
    if opt.mode == "export":
        from .lpfile import ExportHandle, export_model

        if not opt.export_path:
            raise SolverError("export mode requires export_path", status="error")
        export_model(model, opt.export_path)
        return MilpResult(EXPORTED, None, math.nan, math.nan, export=ExportHandle(model, opt.export_path))
    if model.n_vars == 0:
        return MilpResult(OPTIMAL, np.zeros(0), model.obj_constant, model.obj_constant)
    if opt.engine == "highs":
        return _solve_highs(model, opt)
    return _solve_bnb(model, opt)
