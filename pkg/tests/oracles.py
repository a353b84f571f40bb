"""Independent reference computations used by the tests (no calls into the package solver)."""
import itertools
import math

import numpy as np
from scipy.optimize import linprog

from capacc.milp import EQ, GE, LE, MilpModel


def random_milp(rng: np.random.Generator, n_bin: int, n_cont: int = 0, n_rows: int | None = None) -> MilpModel:
    """Random bounded MILP built around a known integer point so most instances are feasible."""
    n = n_bin + n_cont
    m = MilpModel("rand")
    cost = rng.integers(-10, 11, n).astype(float)
    for j in range(n_bin):
        m.add_var(f"b{j}", binary=True, cost=cost[j])
    for j in range(n_cont):
        m.add_var(f"x{j}", 0.0, float(rng.integers(3, 11)), cost=cost[n_bin + j])
    x0 = np.concatenate([rng.integers(0, 2, n_bin), rng.uniform(0, 3, n_cont)])
    rows = n_rows if n_rows is not None else int(rng.integers(1, 6))
    for r in range(rows):
        a = rng.integers(-5, 6, n).astype(float)
        a[rng.random(n) < 0.3] = 0.0
        if not a.any():
            a[rng.integers(0, n)] = 1.0
        act = float(a @ x0)
        kind = rng.random()
        if kind < 0.45:
            m.add_constraint(f"c_{r}", np.arange(n), a, LE, math.floor(act + rng.integers(0, 4)))
        elif kind < 0.9 or n_cont == 0:
            m.add_constraint(f"c_{r}", np.arange(n), a, GE, math.ceil(act - rng.integers(0, 4)))
        else:
            m.add_constraint(f"c_{r}", np.arange(n), a, EQ, act)
    return m


def _row_bounds(model: MilpModel):
    a = model.arrays()
    return a, a.A.toarray(), a.row_lo, a.row_hi


def enumerate_milp(model: MilpModel, tol: float = 1e-9) -> float:
    """Optimal objective by trying every binary assignment (LP over the continuous rest)."""
    a, A, lo, hi = _row_bounds(model)
    b = np.where(a.integer)[0]
    c = np.where(~a.integer)[0]
    if len(c) == 0:
        best = math.inf
        combos = np.array(list(itertools.product((0.0, 1.0), repeat=len(b)))) if len(b) <= 12 else None
        chunks = [combos] if combos is not None else _chunks(len(b))
        for X in chunks:
            act = X @ A[:, b].T
            ok = np.all((act >= lo - tol) & (act <= hi + tol), axis=1)
            if ok.any():
                best = min(best, float((X[ok] @ a.c[b]).min()))
        return best + a.obj_constant
    best = math.inf
    Ac, Ab = A[:, c], A[:, b]
    for bits in itertools.product((0.0, 1.0), repeat=len(b)):
        xb = np.array(bits)
        fixed = Ab @ xb
        ub_rows, ub_rhs, eq_rows, eq_rhs = [], [], [], []
        for r in range(A.shape[0]):
            if np.isfinite(lo[r]) and lo[r] == hi[r]:
                eq_rows.append(Ac[r])
                eq_rhs.append(hi[r] - fixed[r])
                continue
            if np.isfinite(hi[r]):
                ub_rows.append(Ac[r])
                ub_rhs.append(hi[r] - fixed[r])
            if np.isfinite(lo[r]):
                ub_rows.append(-Ac[r])
                ub_rhs.append(fixed[r] - lo[r])
        res = linprog(a.c[c], A_ub=np.array(ub_rows) if ub_rows else None, b_ub=ub_rhs or None,
                      A_eq=np.array(eq_rows) if eq_rows else None, b_eq=eq_rhs or None,
                      bounds=np.column_stack([a.lb[c], a.ub[c]]), method="highs")
        if res.status == 0:
            best = min(best, float(res.fun + a.c[b] @ xb))
    return best + a.obj_constant


def _chunks(k: int, size: int = 1 << 15):
    total = 1 << k
    shifts = np.arange(k)
    for start in range(0, total, size):
        ids = np.arange(start, min(total, start + size))
        yield ((ids[:, None] >> shifts) & 1).astype(float)


def dispatch_cost(system, demand: float, on: tuple[int, ...], avail, rating: float, voll: float) -> float:
    """Cheapest single-hour dispatch of a two-bus, one-line system with load at bus 2."""
    cols, costs, bounds = [], [], []
    for k, g in enumerate(system.thermal):
        for width, slope in g.blocks():
            cols.append(k)
            costs.append(slope)
            bounds.append((0.0, width * on[k]))
    costs.append(voll)
    bounds.append((0.0, demand))
    nv = len(costs)
    a_eq = np.ones((1, nv))
    a_ub, b_ub = [], []
    for k, g in enumerate(system.thermal):
        row = np.array([1.0 if (j < len(cols) and cols[j] == k) else 0.0 for j in range(nv)])
        a_ub.append(row)
        b_ub.append(avail[k] * on[k])
        a_ub.append(-row)
        b_ub.append(-g.g_min * on[k])
    # bus 1 carries no load, so the line carries exactly what bus-1 units produce
    exp = np.array([1.0 if (j < len(cols) and system.thermal[cols[j]].bus == 1) else 0.0 for j in range(nv)])
    a_ub.append(exp)
    b_ub.append(rating)
    res = linprog(costs, A_ub=np.array(a_ub), b_ub=b_ub, A_eq=a_eq, b_eq=[demand], bounds=bounds, method="highs")
    return float(res.fun) if res.status == 0 else math.inf


def uc_dp_oracle(system, demand, avail, rating, voll: float) -> float:
    """Minimum UC cost by dynamic programming over commitment states from a cold start.

    State per unit is (on/off, hours in that state capped at max(UT, DT)).
    """
    gens = system.thermal
    cap = max(max(g.min_up, g.min_down) for g in gens)
    T = len(demand)
    hourly = {}
    for t in range(T):
        for on in itertools.product((0, 1), repeat=len(gens)):
            hourly[t, on] = dispatch_cost(system, float(demand[t]), on, avail[:, t], float(rating[t]), voll)
    states = {tuple((0, cap) for _ in gens): 0.0}
    for t in range(T):
        nxt: dict = {}
        for st, val in states.items():
            options = []
            for g, (u, age) in zip(gens, st):
                opts = [((u, min(age + 1, cap)), 0.0)]
                if u == 1 and age >= g.min_up:
                    opts.append(((0, 1), g.shutdown_cost))
                if u == 0 and age >= g.min_down:
                    opts.append(((1, 1), g.startup_cost))
                options.append(opts)
            for combo in itertools.product(*options):
                new = tuple(s for s, _ in combo)
                on = tuple(s[0] for s in new)
                cost = val + sum(c for _, c in combo) + hourly[t, on]
                if cost < nxt.get(new, math.inf):
                    nxt[new] = cost
        states = nxt
    return min(states.values())
