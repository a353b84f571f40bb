"""Transmission-constrained unit commitment: model build, rolling horizon, checker."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ModelBuildError, SolverError
from .grid import PowerSystem, build_ptdf, line_rating
from .milp import EQ, GE, LE, MilpModel, SolverOptions, solve_milp
from .milp.solver import EXPORTED, INFEASIBLE
from .resources import pv_max_output, thermal_available_capacity, wind_max_output

log = logging.getLogger(__name__)

WINDOW_HOURS = 168
OVERLAP_HOURS = 24
STEP_HOURS = WINDOW_HOURS - OVERLAP_HOURS


@dataclass(frozen=True)
class UcParams:
    voll: float = 10_000.0  # $/MWh
    curtail_multiplier: float = 10.0  # curtailment penalty as a multiple of LCOE
    hull_cuts: bool = True  # add the implied storage hull inequality (tighter LP, same MILP)


@dataclass
class CommitmentState:
    """Recent thermal history (oldest first) and storage SOC entering a window."""

    u: np.ndarray  # (I, K)
    su: np.ndarray
    sd: np.ndarray
    soc: np.ndarray  # (B,)

    @classmethod
    def cold_start(cls, system: PowerSystem) -> "CommitmentState":
        k = max([1] + [max(g.min_up, g.min_down) for g in system.thermal])
        z = np.zeros((len(system.thermal), k))
        soc = np.array([b.soc_initial for b in system.storage], dtype=float)
        return cls(z.copy(), z.copy(), z.copy(), soc)


@dataclass
class MonthInputs:
    """LA-independent hourly data for one scenario month."""

    demand: np.ndarray  # (T,) system MW
    ratings: np.ndarray  # (L, T)
    thermal_avail: np.ndarray  # (I, T)
    pv_max: np.ndarray  # (S, T)
    wind_max: np.ndarray  # (W, T), before storm stall
    hurricane: np.ndarray  # (T,) bool

    @property
    def hours(self) -> int:
        return len(self.demand)


@dataclass
class UcWindow:
    t0: int
    demand: np.ndarray  # (T,) system demand before LA
    ratings: np.ndarray
    thermal_avail: np.ndarray
    pv_max: np.ndarray
    wind_max: np.ndarray
    hurricane: np.ndarray
    state: CommitmentState
    la: float = 0.0

    @property
    def hours(self) -> int:
        return len(self.demand)

    @property
    def t1(self) -> int:
        return self.t0 + self.hours - 1

    def system_demand(self) -> np.ndarray:
        return np.maximum(self.demand + self.la, 0.0)

    def nodal_demand(self, system: PowerSystem) -> np.ndarray:
        return system.load_weights[:, None] * self.system_demand()[None, :]

    def wind_available(self, system: PowerSystem) -> np.ndarray:
        exposed = np.array([w.hurricane_exposed for w in system.wind], dtype=bool)
        stall = exposed[:, None] & self.hurricane[None, :]
        return np.where(stall, 0.0, self.wind_max)


@dataclass
class UcSolution:
    t0: int
    thermal_g: np.ndarray  # (I, T)
    u: np.ndarray
    su: np.ndarray
    sd: np.ndarray
    solar_g: np.ndarray  # (S, T)
    solar_curt: np.ndarray
    wind_g: np.ndarray
    wind_curt: np.ndarray
    charge: np.ndarray  # (B, T) MW
    discharge: np.ndarray
    soc: np.ndarray  # fraction, end of hour
    ch: np.ndarray
    dis: np.ndarray
    shed: np.ndarray  # (T,) system MW
    ls: np.ndarray
    shed_nodal: np.ndarray  # (N, T)
    flows: np.ndarray  # (L, T)
    objective: float
    status: str
    mip_gap: float

    @property
    def hours(self) -> int:
        return self.shed.shape[0]

    def slice(self, k0: int, k1: int) -> "UcSolution":
        kw = {}
        for name, val in self.__dict__.items():
            if isinstance(val, np.ndarray):
                kw[name] = val[..., k0:k1]
            else:
                kw[name] = val
        kw["t0"] = self.t0 + k0
        return UcSolution(**kw)

    @staticmethod
    def concat(parts: list["UcSolution"]) -> "UcSolution":
        kw = {}
        first = parts[0]
        for name, val in first.__dict__.items():
            if isinstance(val, np.ndarray):
                kw[name] = np.concatenate([getattr(p, name) for p in parts], axis=-1)
        kw["t0"] = first.t0
        kw["objective"] = float(sum(p.objective for p in parts))
        statuses = {p.status for p in parts}
        kw["status"] = first.status if len(statuses) == 1 else ",".join(sorted(statuses))
        kw["mip_gap"] = max(p.mip_gap for p in parts)
        return UcSolution(**kw)


# --------------------------------------------------------------------------
# inputs


def month_inputs(system: PowerSystem, scenario) -> MonthInputs:
    """Hourly derived inputs (ratings, availabilities) from a scenario profile."""
    temp = np.asarray(scenario.temp, dtype=float)
    t = len(temp)
    ratings = np.array([line_rating(ln, temp) for ln in system.lines]).reshape(len(system.lines), t)
    avail = np.array([thermal_available_capacity(g, temp) for g in system.thermal]).reshape(len(system.thermal), t)
    pv = np.array([pv_max_output(s, temp, scenario.ghi) for s in system.solar]).reshape(len(system.solar), t)
    wind = np.array(
        [wind_max_output(w, scenario.wind[w.site - 1]) for w in system.wind]
    ).reshape(len(system.wind), t)
    return MonthInputs(
        demand=np.asarray(scenario.demand, dtype=float),
        ratings=ratings,
        thermal_avail=avail,
        pv_max=pv,
        wind_max=wind,
        hurricane=np.asarray(scenario.hurricane, dtype=bool),
    )


def make_window(inputs: MonthInputs, t0: int, t1: int, state: CommitmentState, la: float = 0.0) -> UcWindow:
    sl = slice(t0, t1 + 1)
    return UcWindow(
        t0=t0,
        demand=inputs.demand[sl],
        ratings=inputs.ratings[:, sl],
        thermal_avail=inputs.thermal_avail[:, sl],
        pv_max=inputs.pv_max[:, sl],
        wind_max=inputs.wind_max[:, sl],
        hurricane=inputs.hurricane[sl],
        state=state,
        la=la,
    )


def _check_window(system: PowerSystem, w: UcWindow) -> None:
    h = w.hours
    expect = {
        "demand": (w.demand, (h,)),
        "ratings": (w.ratings, (len(system.lines), h)),
        "thermal_avail": (w.thermal_avail, (len(system.thermal), h)),
        "pv_max": (w.pv_max, (len(system.solar), h)),
        "wind_max": (w.wind_max, (len(system.wind), h)),
        "hurricane": (w.hurricane, (h,)),
    }
    for name, (arr, shape) in expect.items():
        arr = np.asarray(arr)
        if arr.shape != shape:
            raise ModelBuildError(f"window input {name}: expected shape {shape}, got {arr.shape}")
        if arr.dtype != bool and not np.all(np.isfinite(arr)):
            k = int(np.argwhere(~np.isfinite(arr))[0][-1])
            raise ModelBuildError(f"window input {name}: missing value at hour {w.t0 + k}")
    k_hist = max([1] + [max(g.min_up, g.min_down) for g in system.thermal])
    if len(system.thermal) and w.state.u.shape[1] < k_hist:
        raise ModelBuildError(f"commitment history shorter than max(UT, DT) = {k_hist} h")
    if w.state.soc.shape != (len(system.storage),):
        raise ModelBuildError("initial SOC vector does not match storage fleet")


# --------------------------------------------------------------------------
# model


@dataclass
class UcIndex:
    """Variable index arrays of a built UC model, shape (entity, hour)."""

    blocks: list[np.ndarray]  # per thermal unit: (n_blocks, T)
    u: np.ndarray
    su: np.ndarray
    sd: np.ndarray
    solar_g: np.ndarray
    solar_curt: np.ndarray
    wind_g: np.ndarray
    wind_curt: np.ndarray
    charge: np.ndarray
    discharge: np.ndarray
    soc: np.ndarray
    ch: np.ndarray
    dis: np.ndarray
    shed: np.ndarray
    ls: np.ndarray


def _names(fam: str, ent, hours) -> list[str]:
    return [f"{fam}_{ent}_{t}" for t in hours]


def build_uc_model(system: PowerSystem, ptdf: np.ndarray, window: UcWindow,
                   params: UcParams = UcParams()) -> tuple[MilpModel, UcIndex]:
    """Encode the hourly UC problem for one window as a MILP.

    Rows are named ``{family}_{entity}_{hour}`` with month-relative hours.
    """
    _check_window(system, window)
    if ptdf.shape != (len(system.lines), len(system.buses)):
        raise ModelBuildError("PTDF shape does not match the system")
    T = window.hours
    hrs = range(window.t0, window.t0 + T)
    m = MilpModel(f"uc_{window.t0}_{window.t1}")
    bidx = system.bus_index()
    nb = len(system.buses)
    dsys = window.system_demand()
    w = system.load_weights

    # --- variables
    blocks, us, sus, sds = [], [], [], []
    for g in system.thermal:
        blk = g.blocks()
        rows = []
        for k, (width, slope) in enumerate(blk):
            fam = "G" if len(blk) == 1 else f"G{k + 1}"
            rows.append(m.add_vars(_names(fam, g.id, hrs), 0.0, width, cost=slope))
        blocks.append(np.array(rows).reshape(len(blk), T))
        us.append(m.add_vars(_names("u", g.id, hrs), binary=True))
        sus.append(m.add_vars(_names("su", g.id, hrs), binary=True, cost=g.startup_cost))
        sds.append(m.add_vars(_names("sd", g.id, hrs), binary=True, cost=g.shutdown_cost))
    wind_avail = window.wind_available(system) if system.wind else np.zeros((0, T))
    sg, sc, wg, wc = [], [], [], []
    for k, s in enumerate(system.solar):
        sg.append(m.add_vars(_names("G", s.id, hrs), 0.0, window.pv_max[k], cost=s.cost))
        sc.append(m.add_vars(_names("curt", s.id, hrs), 0.0, cost=params.curtail_multiplier * s.cost))
    for k, wf in enumerate(system.wind):
        wg.append(m.add_vars(_names("G", wf.id, hrs), 0.0, wind_avail[k], cost=wf.cost))
        wc.append(m.add_vars(_names("curt", wf.id, hrs), 0.0, cost=params.curtail_multiplier * wf.cost))
    CH, DIS, SOC, chb, disb = [], [], [], [], []
    for b in system.storage:
        CH.append(m.add_vars(_names("CH", b.id, hrs), 0.0, b.charge_max, cost=b.cost))
        DIS.append(m.add_vars(_names("DIS", b.id, hrs), 0.0, b.discharge_max))
        SOC.append(m.add_vars(_names("SOC", b.id, hrs), b.soc_min, b.soc_max))
        chb.append(m.add_vars(_names("ch", b.id, hrs), binary=True))
        disb.append(m.add_vars(_names("dis", b.id, hrs), binary=True))
    LS = m.add_vars(_names("LS", "sys", hrs), 0.0, cost=params.voll)
    lsb = m.add_vars(_names("ls", "sys", hrs), binary=True)

    def arr(x, n):
        return np.array(x, dtype=np.int64).reshape(n, T)

    nI, nS, nW, nB = len(system.thermal), len(system.solar), len(system.wind), len(system.storage)
    idx = UcIndex(
        blocks=blocks, u=arr(us, nI), su=arr(sus, nI), sd=arr(sds, nI),
        solar_g=arr(sg, nS), solar_curt=arr(sc, nS), wind_g=arr(wg, nW), wind_curt=arr(wc, nW),
        charge=arr(CH, nB), discharge=arr(DIS, nB), soc=arr(SOC, nB), ch=arr(chb, nB), dis=arr(disb, nB),
        shed=LS, ls=lsb,
    )

    # --- injection terms per hour: (var index array (T,), bus index, coef)
    inj = []
    for k, g in enumerate(system.thermal):
        for row in blocks[k]:
            inj.append((row, bidx[g.bus], 1.0))
    for k, s in enumerate(system.solar):
        inj.append((idx.solar_g[k], bidx[s.bus], 1.0))
    for k, wf in enumerate(system.wind):
        inj.append((idx.wind_g[k], bidx[wf.bus], 1.0))
    for k, b in enumerate(system.storage):
        inj.append((idx.discharge[k], bidx[b.bus], 1.0))
        inj.append((idx.charge[k], bidx[b.bus], -1.0))

    tt = np.arange(T)
    hours_str = [str(t) for t in hrs]

    # balance: sum(inj) + LS = sum(D)
    cols = [v for v, _, _ in inj] + [LS]
    vals = [np.full(T, c) for _, _, c in inj] + [np.ones(T)]
    m.add_rows([f"balance_sys_{h}" for h in hours_str],
               np.tile(tt, len(cols)), np.concatenate(cols), np.concatenate(vals), EQ, dsys)

    # line limits: PTDF-weighted injections within the AAR rating
    if len(system.lines):
        nodal_d = w[:, None] * dsys[None, :]
        ls_coef = ptdf @ w  # shedding raises net injection at each bus by w_n * LS
        const = ptdf @ nodal_d  # (L, T) flow contribution of demand
        for l, ln in enumerate(system.lines):
            cc, vv = [], []
            for v, n, c in inj:
                f = ptdf[l, n]
                if f != 0.0:
                    cc.append(v)
                    vv.append(np.full(T, c * f))
            if ls_coef[l] != 0.0:
                cc.append(LS)
                vv.append(np.full(T, ls_coef[l]))
            if not cc:
                continue
            rr = np.tile(tt, len(cc))
            ccat, vcat = np.concatenate(cc), np.concatenate(vv)
            m.add_rows([f"flowmax_{ln.id}_{h}" for h in hours_str], rr, ccat, vcat, LE, window.ratings[l] + const[l])
            m.add_rows([f"flowmin_{ln.id}_{h}" for h in hours_str], rr, ccat, vcat, GE, -window.ratings[l] + const[l])

    # thermal limits, transitions, min up/down
    for k, g in enumerate(system.thermal):
        blk = blocks[k]
        nbk = blk.shape[0]
        u, su, sd = idx.u[k], idx.su[k], idx.sd[k]
        rr = np.tile(tt, nbk + 1)
        m.add_rows([f"gmin_{g.id}_{h}" for h in hours_str], rr,
                   np.concatenate([*blk, u]), np.concatenate([np.ones(T * nbk), np.full(T, -g.g_min)]), GE, 0.0)
        m.add_rows([f"gmax_{g.id}_{h}" for h in hours_str], rr,
                   np.concatenate([*blk, u]), np.concatenate([np.ones(T * nbk), -window.thermal_avail[k]]), LE, 0.0)
        # u_t - u_{t-1} - su_t + sd_t = 0
        r_, c_, v_ = [tt, tt, tt], [u, su, sd], [np.ones(T), -np.ones(T), np.ones(T)]
        r_.append(tt[1:]); c_.append(u[:-1]); v_.append(-np.ones(T - 1))
        rhs = np.zeros(T)
        rhs[0] = window.state.u[k, -1]
        m.add_rows([f"trans_{g.id}_{h}" for h in hours_str], np.concatenate(r_), np.concatenate(c_),
                   np.concatenate(v_), EQ, rhs)
        hist_su, hist_sd = window.state.su[k], window.state.sd[k]
        for fam, span, act, hist, sign in (("minup", g.min_up, su, hist_su, -1.0), ("mindown", g.min_down, sd, hist_sd, 1.0)):
            rows, colsl, valsl, rhs = [], [], [], np.zeros(T)
            for t in range(T):
                lo = t - span + 1
                win = np.arange(max(lo, 0), t + 1)
                rows.append(np.full(len(win) + 1, t))
                colsl.append(np.append(act[win], u[t]))
                valsl.append(np.append(np.ones(len(win)), sign))
                carried = hist[len(hist) + lo:] .sum() if lo < 0 else 0.0
                rhs[t] = (0.0 if fam == "minup" else 1.0) - carried
            m.add_rows([f"{fam}_{g.id}_{h}" for h in hours_str], np.concatenate(rows), np.concatenate(colsl),
                       np.concatenate(valsl), LE, rhs)

    # renewable curtailment identities
    for k, s in enumerate(system.solar):
        m.add_rows([f"curtail_{s.id}_{h}" for h in hours_str], np.tile(tt, 2),
                   np.concatenate([idx.solar_g[k], idx.solar_curt[k]]), np.ones(2 * T), EQ, window.pv_max[k])
    for k, wf in enumerate(system.wind):
        m.add_rows([f"curtail_{wf.id}_{h}" for h in hours_str], np.tile(tt, 2),
                   np.concatenate([idx.wind_g[k], idx.wind_curt[k]]), np.ones(2 * T), EQ, wind_avail[k])

    # storage
    for k, b in enumerate(system.storage):
        m.add_rows([f"chmax_{b.id}_{h}" for h in hours_str], np.tile(tt, 2),
                   np.concatenate([idx.charge[k], idx.ch[k]]),
                   np.concatenate([np.ones(T), np.full(T, -b.charge_max)]), LE, 0.0)
        m.add_rows([f"dismax_{b.id}_{h}" for h in hours_str], np.tile(tt, 2),
                   np.concatenate([idx.discharge[k], idx.dis[k]]),
                   np.concatenate([np.ones(T), np.full(T, -b.discharge_max)]), LE, 0.0)
        m.add_rows([f"excl_{b.id}_{h}" for h in hours_str], np.tile(tt, 2),
                   np.concatenate([idx.ch[k], idx.dis[k]]), np.ones(2 * T), LE, 1.0)
        if params.hull_cuts and b.charge_max > 0 and b.discharge_max > 0:
            # convex hull of the charge/discharge disjunction; implied by the rows above
            m.add_rows([f"chdis_{b.id}_{h}" for h in hours_str], np.tile(tt, 2),
                       np.concatenate([idx.charge[k], idx.discharge[k]]),
                       np.concatenate([np.full(T, 1.0 / b.charge_max), np.full(T, 1.0 / b.discharge_max)]),
                       LE, 1.0)
        # E*SOC_t - E*SOC_{t-1} - eta_c*CH_t + DIS_t/eta_d = 0
        rhs = np.zeros(T)
        rhs[0] = b.energy * window.state.soc[k]
        m.add_rows([f"soc_{b.id}_{h}" for h in hours_str],
                   np.concatenate([tt, tt[1:], tt, tt]),
                   np.concatenate([idx.soc[k], idx.soc[k][:-1], idx.charge[k], idx.discharge[k]]),
                   np.concatenate([np.full(T, b.energy), np.full(T - 1, -b.energy),
                                   np.full(T, -b.eta_charge), np.full(T, 1.0 / b.eta_discharge)]),
                   EQ, rhs)

    # shedding gate: LS <= ls * total demand
    m.add_rows([f"shedcap_sys_{h}" for h in hours_str], np.tile(tt, 2),
               np.concatenate([LS, lsb]), np.concatenate([np.ones(T), -dsys]), LE, 0.0)
    return m, idx


def extract_solution(system: PowerSystem, ptdf: np.ndarray, window: UcWindow, idx: UcIndex,
                     x: np.ndarray, objective: float, status: str, gap: float) -> UcSolution:
    T = window.hours
    g = np.array([x[b].sum(axis=0) for b in idx.blocks]).reshape(len(system.thermal), T)
    take = lambda a: x[a] if a.size else np.zeros(a.shape)
    rnd = lambda a: np.round(take(a)).astype(np.int8)
    shed = np.maximum(take(idx.shed), 0.0)
    sol = UcSolution(
        t0=window.t0,
        thermal_g=g, u=rnd(idx.u), su=rnd(idx.su), sd=rnd(idx.sd),
        solar_g=take(idx.solar_g), solar_curt=take(idx.solar_curt),
        wind_g=take(idx.wind_g), wind_curt=take(idx.wind_curt),
        charge=take(idx.charge), discharge=take(idx.discharge), soc=take(idx.soc),
        ch=rnd(idx.ch), dis=rnd(idx.dis),
        shed=shed, ls=rnd(idx.ls),
        shed_nodal=system.load_weights[:, None] * shed[None, :],
        flows=np.zeros((len(system.lines), T)),
        objective=objective, status=status, mip_gap=gap,
    )
    sol.flows = ptdf @ nodal_injections(system, window, sol)
    return sol


def nodal_injections(system: PowerSystem, window: UcWindow, sol: UcSolution) -> np.ndarray:
    bidx = system.bus_index()
    inj = -(window.nodal_demand(system) - sol.shed_nodal)
    for k, g in enumerate(system.thermal):
        inj[bidx[g.bus]] += sol.thermal_g[k]
    for k, s in enumerate(system.solar):
        inj[bidx[s.bus]] += sol.solar_g[k]
    for k, wf in enumerate(system.wind):
        inj[bidx[wf.bus]] += sol.wind_g[k]
    for k, b in enumerate(system.storage):
        inj[bidx[b.bus]] += sol.discharge[k] - sol.charge[k]
    return inj


def solve_window(system: PowerSystem, ptdf: np.ndarray, window: UcWindow,
                 options: SolverOptions | None = None, params: UcParams = UcParams()) -> UcSolution:
    options = options or SolverOptions()
    model, idx = build_uc_model(system, ptdf, window, params)
    res = solve_milp(model, options)
    if res.status == EXPORTED:
        raise SolverError("export mode cannot produce a UC solution; import the external solution instead",
                          status=EXPORTED)
    if res.status == INFEASIBLE:
        raise SolverError(f"UC window {window.t0}-{window.t1} infeasible ({res.hint})", status=INFEASIBLE, hint=res.hint)
    if not res.ok:
        raise SolverError(f"UC window {window.t0}-{window.t1}: solver status {res.status}", status=res.status)
    return extract_solution(system, ptdf, window, idx, res.x, res.objective, res.status, res.gap)


# --------------------------------------------------------------------------
# rolling horizon


def window_starts(hours: int, length: int = WINDOW_HOURS, step: int = STEP_HOURS) -> list[tuple[int, int, int]]:
    """(start, end inclusive, committed hours) for each rolling window."""
    out = []
    t0 = 0
    while True:
        t1 = min(t0 + length, hours) - 1
        if t1 == hours - 1:
            out.append((t0, t1, t1 - t0 + 1))
            return out
        out.append((t0, t1, step))
        t0 += step


def _carry(state: CommitmentState, sol: UcSolution, n: int) -> CommitmentState:
    k = state.u.shape[1]
    u = np.concatenate([state.u, sol.u[:, :n]], axis=1)[:, -k:]
    su = np.concatenate([state.su, sol.su[:, :n]], axis=1)[:, -k:]
    sd = np.concatenate([state.sd, sol.sd[:, :n]], axis=1)[:, -k:]
    soc = sol.soc[:, n - 1].copy() if sol.soc.shape[0] else state.soc.copy()
    return CommitmentState(u.astype(float), su.astype(float), sd.astype(float), soc)


def solve_rolling_horizon(system: PowerSystem, ptdf: np.ndarray, scenario, la: float = 0.0,
                          options: SolverOptions | None = None, params: UcParams = UcParams(),
                          inputs: MonthInputs | None = None,
                          initial: CommitmentState | None = None) -> UcSolution:
    """Solve a month as 168 h windows advancing 144 h and stitch the committed hours."""
    inputs = inputs if inputs is not None else month_inputs(system, scenario)
    state = initial or CommitmentState.cold_start(system)
    parts = []
    for k, (t0, t1, n) in enumerate(window_starts(inputs.hours)):
        window = make_window(inputs, t0, t1, state, la)
        try:
            sol = solve_window(system, ptdf, window, options, params)
        except SolverError as exc:
            exc.window = k
            raise
        committed = sol.slice(0, n)
        if n < sol.hours:
            # objective of the committed part only
            committed.objective = solution_cost(system, window, committed, params)
        parts.append(committed)
        state = _carry(state, sol, n)
    return UcSolution.concat(parts)


def solution_cost(system: PowerSystem, window: UcWindow, sol: UcSolution, params: UcParams = UcParams()) -> float:
    """Objective value of a (partial) solution, recomputed from dispatch."""
    T = sol.hours
    cost = 0.0
    for k, g in enumerate(system.thermal):
        remaining = sol.thermal_g[k].copy()
        for width, slope in g.blocks():
            take = np.minimum(remaining, width)
            cost += slope * take.sum()
            remaining = remaining - take
        cost += g.startup_cost * sol.su[k].sum() + g.shutdown_cost * sol.sd[k].sum()
    for k, s in enumerate(system.solar):
        cost += s.cost * sol.solar_g[k].sum() + params.curtail_multiplier * s.cost * sol.solar_curt[k].sum()
    for k, wf in enumerate(system.wind):
        cost += wf.cost * sol.wind_g[k].sum() + params.curtail_multiplier * wf.cost * sol.wind_curt[k].sum()
    for k, b in enumerate(system.storage):
        cost += b.cost * sol.charge[k].sum()
    cost += params.voll * sol.shed[:T].sum()
    return float(cost)


def month_window(inputs: MonthInputs, system: PowerSystem, la: float = 0.0,
                 initial: CommitmentState | None = None) -> UcWindow:
    """The whole month as one window (used to check stitched solutions)."""
    return make_window(inputs, 0, inputs.hours - 1, initial or CommitmentState.cold_start(system), la)


# --------------------------------------------------------------------------
# independent feasibility check


def dc_flows(system: PowerSystem, injections: np.ndarray) -> np.ndarray:
    """Line flows from a direct susceptance-matrix solve (no PTDF)."""
    idx = system.bus_index()
    n = len(system.buses)
    B = np.zeros((n, n))
    for ln in system.lines:
        i, j, b = idx[ln.from_bus], idx[ln.to_bus], 1.0 / ln.reactance
        B[i, i] += b
        B[j, j] += b
        B[i, j] -= b
        B[j, i] -= b
    s = idx[system.slack]
    keep = [k for k in range(n) if k != s]
    theta = np.zeros_like(injections, dtype=float)
    if keep:
        theta[keep] = np.linalg.solve(B[np.ix_(keep, keep)], injections[keep])
    return np.array([(theta[idx[ln.from_bus]] - theta[idx[ln.to_bus]]) / ln.reactance for ln in system.lines])


def check_solution_feasibility(system: PowerSystem, window: UcWindow, sol: UcSolution,
                               tol: float = 1e-6) -> list[str]:
    """Re-evaluate every UC constraint family from raw data; one string per violation.

    Tolerances are relative to the row scale (peak demand for balance and
    flows, unit ratings elsewhere).
    """
    v: list[str] = []
    T = window.hours
    h0 = window.t0
    dsys = window.system_demand()
    peak = max(1.0, float(dsys.max()) if T else 1.0)

    def hours(mask):
        return [h0 + int(k) for k in np.nonzero(mask)[0]]

    # power balance
    supply = sol.thermal_g.sum(0) + sol.solar_g.sum(0) + sol.wind_g.sum(0) + (sol.discharge - sol.charge).sum(0)
    resid = (dsys - sol.shed) - supply
    for h in hours(np.abs(resid) > tol * peak):
        v.append(f"balance: hour {h} residual {resid[h - h0]:.6g} MW")

    # transmission
    if len(system.lines):
        flows = dc_flows(system, nodal_injections(system, window, sol))
        over = np.abs(flows) - window.ratings
        for l, ln in enumerate(system.lines):
            for h in hours(over[l] > tol * peak):
                v.append(f"flow: line {ln.id} hour {h} |flow| {abs(flows[l, h - h0]):.6g} MW exceeds rating {window.ratings[l, h - h0]:.6g} MW")

    # thermal
    for k, g in enumerate(system.thermal):
        sc = tol * max(1.0, g.g_max)
        u, su, sd, gk = sol.u[k].astype(float), sol.su[k].astype(float), sol.sd[k].astype(float), sol.thermal_g[k]
        for name, arr in (("u", u), ("su", su), ("sd", sd)):
            if np.any((arr != 0) & (arr != 1)):
                v.append(f"integrality: thermal {g.id} {name} not binary")
        for h in hours(gk < g.g_min * u - sc):
            v.append(f"thermal_min: unit {g.id} hour {h} below minimum output")
        for h in hours(gk > window.thermal_avail[k] * u + sc):
            v.append(f"thermal_max: unit {g.id} hour {h} above derated capacity")
        hist_u = window.state.u[k]
        prev = np.concatenate([[hist_u[-1]], u[:-1]])
        for h in hours(np.abs((u - prev) - (su - sd)) > 1e-9):
            v.append(f"transition: unit {g.id} hour {h} u/su/sd inconsistent")
        all_su = np.concatenate([window.state.su[k], su])
        all_sd = np.concatenate([window.state.sd[k], sd])
        off = len(window.state.su[k])
        for t in range(T):
            a = off + t
            if all_su[max(0, a - g.min_up + 1):a + 1].sum() > u[t] + 1e-9:
                v.append(f"min_up: unit {g.id} hour {h0 + t} started within {g.min_up} h but offline")
            if all_sd[max(0, a - g.min_down + 1):a + 1].sum() > 1 - u[t] + 1e-9:
                v.append(f"min_down: unit {g.id} hour {h0 + t} stopped within {g.min_down} h but online")

    # renewables
    for k, s in enumerate(system.solar):
        sc = tol * max(1.0, s.nameplate)
        if np.any(sol.solar_g[k] < -sc):
            v.append(f"renewable: solar {s.id} negative output")
        for h in hours(np.abs(window.pv_max[k] - sol.solar_g[k] - sol.solar_curt[k]) > sc):
            v.append(f"curtailment: solar {s.id} hour {h} identity violated")
        for h in hours(sol.solar_curt[k] < -sc):
            v.append(f"curtailment: solar {s.id} hour {h} negative curtailment")
    wind_av = window.wind_available(system) if system.wind else np.zeros((0, T))
    for k, wf in enumerate(system.wind):
        sc = tol * max(1.0, wf.nameplate)
        if np.any(sol.wind_g[k] < -sc):
            v.append(f"renewable: wind {wf.id} negative output")
        for h in hours(np.abs(wind_av[k] - sol.wind_g[k] - sol.wind_curt[k]) > sc):
            v.append(f"curtailment: wind {wf.id} hour {h} identity violated")
        for h in hours(sol.wind_curt[k] < -sc):
            v.append(f"curtailment: wind {wf.id} hour {h} negative curtailment")

    # storage
    for k, b in enumerate(system.storage):
        sc = tol * max(1.0, b.energy, b.charge_max, b.discharge_max)
        soc = sol.soc[k]
        for h in hours((soc < b.soc_min - tol) | (soc > b.soc_max + tol)):
            v.append(f"soc_limits: storage {b.id} hour {h} SOC {soc[h - h0]:.6g} outside limits")
        for h in hours((sol.charge[k] < -sc) | (sol.charge[k] > b.charge_max * sol.ch[k] + sc)):
            v.append(f"charge_limit: storage {b.id} hour {h}")
        for h in hours((sol.discharge[k] < -sc) | (sol.discharge[k] > b.discharge_max * sol.dis[k] + sc)):
            v.append(f"discharge_limit: storage {b.id} hour {h}")
        for h in hours(sol.ch[k].astype(int) + sol.dis[k].astype(int) > 1):
            v.append(f"exclusivity: storage {b.id} hour {h} charging and discharging")
        prev = np.concatenate([[window.state.soc[k]], soc[:-1]])
        resid = soc * b.energy - (prev * b.energy + sol.charge[k] * b.eta_charge - sol.discharge[k] / b.eta_discharge)
        for h in hours(np.abs(resid) > sc):
            v.append(f"soc_recursion: storage {b.id} hour {h} energy residual {resid[h - h0]:.6g} MWh")

    # shedding
    for h in hours(sol.shed < -tol * peak):
        v.append(f"shed: hour {h} negative shedding")
    for h in hours(sol.shed > sol.ls * dsys + tol * peak):
        v.append(f"shed: hour {h} shedding exceeds gated demand")
    nodal = system.load_weights[:, None] * sol.shed[None, :]
    for h in hours(np.any(np.abs(nodal - sol.shed_nodal) > tol * peak, axis=0)):
        v.append(f"shed_distribution: hour {h} nodal shedding not proportional to load weights")
    return v
