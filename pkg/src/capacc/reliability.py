"""Loss-of-load hours from UC solutions and the load-adjustment search."""
from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import InputError, NonBracketableError
from .grid import PowerSystem, build_ptdf
from .milp import SolverOptions
from .uc import MonthInputs, UcParams, month_inputs, solve_rolling_horizon

log = logging.getLogger(__name__)

SHED_TOLERANCE = 1e-3  # MW
EPSILON_LA = 1.0  # MW
TARGET_LOLH = 0.2  # h/month
INITIAL_STEP_FRACTION = 0.01
MAX_LA_FRACTION = 0.5


@dataclass
class LolhResult:
    counts: np.ndarray  # shed hours per scenario
    mean: float
    shed_tolerance: float = SHED_TOLERANCE


def shed_hours(shed, shed_tolerance: float = SHED_TOLERANCE) -> int:
    return int(np.count_nonzero(np.asarray(shed) > shed_tolerance))


def compute_lolh(solutions: Sequence, shed_tolerance: float = SHED_TOLERANCE) -> LolhResult:
    """Mean over scenarios of the number of hours whose system shed exceeds the tolerance."""
    if len(solutions) == 0:
        raise InputError("compute_lolh needs at least one solution")
    counts = np.array([shed_hours(getattr(s, "shed", s), shed_tolerance) for s in solutions], dtype=np.int64)
    return LolhResult(counts, float(counts.mean()), shed_tolerance)


@dataclass
class TraceRow:
    iteration: int
    la: float
    lolh: float
    la_min: float
    la_max: float


@dataclass
class LoadAdjustmentResult:
    la: float
    la_min: float
    la_max: float
    iterations: int
    expansions: int
    trace: list[TraceRow]
    converged: bool
    per_scenario: list["LoadAdjustmentResult"] = field(default_factory=list)

    def write_trace(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iteration", "la_mw", "mean_lolh", "la_min", "la_max"])
            for r in self.trace:
                w.writerow([r.iteration, repr(float(r.la)), repr(float(r.lolh)),
                            repr(float(r.la_min)), repr(float(r.la_max))])


def search_load_adjustment(evaluate: Callable[[float], float], target: float, peak_demand: float,
                           epsilon: float = EPSILON_LA, start: float = 0.0,
                           max_fraction: float = MAX_LA_FRACTION, max_iter: int = 200,
                           label: str = "") -> LoadAdjustmentResult:
    """Bracket then bisect LA so that ``evaluate(LA)`` (mean LOLH, nondecreasing) meets ``target``.

    The bracket grows from ``start`` in steps of 1 % of peak demand, doubling
    each time, and never reaches beyond +/- ``max_fraction`` of peak.
    """
    if not target > 0:
        raise InputError(f"target LOLH must be > 0, got {target}")
    if not epsilon > 0:
        raise InputError(f"epsilon_LA must be > 0, got {epsilon}")
    if not peak_demand > 0:
        raise InputError(f"peak demand must be > 0, got {peak_demand}")
    lo, hi = -math.inf, math.inf
    trace: list[TraceRow] = []

    def probe(la: float) -> float:
        val = float(evaluate(la))
        nonlocal lo, hi
        if val < target:
            lo = max(lo, la) if math.isfinite(lo) else la
        elif val > target:
            hi = min(hi, la) if math.isfinite(hi) else la
        trace.append(TraceRow(len(trace) + 1, la, val, lo, hi))
        log.debug("%s LA %.6g -> LOLH %.6g [%.6g, %.6g]", label, la, val, lo, hi)
        return val

    def done(la):
        return LoadAdjustmentResult(la, lo, hi, len(trace), expansions, trace, True)

    limit = max_fraction * peak_demand
    step = INITIAL_STEP_FRACTION * peak_demand
    val = probe(start)
    expansions = 1
    if val == target:
        return done(start)
    direction = 1.0 if val < target else -1.0
    while not (math.isfinite(lo) and math.isfinite(hi)):
        la = start + direction * step
        if abs(la) >= limit:
            la = direction * limit
        val = probe(la)
        expansions += 1
        if val == target:
            return done(la)
        if math.isfinite(lo) and math.isfinite(hi):
            break
        if abs(la) >= limit:
            at = "+" if direction > 0 else "-"
            raise NonBracketableError(
                f"{label or 'search'}: mean LOLH {val:.6g} h/month at LA = {at}{max_fraction:.0%} of peak "
                f"({la:.6g} MW) still {'below' if direction > 0 else 'above'} target {target}; "
                f"bracket [{lo:.6g}, {hi:.6g}] MW",
                low=lo, high=hi, variant=label,
            )
        step *= 2.0
    while hi - lo > epsilon:
        if len(trace) >= max_iter:
            log.warning("%s: LA search stopped at %d iterations", label, len(trace))
            r = done(0.5 * (lo + hi))
            r.converged = False
            return r
        mid = 0.5 * (lo + hi)
        if probe(mid) == target:
            return done(mid)
    return done(0.5 * (lo + hi))


class LolhEvaluator:
    """Mean LOLH of one system variant over a fixed scenario set, memoized per LA."""

    def __init__(self, system: PowerSystem, scenarios: Sequence, options: SolverOptions | None = None,
                 params: UcParams = UcParams(), shed_tolerance: float = SHED_TOLERANCE, threads: int = 1,
                 inputs: list[MonthInputs] | None = None):
        if len(scenarios) == 0:
            raise InputError("scenario set is empty")
        self.system = system
        self.scenarios = list(scenarios)
        self.options = options or SolverOptions()
        self.params = params
        self.shed_tolerance = shed_tolerance
        self.threads = max(1, int(threads))
        self.ptdf = build_ptdf(system)
        self.inputs = inputs or [month_inputs(system, s) for s in self.scenarios]
        self.cache: dict[float, LolhResult] = {}
        self.solves = 0

    @property
    def peak_demand(self) -> float:
        return float(max(inp.demand.max() for inp in self.inputs))

    def scenario_shed_hours(self, k: int, la: float) -> int:
        sol = solve_rolling_horizon(self.system, self.ptdf, self.scenarios[k], la, self.options,
                                    self.params, inputs=self.inputs[k])
        return shed_hours(sol.shed, self.shed_tolerance)

    def result(self, la: float) -> LolhResult:
        la = float(la)
        if la not in self.cache:
            n = len(self.scenarios)
            if self.threads > 1 and n > 1:
                with ThreadPoolExecutor(self.threads) as pool:
                    counts = list(pool.map(lambda k: self.scenario_shed_hours(k, la), range(n)))
            else:
                counts = [self.scenario_shed_hours(k, la) for k in range(n)]
            self.solves += n
            arr = np.array(counts, dtype=np.int64)
            self.cache[la] = LolhResult(arr, float(arr.mean()), self.shed_tolerance)
        return self.cache[la]

    def __call__(self, la: float) -> float:
        return self.result(la).mean


def find_load_adjustment(system: PowerSystem, scenarios: Sequence, target_lolh: float = TARGET_LOLH,
                         epsilon_la: float = EPSILON_LA, options: SolverOptions | None = None,
                         params: UcParams = UcParams(), threads: int = 1, per_scenario: bool = False,
                         label: str = "", evaluator: LolhEvaluator | None = None) -> LoadAdjustmentResult:
    """LA at which the mean monthly LOLH over ``scenarios`` meets ``target_lolh``.

    With ``per_scenario`` the search runs once per scenario and the LA values
    are averaged; the combined trace is that of the first scenario.
    """
    ev = evaluator or LolhEvaluator(system, scenarios, options, params, threads=threads)
    if not per_scenario:
        return search_load_adjustment(ev, target_lolh, ev.peak_demand, epsilon_la, label=label)
    parts = []
    for k in range(len(ev.scenarios)):
        sub = LolhEvaluator(system, [ev.scenarios[k]], ev.options, ev.params, ev.shed_tolerance,
                            inputs=[ev.inputs[k]])
        parts.append(search_load_adjustment(sub, target_lolh, sub.peak_demand, epsilon_la,
                                            label=f"{label}[{k}]"))
    las = np.array([p.la for p in parts])
    return LoadAdjustmentResult(
        la=float(las.mean()),
        la_min=float(np.mean([p.la_min for p in parts])),
        la_max=float(np.mean([p.la_max for p in parts])),
        iterations=sum(p.iterations for p in parts),
        expansions=sum(p.expansions for p in parts),
        trace=parts[0].trace,
        converged=all(p.converged for p in parts),
        per_scenario=parts,
    )
