"""Portfolio accreditation: base/FI/LI/portfolio load adjustments and the Delta allocation."""
from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .errors import InputError, NonBracketableError, ValidationError
from .grid import PowerSystem, SolarFarm, StorageUnit, WindFarm, resource_to_dict, system_to_dict
from .milp import SolverOptions
from .reliability import (EPSILON_LA, TARGET_LOLH, LoadAdjustmentResult, LolhEvaluator,
                          find_load_adjustment)
from .uc import UcParams

log = logging.getLogger(__name__)

Resource = SolarFarm | WindFarm | StorageUnit


def resource_class(r: Resource) -> str:
    if isinstance(r, SolarFarm):
        return "solar"
    if isinstance(r, WindFarm):
        return "wind"
    if isinstance(r, StorageUnit):
        return "storage"
    raise TypeError(f"not an accreditable resource: {r!r}")


def resource_rating(r: Resource) -> float:
    """MW used as the percentage denominator (storage: discharge power rating)."""
    return float(r.discharge_max if isinstance(r, StorageUnit) else r.nameplate)


# --------------------------------------------------------------------------
# allocation


@dataclass(frozen=True)
class DeltaAllocation:
    pie: float
    iie: np.ndarray
    delta: float  # nan when degenerate
    elcc: np.ndarray
    degenerate: bool = False


def delta_allocate(port: float, fi, li) -> DeltaAllocation:
    """Split PORT into per-resource ELCC: LI plus a delta-share of each interactive effect."""
    fi = np.asarray(fi, dtype=float)
    li = np.asarray(li, dtype=float)
    if fi.shape != li.shape or fi.ndim != 1 or len(fi) == 0:
        raise InputError(f"FI and LI must be equal-length nonempty vectors, got {fi.shape} and {li.shape}")
    pie = float(port - li.sum())
    iie = fi - li
    s = float(iie.sum())
    scale = max(1.0, abs(port), float(np.abs(fi).max()), float(np.abs(li).max()))
    if abs(s) > 1e-12 * scale:
        delta = pie / s
        return DeltaAllocation(pie, iie, delta, li + delta * iie)
    if abs(pie) <= 1e-12 * scale:
        return DeltaAllocation(pie, iie, 0.0, li.copy())
    # no interactive effect to scale: share PIE in proportion to LI (equally if LI sums to 0)
    tot = float(li.sum())
    share = li / tot if abs(tot) > 1e-12 * scale else np.full(len(li), 1.0 / len(li))
    log.warning("degenerate Delta allocation: sum of IIE is 0 while PIE = %.6g MW", pie)
    return DeltaAllocation(pie, iie, math.nan, li + pie * share, degenerate=True)


# --------------------------------------------------------------------------
# study specification and results


@dataclass(frozen=True)
class PortfolioSpec:
    base: PowerSystem
    resources: tuple[Resource, ...]

    def __post_init__(self):
        if len(self.resources) == 0:
            raise ValidationError("portfolio needs at least one accredited resource")
        ids = [r.id for r in self.resources]
        if len(set(ids)) != len(ids):
            raise ValidationError(f"duplicate accredited resource ids: {ids}")
        clash = set(ids) & set(self.base.resources()) | set(ids) & {g.id for g in self.base.thermal}
        if clash:
            raise ValidationError(f"accredited ids already present in the base system: {sorted(clash)}")
        buses = set(self.base.bus_ids)
        for r in self.resources:
            resource_class(r)
            if r.bus not in buses:
                raise ValidationError(f"resource {r.id} sits on unknown bus {r.bus}")

    @classmethod
    def from_system(cls, system: PowerSystem, ids: Sequence[str] | None = None) -> "PortfolioSpec":
        """Split ``system`` into a base without ``ids`` and those resources (default: all of them)."""
        res = system.resources()
        ids = list(res) if ids is None else list(ids)
        missing = [i for i in ids if i not in res]
        if missing:
            raise ValidationError(f"accredited ids not found in system: {missing}")
        chosen = set(ids)
        base = replace(system,
                       solar=tuple(r for r in system.solar if r.id not in chosen),
                       wind=tuple(r for r in system.wind if r.id not in chosen),
                       storage=tuple(r for r in system.storage if r.id not in chosen))
        return cls(base, tuple(res[i] for i in ids))

    @property
    def ids(self) -> list[str]:
        return [r.id for r in self.resources]

    def variant(self, ids: Sequence[str]) -> PowerSystem:
        keep = set(ids)
        return self.base.with_resources(r for r in self.resources if r.id in keep)

    def variants(self) -> list[tuple[str, tuple[str, ...]]]:
        """(label, sorted resource subset) for base, portfolio, FI_j and LI_j."""
        all_ids = tuple(sorted(self.ids))
        out = [("base", ()), ("portfolio", all_ids)]
        out += [(f"fi:{j}", (j,)) for j in self.ids]
        out += [(f"li:{j}", tuple(sorted(set(all_ids) - {j}))) for j in self.ids]
        return out


@dataclass
class ResourceCredit:
    id: str
    kind: str
    bus: int
    nameplate_mw: float
    fi_mw: float
    li_mw: float
    iie_mw: float
    elcc_mw: float

    @property
    def elcc_pct(self) -> float:
        return 100.0 * self.elcc_mw / self.nameplate_mw if self.nameplate_mw else math.nan

    @property
    def li_pct(self) -> float:
        return 100.0 * self.li_mw / self.nameplate_mw if self.nameplate_mw else math.nan


@dataclass
class AccreditationResult:
    resources: list[ResourceCredit]
    port_mw: float
    pie_mw: float
    delta: float
    degenerate: bool
    la_mw: dict[str, float]
    target_lolh: float
    epsilon_la: float
    seed: int | None = None
    month: int | None = None
    eval_year: int | None = None
    n_scenarios: int = 0
    searches: int = 0  # LA searches actually run (cache misses)
    traces: dict[str, LoadAdjustmentResult] = field(default_factory=dict, repr=False)

    @property
    def elcc(self) -> dict[str, float]:
        return {r.id: r.elcc_mw for r in self.resources}

    def to_dict(self) -> dict:
        rows = []
        for r in self.resources:
            d = asdict(r)
            d["elcc_pct_nameplate"] = _clean(r.elcc_pct)
            rows.append(d)
        return {
            "resources": rows,
            "study": {
                "port_mw": self.port_mw,
                "pie_mw": self.pie_mw,
                "delta": _clean(self.delta),
                "degenerate_allocation": self.degenerate,
                "la_mw": dict(sorted(self.la_mw.items())),
                "target_lolh_h_per_month": self.target_lolh,
                "epsilon_la_mw": self.epsilon_la,
                "seed": self.seed,
                "month": self.month,
                "eval_year": self.eval_year,
                "scenarios": self.n_scenarios,
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(RESULT_COLUMNS)
            for r in self.resources:
                w.writerow([r.id, r.kind, r.bus, _fmt(r.nameplate_mw), _fmt(r.fi_mw), _fmt(r.li_mw),
                            _fmt(r.iie_mw), _fmt(r.elcc_mw), _fmt(r.elcc_pct)])


RESULT_COLUMNS = ["id", "class", "bus", "nameplate_mw", "fi_mw", "li_mw", "iie_mw", "elcc_mw", "elcc_pct"]
COMPARISON_COLUMNS = ["id", "class", "nameplate_mw", "traced_elcc_mw", "li_marginal_mw", "traced_pct", "li_pct"]


def _clean(x: float):
    return None if x is None or not math.isfinite(x) else float(x)


def _fmt(x: float) -> str:
    return "" if not math.isfinite(x) else repr(float(x))


def write_comparison_csv(result: AccreditationResult, path) -> None:
    """Plot-ready TRACED vs LI-marginal table."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(COMPARISON_COLUMNS)
        for r in result.resources:
            w.writerow([r.id, r.kind, _fmt(r.nameplate_mw), _fmt(r.elcc_mw), _fmt(r.li_mw),
                        _fmt(r.elcc_pct), _fmt(r.li_pct)])


# --------------------------------------------------------------------------
# orchestration


def _scenario_fingerprint(scenarios) -> str:
    fp = getattr(scenarios, "fingerprint", None)
    if callable(fp):
        return fp()
    h = hashlib.sha256()
    for s in scenarios:
        for name in ("temp", "ghi", "wind", "demand", "hurricane"):
            h.update(np.ascontiguousarray(np.asarray(getattr(s, name), dtype=float)).tobytes())
    return h.hexdigest()[:16]


class VariantCache:
    """LA search results keyed by study context and sorted resource subset."""

    def __init__(self):
        self._store: dict[tuple[str, tuple[str, ...]], LoadAdjustmentResult] = {}
        self.misses = 0

    def __len__(self):
        return len(self._store)

    def get(self, context: str, subset: tuple[str, ...]):
        return self._store.get((context, subset))

    def put(self, context: str, subset: tuple[str, ...], result: LoadAdjustmentResult) -> None:
        self._store[(context, subset)] = result


def study_context(spec: PortfolioSpec, scenarios, target: float, epsilon: float,
                  options: SolverOptions | None, params: UcParams) -> str:
    """Digest of everything an LA search depends on besides the resource subset."""
    opt = options or SolverOptions()
    payload = {
        "base": system_to_dict(spec.base),
        "resources": [resource_to_dict(r) for r in spec.resources],
        "scenarios": _scenario_fingerprint(scenarios),
        "target": target,
        "epsilon": epsilon,
        "params": asdict(params),
        "solver": {"engine": opt.engine, "gap_abs": opt.mip_gap_abs, "gap_rel": opt.mip_gap_rel},
    }
    return hashlib.sha256(json.dumps(payload, sort_keys=True, default=str).encode()).hexdigest()[:16]


SearchFn = Callable[[PowerSystem, str], LoadAdjustmentResult]


def _default_search(scenarios, target, epsilon, options, params, threads, per_scenario) -> SearchFn:
    def run(system: PowerSystem, label: str) -> LoadAdjustmentResult:
        ev = LolhEvaluator(system, scenarios, options, params, threads=threads)
        return find_load_adjustment(system, scenarios, target, epsilon, options, params,
                                    per_scenario=per_scenario, label=label, evaluator=ev)
    return run


def _run_variants(spec: PortfolioSpec, wanted: list[tuple[str, tuple[str, ...]]], context: str,
                  cache: VariantCache, search: SearchFn) -> tuple[dict[str, LoadAdjustmentResult], int]:
    out: dict[str, LoadAdjustmentResult] = {}
    runs = 0
    for label, subset in wanted:
        hit = cache.get(context, subset)
        if hit is None:
            log.info("LA search for %s (%s)", label, ",".join(subset) or "no resources")
            try:
                hit = search(spec.variant(subset), label)
            except NonBracketableError as exc:
                exc.variant = label
                raise NonBracketableError(f"variant {label}: {exc}", exc.low, exc.high, label) from exc
            cache.put(context, subset, hit)
            cache.misses += 1
            runs += 1
        out[label] = hit
    return out, runs


def compute_traced(spec: PortfolioSpec, scenarios, target_lolh: float = TARGET_LOLH,
                   epsilon_la: float = EPSILON_LA, options: SolverOptions | None = None,
                   params: UcParams = UcParams(), threads: int = 1, cache: VariantCache | None = None,
                   search: SearchFn | None = None, per_scenario: bool = False) -> AccreditationResult:
    """Delta-method ELCC for every accredited resource, all variants on the same scenarios."""
    cache = cache if cache is not None else VariantCache()
    search = search or _default_search(scenarios, target_lolh, epsilon_la, options, params, threads, per_scenario)
    context = study_context(spec, scenarios, target_lolh, epsilon_la, options, params)
    res, runs = _run_variants(spec, spec.variants(), context, cache, search)
    la = {k: v.la for k, v in res.items()}
    base, port_la = la["base"], la["portfolio"]
    port = port_la - base
    fi = np.array([la[f"fi:{j}"] - base for j in spec.ids])
    li = np.array([port_la - la[f"li:{j}"] for j in spec.ids])
    alloc = delta_allocate(port, fi, li)
    credits = [
        ResourceCredit(r.id, resource_class(r), r.bus, resource_rating(r), float(fi[k]), float(li[k]),
                       float(alloc.iie[k]), float(alloc.elcc[k]))
        for k, r in enumerate(spec.resources)
    ]
    first = scenarios[0] if len(scenarios) else None
    return AccreditationResult(
        resources=credits,
        port_mw=float(port),
        pie_mw=alloc.pie,
        delta=alloc.delta,
        degenerate=alloc.degenerate,
        la_mw=la,
        target_lolh=target_lolh,
        epsilon_la=epsilon_la,
        seed=getattr(scenarios, "master_seed", None),
        month=getattr(first, "month", None),
        eval_year=getattr(first, "eval_year", None),
        n_scenarios=len(scenarios),
        searches=runs,
        traces=res,
    )


def compute_li_marginal(spec: PortfolioSpec, scenarios, target_lolh: float = TARGET_LOLH,
                        epsilon_la: float = EPSILON_LA, options: SolverOptions | None = None,
                        params: UcParams = UcParams(), threads: int = 1, cache: VariantCache | None = None,
                        search: SearchFn | None = None) -> dict[str, float]:
    """Last-in marginal ELCC of each resource (the conventional baseline)."""
    cache = cache if cache is not None else VariantCache()
    search = search or _default_search(scenarios, target_lolh, epsilon_la, options, params, threads, False)
    context = study_context(spec, scenarios, target_lolh, epsilon_la, options, params)
    wanted = [v for v in spec.variants() if v[0] == "portfolio" or v[0].startswith("li:")]
    res, _ = _run_variants(spec, wanted, context, cache, search)
    port_la = res["portfolio"].la
    return {j: float(port_la - res[f"li:{j}"].la) for j in spec.ids}
