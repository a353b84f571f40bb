"""Network and fleet representation, PTDF construction and ambient-adjusted line ratings."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import StructuralError, ValidationError


@dataclass(frozen=True)
class Bus:
    id: int
    load_weight: float


@dataclass(frozen=True)
class TransmissionLine:
    id: int
    from_bus: int
    to_bus: int
    reactance: float  # p.u.
    capacity: float  # MW
    # (upper temperature bound degC, derating coefficient); last bound is +inf
    aar_table: tuple[tuple[float, float], ...] = ((math.inf, 1.0),)


@dataclass(frozen=True)
class ThermalGenerator:
    id: str
    bus: int
    g_min: float
    g_max: float
    min_up: int = 1
    min_down: int = 1
    startup_cost: float = 0.0
    shutdown_cost: float = 0.0
    # (MW breakpoint, $/MWh slope) per block, breakpoints cumulative from 0
    cost_curve: tuple[tuple[float, float], ...] = ()
    # ascending powers of air temperature: c0 + c1*T + ... + c4*T^4
    for_poly: tuple[float, ...] = (0.0, 0.0, 0.0, 0.0, 0.0)
    for_range: tuple[float, float] = (-math.inf, math.inf)

    def blocks(self) -> list[tuple[float, float]]:
        """(width MW, slope $/MWh) for each cost block, truncated at g_max."""
        if not self.cost_curve:
            return [(self.g_max, 0.0)]
        out = []
        prev = 0.0
        for bp, slope in self.cost_curve:
            top = min(bp, self.g_max)
            if top > prev:
                out.append((top - prev, slope))
            prev = max(prev, top)
        return out


@dataclass(frozen=True)
class SolarFarm:
    id: str
    bus: int
    nameplate: float  # MW
    noct: float = 45.0
    temp_coeff: float = 0.004  # 1/degC
    efficiency: float = 1.0
    cost: float = 0.0  # $/MWh LCOE


@dataclass(frozen=True)
class WindFarm:
    id: str
    bus: int
    nameplate: float
    efficiency: float = 1.0
    v_cut_in: float = 3.0
    v_rated: float = 12.0
    v_cut_out: float = 25.0
    # c3, c2, c1, c0 of the partial-load cubic (MW)
    cubic: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)
    cost: float = 0.0
    hurricane_exposed: bool = True
    site: int = 1  # 1-based wind column in the weather archive


@dataclass(frozen=True)
class StorageUnit:
    id: str
    bus: int
    energy: float  # MWh
    charge_max: float  # MW
    discharge_max: float  # MW
    soc_min: float = 0.0
    soc_max: float = 1.0
    eta_charge: float = 1.0
    eta_discharge: float = 1.0
    cost: float = 0.0  # $/MWh charged
    soc_initial: float = 0.5


@dataclass(frozen=True)
class PowerSystem:
    buses: tuple[Bus, ...]
    lines: tuple[TransmissionLine, ...]
    thermal: tuple[ThermalGenerator, ...] = ()
    solar: tuple[SolarFarm, ...] = ()
    wind: tuple[WindFarm, ...] = ()
    storage: tuple[StorageUnit, ...] = ()
    slack_bus: int | None = None

    @property
    def bus_ids(self) -> list[int]:
        return [b.id for b in self.buses]

    def bus_index(self) -> dict[int, int]:
        return {b.id: k for k, b in enumerate(self.buses)}

    @property
    def load_weights(self) -> np.ndarray:
        return np.array([b.load_weight for b in self.buses], dtype=float)

    @property
    def slack(self) -> int:
        return self.buses[0].id if self.slack_bus is None else self.slack_bus

    def resources(self) -> dict[str, SolarFarm | WindFarm | StorageUnit]:
        out: dict[str, SolarFarm | WindFarm | StorageUnit] = {}
        for r in (*self.solar, *self.wind, *self.storage):
            out[r.id] = r
        return out

    def with_resources(self, resources: Iterable[SolarFarm | WindFarm | StorageUnit]) -> "PowerSystem":
        """Copy of this system with the given renewable/storage units appended."""
        solar = list(self.solar)
        wind = list(self.wind)
        storage = list(self.storage)
        for r in resources:
            if isinstance(r, SolarFarm):
                solar.append(r)
            elif isinstance(r, WindFarm):
                wind.append(r)
            elif isinstance(r, StorageUnit):
                storage.append(r)
            else:
                raise TypeError(f"not an accreditable resource: {r!r}")
        return replace(self, solar=tuple(solar), wind=tuple(wind), storage=tuple(storage))

    def scale_lines(self, scales: dict[int, float]) -> "PowerSystem":
        lines = tuple(
            replace(ln, capacity=ln.capacity * scales[ln.id]) if ln.id in scales else ln
            for ln in self.lines
        )
        return replace(self, lines=lines)


# --------------------------------------------------------------------------
# PTDF


def _incidence(system: PowerSystem) -> np.ndarray:
    idx = system.bus_index()
    a = np.zeros((len(system.lines), len(system.buses)))
    for k, ln in enumerate(system.lines):
        a[k, idx[ln.from_bus]] = 1.0
        a[k, idx[ln.to_bus]] = -1.0
    return a


def check_connected(system: PowerSystem) -> None:
    idx = system.bus_index()
    n = len(system.buses)
    rows = [idx[ln.from_bus] for ln in system.lines]
    cols = [idx[ln.to_bus] for ln in system.lines]
    adj = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    ncomp, labels = connected_components(adj, directed=False)
    if ncomp > 1:
        main = labels[idx[system.slack]]
        isolated = sorted(system.buses[k].id for k in range(n) if labels[k] != main)
        raise StructuralError(f"network is disconnected; buses {isolated} are not connected to slack bus {system.slack}")


def build_ptdf(system: PowerSystem) -> np.ndarray:
    """Injection shift factors, shape (lines, buses).

    Flow on line l (from->to positive) is ``ptdf[l] @ injection`` for any
    balanced nodal injection vector. The slack column is identically zero.
    """
    for ln in system.lines:
        if not ln.reactance > 0:
            raise ValidationError(f"line {ln.id}: reactance must be > 0, got {ln.reactance}")
    if system.slack not in system.bus_index():
        raise StructuralError(f"slack bus {system.slack} does not exist")
    check_connected(system)

    a = _incidence(system)
    b = np.array([1.0 / ln.reactance for ln in system.lines])
    bbus = a.T @ (b[:, None] * a)
    s = system.bus_index()[system.slack]
    keep = [k for k in range(len(system.buses)) if k != s]
    ptdf = np.zeros((len(system.lines), len(system.buses)))
    if keep:
        bred = bbus[np.ix_(keep, keep)]
        # theta_red = inv(bred) @ p_red; flow = diag(b) a theta
        ptdf[:, keep] = np.linalg.solve(bred.T, (b[:, None] * a[:, keep]).T).T
    return ptdf


# --------------------------------------------------------------------------
# line ratings


def aar_coefficient(line: TransmissionLine, air_temp):
    """Derating coefficient(s); boundary temperatures fall in the cooler band."""
    bounds = np.array([row[0] for row in line.aar_table])
    coefs = np.array([row[1] for row in line.aar_table])
    k = np.searchsorted(bounds, np.asarray(air_temp, dtype=float), side="left")
    k = np.minimum(k, len(coefs) - 1)
    return coefs[k]


def line_rating(line: TransmissionLine, air_temp):
    """Ambient-adjusted transfer limit in MW; vectorised over ``air_temp``."""
    out = line.capacity * aar_coefficient(line, air_temp)
    return float(out) if np.ndim(out) == 0 else out


# --------------------------------------------------------------------------
# validation


def _check_unique(label: str, ids: Sequence, out: list[str]) -> None:
    seen = set()
    for i in ids:
        if i in seen:
            out.append(f"{label} {i}: duplicate id")
        seen.add(i)


def validate_system(system: PowerSystem) -> list[str]:
    """Return one human-readable string per violated invariant (empty when valid)."""
    v: list[str] = []
    bus_ids = set(system.bus_ids)
    _check_unique("bus", system.bus_ids, v)
    _check_unique("line", [ln.id for ln in system.lines], v)
    _check_unique("thermal", [g.id for g in system.thermal], v)
    _check_unique("resource", [r.id for r in (*system.solar, *system.wind, *system.storage)], v)

    w = system.load_weights
    if np.any(w < 0):
        v.append("buses: load weights must be >= 0")
    if abs(w.sum() - 1.0) > 1e-9:
        v.append(f"buses: load weights must sum to 1 (weight-sum rule), got {w.sum():.12g}")

    if system.slack not in bus_ids:
        v.append(f"system: slack bus {system.slack} does not exist")

    for ln in system.lines:
        tag = f"line {ln.id}"
        if ln.from_bus not in bus_ids or ln.to_bus not in bus_ids:
            v.append(f"{tag}: endpoint bus does not exist")
        if ln.from_bus == ln.to_bus:
            v.append(f"{tag}: from_bus equals to_bus")
        if not ln.reactance > 0:
            v.append(f"{tag}: reactance must be > 0")
        if not ln.capacity > 0:
            v.append(f"{tag}: capacity must be > 0")
        if not ln.aar_table:
            v.append(f"{tag}: empty AAR table")
            continue
        bounds = [row[0] for row in ln.aar_table]
        if any(b2 <= b1 for b1, b2 in zip(bounds, bounds[1:])):
            v.append(f"{tag}: AAR temperature bounds must be strictly increasing")
        if bounds[-1] != math.inf:
            v.append(f"{tag}: last AAR band must cover +inf")
        if any(not (0.0 < c <= 1.5) for _, c in ln.aar_table):
            v.append(f"{tag}: AAR coefficients must lie in (0, 1.5]")

    for g in system.thermal:
        tag = f"thermal {g.id}"
        if g.bus not in bus_ids:
            v.append(f"{tag}: bus {g.bus} does not exist")
        if not (0 <= g.g_min <= g.g_max):
            v.append(f"{tag}: requires 0 <= g_min <= g_max")
        if g.min_up < 1 or g.min_down < 1:
            v.append(f"{tag}: min up/down times must be >= 1 h")
        slopes = [s for _, s in g.cost_curve]
        if any(s2 < s1 for s1, s2 in zip(slopes, slopes[1:])):
            v.append(f"{tag}: cost curve slopes must be nondecreasing (convexity)")
        bps = [b for b, _ in g.cost_curve]
        if any(b2 <= b1 for b1, b2 in zip(bps, bps[1:])) or (bps and bps[0] <= 0):
            v.append(f"{tag}: cost breakpoints must be positive and strictly increasing")
        if bps and bps[-1] < g.g_max:
            v.append(f"{tag}: cost curve must extend to g_max")
        if len(g.for_poly) != 5:
            v.append(f"{tag}: FOR polynomial needs 5 coefficients")
        if g.startup_cost < 0 or g.shutdown_cost < 0:
            v.append(f"{tag}: start/stop costs must be >= 0")

    for s in system.solar:
        tag = f"solar {s.id}"
        if s.bus not in bus_ids:
            v.append(f"{tag}: bus {s.bus} does not exist")
        if not s.nameplate > 0:
            v.append(f"{tag}: nameplate must be > 0")
        if not (0 < s.efficiency <= 1):
            v.append(f"{tag}: efficiency must lie in (0, 1]")
        if s.temp_coeff < 0:
            v.append(f"{tag}: temperature coefficient must be >= 0")

    for wf in system.wind:
        tag = f"wind {wf.id}"
        if wf.bus not in bus_ids:
            v.append(f"{tag}: bus {wf.bus} does not exist")
        if not wf.nameplate > 0:
            v.append(f"{tag}: nameplate must be > 0")
        if not (0 < wf.efficiency <= 1):
            v.append(f"{tag}: efficiency must lie in (0, 1]")
        if not (0 < wf.v_cut_in < wf.v_rated < wf.v_cut_out):
            v.append(f"{tag}: speed-ordering rule 0 < v_ci < v_r < v_co violated")

    for b in system.storage:
        tag = f"storage {b.id}"
        if b.bus not in bus_ids:
            v.append(f"{tag}: bus {b.bus} does not exist")
        if not (0 <= b.soc_min < b.soc_max <= 1):
            v.append(f"{tag}: requires 0 <= soc_min < soc_max <= 1")
        if not (0 < b.eta_charge <= 1 and 0 < b.eta_discharge <= 1):
            v.append(f"{tag}: efficiencies must lie in (0, 1]")
        if b.energy <= 0 or b.charge_max < 0 or b.discharge_max < 0:
            v.append(f"{tag}: energy must be > 0 and power limits >= 0")
        if not (b.soc_min <= b.soc_initial <= b.soc_max):
            v.append(f"{tag}: initial SOC outside [soc_min, soc_max]")

    if not v and system.lines:
        try:
            check_connected(system)
        except StructuralError as exc:
            v.append(f"system: {exc}")
    return v


# --------------------------------------------------------------------------
# serialisation

_INF = "inf"


def _enc_temp(x: float):
    return _INF if x == math.inf else x


def _dec_temp(x) -> float:
    return math.inf if x in (_INF, "Infinity", None) else float(x)


def system_to_dict(system: PowerSystem) -> dict:
    d = {
        "slack_bus": system.slack,
        "buses": [asdict(b) for b in system.buses],
        "lines": [],
        "thermal": [],
        "solar": [asdict(s) for s in system.solar],
        "wind": [],
        "storage": [asdict(b) for b in system.storage],
    }
    for ln in system.lines:
        row = asdict(ln)
        row["aar_table"] = [[_enc_temp(t), c] for t, c in ln.aar_table]
        d["lines"].append(row)
    for g in system.thermal:
        row = asdict(g)
        row["cost_curve"] = [list(x) for x in g.cost_curve]
        row["for_poly"] = list(g.for_poly)
        row["for_range"] = [None if not math.isfinite(x) else x for x in g.for_range]
        d["thermal"].append(row)
    for wf in system.wind:
        row = asdict(wf)
        row["cubic"] = list(wf.cubic)
        d["wind"].append(row)
    return d


def system_from_dict(d: dict) -> PowerSystem:
    buses = tuple(Bus(int(b["id"]), float(b["load_weight"])) for b in d["buses"])
    lines = tuple(
        TransmissionLine(
            id=int(ln["id"]),
            from_bus=int(ln["from_bus"]),
            to_bus=int(ln["to_bus"]),
            reactance=float(ln["reactance"]),
            capacity=float(ln["capacity"]),
            aar_table=tuple((_dec_temp(t), float(c)) for t, c in ln.get("aar_table", [[_INF, 1.0]])),
        )
        for ln in d["lines"]
    )
    thermal = []
    for g in d.get("thermal", []):
        rng = g.get("for_range", [None, None])
        thermal.append(
            ThermalGenerator(
                id=str(g["id"]),
                bus=int(g["bus"]),
                g_min=float(g["g_min"]),
                g_max=float(g["g_max"]),
                min_up=int(g.get("min_up", 1)),
                min_down=int(g.get("min_down", 1)),
                startup_cost=float(g.get("startup_cost", 0.0)),
                shutdown_cost=float(g.get("shutdown_cost", 0.0)),
                cost_curve=tuple((float(a), float(b)) for a, b in g.get("cost_curve", [])),
                for_poly=tuple(float(c) for c in g.get("for_poly", [0.0] * 5)),
                for_range=(
                    -math.inf if rng[0] is None else float(rng[0]),
                    math.inf if rng[1] is None else float(rng[1]),
                ),
            )
        )
    solar = tuple(SolarFarm(**{**s, "id": str(s["id"])}) for s in d.get("solar", []))
    wind = tuple(
        WindFarm(**{**w, "id": str(w["id"]), "cubic": tuple(w.get("cubic", (0.0,) * 4))})
        for w in d.get("wind", [])
    )
    storage = tuple(StorageUnit(**{**b, "id": str(b["id"])}) for b in d.get("storage", []))
    slack = d.get("slack_bus")
    return PowerSystem(
        buses=buses,
        lines=lines,
        thermal=tuple(thermal),
        solar=solar,
        wind=wind,
        storage=storage,
        slack_bus=None if slack is None else int(slack),
    )


def resource_to_dict(r) -> dict:
    kind = {SolarFarm: "solar", WindFarm: "wind", StorageUnit: "storage"}[type(r)]
    row = asdict(r)
    if isinstance(r, WindFarm):
        row["cubic"] = list(r.cubic)
    return {"kind": kind, **row}


def resource_from_dict(d: dict):
    d = dict(d)
    kind = d.pop("kind")
    d["id"] = str(d["id"])
    if kind == "solar":
        return SolarFarm(**d)
    if kind == "wind":
        d["cubic"] = tuple(d.get("cubic", (0.0,) * 4))
        return WindFarm(**d)
    if kind == "storage":
        return StorageUnit(**d)
    raise ValidationError(f"unknown resource kind {kind!r}")


def load_system(path: str | Path) -> PowerSystem:
    with open(path) as fh:
        return system_from_dict(json.load(fh))


def save_system(system: PowerSystem, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(system_to_dict(system), fh, indent=2)
        fh.write("\n")
