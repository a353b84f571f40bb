"""Deterministic synthetic systems and multi-year hourly archives for desk-scale studies."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from .climate import HOURS_PER_YEAR, HistoricalArchive, month_bounds
from .errors import StructuralError, ValidationError
from .grid import (Bus, PowerSystem, SolarFarm, StorageUnit, ThermalGenerator, TransmissionLine, WindFarm,
                   check_connected, validate_system)

AAR_TABLE = ((30.0, 1.0), (35.0, 0.95), (math.inf, 0.9))
FOR_POLY = (0.04, 0.0, 2e-5, 0.0, 0.0)  # 4 % forced outage, rising slowly with heat
FOR_RANGE = (-15.0, 40.0)
MAX_GRAPH_TRIES = 50


def wind_cubic(nameplate: float, v_ci: float = 3.0, v_r: float = 12.0) -> tuple[float, float, float, float]:
    """Coefficients (c3, c2, c1, c0) of nameplate * ((v - v_ci) / (v_r - v_ci))^3."""
    k = nameplate / (v_r - v_ci) ** 3
    return (k, -3 * k * v_ci, 3 * k * v_ci ** 2, -k * v_ci ** 3)


@dataclass
class FixtureSpec:
    n_buses: int = 3
    line_density: float = 1.0  # edge probability between bus pairs
    n_thermal: int = 3
    n_solar: int = 1
    n_wind: int = 1
    n_storage: int = 1
    peak_load: float = 400.0  # MW, typical summer peak
    thermal_margin: float = 1.05  # thermal nameplate / peak load
    congestion: bool = False
    congestion_capacity: float = 50.0  # MW rating of the line feeding the remote resource bus
    first_year: int = 1995
    n_years: int = 12
    temp_drift: float = 0.05  # degC/yr, identical in every month
    storm_rate: float = 1.0  # storms per year at the first year
    storm_trend: float = 0.01  # storms per year per year
    storm_months: tuple[int, ...] = (8, 9, 10)
    storm_duration: tuple[float, float] = (24.0, 6.0)  # mean, sd hours
    load_breakpoint: float = 18.0
    heating_slope: float = -4.0  # MW/degC below the breakpoint, per 400 MW of peak
    cooling_slope: float = 12.0
    wind_sites: int = 1
    steady_sites: int = 0  # extra wind columns with a constant 8-10 m/s breeze
    seed: int = 1

    def __post_init__(self):
        if self.n_buses < 2:
            raise ValidationError("fixture needs at least 2 buses")
        if not 0 < self.line_density <= 1:
            raise ValidationError("line_density must lie in (0, 1]")
        if self.n_thermal < 1:
            raise ValidationError("fixture needs at least one thermal unit")
        if self.n_years < 1:
            raise ValidationError("fixture needs at least one archive year")


# --------------------------------------------------------------------------
# network and fleet


def _random_edges(n: int, density: float, rng: np.random.Generator) -> list[tuple[int, int]]:
    pairs = [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)]
    for _ in range(MAX_GRAPH_TRIES):
        edges = [p for p in pairs if rng.random() < density]
        buses = tuple(Bus(i, 1.0 / n) for i in range(1, n + 1))
        lines = tuple(TransmissionLine(k + 1, a, b, 0.1, 1.0) for k, (a, b) in enumerate(edges))
        try:
            check_connected(PowerSystem(buses, lines))
            return edges
        except StructuralError:
            continue
    raise StructuralError(f"no connected network after {MAX_GRAPH_TRIES} draws at density {density}")


def make_system(spec: FixtureSpec) -> tuple[PowerSystem, list[str]]:
    """Synthetic system and the ids of its renewable/storage units (the portfolio to accredit)."""
    rng = np.random.default_rng([spec.seed, 11])
    n = spec.n_buses
    edges = _random_edges(n, spec.line_density, rng)
    weights = rng.dirichlet(np.full(n, 4.0))
    weights = np.round(weights, 6)
    weights[-1] = round(1.0 - weights[:-1].sum(), 6)
    buses = [Bus(i + 1, float(weights[i])) for i in range(n)]
    line_cap = 1.2 * spec.peak_load
    lines = [TransmissionLine(k + 1, a, b, float(np.round(rng.uniform(0.05, 0.2), 4)), line_cap, AAR_TABLE)
             for k, (a, b) in enumerate(edges)]

    # thermal fleet: one large cheap unit, mid-merit units, a peaker
    total = spec.thermal_margin * spec.peak_load
    shares = np.array([0.5] + [0.35 / max(1, spec.n_thermal - 2)] * max(0, spec.n_thermal - 2) + [0.15])[: spec.n_thermal]
    shares = shares / shares.sum()
    thermal = []
    for k, s in enumerate(shares):
        gmax = float(np.round(total * s, 1))
        slope = 20.0 + 60.0 * k / max(1, spec.n_thermal - 1)
        bus = int(rng.integers(1, n + 1)) if k else 1
        thermal.append(ThermalGenerator(
            id=f"T{k + 1}", bus=bus, g_min=float(np.round(0.3 * gmax if k == 0 else 0.1 * gmax, 1)),
            g_max=gmax, min_up=4 if k == 0 else 1, min_down=4 if k == 0 else 1,
            startup_cost=float(10 * gmax if k == 0 else 2 * gmax), shutdown_cost=0.0,
            cost_curve=((gmax / 2, slope), (gmax, slope + 5.0)),
            for_poly=FOR_POLY, for_range=FOR_RANGE,
        ))

    solar, wind, storage = [], [], []
    remote = None
    if spec.congestion:
        # a zero-load bus hanging off bus 1 through a weak line hosts the first renewable
        remote = n + 1
        buses.append(Bus(remote, 0.0))
        lines.append(TransmissionLine(len(lines) + 1, 1, remote, 0.1, spec.congestion_capacity, AAR_TABLE))
    size = 0.25 * spec.peak_load
    for k in range(spec.n_solar):
        bus = remote if (remote and k == 0) else int(rng.integers(1, n + 1))
        solar.append(SolarFarm(f"S{k + 1}", bus, float(size), noct=45.0, temp_coeff=0.004, efficiency=0.95, cost=2.0))
    for k in range(spec.n_wind):
        bus = remote if (remote and spec.n_solar == 0 and k == 0) else int(rng.integers(1, n + 1))
        wind.append(WindFarm(f"W{k + 1}", bus, float(size), efficiency=0.95, cubic=wind_cubic(size),
                             cost=3.0, site=1 + k % spec.wind_sites))
    for k in range(spec.n_storage):
        bus = int(rng.integers(1, n + 1))
        p = float(0.1 * spec.peak_load)
        storage.append(StorageUnit(f"B{k + 1}", bus, energy=4 * p, charge_max=p, discharge_max=p,
                                   soc_min=0.1, soc_max=0.9, eta_charge=0.95, eta_discharge=0.95,
                                   cost=1.0, soc_initial=0.5))
    system = PowerSystem(tuple(buses), tuple(lines), tuple(thermal), tuple(solar), tuple(wind), tuple(storage))
    problems = validate_system(system)
    if problems:
        raise ValidationError("generated fixture is invalid: " + "; ".join(problems))
    ids = [r.id for r in (*solar, *wind, *storage)]
    return system, ids


# --------------------------------------------------------------------------
# archives


def _storm_counts(spec: FixtureSpec) -> np.ndarray:
    """Integer storms per year whose OLS slope on year is as close to ``storm_trend`` as integers allow."""
    x = np.arange(spec.n_years, dtype=float)
    expected = np.maximum(0.0, spec.storm_rate + spec.storm_trend * x)
    counts = np.diff(np.floor(np.concatenate([[0.0], np.cumsum(expected)]) + 0.5)).astype(int)
    if spec.n_years < 2:
        return counts
    xc = x - x.mean()
    want = spec.storm_trend * float(xc @ xc)
    for _ in range(10 * spec.n_years):
        r = want - float(xc @ counts)
        shift = int(round(r))
        if shift == 0:
            break
        # move one storm by |shift| years later (r > 0) or earlier (r < 0)
        d = min(abs(shift), spec.n_years - 1)
        src = [i for i in range(spec.n_years - d) if counts[i] > 0] if shift > 0 else \
              [i for i in range(d, spec.n_years) if counts[i] > 0]
        if not src:
            break
        i = src[0] if shift > 0 else src[-1]
        counts[i] -= 1
        counts[i + d if shift > 0 else i - d] += 1
    return counts


def generate_archive(spec: FixtureSpec) -> HistoricalArchive:
    """Hourly weather/load years with exact linear monthly-mean drift and a V-shaped load response."""
    rng = np.random.default_rng([spec.seed, 23])
    years = np.arange(spec.first_year, spec.first_year + spec.n_years)
    ny = len(years)
    h = np.arange(HOURS_PER_YEAR)
    doy = h // 24
    hod = h % 24
    seasonal = 12.0 + 12.0 * np.sin(2 * np.pi * (doy - 110) / 365.0)
    diurnal = 4.5 * np.sin(2 * np.pi * (hod - 9) / 24.0)

    temp = np.empty((ny, HOURS_PER_YEAR))
    ghi = np.empty((ny, HOURS_PER_YEAR))
    wind = np.empty((ny, spec.wind_sites + spec.steady_sites, HOURS_PER_YEAR))
    load = np.empty((ny, HOURS_PER_YEAR))
    scale = spec.peak_load / 400.0
    daily_shape = 0.78 + 0.22 * np.exp(-((hod - 17.0) ** 2) / 18.0) + 0.05 * np.exp(-((hod - 8.0) ** 2) / 6.0)
    for k in range(ny):
        # weather noise: daily AR(1) anomaly plus hourly jitter, de-meaned per month
        anom = np.zeros(365)
        for d in range(1, 365):
            anom[d] = 0.8 * anom[d - 1] + rng.normal(0, 1.6)
        noise = np.repeat(anom, 24) + rng.normal(0, 0.6, HOURS_PER_YEAR)
        for m in range(1, 13):
            a, b = month_bounds(m)
            noise[a:b] -= noise[a:b].mean()
        temp[k] = seasonal + diurnal + noise + spec.temp_drift * (years[k] - years[0])

        cloud = np.repeat(rng.uniform(0.35, 1.0, 365), 24)
        sun = np.clip(np.sin(np.pi * (hod - 6) / 14.0), 0.0, None)
        season_sun = 0.75 + 0.25 * np.sin(2 * np.pi * (doy - 80) / 365.0)
        ghi[k] = np.round(1000.0 * sun * season_sun * cloud, 3)

        for s in range(spec.wind_sites):
            base = np.repeat(rng.weibull(2.0, 365) * 8.0, 24)
            wind[k, s] = np.clip(base * (0.85 + 0.3 * np.sin(2 * np.pi * (hod + 3 * s) / 24.0))
                                 + rng.normal(0, 0.7, HOURS_PER_YEAR), 0.0, None)

        # separate stream so steady sites leave the other series untouched
        calm = np.random.default_rng([spec.seed, 29, k])
        for s in range(spec.steady_sites):
            wind[k, spec.wind_sites + s] = np.round(calm.uniform(8.0, 10.0, HOURS_PER_YEAR), 3)

        weekday = (doy + k) % 7  # calendar weekday drifts year to year
        week_factor = np.where(weekday >= 5, 0.9, 1.0)
        dt = temp[k] - spec.load_breakpoint
        v = spec.heating_slope * np.minimum(dt, 0.0) + spec.cooling_slope * np.maximum(dt, 0.0)
        load[k] = scale * (v + 245.0 * daily_shape * week_factor) + rng.normal(0, 3.0 * scale, HOURS_PER_YEAR)
        load[k] = np.maximum(load[k], 1.0)

    counts = _storm_counts(spec)
    storms = []
    mu, sd = spec.storm_duration
    for k, c in enumerate(counts):
        for _ in range(int(c)):
            m = int(rng.choice(spec.storm_months))
            storms.append((int(years[k]), m, float(np.round(max(1.0, rng.normal(mu, sd)), 1))))
    return HistoricalArchive(years=years, temp=temp, ghi=ghi, wind=np.round(wind, 4),
                             load=np.round(load, 3), hurricanes=storms)


def write_archive(archive: HistoricalArchive, directory) -> dict[str, Path]:
    """Write weather, load and hurricane CSVs in the ingest formats."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    first, last = archive.first_year, archive.last_year
    idx = pd.date_range(f"{first}-01-01 00:00", f"{last}-12-31 23:00", freq="h", tz="UTC")
    idx = idx[~((idx.month == 2) & (idx.day == 29))]
    stamps = idx.strftime("%Y-%m-%dT%H:%M:%SZ")
    weather = {"timestamp_utc": stamps, "temp_c": archive.temp.ravel(), "ghi_wm2": archive.ghi.ravel()}
    for s in range(archive.n_sites):
        weather[f"wind_ms_site{s + 1}"] = archive.wind[:, s, :].ravel()
    paths = {
        "weather": directory / "weather.csv",
        "load": directory / "load.csv",
        "hurricanes": directory / "hurricanes.csv",
    }
    pd.DataFrame(weather).to_csv(paths["weather"], index=False, float_format="%.10g")
    pd.DataFrame({"timestamp_utc": stamps, "load_mw": archive.load.ravel()}).to_csv(
        paths["load"], index=False, float_format="%.10g")
    pd.DataFrame(archive.hurricanes, columns=["year", "month", "duration_hours"]).to_csv(
        paths["hurricanes"], index=False)
    return paths


# --------------------------------------------------------------------------
# hand-built study systems


def _thermal(id_, bus, g_max, slope, g_min=0.0, for_poly=(0.0, 0.0, 0.0, 0.0, 0.0)):
    return ThermalGenerator(id_, bus, g_min, g_max, 1, 1, 0.0, 0.0, ((g_max, slope),), for_poly)


def congestion_system(line_capacity: float = 50.0, thermal_mw: float = 300.0,
                      farm_mw: float = 200.0, site: int = 1) -> tuple[PowerSystem, list[str]]:
    """Two meshed load buses plus a zero-load bus whose steady wind farm exports over one line."""
    buses = (Bus(1, 0.6), Bus(2, 0.4), Bus(3, 0.0))
    lines = (
        TransmissionLine(1, 1, 2, 0.1, 1000.0),
        TransmissionLine(2, 2, 3, 0.1, line_capacity),
    )
    thermal = (_thermal("T1", 1, thermal_mw * 0.6, 20.0), _thermal("T2", 2, thermal_mw * 0.4, 40.0))
    # rated from 2 m/s so the farm is close to a firm 200 MW source
    farm = WindFarm("W1", 3, farm_mw, efficiency=1.0, v_cut_in=0.5, v_rated=2.0, v_cut_out=40.0,
                    cubic=wind_cubic(farm_mw, 0.5, 2.0), cost=1.0, hurricane_exposed=False, site=site)
    return PowerSystem(buses, lines, thermal, wind=(farm,)), ["W1"]


def complementary_system(thermal_mw: float = 300.0, solar_mw: float = 200.0,
                         storage_mw: float = 80.0, storage_mwh: float = 240.0) -> tuple[PowerSystem, list[str]]:
    """Single-area system where solar and energy-limited storage cover the evening peak together."""
    buses = (Bus(1, 0.5), Bus(2, 0.3), Bus(3, 0.2))
    lines = (
        TransmissionLine(1, 1, 2, 0.1, 2000.0),
        TransmissionLine(2, 2, 3, 0.1, 2000.0),
        TransmissionLine(3, 1, 3, 0.1, 2000.0),
    )
    thermal = (_thermal("T1", 1, thermal_mw * 0.6, 20.0), _thermal("T2", 2, thermal_mw * 0.4, 45.0))
    solar = SolarFarm("S1", 3, solar_mw, noct=45.0, temp_coeff=0.0, efficiency=1.0, cost=1.0)
    batt = StorageUnit("B1", 2, storage_mwh, storage_mw, storage_mw, 0.0, 1.0, 1.0, 1.0, 0.5, 0.0)
    return PowerSystem(buses, lines, thermal, solar=(solar,), storage=(batt,)), ["S1", "B1"]
