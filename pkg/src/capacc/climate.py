"""Historical weather/load archives, long-term trend fits and climate-adjusted Monte Carlo months."""
from __future__ import annotations

import csv
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from .errors import FitError, IngestionError, InputError

log = logging.getLogger(__name__)

DAYS_IN_MONTH = (31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31)
HOURS_PER_YEAR = 8760
MAX_GAP_HOURS = 6
SHIFT_VARIANTS = 13  # weekday shifts of 0..12 days per source year
DEFAULT_BUFF_HOURS = 12.0


def month_bounds(month: int) -> tuple[int, int]:
    """[start, stop) hour offsets of ``month`` in a 365-day year."""
    if not 1 <= month <= 12:
        raise InputError(f"month must be in 1..12, got {month}")
    start = 24 * sum(DAYS_IN_MONTH[: month - 1])
    return start, start + 24 * DAYS_IN_MONTH[month - 1]


def month_hours(month: int) -> int:
    a, b = month_bounds(month)
    return b - a


# --------------------------------------------------------------------------
# archive


@dataclass
class HistoricalArchive:
    years: np.ndarray  # (Y,)
    temp: np.ndarray  # (Y, 8760) degC
    ghi: np.ndarray  # (Y, 8760) W/m2
    wind: np.ndarray  # (Y, sites, 8760) m/s
    load: np.ndarray  # (Y, 8760) MW
    hurricanes: list[tuple[int, int, float]] = field(default_factory=list)
    interpolated: dict[str, int] = field(default_factory=dict)

    @property
    def n_years(self) -> int:
        return len(self.years)

    @property
    def n_sites(self) -> int:
        return self.wind.shape[1]

    @property
    def first_year(self) -> int:
        return int(self.years[0])

    @property
    def last_year(self) -> int:
        return int(self.years[-1])

    @property
    def interpolated_hours(self) -> int:
        return int(sum(self.interpolated.values()))


def _expected_index(first: int, last: int) -> pd.DatetimeIndex:
    idx = pd.date_range(f"{first}-01-01 00:00", f"{last}-12-31 23:00", freq="h", tz="UTC")
    return idx[~((idx.month == 2) & (idx.day == 29))]


def _read_series(path: str | Path, expected: list[str] | None, prefix_cols: list[str] | None = None) -> pd.DataFrame:
    path = Path(path)
    if not path.exists():
        raise IngestionError("file not found", path)
    try:
        raw = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except Exception as exc:  # pandas raises a zoo of parser errors
        raise IngestionError(f"cannot parse: {exc}", path) from exc
    cols = [c.strip() for c in raw.columns]
    raw.columns = cols
    if expected is not None and cols != expected:
        raise IngestionError(f"expected columns {', '.join(expected)}, got {', '.join(cols)}", path, 1)
    if prefix_cols is not None:
        fixed = prefix_cols
        extra = cols[len(fixed):]
        want = [f"wind_ms_site{k + 1}" for k in range(len(extra))]
        if cols[: len(fixed)] != fixed or extra != want or not extra:
            raise IngestionError(
                f"expected columns {', '.join(fixed)}, wind_ms_site1[, ...], got {', '.join(cols)}", path, 1
            )
    ts = pd.to_datetime(raw["timestamp_utc"].str.strip(), utc=True, errors="coerce", format="ISO8601")
    bad = ts.isna()
    if bad.any():
        k = int(np.argmax(bad.to_numpy()))
        raise IngestionError(f"unparseable timestamp {raw['timestamp_utc'].iloc[k]!r}", path, k + 2)
    diffs = ts.diff().dt.total_seconds().to_numpy()[1:]
    nonincr = np.nonzero(diffs <= 0)[0]
    if len(nonincr):
        k = int(nonincr[0]) + 1
        raise IngestionError("timestamps not strictly increasing", path, k + 2)
    out = pd.DataFrame(index=pd.DatetimeIndex(ts))
    for c in cols[1:]:
        s = raw[c].str.strip()
        num = pd.to_numeric(s, errors="coerce")
        garbage = num.isna() & (s != "")
        if garbage.any():
            k = int(np.argmax(garbage.to_numpy()))
            raise IngestionError(f"unparseable value {s.iloc[k]!r} in column {c}", path, k + 2)
        out[c] = num.to_numpy(dtype=float)
    return out


def _fill_gaps(frame: pd.DataFrame, first: int, last: int, path, counts: dict[str, int]) -> pd.DataFrame:
    frame = frame[~((frame.index.month == 2) & (frame.index.day == 29))]
    full = frame.reindex(_expected_index(first, last))
    for c in full.columns:
        vals = full[c].to_numpy(dtype=float)
        miss = np.isnan(vals)
        if not miss.any():
            counts.setdefault(c, 0)
            continue
        # run-length encode the missing mask
        edges = np.diff(np.concatenate([[0], miss.astype(int), [0]]))
        starts, stops = np.nonzero(edges == 1)[0], np.nonzero(edges == -1)[0]
        for a, b in zip(starts, stops):
            if b - a > MAX_GAP_HOURS or a == 0 or b == len(vals):
                raise IngestionError(
                    f"gap of {b - a} h in column {c} starting {full.index[a].isoformat()} "
                    f"cannot be interpolated (limit {MAX_GAP_HOURS} h, interior only)",
                    path,
                )
            lo, hi = vals[a - 1], vals[b]
            vals[a:b] = lo + (hi - lo) * (np.arange(1, b - a + 1) / (b - a + 1))
        counts[c] = counts.get(c, 0) + int(miss.sum())
        full[c] = vals
    return full


def ingest_archive(weather_path, load_path, hurricane_path=None) -> HistoricalArchive:
    """Parse, validate and gap-fill the hourly archives into complete 365-day years."""
    weather = _read_series(weather_path, None, prefix_cols=["timestamp_utc", "temp_c", "ghi_wm2"])
    load = _read_series(load_path, ["timestamp_utc", "load_mw"])
    first = int(min(weather.index[0].year, load.index[0].year))
    last = int(max(weather.index[-1].year, load.index[-1].year))
    counts: dict[str, int] = {}
    weather = _fill_gaps(weather, first, last, weather_path, counts)
    load = _fill_gaps(load, first, last, load_path, counts)
    years = np.arange(first, last + 1)
    ny = len(years)
    shape = (ny, HOURS_PER_YEAR)
    sites = [c for c in weather.columns if c.startswith("wind_ms_site")]
    wind = np.stack([weather[c].to_numpy().reshape(shape) for c in sites], axis=1)
    hurr = read_hurricanes(hurricane_path) if hurricane_path is not None else []
    for y, m, _ in hurr:
        if not (first <= y <= last):
            log.warning("hurricane record for %d outside archive years %d-%d", y, first, last)
    return HistoricalArchive(
        years=years,
        temp=weather["temp_c"].to_numpy().reshape(shape),
        ghi=weather["ghi_wm2"].to_numpy().reshape(shape),
        wind=wind,
        load=load["load_mw"].to_numpy().reshape(shape),
        hurricanes=hurr,
        interpolated={k: v for k, v in counts.items() if v},
    )


def read_hurricanes(path) -> list[tuple[int, int, float]]:
    path = Path(path)
    if not path.exists():
        raise IngestionError("file not found", path)
    out = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        head = [h.strip() for h in next(reader, [])]
        if head != ["year", "month", "duration_hours"]:
            raise IngestionError(f"expected columns year, month, duration_hours, got {', '.join(head)}", path, 1)
        for lineno, row in enumerate(reader, start=2):
            if not row or not "".join(row).strip():
                continue
            try:
                y, m, d = int(row[0]), int(row[1]), float(row[2])
            except (ValueError, IndexError):
                raise IngestionError(f"unparseable row {row!r}", path, lineno) from None
            if not 1 <= m <= 12 or d < 0:
                raise IngestionError(f"invalid month/duration in {row!r}", path, lineno)
            out.append((y, m, d))
    return out


# --------------------------------------------------------------------------
# trend models


@dataclass(frozen=True)
class LoadTempRegression:
    """Continuous two-segment load-temperature curve hinged at ``breakpoint``."""

    breakpoint: float
    left_slope: float  # MW/degC below the breakpoint
    right_slope: float  # MW/degC above the breakpoint
    base: float  # MW at the breakpoint
    sse: float = 0.0

    @property
    def left_intercept(self) -> float:
        return self.base - self.left_slope * self.breakpoint

    @property
    def right_intercept(self) -> float:
        return self.base - self.right_slope * self.breakpoint

    def __call__(self, temp):
        d = np.asarray(temp, dtype=float) - self.breakpoint
        out = self.base + self.left_slope * np.minimum(d, 0.0) + self.right_slope * np.maximum(d, 0.0)
        return float(out) if out.ndim == 0 else out


@dataclass
class TrendModel:
    beta_tau: np.ndarray  # (12,) degC/yr
    beta_hurr: float  # events/yr per yr
    storm_counts: np.ndarray  # (12,) historical events per month
    storm_mu: np.ndarray  # (12,) h
    storm_sigma: np.ndarray  # (12,) h
    n_years: int
    load_regression: LoadTempRegression
    buff: float = DEFAULT_BUFF_HOURS
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "beta_tau": [float(x) for x in self.beta_tau],
            "beta_hurr": float(self.beta_hurr),
            "storm_counts": [float(x) for x in self.storm_counts],
            "storm_mu": [float(x) for x in self.storm_mu],
            "storm_sigma": [float(x) for x in self.storm_sigma],
            "n_years": int(self.n_years),
            "buff": float(self.buff),
            "load_regression": asdict(self.load_regression),
            "diagnostics": self.diagnostics,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrendModel":
        return cls(
            beta_tau=np.asarray(d["beta_tau"], dtype=float),
            beta_hurr=float(d["beta_hurr"]),
            storm_counts=np.asarray(d["storm_counts"], dtype=float),
            storm_mu=np.asarray(d["storm_mu"], dtype=float),
            storm_sigma=np.asarray(d["storm_sigma"], dtype=float),
            n_years=int(d["n_years"]),
            load_regression=LoadTempRegression(**d["load_regression"]),
            buff=float(d.get("buff", DEFAULT_BUFF_HOURS)),
            diagnostics=d.get("diagnostics", {}),
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path) -> "TrendModel":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _ols_slope(x, y) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    xc = x - x.mean()
    den = float(xc @ xc)
    return 0.0 if den == 0 else float(xc @ (y - y.mean()) / den)


def monthly_means(archive: HistoricalArchive) -> np.ndarray:
    """(Y, 12) monthly mean temperature."""
    out = np.empty((archive.n_years, 12))
    for m in range(1, 13):
        a, b = month_bounds(m)
        out[:, m - 1] = archive.temp[:, a:b].mean(axis=1)
    return out


def fit_monthly_temp_trend(archive: HistoricalArchive) -> np.ndarray:
    if archive.n_years < 3:
        raise FitError(f"temperature trend needs >= 3 years, archive has {archive.n_years}")
    means = monthly_means(archive)
    return np.array([_ols_slope(archive.years, means[:, m]) for m in range(12)])


def fit_piecewise_load(temp, load, step: float = 0.5) -> LoadTempRegression:
    t = np.asarray(temp, dtype=float).ravel()
    d = np.asarray(load, dtype=float).ravel()
    if len(t) < 1000:
        raise FitError(f"load-temperature regression needs >= 1000 pairs, got {len(t)}")
    if t.max() - t.min() < 5.0:
        raise FitError(f"temperature spread {t.max() - t.min():.2f} degC is below 5 degC")
    p5, p95 = np.percentile(t, [5, 95])
    grid = np.arange(np.ceil(p5 / step) * step, p95 + 1e-9, step)
    if len(grid) == 0:
        grid = np.array([float(np.median(t))])
    best = None
    for bp in grid:
        x = t - bp
        X = np.column_stack([np.ones_like(x), np.minimum(x, 0.0), np.maximum(x, 0.0)])
        coef, *_ = np.linalg.lstsq(X, d, rcond=None)
        sse = float(np.sum((X @ coef - d) ** 2))
        if best is None or sse < best[0] - 1e-12 * max(1.0, best[0]):
            best = (sse, bp, coef)
    sse, bp, (base, left, right) = best
    return LoadTempRegression(float(bp), float(left), float(right), float(base), sse)


def fit_load_temp_regression(archive: HistoricalArchive) -> LoadTempRegression:
    return fit_piecewise_load(archive.temp, archive.load)


def fit_hurricane_model(archive: HistoricalArchive):
    """(beta_hurr, H[12], mu[12], sigma[12]) from the storm record."""
    counts_m = np.zeros(12)
    mu = np.zeros(12)
    sigma = np.zeros(12)
    if not archive.hurricanes:
        return 0.0, counts_m, mu, sigma
    per_year = {int(y): 0 for y in archive.years}
    durs: dict[int, list[float]] = {m: [] for m in range(1, 13)}
    for y, m, d in archive.hurricanes:
        if y in per_year:
            per_year[y] += 1
        counts_m[m - 1] += 1
        durs[m].append(d)
    beta = _ols_slope(list(per_year.keys()), list(per_year.values()))
    for m in range(1, 13):
        if durs[m]:
            mu[m - 1] = float(np.mean(durs[m]))
            sigma[m - 1] = float(np.std(durs[m], ddof=1)) if len(durs[m]) >= 2 else 0.0
    return beta, counts_m, mu, sigma


def fit_trend_model(archive: HistoricalArchive, buff: float = DEFAULT_BUFF_HOURS) -> TrendModel:
    beta_tau = fit_monthly_temp_trend(archive)
    reg = fit_load_temp_regression(archive)
    beta_h, counts, mu, sigma = fit_hurricane_model(archive)
    n = archive.temp.size
    return TrendModel(
        beta_tau=beta_tau,
        beta_hurr=beta_h,
        storm_counts=counts,
        storm_mu=mu,
        storm_sigma=sigma,
        n_years=archive.n_years,
        load_regression=reg,
        buff=buff,
        diagnostics={
            "years": [archive.first_year, archive.last_year],
            "load_regression_rmse_mw": float(np.sqrt(reg.sse / n)),
            "storm_events": len(archive.hurricanes),
            "interpolated_hours": dict(archive.interpolated),
        },
    )


# --------------------------------------------------------------------------
# adjustments


def adjust_temperature(temps, month: int, year: int, eval_year: int, beta_tau) -> np.ndarray:
    return np.asarray(temps, dtype=float) + float(np.asarray(beta_tau)[month - 1]) * (eval_year - year)


def adjust_demand(demand, temp_sampled, temp_adjusted, regression: LoadTempRegression,
                  return_clamped: bool = False):
    """Shift sampled demand by the regression's response to the temperature change."""
    d = np.asarray(demand, dtype=float)
    ts = np.asarray(temp_sampled, dtype=float)
    ta = np.asarray(temp_adjusted, dtype=float)
    if not (d.shape == ts.shape == ta.shape):
        raise InputError(f"length mismatch: demand {d.shape}, temps {ts.shape}/{ta.shape}")
    out = d + (regression(ta) - regression(ts))
    neg = out < 0
    n_clamped = int(neg.sum())
    if n_clamped:
        log.warning("demand adjustment clamped %d hours at 0 MW", n_clamped)
        out = np.where(neg, 0.0, out)
    return (out, n_clamped) if return_clamped else out


def hurricane_probability(storm_count: float, beta_hurr: float, year: int, eval_year: int,
                          n_years: int, hours: int) -> float:
    p = (storm_count + (eval_year - year) * beta_hurr) / (n_years * hours)
    return max(0.0, float(p))


def storm_onsets(p: float, hours: int, rng: np.random.Generator) -> np.ndarray:
    """0-based hours whose Bernoulli(p) trial succeeds."""
    if p <= 0.0:
        return np.zeros(0, dtype=np.int64)
    return np.nonzero(rng.random(hours) < p)[0]


def outage_window(t_hit: int, duration: float, hours: int) -> np.ndarray:
    """Boolean mask over 1-based hours [t_hit - D/2, t_hit + D/2] clipped to [1, hours]."""
    t = np.arange(1, hours + 1)
    return (t >= t_hit - duration / 2.0) & (t <= t_hit + duration / 2.0)


def sample_hurricane_flags(month: int, year: int, eval_year: int, trend: TrendModel, hours: int,
                           rng: np.random.Generator) -> np.ndarray:
    """Hourly stall flags: Bernoulli storm onsets, each widened to a centred outage window."""
    p = hurricane_probability(trend.storm_counts[month - 1], trend.beta_hurr, year, eval_year,
                              trend.n_years, hours)
    flags = np.zeros(hours, dtype=bool)
    for k in storm_onsets(p, hours, rng):
        dur = max(0.0, rng.normal(trend.storm_mu[month - 1], trend.storm_sigma[month - 1])) + trend.buff
        flags |= outage_window(int(k) + 1, dur, hours)
    return flags


# --------------------------------------------------------------------------
# scenarios


@dataclass
class ScenarioProfile:
    month: int
    eval_year: int
    source_year: int
    shift_days: int
    temp: np.ndarray  # adjusted degC
    ghi: np.ndarray
    wind: np.ndarray  # (sites, T)
    demand: np.ndarray  # adjusted system MW
    hurricane: np.ndarray  # (T,) bool
    seed: tuple[int, int]
    clamped_hours: int = 0

    @property
    def hours(self) -> int:
        return len(self.temp)


@dataclass
class ScenarioSet:
    scenarios: list[ScenarioProfile]
    master_seed: int
    month: int
    eval_year: int

    @property
    def count(self) -> int:
        return len(self.scenarios)

    def __iter__(self):
        return iter(self.scenarios)

    def __len__(self):
        return len(self.scenarios)

    def __getitem__(self, k):
        return self.scenarios[k]

    def fingerprint(self) -> str:
        import hashlib

        h = hashlib.sha256()
        for s in self.scenarios:
            for a in (s.temp, s.ghi, s.wind, s.demand, s.hurricane.astype(np.uint8)):
                h.update(np.ascontiguousarray(a).tobytes())
        return h.hexdigest()[:16]

    def save(self, path) -> None:
        arrays = {}
        meta = {"master_seed": self.master_seed, "month": self.month, "eval_year": self.eval_year, "scenarios": []}
        for k, s in enumerate(self.scenarios):
            for name in ("temp", "ghi", "wind", "demand", "hurricane"):
                arrays[f"{name}_{k}"] = getattr(s, name)
            meta["scenarios"].append({
                "month": s.month, "eval_year": s.eval_year, "source_year": s.source_year,
                "shift_days": s.shift_days, "seed": list(s.seed), "clamped_hours": s.clamped_hours,
            })
        np.savez_compressed(path, meta=np.array(json.dumps(meta)), **arrays)

    @classmethod
    def load(cls, path) -> "ScenarioSet":
        with np.load(path) as z:
            meta = json.loads(str(z["meta"]))
            scen = []
            for k, sm in enumerate(meta["scenarios"]):
                scen.append(ScenarioProfile(
                    month=sm["month"], eval_year=sm["eval_year"], source_year=sm["source_year"],
                    shift_days=sm["shift_days"], temp=z[f"temp_{k}"], ghi=z[f"ghi_{k}"],
                    wind=z[f"wind_{k}"], demand=z[f"demand_{k}"], hurricane=z[f"hurricane_{k}"].astype(bool),
                    seed=tuple(sm["seed"]), clamped_hours=sm["clamped_hours"],
                ))
        return cls(scen, meta["master_seed"], meta["month"], meta["eval_year"])


def scenario_rng(master_seed: int, index: int) -> np.random.Generator:
    """Counter-based substream for one scenario, independent of evaluation order."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(master_seed), int(index)])))


def build_scenario(archive: HistoricalArchive, trend: TrendModel, month: int, eval_year: int,
                   year_index: int, shift_days: int, rng: np.random.Generator,
                   seed: tuple[int, int] = (0, 0)) -> ScenarioProfile:
    a, b = month_bounds(month)
    year = int(archive.years[year_index])
    temp_s = archive.temp[year_index, a:b]
    load_year = np.roll(archive.load[year_index], -24 * shift_days)
    demand_s = load_year[a:b]
    temp_adj = adjust_temperature(temp_s, month, year, eval_year, trend.beta_tau)
    demand_adj, clamped = adjust_demand(demand_s, temp_s, temp_adj, trend.load_regression, return_clamped=True)
    flags = sample_hurricane_flags(month, year, eval_year, trend, b - a, rng)
    return ScenarioProfile(
        month=month,
        eval_year=eval_year,
        source_year=year,
        shift_days=shift_days,
        temp=temp_adj,
        ghi=archive.ghi[year_index, a:b].copy(),
        wind=archive.wind[year_index, :, a:b].copy(),
        demand=demand_adj,
        hurricane=flags,
        seed=seed,
        clamped_hours=clamped,
    )


def sample_scenarios(archive: HistoricalArchive, trend: TrendModel, month: int, eval_year: int,
                     count: int, master_seed: int, force_shift: int | None = None,
                     force_year_index: int | None = None) -> ScenarioSet:
    """Draw ``count`` climate-adjusted months (source year x weekday shift) with per-scenario substreams."""
    if archive.n_years == 0:
        raise InputError("archive is empty")
    if count < 1:
        raise InputError("scenario count must be >= 1")
    month_bounds(month)
    out = []
    for k in range(count):
        rng = scenario_rng(master_seed, k)
        yi = int(rng.integers(archive.n_years))
        shift = int(rng.integers(SHIFT_VARIANTS))
        if force_year_index is not None:
            yi = force_year_index
        if force_shift is not None:
            shift = force_shift
        out.append(build_scenario(archive, trend, month, eval_year, yi, shift, rng, (int(master_seed), k)))
    return ScenarioSet(out, int(master_seed), month, eval_year)
