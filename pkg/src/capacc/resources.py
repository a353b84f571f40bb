"""Weather-to-power conversions and the curve fits that parameterise them."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FitError, IngestionError, InputError
from .grid import SolarFarm, ThermalGenerator, WindFarm


@dataclass(frozen=True)
class WindPowerCurveFit:
    c3: float
    c2: float
    c1: float
    c0: float
    rmse: float
    continuity_gap: float = 0.0  # |cubic(v_r) - nameplate|, MW

    @property
    def cubic(self) -> tuple[float, float, float, float]:
        return (self.c3, self.c2, self.c1, self.c0)


@dataclass(frozen=True)
class ForPolynomialFit:
    coeffs: tuple[float, ...]  # ascending powers, length 5
    t_min: float
    t_max: float

    def __call__(self, air_temp):
        return eval_for(self.coeffs, air_temp, (self.t_min, self.t_max))


# --------------------------------------------------------------------------
# evaluation


def pv_cell_temperature(air_temp, insolation, noct):
    ins = np.asarray(insolation, dtype=float)
    if np.any(ins < 0):
        raise InputError("insolation must be >= 0")
    out = np.asarray(air_temp, dtype=float) + (noct - 20.0) / 800.0 * ins
    return float(out) if out.ndim == 0 else out


def pv_max_output(farm: SolarFarm, air_temp, insolation):
    """Available PV power in MW, clipped to [0, nameplate]."""
    ins = np.asarray(insolation, dtype=float)
    cell = pv_cell_temperature(air_temp, ins, farm.noct)
    p = farm.nameplate * (ins / 1000.0) * (1.0 - farm.temp_coeff * (np.asarray(cell) - 25.0)) * farm.efficiency
    p = np.clip(p, 0.0, farm.nameplate)
    return float(p) if p.ndim == 0 else p


def wind_max_output(farm: WindFarm, wind_speed, hurricane_active=False):
    v = np.asarray(wind_speed, dtype=float)
    if np.any(v < 0):
        raise InputError("wind speed must be >= 0")
    c3, c2, c1, c0 = farm.cubic
    cubic = ((c3 * v + c2) * v + c1) * v + c0
    p = np.where(
        v < farm.v_cut_in,
        0.0,
        np.where(v < farm.v_rated, cubic, np.where(v < farm.v_cut_out, farm.nameplate, 0.0)),
    )
    top = farm.efficiency * farm.nameplate
    p = np.clip(farm.efficiency * p, 0.0, top)
    p = np.where(np.asarray(hurricane_active, dtype=bool), 0.0, p)
    return float(p) if p.ndim == 0 else p


def eval_for(coeffs, air_temp, valid_range=(-math.inf, math.inf)):
    """4th-order FOR polynomial, temperature held at the fitted hull, result in [0, 1]."""
    t = np.clip(np.asarray(air_temp, dtype=float), valid_range[0], valid_range[1])
    val = np.polynomial.polynomial.polyval(t, np.asarray(coeffs, dtype=float))
    val = np.clip(val, 0.0, 1.0)
    return float(val) if val.ndim == 0 else val


def thermal_available_capacity(gen: ThermalGenerator, air_temp):
    """FOR-derated maximum output (MW); deterministic, not a random outage draw."""
    out = gen.g_max * (1.0 - np.asarray(eval_for(gen.for_poly, air_temp, gen.for_range)))
    return float(out) if out.ndim == 0 else out


# --------------------------------------------------------------------------
# fitting


def fit_wind_power_curve(samples, v_cut_in: float, v_rated: float, nameplate: float | None = None) -> WindPowerCurveFit:
    """Least-squares cubic over the partial-load region [v_cut_in, v_rated).

    When ``nameplate`` is given the fitted cubic must meet it at ``v_rated``
    within 2 % of nameplate, otherwise :class:`FitError` is raised.
    """
    arr = np.asarray(samples, dtype=float).reshape(-1, 2)
    mask = (arr[:, 0] >= v_cut_in) & (arr[:, 0] < v_rated)
    v, p = arr[mask, 0], arr[mask, 1]
    if len(v) < 4:
        raise FitError(f"wind curve fit needs >= 4 samples in [{v_cut_in}, {v_rated}), got {len(v)}")
    if len(np.unique(v)) < 4:
        raise FitError("wind curve fit is rank deficient: fewer than 4 distinct wind speeds")
    vand = np.vander(v, 4)
    coef, *_ = np.linalg.lstsq(vand, p, rcond=None)
    resid = vand @ coef - p
    rmse = float(np.sqrt(np.mean(resid**2)))
    gap = 0.0
    if nameplate is not None:
        gap = abs(float(np.polyval(coef, v_rated)) - nameplate)
        if gap > 0.02 * nameplate:
            raise FitError(f"fitted cubic misses nameplate at rated speed by {gap:.3g} MW (> 2%)")
    return WindPowerCurveFit(*(float(c) for c in coef), rmse=rmse, continuity_gap=gap)


def fit_for_polynomial(samples) -> ForPolynomialFit:
    arr = np.asarray(samples, dtype=float).reshape(-1, 2)
    t, f = arr[:, 0], arr[:, 1]
    if len(np.unique(t)) < 5:
        raise FitError(f"FOR fit needs >= 5 distinct temperatures, got {len(np.unique(t))}")
    coeffs = np.polynomial.polynomial.polyfit(t, f, 4)
    return ForPolynomialFit(tuple(float(c) for c in coeffs), float(t.min()), float(t.max()))


# --------------------------------------------------------------------------
# sample files


def _read_pairs(path: str | Path, header: tuple[str, str]) -> list[tuple[float, float]]:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            head = [h.strip() for h in next(reader)]
        except StopIteration:
            raise IngestionError("empty file", path) from None
        if tuple(head) != header:
            raise IngestionError(f"expected header {', '.join(header)}, got {', '.join(head)}", path, 1)
        for lineno, row in enumerate(reader, start=2):
            if not row or not "".join(row).strip():
                continue
            try:
                rows.append((float(row[0]), float(row[1])))
            except (ValueError, IndexError):
                raise IngestionError(f"unparseable row {row!r}", path, lineno) from None
    return rows


def read_power_curve(path: str | Path) -> list[tuple[float, float]]:
    return _read_pairs(path, ("wind_speed_ms", "power_mw"))


def read_for_samples(path: str | Path) -> list[tuple[float, float]]:
    return _read_pairs(path, ("temp_c", "for_fraction"))
