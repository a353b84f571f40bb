import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from capacc.errors import FitError, IngestionError
from capacc.fixtures import wind_cubic
from capacc.grid import SolarFarm, ThermalGenerator, WindFarm
from capacc.resources import (eval_for, fit_for_polynomial, fit_wind_power_curve, pv_cell_temperature,
                              pv_max_output, read_for_samples, read_power_curve, thermal_available_capacity,
                              wind_max_output)


def test_cell_temperature_cases():
    assert pv_cell_temperature(25.0, 0.0, 45.0) == 25.0
    assert pv_cell_temperature(25.0, 800.0, 45.0) == pytest.approx(50.0)
    assert pv_cell_temperature(-5.0, 400.0, 44.0) == pytest.approx(7.0)


def test_pv_output_cases():
    farm = SolarFarm("S", 1, 100.0, noct=45.0, temp_coeff=0.004, efficiency=0.95)
    assert pv_max_output(farm, 25.0, 0.0) == 0.0
    # cell temperature 50 degC here; the derate is against that, not the air
    assert pv_max_output(farm, 25.0, 800.0) == pytest.approx(100 * 0.8 * (1 - 0.004 * 25) * 0.95)
    hot = SolarFarm("H", 1, 100.0, noct=45.0, temp_coeff=0.5)
    assert pv_max_output(hot, 60.0, 900.0) == 0.0


def test_pv_output_never_exceeds_nameplate():
    farm = SolarFarm("S", 1, 100.0, temp_coeff=0.004)
    out = pv_max_output(farm, np.full(5, -40.0), np.full(5, 1400.0))
    assert np.all(out <= 100.0)


def test_wind_output_cases():
    farm = WindFarm("W", 1, 2000.0, efficiency=0.97, v_cut_in=3.0, v_rated=12.0, v_cut_out=25.0,
                    cubic=wind_cubic(2000.0))
    assert wind_max_output(farm, 0.0) == 0.0
    assert wind_max_output(farm, 18.5) == pytest.approx(1940.0)
    assert wind_max_output(farm, 12.0 - 1e-6, hurricane_active=True) == 0.0
    assert wind_max_output(farm, 30.0) == 0.0
    assert wind_max_output(farm, 7.5) == pytest.approx(0.97 * 2000.0 * 0.125)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.0, 40.0))
def test_wind_output_bounded(v):
    farm = WindFarm("W", 1, 150.0, efficiency=0.9, cubic=wind_cubic(150.0))
    assert 0.0 <= wind_max_output(farm, v) <= 0.9 * 150.0 + 1e-9


def test_thermal_availability_cases():
    zero = ThermalGenerator("A", 1, 0.0, 300.0)
    assert thermal_available_capacity(zero, 35.0) == 300.0
    one = ThermalGenerator("B", 1, 0.0, 300.0, for_poly=(1.0, 0, 0, 0, 0))
    assert thermal_available_capacity(one, 35.0) == 0.0
    # 0.04325 + 3e-5 * 35^2 = 0.08
    fixture = ThermalGenerator("C", 1, 0.0, 300.0, for_poly=(0.04325, 0.0, 3e-5, 0.0, 0.0))
    assert thermal_available_capacity(fixture, 35.0) == pytest.approx(276.0)


def test_wind_curve_exact_roundtrip():
    true = np.array(wind_cubic(100.0, 3.0, 12.0))
    v = np.linspace(3.0, 11.9, 40)
    p = np.polyval(true, v)
    fit = fit_wind_power_curve(np.column_stack([v, p]), 3.0, 12.0, nameplate=100.0)
    np.testing.assert_allclose(fit.cubic, true, rtol=1e-6, atol=1e-9)


def test_wind_curve_too_few_samples():
    with pytest.raises(FitError):
        fit_wind_power_curve([(4.0, 1.0), (6.0, 10.0), (8.0, 30.0)], 3.0, 12.0)


def test_wind_curve_noisy_rmse():
    rng = np.random.default_rng(3)
    v = rng.uniform(3.0, 12.0, 500)
    p = np.polyval(wind_cubic(100.0), v) + rng.normal(0, 1.0, 500)
    fit = fit_wind_power_curve(np.column_stack([v, p]), 3.0, 12.0)
    assert fit.rmse <= 2.0


def test_for_fit_exact_quartic():
    true = (0.05, -1e-3, 2e-5, 3e-7, -4e-9)
    t = np.linspace(-20, 45, 30)
    f = np.polynomial.polynomial.polyval(t, true)
    fit = fit_for_polynomial(np.column_stack([t, f]))
    np.testing.assert_allclose(fit.coeffs, true, rtol=1e-6)


def test_for_fit_constant_and_edge_clamp():
    t = np.linspace(-10, 40, 20)
    fit = fit_for_polynomial(np.column_stack([t, np.full(20, 0.05)]))
    assert fit.coeffs[0] == pytest.approx(0.05)
    assert max(abs(c) for c in fit.coeffs[1:]) < 1e-10
    ramp = fit_for_polynomial(np.column_stack([t, 0.01 + 0.001 * t]))
    assert ramp(60.0) == pytest.approx(ramp(40.0))
    assert ramp(-30.0) == pytest.approx(ramp(-10.0))


def test_eval_for_clamps_to_unit_interval():
    assert eval_for((2.0, 0, 0, 0, 0), 10.0) == 1.0
    assert eval_for((-1.0, 0, 0, 0, 0), 10.0) == 0.0
    assert math.isclose(eval_for((0.1, 0.01, 0, 0, 0), 100.0, (0.0, 20.0)), 0.3)


def test_sample_readers(tmp_path):
    pc = tmp_path / "curve.csv"
    pc.write_text("wind_speed_ms,power_mw\n4,1.5\n5,3\n")
    assert read_power_curve(pc) == [(4.0, 1.5), (5.0, 3.0)]
    bad = tmp_path / "for.csv"
    bad.write_text("temp_c,for_fraction\n10,0.02\nten,0.03\n")
    with pytest.raises(IngestionError, match=r"for.csv:3"):
        read_for_samples(bad)
    wrong = tmp_path / "hdr.csv"
    wrong.write_text("speed,mw\n1,2\n")
    with pytest.raises(IngestionError, match="header"):
        read_power_curve(wrong)
