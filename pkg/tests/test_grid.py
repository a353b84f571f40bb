import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from capacc.errors import StructuralError, ValidationError
from capacc.fixtures import FixtureSpec, make_system
from capacc.grid import (Bus, PowerSystem, TransmissionLine, WindFarm, build_ptdf, line_rating,
                         system_from_dict, system_to_dict, validate_system)

from conftest import random_network


def dc_flows_direct(system: PowerSystem, injection: np.ndarray) -> np.ndarray:
    """Flows from a full-Laplacian pseudo-inverse solve, independent of the reduced PTDF route."""
    idx = system.bus_index()
    n = len(system.buses)
    lap = np.zeros((n, n))
    for ln in system.lines:
        i, j, b = idx[ln.from_bus], idx[ln.to_bus], 1.0 / ln.reactance
        lap[i, i] += b
        lap[j, j] += b
        lap[i, j] -= b
        lap[j, i] -= b
    theta = np.linalg.pinv(lap) @ injection
    return np.array([(theta[idx[ln.from_bus]] - theta[idx[ln.to_bus]]) / ln.reactance for ln in system.lines])


def test_two_bus_ptdf_is_full_transfer():
    s = PowerSystem((Bus(1, 0.5), Bus(2, 0.5)), (TransmissionLine(1, 1, 2, 0.1, 100.0),))
    ptdf = build_ptdf(s)
    assert ptdf[0, 0] == 0.0
    assert abs(ptdf[0, 1]) == pytest.approx(1.0, abs=1e-12)
    # injecting at bus 2 pushes power towards the slack, against from->to
    assert ptdf[0, 1] == pytest.approx(-1.0)


def test_slack_column_is_zero(rng):
    for n in range(2, 9):
        s = random_network(rng, n)
        assert np.all(build_ptdf(s)[:, 0] == 0.0)
        s2 = replace(s, slack_bus=n)
        assert np.all(build_ptdf(s2)[:, n - 1] == 0.0)


def test_ptdf_matches_direct_solve_six_bus(rng):
    s = random_network(rng, 6, n_extra=4)
    ptdf = build_ptdf(s)
    p = rng.normal(0, 50, 6)
    p -= p.mean()
    np.testing.assert_allclose(ptdf @ p, dc_flows_direct(s, p), atol=1e-8)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 12), st.integers(0, 2**31 - 1))
def test_ptdf_slack_independent_for_balanced_injections(n, seed):
    rng = np.random.default_rng(seed)
    s = random_network(rng, n)
    p = rng.normal(0, 30, n)
    p -= p.mean()
    f1 = build_ptdf(s) @ p
    f2 = build_ptdf(replace(s, slack_bus=int(rng.integers(1, n + 1)))) @ p
    np.testing.assert_allclose(f1, f2, atol=1e-8)


def test_disconnected_network_rejected():
    s = PowerSystem((Bus(1, 0.5), Bus(2, 0.3), Bus(3, 0.2)), (TransmissionLine(1, 1, 2, 0.1, 10.0),))
    with pytest.raises(StructuralError, match=r"\[3\]"):
        build_ptdf(s)


def test_nonpositive_reactance_rejected():
    s = PowerSystem((Bus(1, 0.5), Bus(2, 0.5)), (TransmissionLine(7, 1, 2, 0.0, 10.0),))
    with pytest.raises(ValidationError, match="line 7"):
        build_ptdf(s)


def test_line_rating_table():
    ln = TransmissionLine(1, 1, 2, 0.1, 100.0, ((25.0, 1.0), (math.inf, 0.9)))
    assert line_rating(ln, 10.0) == 100.0
    assert line_rating(ln, 40.0) == pytest.approx(90.0)
    assert line_rating(ln, 25.0) == 100.0  # boundary belongs to the cooler band
    np.testing.assert_allclose(line_rating(ln, np.array([24.9, 25.0, 25.1])), [100.0, 100.0, 90.0])


def test_validate_fixture_clean():
    system, _ = make_system(FixtureSpec(seed=1))
    assert validate_system(system) == []


def test_validate_weight_sum():
    s = PowerSystem((Bus(1, 0.5), Bus(2, 0.4)), (TransmissionLine(1, 1, 2, 0.1, 10.0),))
    v = validate_system(s)
    assert len(v) == 1 and "weight-sum" in v[0]


def test_validate_wind_speed_order():
    system, _ = make_system(FixtureSpec(seed=1))
    bad = WindFarm("Wbad", 1, 50.0, v_cut_in=10.0, v_rated=5.0, v_cut_out=25.0)
    v = validate_system(replace(system, wind=system.wind + (bad,)))
    assert len(v) == 1 and "speed-ordering" in v[0]


def test_system_dict_roundtrip():
    system, _ = make_system(FixtureSpec(seed=4, n_buses=5, congestion=True))
    back = system_from_dict(system_to_dict(system))
    assert system_to_dict(back) == system_to_dict(system)
    assert back.lines == system.lines and back.thermal == system.thermal and back.wind == system.wind
