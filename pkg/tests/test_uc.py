from dataclasses import replace

import numpy as np
import pytest

from capacc.errors import ModelBuildError, SolverError
from capacc.grid import Bus, PowerSystem, StorageUnit, ThermalGenerator, TransmissionLine, build_ptdf
from capacc.milp import SolverOptions, read_lp, write_lp
from capacc.uc import (CommitmentState, MonthInputs, UcParams, UcWindow, build_uc_model,
                       check_solution_feasibility, make_window, month_window, solve_rolling_horizon,
                       solve_window, window_starts)

from conftest import two_bus_system
from oracles import uc_dp_oracle


def window_for(system, demand, ratings=None, avail=None, la=0.0, state=None, pv=None, wind=None):
    T = len(demand)
    ratings = ratings if ratings is not None else np.full((len(system.lines), T), 1e4)
    avail = avail if avail is not None else np.array([[g.g_max] * T for g in system.thermal]).reshape(-1, T)
    return UcWindow(
        t0=0, demand=np.asarray(demand, float), ratings=ratings, thermal_avail=avail,
        pv_max=pv if pv is not None else np.zeros((len(system.solar), T)),
        wind_max=wind if wind is not None else np.zeros((len(system.wind), T)),
        hurricane=np.zeros(T, bool), state=state or CommitmentState.cold_start(system), la=la,
    )


def one_bus(gmax=100.0, gmin=0.0, sd_cost=0.0):
    g = ThermalGenerator("T1", 1, gmin, gmax, 1, 1, 0.0, sd_cost, ((gmax, 20.0),))
    return PowerSystem((Bus(1, 1.0),), (), (g,))


def two_bus_profile():
    t = np.arange(24)
    demand = 95 + 55 * np.sin(2 * np.pi * (t - 9) / 24)
    rating = np.where((t >= 12) & (t <= 18), 45.0, 60.0)
    return demand, rating


@pytest.mark.parametrize("engine", ["bnb", "highs"])
def test_single_hour_cases(engine):
    s = one_bus()
    opt = SolverOptions(engine=engine)
    sol = solve_window(s, build_ptdf(s), window_for(s, [50.0]), opt)
    assert sol.thermal_g[0, 0] == pytest.approx(50.0) and sol.shed[0] == pytest.approx(0.0)
    sol = solve_window(s, build_ptdf(s), window_for(s, [150.0]), opt)
    assert sol.shed[0] == pytest.approx(50.0)
    assert sol.objective == pytest.approx(100 * 20.0 + 50 * 1e4)
    sol = solve_window(s, build_ptdf(s), window_for(s, [0.0]), opt)
    assert sol.objective == pytest.approx(0.0) and sol.u.sum() == 0


@pytest.mark.parametrize("engine", ["bnb", "highs"])
def test_two_bus_day_matches_commitment_dp(engine):
    s = two_bus_system()
    demand, rating = two_bus_profile()
    avail = np.array([[g.g_max] * 24 for g in s.thermal])
    want = uc_dp_oracle(s, demand, avail, rating, 1e4)
    sol = solve_window(s, build_ptdf(s), window_for(s, demand, ratings=rating[None, :]),
                       SolverOptions(engine=engine))
    assert sol.objective == pytest.approx(want, rel=1e-6)


def test_feasibility_checker_accepts_solution_and_flags_corruption():
    s = two_bus_system(storage=(StorageUnit("B1", 2, 80.0, 20.0, 20.0, 0.1, 0.9, 0.95, 0.95, 0.0, 0.5),))
    demand, rating = two_bus_profile()
    w = window_for(s, demand, ratings=rating[None, :])
    sol = solve_window(s, build_ptdf(s), w)
    assert check_solution_feasibility(s, w, sol) == []

    bad = replace(sol, soc=sol.soc.copy())
    bad.soc[0, 5] += 0.05
    v = check_solution_feasibility(s, w, bad)
    assert any("soc_recursion" in x and "hour 5" in x for x in v)

    hot = replace(w, ratings=w.ratings.copy())
    k = int(np.argmax(np.abs(sol.flows[0])))
    hot.ratings[0, k] = abs(sol.flows[0, k]) - 0.1
    v = check_solution_feasibility(s, hot, sol)
    assert any(x.startswith(f"flow: line 1 hour {k}") for x in v)


def test_min_up_down_respected_with_history():
    s = two_bus_system()
    demand = np.array([150.0] * 3 + [10.0] * 3 + [150.0] * 6)
    hist = CommitmentState.cold_start(s)
    # G2 was started in the last history hour: it must stay on for two more hours
    hist.u[1, -1] = 1.0
    hist.su[1, -1] = 1.0
    w = window_for(s, demand, state=hist)
    sol = solve_window(s, build_ptdf(s), w)
    assert sol.u[1, 0] == 1
    assert check_solution_feasibility(s, w, sol) == []


def test_rolling_horizon_stitches_and_checks():
    s = two_bus_system(storage=(StorageUnit("B1", 2, 80.0, 20.0, 20.0, 0.1, 0.9, 0.95, 0.95, 0.0, 0.5),))
    T = 320
    t = np.arange(T)
    inputs = MonthInputs(
        demand=95 + 55 * np.sin(2 * np.pi * (t - 9) / 24),
        ratings=np.full((1, T), 60.0),
        thermal_avail=np.array([[100.0] * T, [80.0] * T]),
        pv_max=np.zeros((0, T)), wind_max=np.zeros((0, T)), hurricane=np.zeros(T, bool),
    )
    sol = solve_rolling_horizon(s, build_ptdf(s), None, 5.0, inputs=inputs)
    assert sol.hours == T
    assert check_solution_feasibility(s, month_window(inputs, s, 5.0), sol) == []
    again = solve_rolling_horizon(s, build_ptdf(s), None, 5.0, inputs=inputs)
    np.testing.assert_array_equal(sol.u, again.u)
    np.testing.assert_array_equal(sol.shed, again.shed)


def test_window_starts():
    assert window_starts(100) == [(0, 99, 100)]
    w = window_starts(744)
    assert [x[0] for x in w] == [0, 144, 288, 432, 576]
    assert w[-1] == (576, 743, 168)
    assert all(n == 144 for *_, n in w[:-1])
    assert sum(n for *_, n in w) == 744


def test_model_names_and_lp_roundtrip(tmp_path):
    s = two_bus_system(storage=(StorageUnit("B1", 2, 80.0, 20.0, 20.0),))
    demand, rating = two_bus_profile()
    m, _ = build_uc_model(s, build_ptdf(s), window_for(s, demand[:4], ratings=rating[None, :4]))
    fams = {n.split("_")[0] for n in m.row_names}
    assert {"balance", "flowmax", "flowmin", "gmin", "gmax", "trans", "minup", "mindown",
            "chmax", "dismax", "excl", "soc", "shedcap"} <= fams
    assert "G1_G1_0" in m.var_names and "ls_sys_3" in m.var_names
    p = tmp_path / "uc.lp"
    p.write_text(write_lp(m))
    assert write_lp(read_lp(p)) == write_lp(m)


def test_missing_input_names_hour():
    s = two_bus_system()
    demand = np.array([50.0, np.nan, 60.0])
    with pytest.raises(ModelBuildError, match="demand.*hour 1"):
        build_uc_model(s, build_ptdf(s), window_for(s, demand))


def test_infeasible_window_raises_with_hint():
    # a must-run minimum that exceeds the line limit with nowhere else to go
    g = ThermalGenerator("T1", 1, 80.0, 100.0, 1, 1, 0.0, 0.0, ((100.0, 10.0),))
    s = PowerSystem((Bus(1, 0.0), Bus(2, 1.0)), (TransmissionLine(1, 1, 2, 0.1, 50.0),),
                    (replace(g, min_up=3),))
    # started one hour before the window, so it cannot shut down yet
    st = CommitmentState(np.array([[0.0, 0.0, 1.0]]), np.array([[0.0, 0.0, 1.0]]), np.zeros((1, 3)), np.zeros(0))
    with pytest.raises(SolverError) as exc:
        solve_window(s, build_ptdf(s), window_for(s, [90.0, 90.0], ratings=np.full((1, 2), 50.0), state=st))
    assert exc.value.hint and ("flowmax" in exc.value.hint or "minup" in exc.value.hint)


def test_voll_monotone_objective():
    s = two_bus_system()
    demand, rating = two_bus_profile()
    w = window_for(s, demand, ratings=rating[None, :])
    objs = [solve_window(s, build_ptdf(s), w, params=UcParams(voll=v)).objective for v in (500.0, 2000.0, 1e4)]
    assert objs[0] <= objs[1] + 1e-6 <= objs[2] + 2e-6


def test_load_adjustment_shifts_demand():
    s = one_bus()
    sol = solve_window(s, build_ptdf(s), window_for(s, [50.0, 60.0], la=45.0))
    np.testing.assert_allclose(sol.thermal_g[0], [95.0, 100.0])
    np.testing.assert_allclose(sol.shed, [0.0, 5.0], atol=1e-9)


def test_hurricane_stalls_exposed_wind_only():
    from capacc.grid import WindFarm
    w1 = WindFarm("W1", 1, 50.0, hurricane_exposed=True)
    w2 = WindFarm("W2", 1, 50.0, hurricane_exposed=False)
    s = replace(one_bus(), wind=(w1, w2))
    w = window_for(s, [120.0], wind=np.array([[50.0], [50.0]]))
    w.hurricane = np.array([True])
    sol = solve_window(s, build_ptdf(s), w)
    assert sol.wind_g[0, 0] == 0.0 and sol.wind_g[1, 0] == pytest.approx(50.0)


def test_make_window_slices():
    T = 10
    inputs = MonthInputs(np.arange(T, dtype=float), np.zeros((1, T)), np.zeros((2, T)), np.zeros((0, T)),
                         np.zeros((0, T)), np.zeros(T, bool))
    w = make_window(inputs, 3, 6, CommitmentState.cold_start(two_bus_system()))
    assert w.t0 == 3 and w.t1 == 6
    np.testing.assert_array_equal(w.demand, [3, 4, 5, 6])
