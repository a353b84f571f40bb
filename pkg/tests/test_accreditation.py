import csv
import json
import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from capacc.accreditation import (COMPARISON_COLUMNS, RESULT_COLUMNS, PortfolioSpec, VariantCache,
                                  compute_li_marginal, compute_traced, delta_allocate, write_comparison_csv)
from capacc.errors import InputError, NonBracketableError, ValidationError
from capacc.fixtures import FixtureSpec, make_system
from capacc.grid import SolarFarm, StorageUnit, WindFarm
from capacc.reliability import LoadAdjustmentResult

from conftest import two_bus_system


def test_delta_hand_example():
    a = delta_allocate(100.0, [60.0, 70.0], [40.0, 50.0])
    assert a.pie == pytest.approx(10.0)
    np.testing.assert_allclose(a.iie, [20.0, 20.0])
    assert a.delta == pytest.approx(0.25)
    np.testing.assert_allclose(a.elcc, [45.0, 55.0])
    assert a.elcc.sum() == pytest.approx(100.0)


def test_delta_single_resource():
    a = delta_allocate(37.5, [37.5], [37.5])
    assert a.elcc.tolist() == [37.5] and a.delta == 0.0 and not a.degenerate


def test_delta_large_wind_farm_case():
    # LI 742.2, FI 881.8 and delta 0.548: ELCC lands 76.5 MW (10.3 %) above LI
    li, iie, delta = 742.2, 139.6, 0.548
    elcc = li + delta * iie
    assert elcc == pytest.approx(818.7, abs=0.1)
    assert elcc - li == pytest.approx(76.5, abs=0.1)
    assert (elcc - li) / li == pytest.approx(0.103, abs=5e-4)
    # a second resource absorbing the rest of the portfolio reproduces that delta
    other_li, other_iie = 300.0, 60.4
    port = li + other_li + delta * (iie + other_iie)
    a = delta_allocate(port, [li + iie, other_li + other_iie], [li, other_li])
    assert a.delta == pytest.approx(delta)
    assert a.elcc[0] == pytest.approx(818.7, abs=0.1)


def test_delta_degenerate_fallback():
    a = delta_allocate(110.0, [40.0, 60.0], [40.0, 60.0])
    assert a.degenerate and math.isnan(a.delta)
    np.testing.assert_allclose(a.elcc, [44.0, 66.0])
    b = delta_allocate(10.0, [0.0, 0.0], [0.0, 0.0])
    np.testing.assert_allclose(b.elcc, [5.0, 5.0])


def test_delta_shape_errors():
    with pytest.raises(InputError):
        delta_allocate(1.0, [1.0, 2.0], [1.0])
    with pytest.raises(InputError):
        delta_allocate(1.0, [], [])


triples = st.integers(1, 8).flatmap(lambda n: st.tuples(
    st.floats(-500, 2000), st.lists(st.floats(-200, 1000), min_size=n, max_size=n),
    st.lists(st.floats(-200, 1000), min_size=n, max_size=n)))


@settings(max_examples=200, deadline=None)
@given(triples)
def test_delta_identity_property(t):
    port, fi, li = t
    a = delta_allocate(port, fi, li)
    scale = max(1.0, abs(port), max(map(abs, fi)), max(map(abs, li)))
    if a.degenerate or abs(a.iie.sum()) > 1e-6 * scale:
        assert a.elcc.sum() == pytest.approx(port, rel=1e-9, abs=1e-9 * scale * 10)
    np.testing.assert_allclose(a.iie, np.array(fi) - np.array(li))


@settings(max_examples=100, deadline=None)
@given(triples, st.floats(0.01, 100.0), st.randoms())
def test_delta_scale_and_permutation_equivariance(t, k, rnd):
    port, fi, li = t
    a = delta_allocate(port, fi, li)
    b = delta_allocate(k * port, [k * x for x in fi], [k * x for x in li])
    scale = max(1.0, abs(port), max(map(abs, fi)), max(map(abs, li)))
    if abs(a.iie.sum()) > 1e-6 * scale:
        np.testing.assert_allclose(b.elcc, k * a.elcc, rtol=1e-7, atol=1e-7 * k * scale)
    perm = list(range(len(fi)))
    rnd.shuffle(perm)
    c = delta_allocate(port, [fi[i] for i in perm], [li[i] for i in perm])
    np.testing.assert_allclose(c.elcc, a.elcc[perm], rtol=1e-9, atol=1e-9 * scale)


# --------------------------------------------------------------------------
# orchestration with a stub search


def _resources():
    return (SolarFarm("S1", 2, 50.0), StorageUnit("B1", 1, 80.0, 20.0, 20.0), WindFarm("W1", 2, 60.0))


class StubSearch:
    """LA = -100 + credits of present resources + pairwise synergy; counts calls."""

    credits = {"S1": 30.0, "B1": 15.0, "W1": 20.0}
    synergy = {frozenset({"S1", "B1"}): 12.0, frozenset({"S1", "W1"}): -4.0}

    def __init__(self):
        self.calls = []

    def value(self, ids):
        ids = set(ids)
        v = -100.0 + sum(self.credits[i] for i in ids)
        v += sum(s for pair, s in self.synergy.items() if pair <= ids)
        return v

    def __call__(self, system, label):
        self.calls.append(label)
        ids = [r.id for r in (*system.solar, *system.wind, *system.storage)]
        la = self.value(ids)
        return LoadAdjustmentResult(la, la - 0.5, la + 0.5, 1, 1, [], True)


def test_portfolio_spec_validation():
    base = two_bus_system()
    with pytest.raises(ValidationError):
        PortfolioSpec(base, ())
    with pytest.raises(ValidationError):
        PortfolioSpec(base, (SolarFarm("S1", 1, 5.0), SolarFarm("S1", 2, 5.0)))
    with pytest.raises(ValidationError, match="bus 9"):
        PortfolioSpec(base, (SolarFarm("S1", 9, 5.0),))


def test_three_resources_exactly_eight_searches():
    spec = PortfolioSpec(two_bus_system(), _resources())
    stub = StubSearch()
    cache = VariantCache()
    r = compute_traced(spec, [], search=stub, cache=cache)
    assert r.searches == 8 == len(stub.calls) == 2 * 3 + 2
    assert sum(c.elcc_mw for c in r.resources) == pytest.approx(r.port_mw, abs=1e-9)
    for c in r.resources:
        assert c.iie_mw == c.fi_mw - c.li_mw
    assert r.pie_mw == r.port_mw - sum(c.li_mw for c in r.resources)
    # LI marginal reuses every cached LI/portfolio variant
    li = compute_li_marginal(spec, [], search=stub, cache=cache)
    assert len(stub.calls) == 8
    assert li == {c.id: c.li_mw for c in r.resources}
    # S1 and B1 complement each other, so their LI values double count
    assert li["S1"] + li["B1"] > stub.value(["S1", "B1"]) - stub.value([])


def test_single_resource_four_variants_coincide():
    spec = PortfolioSpec(two_bus_system(), (SolarFarm("S1", 2, 50.0),))
    stub = StubSearch()
    r = compute_traced(spec, [], search=stub)
    assert [v[0] for v in spec.variants()] == ["base", "portfolio", "fi:S1", "li:S1"]
    # FI system is the portfolio and LI system is the base: two distinct subsets
    assert r.searches == 2
    c = r.resources[0]
    assert c.fi_mw == c.li_mw == r.port_mw == c.elcc_mw == 30.0


def test_nonbracketable_names_variant():
    spec = PortfolioSpec(two_bus_system(), _resources()[:2])

    def bad(system, label):
        if label == "fi:B1":
            raise NonBracketableError("too flat", 1.0, math.inf)
        return StubSearch()(system, label)
    with pytest.raises(NonBracketableError, match="fi:B1") as exc:
        compute_traced(spec, [], search=bad)
    assert exc.value.variant == "fi:B1"


def test_result_files(tmp_path):
    spec = PortfolioSpec(two_bus_system(), _resources())
    r = compute_traced(spec, [], search=StubSearch())
    r.write_csv(tmp_path / "r.csv")
    write_comparison_csv(r, tmp_path / "c.csv")
    with open(tmp_path / "r.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == RESULT_COLUMNS and len(rows) == 4
    with open(tmp_path / "c.csv") as fh:
        assert next(csv.reader(fh)) == COMPARISON_COLUMNS
    d = json.loads(r.to_json())
    assert d["study"]["port_mw"] == pytest.approx(r.port_mw)
    assert {x["id"] for x in d["resources"]} == {"S1", "B1", "W1"}
    storage = next(x for x in d["resources"] if x["id"] == "B1")
    assert storage["nameplate_mw"] == 20.0  # power rating, not energy


def test_from_system_split():
    system, ids = make_system(FixtureSpec(seed=1))
    spec = PortfolioSpec.from_system(system, ids)
    assert not spec.base.solar and not spec.base.wind and not spec.base.storage
    assert spec.ids == ids
    with pytest.raises(ValidationError, match="X9"):
        PortfolioSpec.from_system(system, ["X9"])


@pytest.mark.slow
def test_identical_colocated_farms_share_equally():
    from capacc.climate import fit_trend_model, sample_scenarios
    from capacc.fixtures import complementary_system, generate_archive
    arch = generate_archive(FixtureSpec(n_years=6, seed=1))
    ss = sample_scenarios(arch, fit_trend_model(arch), 7, arch.last_year + 1, 2, 5)
    system, _ = complementary_system()
    s1 = system.solar[0]
    twins = (s1, replace(s1, id="S2"))
    base = replace(system, solar=(), storage=())
    r = compute_traced(PortfolioSpec(base, twins), ss)
    a, b = r.resources
    assert a.fi_mw == b.fi_mw and a.li_mw == b.li_mw
    assert a.elcc_mw == pytest.approx(b.elcc_mw, abs=1e-9)
    assert a.elcc_mw + b.elcc_mw == pytest.approx(r.port_mw, abs=2.0)
