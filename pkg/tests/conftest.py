import math

import numpy as np
import pytest

from capacc.grid import Bus, PowerSystem, ThermalGenerator, TransmissionLine


def random_network(rng: np.random.Generator, n_buses: int, n_extra: int = 2) -> PowerSystem:
    """Connected network: a random spanning tree plus ``n_extra`` chords."""
    order = rng.permutation(n_buses) + 1
    edges = []
    for k in range(1, n_buses):
        edges.append((int(order[rng.integers(0, k)]), int(order[k])))
    pairs = {tuple(sorted(e)) for e in edges}
    for _ in range(n_extra):
        a, b = (int(x) for x in rng.choice(n_buses, 2, replace=False) + 1)
        if tuple(sorted((a, b))) not in pairs:
            pairs.add(tuple(sorted((a, b))))
            edges.append((a, b))
    w = rng.uniform(0.1, 1.0, n_buses)
    w /= w.sum()
    buses = tuple(Bus(i + 1, float(w[i])) for i in range(n_buses))
    lines = tuple(TransmissionLine(k + 1, a, b, float(rng.uniform(0.02, 0.3)), 100.0)
                  for k, (a, b) in enumerate(edges))
    return PowerSystem(buses, lines)


def two_bus_system(line_capacity: float = 60.0, **gen_kw) -> PowerSystem:
    """Cheap unit at bus 1, dear unit at bus 2, all load at bus 2."""
    buses = (Bus(1, 0.0), Bus(2, 1.0))
    lines = (TransmissionLine(1, 1, 2, 0.1, line_capacity),)
    g1 = ThermalGenerator("G1", 1, 20.0, 100.0, 3, 2, 500.0, 50.0, ((60.0, 10.0), (100.0, 15.0)))
    g2 = ThermalGenerator("G2", 2, 10.0, 80.0, 2, 3, 300.0, 20.0, ((80.0, 40.0),))
    return PowerSystem(buses, lines, (g1, g2), **gen_kw)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: runs unit-commitment solves for minutes")


INF = math.inf
