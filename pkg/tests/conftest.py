"""Shared network fixtures.

net_a: 9 identical cells, theta 1, constant rate 1, all-to-all weight 0.8.
net_b: 16 cells, theta 1, weight 0.35; cells 0-1 rate 1, cells 2-15 rate 0.2.
net_core12: 12 cells; cells 0-8 form a designated core with net_a parameters
    and weight 0.8 to every other cell; cells 9-11 are peripheral (rate 0.5),
    cell 9 sends nothing, cells 10-11 send weight 0.1.
"""

from __future__ import annotations

import numpy as np
import pytest

from pulsenet import model


def _uniform_net(m: int, theta: float, rate: float, delta: float) -> model.NetworkSpec:
    cells = [model.CellSpec(theta=theta, dynamics=model.ConstantRate(a=rate)) for _ in range(m)]
    d = np.full((m, m), delta)
    np.fill_diagonal(d, 0.0)
    return model.make_network(cells, d)


@pytest.fixture(scope="session")
def net_a() -> model.ValidatedNetwork:
    return model.validate(_uniform_net(9, theta=1.0, rate=1.0, delta=0.8))


@pytest.fixture(scope="session")
def net_b() -> model.ValidatedNetwork:
    m = 16
    cells = [
        model.CellSpec(theta=1.0, dynamics=model.ConstantRate(a=1.0 if i < 2 else 0.2))
        for i in range(m)
    ]
    d = np.full((m, m), 0.35)
    np.fill_diagonal(d, 0.0)
    return model.validate(model.make_network(cells, d))


@pytest.fixture(scope="session")
def net_core12() -> model.ValidatedNetwork:
    m = 12
    cells = [
        model.CellSpec(theta=1.0, dynamics=model.ConstantRate(a=1.0 if i < 9 else 0.5))
        for i in range(m)
    ]
    d = np.zeros((m, m))
    for i in range(9):
        d[i, :] = 0.8
    for i in (10, 11):
        d[i, :] = 0.1
    np.fill_diagonal(d, 0.0)
    return model.validate(model.make_network(cells, d, core=range(9)))
