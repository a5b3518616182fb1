"""Naive fixed-time-step reference integrator.

Marches the whole network on a fixed grid with a per-step threshold check:
cells crossing their goal level within the same step spike together, and the
same avalanche fixed point as the event-driven engine is applied at the step
boundary. Only the time discretization differs from the engine, which isolates
event timing as the quantity under test.

Steps are evaluated in vectorized blocks; within a block no interaction can
occur before the first crossing step, so the result is identical to stepping
one step at a time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import engine
from .engine import ClusterEvent, SimState, Trace
from .model import (
    AffineInS,
    ConstantRate,
    DifferentialInterference,
    OscillatoryAux,
    ValidatedNetwork,
)

_BLOCK = 65536


@dataclass(frozen=True)
class OracleConfig:
    dt: float
    horizon: float

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be > 0")
        if self.horizon <= 0:
            raise ValueError("horizon must be > 0")


@dataclass
class ComparisonReport:
    matched: int
    max_time_deviation: float
    cluster_mismatches: list[int]
    unmatched_a: int
    unmatched_b: int

    @property
    def clusters_equal(self) -> bool:
        return not self.cluster_mismatches and self.unmatched_a == 0 and self.unmatched_b == 0

    def ok(self, time_tol: float, require_equal_clusters: bool = True) -> bool:
        if self.unmatched_a or self.unmatched_b:
            return False
        if require_equal_clusters and self.cluster_mismatches:
            return False
        return self.max_time_deviation <= time_tol


def _block_trajectory(
    cell, s0: float, aux0: float, t0: float, dt: float, n: int, delta: float
) -> np.ndarray:
    """S at the n step endpoints t0+dt, ..., t0+n*dt, assuming no interaction."""
    dyn = cell.dynamics
    k = np.arange(1, n + 1, dtype=float)
    if isinstance(dyn, ConstantRate):
        traj = s0 + (dyn.a - delta) * dt * k
        return np.maximum(traj, 0.0)
    if isinstance(dyn, AffineInS):
        aeff = dyn.a - delta
        if dyn.b == 0.0:
            traj = s0 + aeff * dt * k
        else:
            eq = aeff / dyn.b
            traj = eq + (s0 - eq) * np.exp(-dyn.b * dt * k)
        return np.maximum(traj, 0.0)
    if isinstance(dyn, OscillatoryAux):
        # Simpson per step; rate depends on time only, so increments are
        # precomputable and the clamped path is the reflected cumulative sum.
        t_start = aux0 + np.arange(n, dtype=float) * dyn.omega * dt
        f0 = dyn.c - delta + dyn.amplitude * np.sin(t_start)
        f1 = dyn.c - delta + dyn.amplitude * np.sin(t_start + dyn.omega * dt / 2.0)
        f2 = dyn.c - delta + dyn.amplitude * np.sin(t_start + dyn.omega * dt)
        inc = dt / 6.0 * (f0 + 4.0 * f1 + f2)
        cum = s0 + np.cumsum(inc)
        running_min = np.minimum.accumulate(np.minimum(cum, 0.0))
        return cum - np.minimum(running_min, 0.0)
    raise TypeError(f"unknown dynamics {dyn!r}")


def fixed_step_simulate(
    net: ValidatedNetwork, init: Optional[np.ndarray], cfg: OracleConfig
) -> Trace:
    dt = cfg.dt
    total_steps = int(round(cfg.horizon / dt))
    state = engine.make_state(net, cfg.horizon, init)
    initial = state.s.copy()
    boundary_steps = sorted({int(math.ceil(b / dt - 1e-9)) for b in state.boundaries})
    events: list[ClusterEvent] = []
    k = 0
    while k < total_steps:
        nb = next((b for b in boundary_steps if b > k), total_steps)
        k_end = min(total_steps, nb, k + _BLOCK)
        n = k_end - k
        t0 = k * dt
        deltas = engine._active_deltas(net, t0)
        trajs = [
            _block_trajectory(net.cells[i], state.s[i], state.aux[i], t0, dt, n, deltas[i])
            for i in range(net.m)
        ]
        traj = np.vstack(trajs)
        crossed = traj >= net.thetas[:, None]
        if crossed.any():
            j_star = int(np.argmax(crossed.any(axis=0)))
            state.s = traj[:, j_star].copy()
            for i, cell in enumerate(net.cells):
                if isinstance(cell.dynamics, OscillatoryAux):
                    state.aux[i] += cell.dynamics.omega * dt * (j_star + 1)
            k += j_star + 1
            state.t = k * dt
            seeds = {i for i in range(net.m) if crossed[i, j_star]}
            cluster = engine.cascade(state, net, seeds)
            events.append(ClusterEvent(n=len(events), t=state.t, cluster=cluster))
        else:
            state.s = traj[:, -1].copy()
            for i, cell in enumerate(net.cells):
                if isinstance(cell.dynamics, OscillatoryAux):
                    state.aux[i] += cell.dynamics.omega * dt * n
            k = k_end
            state.t = k * dt
        engine._apply_due_impulses(state, net, dt)
    return Trace(m=net.m, horizon=cfg.horizon, initial=initial, events=events)


def compare_traces(
    a: Trace, b: Trace, time_tol: float, require_equal_clusters: bool = True
) -> ComparisonReport:
    """Greedy in-order event matching between two traces of the same network."""
    n = min(len(a.events), len(b.events))
    max_dev = 0.0
    mismatches = []
    for i in range(n):
        ea, eb = a.events[i], b.events[i]
        max_dev = max(max_dev, abs(ea.t - eb.t))
        if ea.cluster != eb.cluster:
            mismatches.append(i)
    return ComparisonReport(
        matched=n,
        max_time_deviation=max_dev,
        cluster_mismatches=mismatches,
        unmatched_a=len(a.events) - n,
        unmatched_b=len(b.events) - n,
    )
