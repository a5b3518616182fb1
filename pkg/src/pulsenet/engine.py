"""Event-driven simulation of a validated pulse-coupled network.

Between events each satisfaction variable is flowed in closed form (constant
and affine families) or by fixed-step 4th-order quadrature (oscillatory
family). The earliest threshold hit is located exactly (closed form) or by
bisection, simultaneous hits are resolved by the avalanche fixed point, and
scheduled interferences are applied at their instants.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .model import (
    AffineInS,
    ConstantRate,
    DifferentialInterference,
    FreeDynamics,
    ImpulsiveInterference,
    OscillatoryAux,
    ValidatedNetwork,
)

EPS_SYNC = 1e-9
EPS_ROOT = 1e-10
MAX_EVENTS = 100_000


class HorizonReached(Exception):
    """Normal termination signal: no further event before the horizon."""


class EventFlood(RuntimeError):
    pass


@dataclass(frozen=True)
class ClusterEvent:
    n: int
    t: float
    cluster: frozenset[int]


@dataclass
class Trace:
    m: int
    horizon: float
    initial: np.ndarray
    events: list[ClusterEvent]

    @property
    def per_cell_spikes(self) -> list[list[float]]:
        """Projection of the cluster events onto each cell."""
        out: list[list[float]] = [[] for _ in range(self.m)]
        for ev in self.events:
            for i in ev.cluster:
                out[i].append(ev.t)
        return out


@dataclass
class SimState:
    t: float
    s: np.ndarray
    aux: np.ndarray
    boundaries: list[float] = field(default_factory=list)  # sorted instants of schedule changes
    applied_impulses: set[int] = field(default_factory=set)
    clamp_count: int = 0


def _osc_rate(dyn: OscillatoryAux, phi: float, delta: float) -> float:
    return dyn.c - delta + dyn.amplitude * math.sin(phi)


def _osc_increment(dyn: OscillatoryAux, phi0: float, h: float, delta: float) -> float:
    # Simpson on a rate that depends on time only: 4th order.
    f0 = _osc_rate(dyn, phi0, delta)
    f1 = _osc_rate(dyn, phi0 + dyn.omega * h / 2.0, delta)
    f2 = _osc_rate(dyn, phi0 + dyn.omega * h, delta)
    return h / 6.0 * (f0 + 4.0 * f1 + f2)


def _osc_step(dyn: OscillatoryAux) -> float:
    return min(0.01, 0.01 / dyn.omega)


def flow(dyn: FreeDynamics, theta: float, s: float, aux: float, dt: float, active_delta: float) -> tuple[float, float, bool]:
    """Advance one cell by dt under the current drift.

    Returns (s, aux, clamped). The caller guarantees s stays below theta;
    negative drift is clamped at 0.
    """
    if dt == 0.0:
        return s, aux, False
    if isinstance(dyn, ConstantRate):
        s2 = s + (dyn.a - active_delta) * dt
        if s2 < 0.0:
            return 0.0, aux, True
        return s2, aux, False
    if isinstance(dyn, AffineInS):
        aeff = dyn.a - active_delta
        if dyn.b == 0.0:
            s2 = s + aeff * dt
        else:
            eq = aeff / dyn.b
            s2 = eq + (s - eq) * math.exp(-dyn.b * dt)
        if s2 < 0.0:
            return 0.0, aux, True
        return s2, aux, False
    if isinstance(dyn, OscillatoryAux):
        h = _osc_step(dyn)
        n_full = int(dt / h)
        clamped = False
        phi = aux
        cur = s
        for _ in range(n_full):
            cur += _osc_increment(dyn, phi, h, active_delta)
            phi += dyn.omega * h
            if cur < 0.0:
                cur = 0.0
                clamped = True
        rem = dt - n_full * h
        if rem > 0.0:
            cur += _osc_increment(dyn, phi, rem, active_delta)
            if cur < 0.0:
                cur = 0.0
                clamped = True
        return cur, aux + dyn.omega * dt, clamped
    raise TypeError(f"unknown dynamics {dyn!r}")


def hit_time(
    dyn: FreeDynamics,
    theta: float,
    s: float,
    aux: float,
    active_delta: float = 0.0,
    t_max: float = math.inf,
    eps_root: float = EPS_ROOT,
) -> Optional[float]:
    """Smallest tau > 0 with S(tau) = theta under the current drift.

    Returns None when no hit occurs within t_max (including a permanently
    non-positive effective rate; the caller re-queries at the window end).
    """
    if isinstance(dyn, ConstantRate):
        r = dyn.a - active_delta
        if r <= 0.0:
            return None
        tau = (theta - s) / r
        return tau if tau <= t_max else None
    if isinstance(dyn, AffineInS):
        aeff = dyn.a - active_delta
        if dyn.b == 0.0:
            if aeff <= 0.0:
                return None
            tau = (theta - s) / aeff
            return tau if tau <= t_max else None
        if aeff - dyn.b * theta <= 0.0:
            # equilibrium at or below theta: never reaches it
            return None
        tau = math.log((aeff - dyn.b * s) / (aeff - dyn.b * theta)) / dyn.b
        return tau if tau <= t_max else None
    if isinstance(dyn, OscillatoryAux):
        if dyn.c + dyn.amplitude - active_delta <= 0.0:
            return None
        h = _osc_step(dyn)
        t = 0.0
        cur = s
        phi = aux
        # worst-case time to hit if the minimum effective rate is positive
        g_lo = dyn.c - dyn.amplitude - active_delta
        cap = t_max if g_lo <= 0.0 else min(t_max, (theta - s) / g_lo + h)
        while t < cap:
            step = min(h, cap - t)
            nxt = cur + _osc_increment(dyn, phi, step, active_delta)
            if nxt >= theta:
                # bisect the fraction of this substep
                lo, hi = 0.0, step
                base_s, base_phi = cur, phi
                while hi - lo > 1e-15:
                    mid = 0.5 * (lo + hi)
                    val = base_s + _osc_increment(dyn, base_phi, mid, active_delta)
                    if abs(val - theta) < eps_root:
                        return t + mid if t + mid <= t_max else None
                    if val < theta:
                        lo = mid
                    else:
                        hi = mid
                tau = t + 0.5 * (lo + hi)
                return tau if tau <= t_max else None
            cur = max(0.0, nxt)
            phi += dyn.omega * step
            t += step
        return None
    raise TypeError(f"unknown dynamics {dyn!r}")


def cascade(state: SimState, net: ValidatedNetwork, seeds: frozenset[int] | set[int]) -> frozenset[int]:
    """Resolve the avalanche fixed point at the current instant.

    Rounds: reset the newly spiking cells, add their outgoing weights to every
    non-member, recruit any cell pushed to its goal level; stops when no
    recruit. Members never receive increments. Order-independent.
    """
    if not seeds:
        raise ValueError("cascade needs a nonempty seed set")
    d = net.delta
    thetas = net.thetas
    s = state.s
    cluster: set[int] = set()
    new = set(seeds)
    while new:
        for j in new:
            s[j] = 0.0
            dyn = net.cells[j].dynamics
            if isinstance(dyn, OscillatoryAux):
                state.aux[j] = dyn.phi_reset
        cluster |= new
        inc = d[sorted(new), :].sum(axis=0)
        recruits: set[int] = set()
        for i in range(net.m):
            if i in cluster:
                continue
            s[i] += inc[i]
            if s[i] >= thetas[i]:
                recruits.add(i)
        new = recruits
    return frozenset(cluster)


def apply_impulse(state: SimState, target: int, magnitude: float) -> None:
    """S_target <- max(0, S_target - magnitude); never triggers a spike."""
    if magnitude <= 0:
        raise ValueError("impulse magnitude must be > 0")
    state.s[target] = max(0.0, state.s[target] - magnitude)


def _active_deltas(net: ValidatedNetwork, t: float) -> np.ndarray:
    out = np.zeros(net.m)
    for itf in net.interferences:
        if isinstance(itf, DifferentialInterference):
            ta, tb = itf.window
            if ta <= t < tb:
                out[itf.target] += itf.delta
    return out


def _schedule_boundaries(net: ValidatedNetwork, horizon: float) -> list[float]:
    pts: set[float] = set()
    for itf in net.interferences:
        if isinstance(itf, DifferentialInterference):
            pts.update(itf.window)
        else:
            pts.add(itf.at)
    return sorted(p for p in pts if 0.0 < p <= horizon)


def _apply_due_impulses(state: SimState, net: ValidatedNetwork, eps: float) -> None:
    for k, itf in enumerate(net.interferences):
        if isinstance(itf, ImpulsiveInterference) and k not in state.applied_impulses:
            if abs(itf.at - state.t) <= eps:
                apply_impulse(state, itf.target, itf.magnitude)
                state.applied_impulses.add(k)


def _flow_all(state: SimState, net: ValidatedNetwork, dt: float, deltas: np.ndarray) -> None:
    for i, cell in enumerate(net.cells):
        s2, aux2, clamped = flow(cell.dynamics, cell.theta, state.s[i], state.aux[i], dt, deltas[i])
        state.s[i] = s2
        state.aux[i] = aux2
        if clamped:
            state.clamp_count += 1
    state.t += dt


def step(
    state: SimState,
    net: ValidatedNetwork,
    horizon: float,
    n_event: int,
    eps_sync: float = EPS_SYNC,
    eps_root: float = EPS_ROOT,
) -> Optional[ClusterEvent]:
    """Advance to the next event.

    Returns a ClusterEvent for a threshold hit, None for a schedule-boundary
    advance (impulse or interference-window edge), and raises HorizonReached
    after flowing the state to the horizon.
    """
    t = state.t
    idx = bisect.bisect_right(state.boundaries, t)
    next_boundary = state.boundaries[idx] if idx < len(state.boundaries) else math.inf
    seg_end = min(next_boundary, horizon)
    deltas = _active_deltas(net, t)

    taus = []
    for i, cell in enumerate(net.cells):
        tau = hit_time(cell.dynamics, cell.theta, state.s[i], state.aux[i], deltas[i], seg_end - t, eps_root)
        taus.append(tau)
    finite = [tau for tau in taus if tau is not None]

    if not finite:
        _flow_all(state, net, seg_end - t, deltas)
        state.t = seg_end  # avoid accumulation error at exact boundaries
        if seg_end >= horizon:
            raise HorizonReached
        _apply_due_impulses(state, net, 0.0)
        return None

    tau_star = min(finite)
    seeds = {i for i, tau in enumerate(taus) if tau is not None and tau <= tau_star + eps_sync}
    _flow_all(state, net, tau_star, deltas)
    cluster = cascade(state, net, seeds)
    ev = ClusterEvent(n=n_event, t=float(state.t), cluster=cluster)
    # impulses scheduled at exactly a spike instant apply after the cascade
    _apply_due_impulses(state, net, eps_sync)
    return ev


def make_state(net: ValidatedNetwork, horizon: float, init: Optional[np.ndarray] = None) -> SimState:
    if init is None:
        s = np.array([c.s0 for c in net.cells], dtype=float)
    else:
        s = np.array(init, dtype=float)
        if s.shape != (net.m,):
            raise ValueError(f"init shape {s.shape} != ({net.m},)")
        if np.any(s < 0) or np.any(s >= net.thetas):
            raise ValueError("init must satisfy 0 <= s0 < theta per cell")
    aux = np.array([c.initial_aux() for c in net.cells], dtype=float)
    return SimState(t=0.0, s=s, aux=aux, boundaries=_schedule_boundaries(net, horizon))


def simulate(
    net: ValidatedNetwork,
    horizon: float,
    init: Optional[np.ndarray] = None,
    eps_sync: float = EPS_SYNC,
    eps_root: float = EPS_ROOT,
    max_events: int = MAX_EVENTS,
) -> Trace:
    """Run the event-driven simulation up to the horizon."""
    if horizon <= 0:
        raise ValueError("horizon must be > 0")
    state = make_state(net, horizon, init)
    initial = state.s.copy()
    events: list[ClusterEvent] = []
    while True:
        try:
            ev = step(state, net, horizon, len(events), eps_sync, eps_root)
        except HorizonReached:
            break
        if ev is not None:
            events.append(ev)
            if len(events) > max_events:
                raise EventFlood(f"more than {max_events} events before t={state.t}")
        if state.t >= horizon:
            break
    return Trace(m=net.m, horizon=horizon, initial=initial, events=events)


def detect_death(trace: Trace, net: ValidatedNetwork, quiescence_factor: float) -> frozenset[int]:
    """Empirical death flags: cell i is presumed dead when its last spike
    precedes horizon - factor * (theta_i / g_min_i). Exact death is
    undecidable from a finite trace."""
    flagged = set()
    spikes = trace.per_cell_spikes
    for i in range(net.m):
        last = spikes[i][-1] if spikes[i] else 0.0
        window = quiescence_factor * net.thetas[i] / net.g_min[i]
        if trace.horizon - last > window:
            flagged.add(i)
    return frozenset(flagged)
