"""Derived quantities of a simulated trace.

Synchronization structure (transitory time, natural spiking period, periodic
cluster and inter-spike-interval sequences), spiking-code pattern counts and
the total amount of information, per-cell risk and protection quantities, and
the end-to-end theorem verifier used by the CLI and service.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import engine, model
from .engine import Trace
from .model import ValidatedNetwork

ISI_TOL = 1e-9
RISK_IDENTITY_TOL = 1e-12


class NoFullSync(RuntimeError):
    """Fewer than two full-population events in the trace."""


class PeriodicityViolation(RuntimeError):
    pass


class HypothesisNotSatisfied(RuntimeError):
    pass


class HorizonTooShort(RuntimeError):
    pass


@dataclass
class SyncReport:
    transitory_time: float
    period_p: int
    periodic_clusters: list[frozenset[int]]
    periodic_isis: list[float]
    verified_repeats: int


@dataclass
class InfoReport:
    pattern_counts: dict[int, int]
    H_bits: float


@dataclass
class RiskEntry:
    cell: int
    isi_index: int
    start: float
    end: float
    net_action: float
    protection: float
    net_risk: float
    steady: bool


@dataclass
class RiskReport:
    intrinsic: list[float]
    entries: list[RiskEntry]

    def steady_entries(self) -> list[RiskEntry]:
        return [e for e in self.entries if e.steady]


def detect_full_sync(trace: Trace, m: int, isi_tol: float = ISI_TOL) -> SyncReport:
    """Locate the periodic regime and assert its periodicity on the whole tail."""
    full = frozenset(range(m))
    events = trace.events
    full_idx = [k for k, ev in enumerate(events) if ev.cluster == full]
    if len(full_idx) < 2:
        raise NoFullSync(
            f"{len(full_idx)} full-population events within horizon {trace.horizon}"
        )
    k0, k1 = full_idx[0], full_idx[1]
    p = k1 - k0
    clusters = [events[k0 + j].cluster for j in range(p)]
    isis = [events[k0 + j + 1].t - events[k0 + j].t for j in range(p)]
    for n in range(k0, len(events) - p):
        if events[n + p].cluster != events[n].cluster:
            raise PeriodicityViolation(f"cluster sequence not {p}-periodic at event {n}")
        if n + p + 1 < len(events):
            isi_a = events[n + 1].t - events[n].t
            isi_b = events[n + p + 1].t - events[n + p].t
            if abs(isi_a - isi_b) > isi_tol:
                raise PeriodicityViolation(
                    f"inter-event gaps not {p}-periodic at event {n}: {isi_a} vs {isi_b}"
                )
    return SyncReport(
        transitory_time=events[k0].t,
        period_p=p,
        periodic_clusters=clusters,
        periodic_isis=isis,
        verified_repeats=(len(events) - 1 - k0) // p,
    )


def enumerate_patterns(sync: SyncReport, k: int) -> set[tuple[frozenset[int], ...]]:
    """Distinct length-k windows read cyclically from the periodic cluster sequence."""
    if k < 1:
        raise ValueError("pattern length k must be >= 1")
    seq = sync.periodic_clusters
    p = len(seq)
    return {tuple(seq[(r + j) % p] for j in range(k)) for r in range(p)}


def information(sync: SyncReport, net: Optional[ValidatedNetwork] = None) -> InfoReport:
    """H = log2(p) bits, with the pattern-count law checked by enumeration."""
    p = sync.period_p
    counts = {}
    for k in range(1, p + 1):
        counts[k] = len(enumerate_patterns(sync, k))
        if counts[k] > p:
            raise PeriodicityViolation(f"#patterns({k}) = {counts[k]} exceeds period {p}")
    if counts[p] != p:
        raise PeriodicityViolation(f"#patterns({p}) = {counts[p]} != period {p}")
    h = math.log2(p)
    if net is not None and h > math.log2(model.bound_period(net)) + 1e-12:
        raise PeriodicityViolation("information exceeds the period-bound cross-check")
    return InfoReport(pattern_counts=counts, H_bits=h)


def cell_isis(trace: Trace, i: int) -> list[tuple[float, float]]:
    """Closed inter-spike intervals (t^(h), t^(h+1)] of cell i, with t^(0) = 0."""
    times = [0.0] + trace.per_cell_spikes[i]
    return list(zip(times[:-1], times[1:]))


def net_action(trace: Trace, net: ValidatedNetwork, i: int, h: int) -> float:
    """Total cooperative input received by cell i during its h-th interval,
    right endpoint included (cluster mates at the closing instant count)."""
    intervals = cell_isis(trace, i)
    lo, hi = intervals[h]
    d = net.delta
    total = 0.0
    for ev in trace.events:
        if lo < ev.t <= hi:
            total += sum(d[j, i] for j in ev.cluster if j != i)
    return total


def _clamp01(x: float) -> float:
    return max(0.0, min(1.0, x))


def risk_and_protection(
    trace: Trace, net: ValidatedNetwork, transitory_time: Optional[float] = None
) -> RiskReport:
    """Per-cell, per-interval risk quantities.

    Entries whose interval lies fully inside the periodic regime are marked
    steady; transient intervals are reported too but excluded from theorem
    checks by callers. The direct and factored net-risk formulas must agree.
    """
    if transitory_time is None:
        try:
            transitory_time = detect_full_sync(trace, net.m).transitory_time
        except NoFullSync:
            transitory_time = math.inf
    max_theta = net.max_theta
    intrinsic = [float(th / max_theta) for th in net.thetas]
    entries: list[RiskEntry] = []
    for i in range(net.m):
        for h, (lo, hi) in enumerate(cell_isis(trace, i)):
            dn = net_action(trace, net, i, h)
            r = intrinsic[i]
            protection = dn / net.thetas[i]
            direct = _clamp01((net.thetas[i] - dn) / max_theta)
            factored = _clamp01((1.0 - protection) * r)
            if abs(direct - factored) > RISK_IDENTITY_TOL:
                raise AssertionError(
                    f"net-risk formulas disagree for cell {i}, interval {h}: {direct} vs {factored}"
                )
            entries.append(
                RiskEntry(
                    cell=i,
                    isi_index=h,
                    start=lo,
                    end=hi,
                    net_action=dn,
                    protection=protection,
                    net_risk=direct,
                    steady=lo >= transitory_time,
                )
            )
    return RiskReport(intrinsic=intrinsic, entries=entries)


@dataclass
class VerificationReport:
    n_inits: int
    horizon: float
    rng_seed: int
    hypotheses: dict[str, model.HypothesisReport]
    t_bound: float
    p_bound: float
    period_p: Optional[int]
    max_transitory: float
    H_bits: Optional[float]
    min_protection: Optional[float]
    checks: dict[str, bool] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())


def random_inits(net: ValidatedNetwork, n: int, rng: np.random.Generator) -> list[np.ndarray]:
    return [rng.uniform(0.0, net.thetas) for _ in range(n)]


def _perturbed_spec(
    net: ValidatedNetwork, radius: float, rng: np.random.Generator
) -> model.NetworkSpec:
    """Random perturbation of every scalar parameter within the given radius
    under parameter_distance, clipped to keep the spec valid."""
    spec = net.spec

    def jitter(x: float, lo: float = 1e-6) -> float:
        return max(lo, x + rng.uniform(-radius, radius))

    cells = []
    for c in spec.cells:
        theta = jitter(c.theta)
        dyn = c.dynamics
        if isinstance(dyn, model.ConstantRate):
            dyn2 = model.ConstantRate(a=jitter(dyn.a))
        elif isinstance(dyn, model.AffineInS):
            a2 = jitter(dyn.a)
            b2 = max(0.0, dyn.b + rng.uniform(-radius, radius))
            if a2 - b2 * theta <= 0:
                b2 = max(0.0, (a2 - 1e-6) / theta)
            dyn2 = model.AffineInS(a=a2, b=b2)
        else:
            c2 = jitter(dyn.c)
            amp2 = max(0.0, min(c2 - 1e-6, dyn.amplitude + rng.uniform(-radius, radius)))
            dyn2 = model.OscillatoryAux(
                c=c2, amplitude=amp2, omega=dyn.omega, phi_reset=dyn.phi_reset
            )
        s0 = min(c.s0, theta * 0.999999)
        cells.append(model.CellSpec(theta=theta, dynamics=dyn2, s0=s0, aux0=c.aux0))
    d = spec.weights.delta.copy()
    m = spec.m
    for i in range(m):
        for j in range(m):
            if i != j and d[i, j] > 0:
                d[i, j] = jitter(d[i, j])
    return model.make_network(cells, d, core=spec.core, interferences=spec.interferences)


def verify_theorems(
    net: ValidatedNetwork,
    n_inits: int,
    horizon: float,
    rng_seed: int,
    n_perturbations: int = 5,
    perturbation_inits: int = 3,
) -> VerificationReport:
    """Check every theorem conclusion over random initial conditions.

    Requires the applicable synchronization hypothesis (core form when a core
    is designated, full-graph form otherwise).
    """
    use_core = net.core is not None
    hyps: dict[str, model.HypothesisReport] = {}
    if use_core:
        sync_hyp = model.hypothesis_core(net)
        hyps["core"] = sync_hyp
        try:
            hyps["large_cooperativity"] = model.hypothesis_large_cooperativity(net)
        except model.ZeroMinWeight:
            pass
    else:
        sync_hyp = model.hypothesis_large_cooperativity(net)
        hyps["large_cooperativity"] = sync_hyp
    hyps["similar_cells"] = model.hypothesis_similar_cells(net, use_core=use_core)
    if not sync_hyp.satisfied:
        raise HypothesisNotSatisfied(
            f"{sync_hyp.hypothesis} fails with margin {sync_hyp.margin}"
        )

    t_bound = model.bound_transitory_time(net)
    p_bound = model.bound_period(net, use_core=use_core)
    max_isi = float(np.max(net.thetas / net.g_min))
    needed = t_bound + 2.0 * p_bound * max_isi
    rng = np.random.default_rng(rng_seed)

    periods: set[int] = set()
    cluster_seqs: set[tuple[frozenset[int], ...]] = set()
    max_t = 0.0
    h_bits: Optional[float] = None
    min_protection = math.inf
    protection_ok = True
    similar_ok = True
    for init in random_inits(net, n_inits, rng):
        trace = engine.simulate(net, horizon, init=init)
        try:
            sync = detect_full_sync(trace, net.m)
        except NoFullSync:
            if horizon < needed:
                raise HorizonTooShort(
                    f"horizon {horizon} < recommended {needed}; cannot conclude"
                )
            raise
        periods.add(sync.period_p)
        cluster_seqs.add(tuple(sync.periodic_clusters))
        max_t = max(max_t, sync.transitory_time)
        h_bits = information(sync, net).H_bits
        risk = risk_and_protection(trace, net, transitory_time=sync.transitory_time)
        for e in risk.steady_entries():
            min_protection = min(min_protection, e.protection)
            if not (e.protection > 0.0 and e.net_risk < risk.intrinsic[e.cell]):
                protection_ok = False
            if hyps["similar_cells"].satisfied:
                if min(1.0, e.protection) < 1.0 - 1e-12 or e.net_risk > 1e-12:
                    similar_ok = False

    p = periods.pop() if len(periods) == 1 else None
    checks = {
        "sync_within_transitory_bound": max_t <= t_bound + 1e-9,
        "period_unique_and_bounded": (
            p is not None and len(cluster_seqs) == 1 and p <= math.floor(p_bound + 1e-12)
        ),
        "information_equals_log2_p": (
            p is not None and h_bits is not None and abs(h_bits - math.log2(p)) < 1e-12
        ),
        "protection_positive_and_risk_reduced": protection_ok,
    }
    if hyps["similar_cells"].satisfied:
        checks["similar_cells_full_sync"] = (
            p == 1 and similar_ok and h_bits is not None and h_bits == 0.0
        )

    if n_perturbations > 0:
        radius = sync_hyp.margin / 2.0
        robust_ok = True
        for _ in range(n_perturbations):
            pspec = _perturbed_spec(net, radius, rng)
            pnet = model.validate(pspec)
            pb = model.bound_period(pnet, use_core=use_core)
            for init in random_inits(pnet, perturbation_inits, rng):
                ptrace = engine.simulate(pnet, horizon, init=init)
                try:
                    psync = detect_full_sync(ptrace, pnet.m)
                except NoFullSync:
                    robust_ok = False
                    continue
                if psync.period_p > math.floor(pb + 1e-12):
                    robust_ok = False
        checks["robust_under_perturbation"] = robust_ok

    return VerificationReport(
        n_inits=n_inits,
        horizon=horizon,
        rng_seed=rng_seed,
        hypotheses=hyps,
        t_bound=t_bound,
        p_bound=p_bound,
        period_p=p,
        max_transitory=max_t,
        H_bits=h_bits,
        min_protection=None if min_protection is math.inf else min_protection,
        checks=checks,
    )
