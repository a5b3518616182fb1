"""Static description of a cooperative pulse-coupled network.

A network is a set of m cells. Each cell owns a satisfaction variable S that
grows at a strictly positive rate g between events, spikes when S reaches the
cell's goal level theta, and resets to zero afterwards. Cells are coupled by a
nonnegative weight matrix: when cell i spikes, every other cell j receives an
instantaneous increment delta[i, j].

This module holds the immutable specs, their validation, the closed-form
growth-rate bounds, the hypothesis evaluators for the synchronization results,
and the parameter-space metric used for robustness probes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

# Violation codes reported by validate().
NON_POSITIVE_THETA = "NonPositiveTheta"
INITIAL_SATISFACTION_OUT_OF_RANGE = "InitialSatisfactionOutOfRange"
NEGATIVE_WEIGHT = "NegativeWeight"
NON_POSITIVE_GROWTH = "NonPositiveGrowth"
CORE_VIOLATION = "CoreViolation"
SHAPE_MISMATCH = "ShapeMismatch"
BAD_INTERFERENCE = "BadInterference"


@dataclass(frozen=True)
class ConstantRate:
    """dS/dt = a, constant."""

    a: float


@dataclass(frozen=True)
class AffineInS:
    """dS/dt = a - b*S. Requires a - b*theta > 0 so the rate stays positive."""

    a: float
    b: float


@dataclass(frozen=True)
class OscillatoryAux:
    """dS/dt = c + amplitude*sin(phi), with auxiliary phase dphi/dt = omega.

    The phase is continuous across received spikes and jumps back to
    phi_reset only when the cell itself spikes.
    """

    c: float
    amplitude: float
    omega: float
    phi_reset: float = 0.0


FreeDynamics = Union[ConstantRate, AffineInS, OscillatoryAux]


@dataclass(frozen=True)
class CellSpec:
    theta: float
    dynamics: FreeDynamics
    s0: float = 0.0
    aux0: Optional[float] = None

    def initial_aux(self) -> float:
        if isinstance(self.dynamics, OscillatoryAux):
            return self.aux0 if self.aux0 is not None else self.dynamics.phi_reset
        return 0.0


@dataclass(frozen=True)
class DifferentialInterference:
    """Rate reduction -delta applied to one cell over a time window."""

    target: int
    delta: float
    window: tuple[float, float]


@dataclass(frozen=True)
class ImpulsiveInterference:
    """One-shot decrement -magnitude applied to one cell at an instant."""

    target: int
    magnitude: float
    at: float


Interference = Union[DifferentialInterference, ImpulsiveInterference]


@dataclass(frozen=True, eq=False)
class WeightMatrix:
    """Dense m x m interaction magnitudes; row = sender, column = receiver."""

    delta: np.ndarray

    @property
    def m(self) -> int:
        return self.delta.shape[0]


@dataclass(frozen=True, eq=False)
class NetworkSpec:
    cells: tuple[CellSpec, ...]
    weights: WeightMatrix
    core: Optional[frozenset[int]] = None
    interferences: tuple[Interference, ...] = ()

    @property
    def m(self) -> int:
        return len(self.cells)


def make_network(
    cells: Sequence[CellSpec],
    delta: np.ndarray | Sequence[Sequence[float]],
    core: Optional[Sequence[int]] = None,
    interferences: Sequence[Interference] = (),
) -> NetworkSpec:
    """Convenience constructor; does not validate."""
    arr = np.array(delta, dtype=float)
    return NetworkSpec(
        cells=tuple(cells),
        weights=WeightMatrix(arr),
        core=frozenset(core) if core is not None else None,
        interferences=tuple(interferences),
    )


@dataclass(frozen=True)
class Violation:
    code: str
    where: str
    message: str


class NetworkValidationError(ValueError):
    def __init__(self, violations: Sequence[Violation]):
        self.violations = list(violations)
        lines = ", ".join(f"{v.code}({v.where}): {v.message}" for v in violations)
        super().__init__(f"invalid network: {lines}")


class ZeroMinWeight(ValueError):
    """Full-graph hypothesis inapplicable: some ordered pair has delta = 0."""


class MissingCore(ValueError):
    pass


class ShapeMismatch(ValueError):
    pass


def g_bounds(dyn: FreeDynamics, theta: float) -> tuple[float, float]:
    """Tight growth-rate bounds over the cell's reachable states."""
    if isinstance(dyn, ConstantRate):
        return dyn.a, dyn.a
    if isinstance(dyn, AffineInS):
        return dyn.a - dyn.b * theta, dyn.a
    if isinstance(dyn, OscillatoryAux):
        return dyn.c - dyn.amplitude, dyn.c + dyn.amplitude
    raise TypeError(f"unknown dynamics {dyn!r}")


def _check_dynamics(i: int, cell: CellSpec, out: list[Violation]) -> None:
    dyn = cell.dynamics
    if isinstance(dyn, ConstantRate):
        if dyn.a <= 0:
            out.append(Violation(NON_POSITIVE_GROWTH, f"cell {i}", f"a = {dyn.a} must be > 0"))
    elif isinstance(dyn, AffineInS):
        if dyn.a <= 0:
            out.append(Violation(NON_POSITIVE_GROWTH, f"cell {i}", f"a = {dyn.a} must be > 0"))
        if dyn.b < 0:
            out.append(Violation(NON_POSITIVE_GROWTH, f"cell {i}", f"b = {dyn.b} must be >= 0"))
        if dyn.a - dyn.b * cell.theta <= 0:
            out.append(
                Violation(
                    NON_POSITIVE_GROWTH,
                    f"cell {i}",
                    f"a - b*theta = {dyn.a - dyn.b * cell.theta} must be > 0",
                )
            )
    elif isinstance(dyn, OscillatoryAux):
        if not (dyn.c > dyn.amplitude >= 0):
            out.append(
                Violation(
                    NON_POSITIVE_GROWTH,
                    f"cell {i}",
                    f"need c > amplitude >= 0, got c={dyn.c}, amplitude={dyn.amplitude}",
                )
            )
        if dyn.omega <= 0:
            out.append(Violation(NON_POSITIVE_GROWTH, f"cell {i}", f"omega = {dyn.omega} must be > 0"))
        if not (0.0 <= dyn.phi_reset < 2 * math.pi):
            out.append(
                Violation(NON_POSITIVE_GROWTH, f"cell {i}", f"phi_reset = {dyn.phi_reset} not in [0, 2*pi)")
            )
    else:
        out.append(Violation(NON_POSITIVE_GROWTH, f"cell {i}", f"unknown dynamics {dyn!r}"))


@dataclass(frozen=True, eq=False)
class ValidatedNetwork:
    """A NetworkSpec whose invariants have been checked, plus cached arrays.

    Immutable after construction; safe to share across threads.
    """

    spec: NetworkSpec
    thetas: np.ndarray = field(repr=False)
    g_min: np.ndarray = field(repr=False)
    g_max: np.ndarray = field(repr=False)

    @property
    def m(self) -> int:
        return self.spec.m

    @property
    def cells(self) -> tuple[CellSpec, ...]:
        return self.spec.cells

    @property
    def delta(self) -> np.ndarray:
        return self.spec.weights.delta

    @property
    def core(self) -> Optional[frozenset[int]]:
        return self.spec.core

    @property
    def interferences(self) -> tuple[Interference, ...]:
        return self.spec.interferences

    @property
    def max_theta(self) -> float:
        return float(self.thetas.max())

    def min_delta(self, use_core: bool = False) -> float:
        """Minimum interaction over ordered pairs (i, j), i != j.

        With use_core=True the sender i ranges over the designated core only.
        """
        d = self.delta
        if use_core:
            if self.core is None:
                raise MissingCore("network has no designated core")
            senders = sorted(self.core)
        else:
            senders = range(self.m)
        vals = [d[i, j] for i in senders for j in range(self.m) if i != j]
        return float(min(vals))


def validate(spec: NetworkSpec) -> ValidatedNetwork:
    """Check every type invariant; raise NetworkValidationError listing all failures."""
    out: list[Violation] = []
    m = spec.m
    if m < 2:
        out.append(Violation(SHAPE_MISMATCH, "network", f"need at least 2 cells, got {m}"))
    d = spec.weights.delta
    if d.shape != (m, m):
        out.append(Violation(SHAPE_MISMATCH, "weights", f"delta shape {d.shape} != ({m}, {m})"))
        raise NetworkValidationError(out)
    if np.any(np.diag(d) != 0.0):
        out.append(Violation(SHAPE_MISMATCH, "weights", "diagonal must be identically 0"))
    off = d[~np.eye(m, dtype=bool)]
    if np.any(off < 0):
        out.append(Violation(NEGATIVE_WEIGHT, "weights", "cooperative network needs delta >= 0 off-diagonal"))

    for i, cell in enumerate(spec.cells):
        if cell.theta <= 0:
            out.append(Violation(NON_POSITIVE_THETA, f"cell {i}", f"theta = {cell.theta} must be > 0"))
        elif not (0.0 <= cell.s0 < cell.theta):
            out.append(
                Violation(
                    INITIAL_SATISFACTION_OUT_OF_RANGE,
                    f"cell {i}",
                    f"s0 = {cell.s0} not in [0, {cell.theta})",
                )
            )
        _check_dynamics(i, cell, out)

    if spec.core is not None:
        for i in spec.core:
            if not (0 <= i < m):
                out.append(Violation(CORE_VIOLATION, f"core cell {i}", "index out of range"))
                continue
            for j in range(m):
                if j != i and d[i, j] <= 0:
                    out.append(
                        Violation(
                            CORE_VIOLATION,
                            f"core cell {i}",
                            f"delta[{i},{j}] = {d[i, j]} must be > 0 for core members",
                        )
                    )

    for k, itf in enumerate(spec.interferences):
        if not (0 <= itf.target < m):
            out.append(Violation(BAD_INTERFERENCE, f"interference {k}", "target out of range"))
        if isinstance(itf, DifferentialInterference):
            ta, tb = itf.window
            if not ta < tb:
                out.append(Violation(BAD_INTERFERENCE, f"interference {k}", f"window {itf.window} needs t_a < t_b"))
            if itf.delta <= 0:
                out.append(Violation(BAD_INTERFERENCE, f"interference {k}", "delta must be > 0"))
        elif isinstance(itf, ImpulsiveInterference):
            if itf.magnitude <= 0:
                out.append(Violation(BAD_INTERFERENCE, f"interference {k}", "magnitude must be > 0"))

    if out:
        raise NetworkValidationError(out)

    thetas = np.array([c.theta for c in spec.cells], dtype=float)
    gmin = np.empty(m)
    gmax = np.empty(m)
    for i, c in enumerate(spec.cells):
        gmin[i], gmax[i] = g_bounds(c.dynamics, c.theta)
    return ValidatedNetwork(spec=spec, thetas=thetas, g_min=gmin, g_max=gmax)


@dataclass(frozen=True)
class HypothesisReport:
    hypothesis: str
    satisfied: bool
    margin: float
    K: Optional[int] = None


def _minimal_k(max_theta: float, min_delta: float) -> int:
    # smallest natural K >= 1 with K >= max_theta / min_delta
    return max(1, math.ceil(max_theta / min_delta - 1e-15))


def hypothesis_large_cooperativity(net: ValidatedNetwork) -> HypothesisReport:
    """sqrt(m) > max(sqrt(3), max_theta/min_delta + 1), min over all ordered pairs."""
    min_d = net.min_delta(use_core=False)
    if min_d == 0.0:
        raise ZeroMinWeight(
            "min delta over ordered pairs is 0; full-graph hypothesis inapplicable, use the core form"
        )
    rhs = max(math.sqrt(3.0), net.max_theta / min_d + 1.0)
    lhs = math.sqrt(net.m)
    return HypothesisReport(
        hypothesis="large_cooperativity",
        satisfied=lhs > rhs,
        margin=lhs - rhs,
        K=_minimal_k(net.max_theta, min_d),
    )


def hypothesis_similar_cells(net: ValidatedNetwork, use_core: Optional[bool] = None) -> HypothesisReport:
    """(min theta * min g_min) / (max theta * max g_max) > 1 - min_delta / max_theta."""
    if use_core is None:
        use_core = False
    min_d = net.min_delta(use_core=use_core)
    lhs = (float(net.thetas.min()) * float(net.g_min.min())) / (net.max_theta * float(net.g_max.max()))
    rhs = 1.0 - min_d / net.max_theta
    return HypothesisReport(hypothesis="similar_cells", satisfied=lhs > rhs, margin=lhs - rhs)


def hypothesis_core(net: ValidatedNetwork) -> HypothesisReport:
    """Core form: sqrt(|core|) > max(sqrt(3), max_theta / core-restricted min_delta + 1)."""
    if net.core is None:
        raise MissingCore("network has no designated core")
    min_d = net.min_delta(use_core=True)
    m1 = len(net.core)
    rhs = max(math.sqrt(3.0), net.max_theta / min_d + 1.0)
    lhs = math.sqrt(m1)
    return HypothesisReport(
        hypothesis="core",
        satisfied=lhs > rhs,
        margin=lhs - rhs,
        K=_minimal_k(net.max_theta, min_d),
    )


def bound_transitory_time(net: ValidatedNetwork) -> float:
    """Upper bound on the waiting time until the first full-population event."""
    return float(np.max(net.thetas / net.g_min))


def bound_period(net: ValidatedNetwork, use_core: Optional[bool] = None) -> float:
    """Real-valued upper bound 1 + max_theta/min_delta; any detected period p
    satisfies p <= floor(bound)."""
    if use_core is None:
        use_core = net.core is not None
    return 1.0 + net.max_theta / net.min_delta(use_core=use_core)


def _dynamics_distance(a: FreeDynamics, b: FreeDynamics, theta_max: float) -> float:
    """Closed-form upper bound standing in for the C1 distance between rates.

    Auxiliary parameters (omega, phi_reset) are included in the bound so the
    result is a metric on the full parameter vector.
    """
    if type(a) is not type(b):
        raise ShapeMismatch(f"dynamics variants differ: {type(a).__name__} vs {type(b).__name__}")
    if isinstance(a, ConstantRate):
        return abs(a.a - b.a)
    if isinstance(a, AffineInS):
        return abs(a.a - b.a) + (1.0 + theta_max) * abs(a.b - b.b)
    if isinstance(a, OscillatoryAux):
        return (
            abs(a.c - b.c)
            + 2.0 * abs(a.amplitude - b.amplitude)
            + abs(a.omega - b.omega)
            + abs(a.phi_reset - b.phi_reset)
        )
    raise TypeError(f"unknown dynamics {a!r}")


def parameter_distance(a: NetworkSpec, b: NetworkSpec) -> float:
    """Sup-metric over thetas, per-family rate parameters, and weight entries."""
    if a.m != b.m:
        raise ShapeMismatch(f"cell counts differ: {a.m} vs {b.m}")
    comps = [0.0]
    for ca, cb in zip(a.cells, b.cells):
        comps.append(abs(ca.theta - cb.theta))
        comps.append(_dynamics_distance(ca.dynamics, cb.dynamics, max(ca.theta, cb.theta)))
    da, db = a.weights.delta, b.weights.delta
    mask = ~np.eye(a.m, dtype=bool)
    comps.append(float(np.max(np.abs(da[mask] - db[mask]))) if a.m > 1 else 0.0)
    return max(comps)
