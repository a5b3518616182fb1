"""JSON config and CSV trace serialization shared by the CLI and the service.

Config layout (version "1"):

    {
      "version": "1",
      "network": {
        "cells": [
          {"theta": 1.0, "s0": 0.0,
           "dynamics": {"family": "constant", "a": 1.0}},
          {"theta": 1.0,
           "dynamics": {"family": "affine", "a": 2.0, "b": 1.0}},
          {"theta": 1.0, "aux0": 0.0,
           "dynamics": {"family": "oscillatory", "c": 1.0, "amplitude": 0.25,
                        "omega": 6.283, "phi_reset": 0.0}}
        ],
        "weights": [[0.0, ...], ...],
        "core": [0, 1] | null,
        "interferences": [
          {"kind": "differential", "target": 2, "delta": 2.0, "window": [0.0, 10.0]},
          {"kind": "impulsive", "target": 1, "magnitude": 0.5, "at": 2.0}
        ]
      },
      "sim": {"horizon": 10.0, "eps_sync": 1e-9, "eps_root": 1e-10,
              "max_events": 100000, "rng_seed": 42},
      "oracle": {"dt": 1e-5}
    }

Trace files are CSV: events as `n,t,cluster` with the cluster a `|`-separated
list of zero-based indices, and a companion per-cell file `cell,h,t`.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional

from . import engine, model

CONFIG_VERSION = "1"


class ConfigError(ValueError):
    pass


@dataclass
class SimSettings:
    horizon: float = 10.0
    eps_sync: float = engine.EPS_SYNC
    eps_root: float = engine.EPS_ROOT
    max_events: int = engine.MAX_EVENTS
    rng_seed: int = 0


@dataclass
class ConfigFile:
    network: model.NetworkSpec
    sim: SimSettings
    oracle_dt: float = 1e-5


def _dynamics_to_dict(dyn: model.FreeDynamics) -> dict[str, Any]:
    if isinstance(dyn, model.ConstantRate):
        return {"family": "constant", "a": dyn.a}
    if isinstance(dyn, model.AffineInS):
        return {"family": "affine", "a": dyn.a, "b": dyn.b}
    if isinstance(dyn, model.OscillatoryAux):
        return {
            "family": "oscillatory",
            "c": dyn.c,
            "amplitude": dyn.amplitude,
            "omega": dyn.omega,
            "phi_reset": dyn.phi_reset,
        }
    raise TypeError(f"unknown dynamics {dyn!r}")


def _dynamics_from_dict(d: dict[str, Any], where: str) -> model.FreeDynamics:
    fam = d.get("family")
    try:
        if fam == "constant":
            return model.ConstantRate(a=float(d["a"]))
        if fam == "affine":
            return model.AffineInS(a=float(d["a"]), b=float(d["b"]))
        if fam == "oscillatory":
            return model.OscillatoryAux(
                c=float(d["c"]),
                amplitude=float(d["amplitude"]),
                omega=float(d["omega"]),
                phi_reset=float(d.get("phi_reset", 0.0)),
            )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: bad dynamics parameters: {exc}") from exc
    raise ConfigError(f"{where}: unknown dynamics family {fam!r}")


def network_to_dict(spec: model.NetworkSpec) -> dict[str, Any]:
    cells = []
    for c in spec.cells:
        entry: dict[str, Any] = {
            "theta": c.theta,
            "s0": c.s0,
            "dynamics": _dynamics_to_dict(c.dynamics),
        }
        if c.aux0 is not None:
            entry["aux0"] = c.aux0
        cells.append(entry)
    interferences = []
    for itf in spec.interferences:
        if isinstance(itf, model.DifferentialInterference):
            interferences.append(
                {
                    "kind": "differential",
                    "target": itf.target,
                    "delta": itf.delta,
                    "window": list(itf.window),
                }
            )
        else:
            interferences.append(
                {"kind": "impulsive", "target": itf.target, "magnitude": itf.magnitude, "at": itf.at}
            )
    return {
        "cells": cells,
        "weights": spec.weights.delta.tolist(),
        "core": sorted(spec.core) if spec.core is not None else None,
        "interferences": interferences,
    }


def network_from_dict(d: dict[str, Any]) -> model.NetworkSpec:
    if not isinstance(d, dict) or "cells" not in d or "weights" not in d:
        raise ConfigError("network section needs 'cells' and 'weights'")
    cells = []
    for i, cd in enumerate(d["cells"]):
        try:
            cells.append(
                model.CellSpec(
                    theta=float(cd["theta"]),
                    dynamics=_dynamics_from_dict(cd["dynamics"], f"cell {i}"),
                    s0=float(cd.get("s0", 0.0)),
                    aux0=float(cd["aux0"]) if "aux0" in cd and cd["aux0"] is not None else None,
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"cell {i}: {exc}") from exc
    interferences: list[model.Interference] = []
    for k, it in enumerate(d.get("interferences") or []):
        kind = it.get("kind")
        try:
            if kind == "differential":
                interferences.append(
                    model.DifferentialInterference(
                        target=int(it["target"]),
                        delta=float(it["delta"]),
                        window=(float(it["window"][0]), float(it["window"][1])),
                    )
                )
            elif kind == "impulsive":
                interferences.append(
                    model.ImpulsiveInterference(
                        target=int(it["target"]), magnitude=float(it["magnitude"]), at=float(it["at"])
                    )
                )
            else:
                raise ConfigError(f"interference {k}: unknown kind {kind!r}")
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"interference {k}: {exc}") from exc
    core = d.get("core")
    try:
        return model.make_network(
            cells,
            d["weights"],
            core=[int(i) for i in core] if core is not None else None,
            interferences=interferences,
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"weights: {exc}") from exc


def config_to_dict(cfg: ConfigFile) -> dict[str, Any]:
    return {
        "version": CONFIG_VERSION,
        "network": network_to_dict(cfg.network),
        "sim": {
            "horizon": cfg.sim.horizon,
            "eps_sync": cfg.sim.eps_sync,
            "eps_root": cfg.sim.eps_root,
            "max_events": cfg.sim.max_events,
            "rng_seed": cfg.sim.rng_seed,
        },
        "oracle": {"dt": cfg.oracle_dt},
    }


def config_from_dict(d: dict[str, Any]) -> ConfigFile:
    if not isinstance(d, dict):
        raise ConfigError("config must be a JSON object")
    version = d.get("version", CONFIG_VERSION)
    if str(version) != CONFIG_VERSION:
        raise ConfigError(f"unsupported config version {version!r}")
    if "network" not in d:
        raise ConfigError("config needs a 'network' section")
    sim_d = d.get("sim") or {}
    defaults = SimSettings()
    try:
        sim = SimSettings(
            horizon=float(sim_d.get("horizon", defaults.horizon)),
            eps_sync=float(sim_d.get("eps_sync", defaults.eps_sync)),
            eps_root=float(sim_d.get("eps_root", defaults.eps_root)),
            max_events=int(sim_d.get("max_events", defaults.max_events)),
            rng_seed=int(sim_d.get("rng_seed", defaults.rng_seed)),
        )
        oracle_dt = float((d.get("oracle") or {}).get("dt", 1e-5))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"sim/oracle settings: {exc}") from exc
    if sim.horizon <= 0 or not math.isfinite(sim.horizon):
        raise ConfigError(f"horizon must be finite and > 0, got {sim.horizon}")
    return ConfigFile(network=network_from_dict(d["network"]), sim=sim, oracle_dt=oracle_dt)


def dumps_canonical(obj: Any) -> str:
    """Deterministic JSON rendering used for all reports and configs."""
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def load_config(path: str | Path) -> ConfigFile:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON: {exc}") from exc
    return config_from_dict(data)


def save_config(cfg: ConfigFile, path: str | Path) -> None:
    Path(path).write_text(dumps_canonical(config_to_dict(cfg)))


def write_trace(trace: engine.Trace, path: str | Path) -> Path:
    """Write `n,t,cluster` CSV; returns the companion per-cell file path."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "t", "cluster"])
        for ev in trace.events:
            w.writerow([ev.n, repr(ev.t), "|".join(str(i) for i in sorted(ev.cluster))])
    cell_path = path.with_suffix(".cells.csv")
    with open(cell_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["cell", "h", "t"])
        for i, spikes in enumerate(trace.per_cell_spikes):
            for h, t in enumerate(spikes, start=1):
                w.writerow([i, h, repr(t)])
    return cell_path


def read_trace(path: str | Path, m: int, horizon: float) -> engine.Trace:
    events = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            cluster = frozenset(int(x) for x in row["cluster"].split("|") if x != "")
            events.append(engine.ClusterEvent(n=int(row["n"]), t=float(row["t"]), cluster=cluster))
    import numpy as np

    return engine.Trace(m=m, horizon=horizon, initial=np.zeros(m), events=events)
