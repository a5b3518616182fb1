"""Command-line front end.

Subcommands: gen | check | simulate | analyze | verify | sweep.

Every command runs in-process by default. check/simulate/analyze/verify also
accept --server URL to act as a thin client against a running pulsenet
service (see pulsenet.service). Exit codes: 0 pass, 1 verification failure,
2 invalid input. PULSENET_THREADS caps sweep parallelism.
"""

from __future__ import annotations

import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Optional

import click
import numpy as np

from . import analysis, config, engine, model, reports


def _fail_input(message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(2)


def _load(config_path: str) -> tuple[config.ConfigFile, model.ValidatedNetwork]:
    try:
        cfg = config.load_config(config_path)
        net = model.validate(cfg.network)
    except (config.ConfigError, model.NetworkValidationError, OSError) as exc:
        _fail_input(str(exc))
    return cfg, net


def _write_or_print(payload: dict[str, Any], out: Optional[str]) -> None:
    text = config.dumps_canonical(payload)
    if out:
        Path(out).write_text(text)
    else:
        click.echo(text, nl=False)


def _post(server: str, endpoint: str, payload: dict[str, Any]) -> dict[str, Any]:
    import httpx

    resp = httpx.post(f"{server.rstrip('/')}{endpoint}", json=payload, timeout=600.0)
    if resp.status_code == 400 or resp.status_code == 422:
        _fail_input(f"server rejected request: {resp.text}")
    resp.raise_for_status()
    return resp.json()


@click.group()
def main() -> None:
    """Simulate and verify cooperative pulse-coupled networks."""


def _sample_network(
    rng: np.random.Generator,
    m: int,
    family: str,
    theta_range: tuple[float, float],
    delta_range: tuple[float, float],
    rate_range: tuple[float, float],
    core_size: Optional[int],
) -> model.NetworkSpec:
    cells = []
    for _ in range(m):
        theta = rng.uniform(*theta_range)
        a = rng.uniform(*rate_range)
        if family == "constant":
            dyn: model.FreeDynamics = model.ConstantRate(a=a)
        elif family == "affine":
            # keep a - b*theta well above zero
            dyn = model.AffineInS(a=a, b=rng.uniform(0.0, 0.5 * a / theta))
        elif family == "oscillatory":
            dyn = model.OscillatoryAux(c=a, amplitude=0.25 * a, omega=2 * math.pi)
        else:
            raise ValueError(f"unknown family {family!r}")
        cells.append(model.CellSpec(theta=theta, dynamics=dyn))
    d = np.zeros((m, m))
    senders = range(m) if core_size is None else range(core_size)
    for i in range(m):
        for j in range(m):
            if i == j:
                continue
            if i in senders:
                lo = max(delta_range[0], 1e-9)
                d[i, j] = rng.uniform(lo, max(lo, delta_range[1]))
            else:
                d[i, j] = rng.uniform(0.0, delta_range[0])
    core = list(range(core_size)) if core_size is not None else None
    return model.make_network(cells, d, core=core)


@main.command()
@click.option("-m", "n_cells", type=int, required=True, help="Number of cells.")
@click.option("--family", type=click.Choice(["constant", "affine", "oscillatory"]), default="constant")
@click.option("--theta-range", type=(float, float), default=(1.0, 1.0), show_default=True)
@click.option("--delta-range", type=(float, float), default=(0.5, 0.5), show_default=True)
@click.option("--rate-range", type=(float, float), default=(1.0, 1.0), show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--mode", type=click.Choice(["full", "core"]), default="full", show_default=True)
@click.option("--m1", type=int, default=None, help="Core size (core mode).")
@click.option("--ensure-hypothesis", is_flag=True, help="Resample until the synchronization hypothesis holds.")
@click.option("--max-tries", type=int, default=200, show_default=True)
@click.option("--horizon", type=float, default=10.0, show_default=True)
@click.option("--out", type=click.Path(), default=None, help="Config file to write (stdout otherwise).")
def gen(n_cells, family, theta_range, delta_range, rate_range, seed, mode, m1,
        ensure_hypothesis, max_tries, horizon, out) -> None:
    """Sample a random network config."""
    if mode == "core":
        if m1 is None or not (2 <= m1 <= n_cells):
            _fail_input("core mode needs --m1 between 2 and m")
    else:
        m1 = None
    rng = np.random.default_rng(seed)
    last_margin = None
    for _ in range(max_tries if ensure_hypothesis else 1):
        spec = _sample_network(rng, n_cells, family, theta_range, delta_range, rate_range, m1)
        try:
            net = model.validate(spec)
        except model.NetworkValidationError:
            continue
        try:
            rep = model.hypothesis_core(net) if m1 is not None else model.hypothesis_large_cooperativity(net)
        except model.ZeroMinWeight:
            continue
        last_margin = rep.margin
        if not ensure_hypothesis or rep.satisfied:
            if ensure_hypothesis:
                click.echo(f"hypothesis margin: {rep.margin:.6g}", err=True)
            cfg = config.ConfigFile(
                network=spec, sim=config.SimSettings(horizon=horizon, rng_seed=seed)
            )
            _write_or_print(config.config_to_dict(cfg), out)
            return
    click.echo(
        f"error: no sample satisfied the hypothesis after {max_tries} tries"
        + (f" (last margin {last_margin:.6g})" if last_margin is not None else ""),
        err=True,
    )
    sys.exit(1)


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=False), required=True)
@click.option("--out", type=click.Path(), default=None, help="Also write the machine-readable report here.")
@click.option("--server", default=None, help="Run the check on a pulsenet service.")
def check(config_path, out, server) -> None:
    """Evaluate the theorem hypotheses and print verdicts with margins."""
    cfg, net = _load(config_path)
    if server:
        rep = _post(server, "/check", {"config": config.config_to_dict(cfg)})
    else:
        rep = reports.check_report(net)
    for name, h in rep["hypotheses"].items():
        if "error" in h:
            click.echo(f"{name}: inapplicable ({h['error']})")
        else:
            verdict = "satisfied" if h["satisfied"] else "not satisfied"
            extra = f", K={h['K']}" if "K" in h else ""
            click.echo(f"{name}: {verdict} (margin {h['margin']:.6g}{extra})")
    click.echo(f"T-bound: {rep['t_bound']:.6g}")
    click.echo(f"p-bound: {rep['p_bound']:.6g}" if rep["p_bound"] is not None else "p-bound: n/a")
    if out:
        Path(out).write_text(config.dumps_canonical(rep))
    sys.exit(0 if rep["requested_hypothesis_holds"] else 1)


@main.command()
@click.option("--config", "config_path", type=click.Path(), required=True)
@click.option("--out", type=click.Path(), required=True, help="Trace CSV to write.")
@click.option("--horizon", type=float, default=None, help="Override the config horizon.")
@click.option("--random-init", is_flag=True, help="Sample S(0) from the config rng_seed instead of the cells' s0.")
@click.option("--server", default=None)
def simulate(config_path, out, horizon, random_init, server) -> None:
    """Run the event-driven simulation and write the trace CSV."""
    cfg, net = _load(config_path)
    h = horizon if horizon is not None else cfg.sim.horizon
    if server:
        payload = {
            "config": config.config_to_dict(cfg),
            "horizon": h,
            "random_init": random_init,
        }
        data = _post(server, "/simulate", payload)
        events = [
            engine.ClusterEvent(n=e["n"], t=e["t"], cluster=frozenset(e["cluster"]))
            for e in data["events"]
        ]
        trace = engine.Trace(m=data["m"], horizon=data["horizon"],
                             initial=np.array(data["initial"]), events=events)
    else:
        init = None
        if random_init:
            rng = np.random.default_rng(cfg.sim.rng_seed)
            init = rng.uniform(0.0, net.thetas)
        trace = engine.simulate(
            net, h, init=init, eps_sync=cfg.sim.eps_sync,
            eps_root=cfg.sim.eps_root, max_events=cfg.sim.max_events,
        )
    cell_path = config.write_trace(trace, out)
    click.echo(f"{len(trace.events)} events -> {out} (per-cell: {cell_path})")


@main.command()
@click.option("--config", "config_path", type=click.Path(), required=True)
@click.option("--trace", "trace_path", type=click.Path(), required=True)
@click.option("--horizon", type=float, default=None,
              help="Horizon the trace was simulated with (defaults to the config horizon).")
@click.option("--out", type=click.Path(), default=None)
@click.option("--server", default=None)
def analyze(config_path, trace_path, horizon, out, server) -> None:
    """Emit sync/information/risk reports for a recorded trace."""
    cfg, net = _load(config_path)
    try:
        trace = config.read_trace(trace_path, net.m, horizon if horizon is not None else cfg.sim.horizon)
    except (OSError, ValueError, KeyError) as exc:
        _fail_input(f"cannot read trace {trace_path}: {exc}")
    if server:
        payload = {"config": config.config_to_dict(cfg), "trace": reports.trace_dict(trace)}
        bundle = _post(server, "/analyze", payload)
    else:
        bundle = reports.analyze_bundle(trace, net)
    _write_or_print(bundle, out)


@main.command()
@click.option("--config", "config_path", type=click.Path(), required=True)
@click.option("--n-inits", type=int, default=50, show_default=True)
@click.option("--horizon", type=float, default=None, help="Override the config horizon.")
@click.option("--seed", type=int, default=None, help="Override the config rng_seed.")
@click.option("--out", type=click.Path(), default=None)
@click.option("--server", default=None)
def verify(config_path, n_inits, horizon, seed, out, server) -> None:
    """Run the end-to-end theorem verification; exit 0 iff every check passes."""
    cfg, net = _load(config_path)
    h = horizon if horizon is not None else cfg.sim.horizon
    s = seed if seed is not None else cfg.sim.rng_seed
    if server:
        payload = {
            "config": config.config_to_dict(cfg),
            "n_inits": n_inits,
            "horizon": h,
            "rng_seed": s,
        }
        rep = _post(server, "/verify", payload)
        if "error" in rep:
            click.echo(f"verification aborted: {rep['error']}", err=True)
            sys.exit(1)
    else:
        try:
            rep = reports.verification_dict(analysis.verify_theorems(net, n_inits, h, s))
        except (analysis.HypothesisNotSatisfied, analysis.HorizonTooShort,
                analysis.NoFullSync, analysis.PeriodicityViolation) as exc:
            click.echo(f"verification aborted: {exc}", err=True)
            sys.exit(1)
    for name, ok in rep["checks"].items():
        click.echo(f"{name}: {'pass' if ok else 'FAIL'}")
    click.echo(f"p={rep['period_p']} T_max={rep['max_transitory']:.6g} H={rep['H_bits']} bits")
    _write_or_print(rep, out) if out else None
    sys.exit(0 if rep["passed"] else 1)


def _apply_sweep_value(spec: model.NetworkSpec, param: str, value: float) -> model.NetworkSpec:
    if param == "delta":
        m = spec.m
        d = np.full((m, m), value)
        np.fill_diagonal(d, 0.0)
        return model.make_network(spec.cells, d, core=spec.core, interferences=spec.interferences)
    if param == "theta":
        cells = [
            model.CellSpec(theta=value, dynamics=c.dynamics, s0=min(c.s0, value * 0.999999), aux0=c.aux0)
            for c in spec.cells
        ]
        return model.make_network(cells, spec.weights.delta, core=spec.core,
                                  interferences=spec.interferences)
    raise ValueError(f"unsupported sweep parameter {param!r}")


def _sweep_worker(args: tuple[dict[str, Any], str, float, int, float, int]) -> dict[str, Any]:
    cfg_dict, param, value, n_inits, horizon, seed = args
    cfg = config.config_from_dict(cfg_dict)
    row: dict[str, Any] = {"param": param, "value": value}
    try:
        spec = _apply_sweep_value(cfg.network, param, value)
        net = model.validate(spec)
        chk = reports.check_report(net)
        hl = chk["hypotheses"].get("core") or chk["hypotheses"].get("large_cooperativity", {})
        row["hypothesis_margin"] = hl.get("margin")
        row["similar_margin"] = chk["hypotheses"]["similar_cells"]["margin"]
        if not chk["requested_hypothesis_holds"]:
            row["status"] = "hypothesis-fail"
            return row
        rep = analysis.verify_theorems(net, n_inits, horizon, seed)
        d = reports.verification_dict(rep)
        row.update(
            p=d["period_p"], T_max=d["max_transitory"], H_bits=d["H_bits"],
            min_protection=d["min_protection"],
            status="pass" if d["passed"] else "fail",
        )
    except (model.NetworkValidationError, analysis.HypothesisNotSatisfied) as exc:
        row["status"] = f"error: {exc}"
    return row


_SWEEP_COLUMNS = ["param", "value", "hypothesis_margin", "similar_margin",
                  "p", "T_max", "H_bits", "min_protection", "status"]


@main.command()
@click.option("--config", "config_path", type=click.Path(), required=True)
@click.option("--param", type=click.Choice(["delta", "theta"]), required=True)
@click.option("--values", required=True, help="Comma-separated grid values.")
@click.option("--n-inits", type=int, default=20, show_default=True)
@click.option("--horizon", type=float, default=None)
@click.option("--out", type=click.Path(), required=True, help="Summary CSV to write.")
def sweep(config_path, param, values, n_inits, horizon, out) -> None:
    """Fan verify out over a parameter grid and write one summary row per point."""
    cfg, _net = _load(config_path)
    try:
        grid = [float(v) for v in values.split(",") if v.strip() != ""]
    except ValueError as exc:
        _fail_input(f"bad --values: {exc}")
    if not grid:
        _fail_input("empty --values grid")
    h = horizon if horizon is not None else cfg.sim.horizon
    cfg_dict = config.config_to_dict(cfg)
    jobs = [(cfg_dict, param, v, n_inits, h, cfg.sim.rng_seed) for v in grid]
    workers = int(os.environ.get("PULSENET_THREADS", "0")) or min(len(jobs), os.cpu_count() or 1)
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_worker, jobs))
    else:
        rows = [_sweep_worker(j) for j in jobs]
    import csv

    with open(out, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=_SWEEP_COLUMNS)
        w.writeheader()
        for row in rows:
            w.writerow({k: row.get(k, "") for k in _SWEEP_COLUMNS})
    for row in rows:
        click.echo(f"{param}={row['value']}: {row['status']}")
    sys.exit(0 if all(r["status"] == "pass" or r["status"] == "hypothesis-fail" for r in rows) else 1)


if __name__ == "__main__":
    main()
