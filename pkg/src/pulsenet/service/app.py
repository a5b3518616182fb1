"""FastAPI service exposing check/simulate/analyze/verify over HTTP.

Run with: uvicorn pulsenet.service.app:app
All endpoints take the same JSON config documents the CLI reads; invalid
configs come back as 400 with the structured violation list.
"""

from __future__ import annotations

import numpy as np
from fastapi import FastAPI, HTTPException

from .. import analysis, config, engine, model, reports
from . import schemas

app = FastAPI(title="pulsenet", version="0.1.0")


def _parse(payload: schemas.ConfigPayload) -> tuple[config.ConfigFile, model.ValidatedNetwork]:
    try:
        cfg = config.config_from_dict(payload.config)
        net = model.validate(cfg.network)
    except model.NetworkValidationError as exc:
        raise HTTPException(
            status_code=400,
            detail={
                "error": str(exc),
                "violations": [
                    {"code": v.code, "where": v.where, "message": v.message}
                    for v in exc.violations
                ],
            },
        )
    except config.ConfigError as exc:
        raise HTTPException(status_code=400, detail={"error": str(exc), "violations": []})
    return cfg, net


@app.get("/health")
def health() -> dict[str, str]:
    return {"status": "ok"}


@app.post("/check")
def check(payload: schemas.ConfigPayload) -> dict:
    _cfg, net = _parse(payload)
    return reports.check_report(net)


@app.post("/simulate")
def simulate(payload: schemas.SimulateRequest) -> schemas.TraceOut:
    cfg, net = _parse(payload)
    horizon = payload.horizon if payload.horizon is not None else cfg.sim.horizon
    init = None
    if payload.random_init:
        rng = np.random.default_rng(cfg.sim.rng_seed)
        init = rng.uniform(0.0, net.thetas)
    try:
        trace = engine.simulate(
            net, horizon, init=init, eps_sync=cfg.sim.eps_sync,
            eps_root=cfg.sim.eps_root, max_events=cfg.sim.max_events,
        )
    except engine.EventFlood as exc:
        raise HTTPException(status_code=400, detail={"error": str(exc), "violations": []})
    return schemas.TraceOut(**reports.trace_dict(trace))


def _trace_from_schema(t: schemas.TraceOut) -> engine.Trace:
    return engine.Trace(
        m=t.m,
        horizon=t.horizon,
        initial=np.asarray(t.initial, dtype=float),
        events=[
            engine.ClusterEvent(n=e.n, t=e.t, cluster=frozenset(e.cluster)) for e in t.events
        ],
    )


@app.post("/analyze")
def analyze(payload: schemas.AnalyzeRequest) -> dict:
    _cfg, net = _parse(payload)
    trace = _trace_from_schema(payload.trace)
    if trace.m != net.m:
        raise HTTPException(
            status_code=400,
            detail={"error": f"trace has m={trace.m} but network has m={net.m}", "violations": []},
        )
    return reports.analyze_bundle(trace, net)


@app.post("/verify")
def verify(payload: schemas.VerifyRequest) -> dict:
    cfg, net = _parse(payload)
    horizon = payload.horizon if payload.horizon is not None else cfg.sim.horizon
    seed = payload.rng_seed if payload.rng_seed is not None else cfg.sim.rng_seed
    try:
        rep = analysis.verify_theorems(net, payload.n_inits, horizon, seed)
    except (analysis.HypothesisNotSatisfied, analysis.HorizonTooShort,
            analysis.NoFullSync, analysis.PeriodicityViolation) as exc:
        return {"error": str(exc)}
    return reports.verification_dict(rep)
