"""Plain-dict report builders shared by the CLI and the HTTP service.

Everything here is JSON-ready and deterministic: dict contents depend only on
the inputs, and rendering goes through config.dumps_canonical.
"""

from __future__ import annotations

import math
from typing import Any, Optional

from . import analysis, engine, model
from .engine import Trace
from .model import ValidatedNetwork


def hypothesis_dict(rep: model.HypothesisReport) -> dict[str, Any]:
    out: dict[str, Any] = {
        "hypothesis": rep.hypothesis,
        "satisfied": rep.satisfied,
        "margin": rep.margin,
    }
    if rep.K is not None:
        out["K"] = rep.K
    return out


def check_report(net: ValidatedNetwork) -> dict[str, Any]:
    """Hypothesis verdicts plus the closed-form bounds."""
    use_core = net.core is not None
    hyps: dict[str, Any] = {}
    applicable: Optional[model.HypothesisReport] = None
    try:
        rep = model.hypothesis_large_cooperativity(net)
        hyps["large_cooperativity"] = hypothesis_dict(rep)
        if not use_core:
            applicable = rep
    except model.ZeroMinWeight as exc:
        hyps["large_cooperativity"] = {"hypothesis": "large_cooperativity", "error": str(exc)}
    if use_core:
        rep = model.hypothesis_core(net)
        hyps["core"] = hypothesis_dict(rep)
        applicable = rep
    hyps["similar_cells"] = hypothesis_dict(model.hypothesis_similar_cells(net, use_core=use_core))
    out = {
        "m": net.m,
        "core": sorted(net.core) if net.core is not None else None,
        "hypotheses": hyps,
        "t_bound": model.bound_transitory_time(net),
        "requested_hypothesis_holds": bool(applicable is not None and applicable.satisfied),
    }
    try:
        out["p_bound"] = model.bound_period(net, use_core=use_core)
    except model.ZeroMinWeight:
        out["p_bound"] = None
    return out


def trace_dict(trace: Trace) -> dict[str, Any]:
    return {
        "m": trace.m,
        "horizon": trace.horizon,
        "initial": [float(x) for x in trace.initial],
        "events": [
            {"n": ev.n, "t": ev.t, "cluster": sorted(ev.cluster)} for ev in trace.events
        ],
    }


def sync_dict(sync: analysis.SyncReport) -> dict[str, Any]:
    return {
        "transitory_time": sync.transitory_time,
        "period_p": sync.period_p,
        "periodic_clusters": [sorted(c) for c in sync.periodic_clusters],
        "periodic_isis": [float(x) for x in sync.periodic_isis],
        "verified_repeats": sync.verified_repeats,
    }


def info_dict(info: analysis.InfoReport) -> dict[str, Any]:
    return {
        "pattern_counts": {str(k): v for k, v in sorted(info.pattern_counts.items())},
        "H_bits": info.H_bits,
    }


def risk_dict(risk: analysis.RiskReport) -> dict[str, Any]:
    return {
        "intrinsic": risk.intrinsic,
        "entries": [
            {
                "cell": e.cell,
                "isi_index": e.isi_index,
                "start": e.start,
                "end": e.end,
                "net_action": e.net_action,
                "protection": e.protection,
                "net_risk": e.net_risk,
                "steady": e.steady,
            }
            for e in risk.entries
        ],
    }


def analyze_bundle(trace: Trace, net: ValidatedNetwork) -> dict[str, Any]:
    """SyncReport + InfoReport + RiskReport for one trace, with dead-cell flags."""
    out: dict[str, Any] = {}
    try:
        sync = analysis.detect_full_sync(trace, net.m)
        out["sync"] = sync_dict(sync)
        out["info"] = info_dict(analysis.information(sync, net))
        transitory: float = sync.transitory_time
    except analysis.NoFullSync as exc:
        out["sync"] = {"error": str(exc)}
        out["info"] = None
        transitory = math.inf
    out["risk"] = risk_dict(analysis.risk_and_protection(trace, net, transitory_time=transitory))
    out["presumed_dead"] = sorted(engine.detect_death(trace, net, quiescence_factor=3.0))
    return out


def verification_dict(rep: analysis.VerificationReport) -> dict[str, Any]:
    return {
        "n_inits": rep.n_inits,
        "horizon": rep.horizon,
        "rng_seed": rep.rng_seed,
        "hypotheses": {k: hypothesis_dict(v) for k, v in sorted(rep.hypotheses.items())},
        "t_bound": rep.t_bound,
        "p_bound": rep.p_bound,
        "period_p": rep.period_p,
        "max_transitory": rep.max_transitory,
        "H_bits": rep.H_bits,
        "min_protection": rep.min_protection,
        "checks": dict(sorted(rep.checks.items())),
        "passed": rep.passed,
    }
