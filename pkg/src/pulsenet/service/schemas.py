"""Pydantic request/response models for the HTTP service.

The network payload mirrors the JSON config schema (config.py); parsing and
validation are delegated to config.network_from_dict / model.validate so the
service and the CLI accept exactly the same documents.
"""

from __future__ import annotations

from typing import Any, Optional

from pydantic import BaseModel, Field


class ConfigPayload(BaseModel):
    # free-form on purpose: config.config_from_dict is the single validator
    config: dict[str, Any]


class SimulateRequest(ConfigPayload):
    horizon: Optional[float] = Field(default=None, gt=0)
    random_init: bool = False


class EventOut(BaseModel):
    n: int
    t: float
    cluster: list[int]


class TraceOut(BaseModel):
    m: int
    horizon: float
    initial: list[float]
    events: list[EventOut]


class AnalyzeRequest(ConfigPayload):
    trace: TraceOut


class VerifyRequest(ConfigPayload):
    n_inits: int = Field(default=50, ge=1)
    horizon: Optional[float] = Field(default=None, gt=0)
    rng_seed: Optional[int] = None


class ViolationOut(BaseModel):
    code: str
    where: str
    message: str


class ErrorOut(BaseModel):
    error: str
    violations: list[ViolationOut] = []
