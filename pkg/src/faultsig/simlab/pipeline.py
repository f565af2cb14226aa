"""Full numeric pipeline: simulate, detect, discriminate, report."""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..model import Model
from ..polycore import Polynomial
from ..sigtable import SignatureTable
from .detection import (
    DetectionConfig,
    DetectionError,
    NumericSignature,
    detect,
    discriminate,
    nominal_x0,
)
from .estimation import EstimationError
from .scenario import Scenario
from .simulate import SimulationError, TimeSeries, simulate


class PipelineError(RuntimeError):
    """Failure of one pipeline stage; ``stage`` names it."""

    def __init__(self, stage: str, message: str):
        self.stage = stage
        super().__init__(f"[{stage}] {message}")


def _clean(v):
    """JSON-safe floats (non-finite values become None)."""
    if isinstance(v, float):
        return v if math.isfinite(v) else None
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, dict):
        return {k: _clean(x) for k, x in v.items()}
    if isinstance(v, np.generic):
        return _clean(v.item())
    return v


@dataclass
class DetectionReport:
    scenario: str
    faults: list[float]
    t_inject: float
    sampling: float
    detection_time: float | None
    first_decision: float | None
    pattern: str | None
    discrimination_time: float | None
    status: str  # "no-fault", "unique", "ambiguous", "no-match", "insufficient-data"
    candidates: list[str] = field(default_factory=list)
    detection_steps: list[dict] = field(default_factory=list)
    discrimination_steps: list[dict] = field(default_factory=list)
    components: list[str] = field(default_factory=list)
    config: dict = field(default_factory=dict)

    @property
    def detected(self) -> bool:
        return self.detection_time is not None

    def to_json(self) -> dict:
        return _clean(dataclasses.asdict(self))

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, indent=2)

    @classmethod
    def from_json(cls, d: dict) -> "DetectionReport":
        return cls(**d)

    def summary(self) -> str:
        head = f"scenario {self.scenario or '-'}: faults {tuple(self.faults)} injected at t={self.t_inject:g}s"
        if not self.detected:
            return f"{head}\nno fault detected"
        lines = [head, f"detection: t={self.detection_time:g}s"]
        if self.status == "unique":
            lines.append(f"discrimination: {self.pattern} at t={self.discrimination_time:g}s")
        else:
            lines.append(f"discrimination: {self.status}; candidates {', '.join(self.candidates) or 'none'}")
        return "\n".join(lines)


def numeric_signature(model: Model, components: Sequence[Polynomial], table: SignatureTable,
                      params: dict) -> NumericSignature:
    return NumericSignature(table, list(components), model.summary, model.estimation, params)


def scenario_params(model: Model, scenario: Scenario) -> dict[str, float]:
    """Values of the model's (remaining) parameters from the simulated plant.

    The simulator's parameters are ``p1..p5``; parameters already substituted
    into the model (known values) are not needed.
    """
    plant = {f"p{i + 1}": v for i, v in enumerate(scenario.params)}
    missing = [n for n in model.summary.parameters if n not in plant]
    if missing:
        raise PipelineError("config", f"scenario gives no value for parameters {missing}")
    return {n: plant[n] for n in model.summary.parameters}


def run_scenario(scenario: Scenario, model: Model, components: Sequence[Polynomial],
                 table: SignatureTable, config: DetectionConfig | None = None,
                 series: TimeSeries | None = None) -> DetectionReport:
    """Simulate ``scenario`` (unless ``series`` is given) and diagnose it.

    The sensor noise level ``noise_amp / 3`` is handed to the detector unless
    ``config`` sets one.
    """
    cfg = config or DetectionConfig()
    if cfg.noise_sigma == 0 and scenario.noise_amp > 0:
        cfg = dataclasses.replace(cfg, noise_sigma=scenario.noise_amp / 3.0)
    est = model.estimation
    if not est.xf or not est.x0:
        raise PipelineError("config", "model file has no estimation mapping")
    params = scenario_params(model, scenario)
    if series is None:
        try:
            series = simulate(scenario)
        except SimulationError as exc:
            raise PipelineError("simulate", str(exc)) from exc
    nominal = nominal_x0(model.summary, est, params)
    try:
        det = detect(series, nominal, cfg, est.x0_sign)
    except (DetectionError, EstimationError) as exc:
        raise PipelineError("detect", str(exc)) from exc
    det_steps = [dataclasses.asdict(s) for s in det.steps]
    base = dict(scenario=scenario.name, faults=list(scenario.faults), t_inject=scenario.t_inject,
                sampling=scenario.sampling, detection_time=det.time, first_decision=det.first_decision,
                detection_steps=det_steps, components=[c.format() for c in components],
                config=cfg.to_dict())
    if det.time is None:
        return DetectionReport(pattern=None, discrimination_time=None, status="no-fault", **base)
    sig = numeric_signature(model, components, table, params)
    try:
        res = discriminate(series, det.index, sig, cfg)
    except (EstimationError, np.linalg.LinAlgError) as exc:
        raise PipelineError("discriminate", str(exc)) from exc
    return DetectionReport(pattern=res.pattern, discrimination_time=res.time, status=res.status,
                           candidates=list(res.candidates),
                           discrimination_steps=[dataclasses.asdict(s) for s in res.steps], **base)
