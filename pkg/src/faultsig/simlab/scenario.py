"""Simulation scenarios for the two-tank system."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import yaml


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class ControllerSettings:
    """Proportional level controller tracking a filtered square reference.

    ``u = sat(u_ff(r_f) + gain * (r_f(t) - x1))`` where ``r_f`` is the square
    wave between ``r_low`` and ``r_high`` passed through ``prefilter_order``
    first-order stages with time constant ``prefilter`` and
    ``u_ff(r) = p2*sqrt(r)/p1`` is the nominal steady-state input.  ``sat``
    is a softplus of width ``soft_floor`` at 0 followed by a clamp to
    ``[0, u_max]``.  A smooth reference and a smooth saturation keep u and y'
    free of kinks, which spline differentiation and quadrature rely on.
    """

    r_low: float = 1.0
    r_high: float = 4.0
    period: float = 20.0
    gain: float = 2.0
    u_max: float = 10.0
    prefilter: float = 2.0
    prefilter_order: int = 3
    feedback: str = "level"  # "level" (x1) or "output" ((y/p5)^2)
    constant_input: float | None = None  # open loop when set
    start_high: bool = True  # square wave starts at r_high
    feedforward: bool = True  # add the nominal steady-state input p2*sqrt(r)/p1
    soft_floor: float = 0.5  # width of the smooth saturation at u = 0 (0: hard clamp)

    def __post_init__(self):
        if self.feedback not in ("level", "output"):
            raise ScenarioError(f"unknown feedback signal {self.feedback!r}")
        if self.prefilter_order < 1:
            raise ScenarioError("prefilter_order must be at least 1")
        if self.period <= 0 or self.prefilter < 0 or self.u_max < 0 or self.soft_floor < 0:
            raise ScenarioError("controller period must be positive, prefilter, u_max and soft_floor nonnegative")

    def reference(self, t: float) -> float:
        first_half = (t % self.period) < self.period / 2
        return self.r_high if first_half == self.start_high else self.r_low


@dataclass(frozen=True)
class Scenario:
    params: tuple[float, ...] = (0.3, 0.3, 0.3, 0.3, 1.0)
    faults: tuple[float, ...] = (0.0, 0.0, 0.0)
    t_inject: float = 20.0
    t0: float = 0.0
    t_end: float = 50.0
    sampling: float = 0.5
    noise_amp: float = 1e-3
    seed: int = 0
    x1_0: float = 1.0
    x2_0: float = 0.6
    step: float = 0.01
    controller: ControllerSettings = field(default_factory=ControllerSettings)
    name: str = ""

    def __post_init__(self):
        if len(self.params) != 5:
            raise ScenarioError("the two-tank model has exactly 5 parameters")
        if len(self.faults) != 3:
            raise ScenarioError("the two-tank model has exactly 3 faults (f1, f2, f3)")
        if not 0 <= self.faults[2] < 1:
            raise ScenarioError("clogging fault f3 must satisfy 0 <= f3 < 1")
        if self.sampling <= 0:
            raise ScenarioError("sampling period must be positive")
        if not self.t0 < self.t_end:
            raise ScenarioError("empty horizon")
        if self.step <= 0 or self.step > self.sampling / 50 + 1e-15:
            raise ScenarioError("integration step must be positive and at most sampling/50")
        if self.noise_amp < 0:
            raise ScenarioError("noise amplitude must be nonnegative")
        if not (self.x1_0 >= 0 and self.x2_0 >= 0):
            raise ScenarioError("initial levels must be nonnegative")

    @property
    def fault_free(self) -> bool:
        return not any(self.faults)

    @property
    def injects_in_horizon(self) -> bool:
        return self.t0 <= self.t_inject <= self.t_end

    def replace(self, **changes) -> "Scenario":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["params"] = list(self.params)
        d["faults"] = list(self.faults)
        return d


_FIELDS = {f.name for f in dataclasses.fields(Scenario)}
_CTRL_FIELDS = {f.name for f in dataclasses.fields(ControllerSettings)}


def scenario_from_dict(data: Mapping[str, Any], faults: tuple[str, ...] = ("f1", "f2", "f3"),
                       parameters: tuple[str, ...] = ("p1", "p2", "p3", "p4", "p5")) -> Scenario:
    """Build a scenario; ``faults`` / ``params`` may be lists or name->value maps."""
    data = dict(data)
    unknown = set(data) - _FIELDS
    if unknown:
        raise ScenarioError(f"unknown scenario keys {sorted(unknown)}")
    if isinstance(data.get("faults"), Mapping):
        named = data["faults"]
        bad = set(named) - set(faults)
        if bad:
            raise ScenarioError(f"scenario references undeclared faults {sorted(bad)}")
        data["faults"] = tuple(float(named.get(f, 0.0)) for f in faults)
    if isinstance(data.get("params"), Mapping):
        named = data["params"]
        bad = set(named) - set(parameters)
        if bad:
            raise ScenarioError(f"scenario references undeclared parameters {sorted(bad)}")
        default = Scenario().params
        data["params"] = tuple(float(named.get(p, default[i])) for i, p in enumerate(parameters))
    for key in ("faults", "params"):
        if key in data:
            data[key] = tuple(float(v) for v in data[key])
    if "controller" in data:
        ctrl = dict(data["controller"] or {})
        bad = set(ctrl) - _CTRL_FIELDS
        if bad:
            raise ScenarioError(f"unknown controller keys {sorted(bad)}")
        data["controller"] = ControllerSettings(**ctrl)
    try:
        return Scenario(**data)
    except TypeError as exc:
        raise ScenarioError(str(exc)) from None


def read_scenario_file(path: str | Path, **kwargs) -> tuple[Scenario, dict]:
    """Scenario plus the optional ``expected`` block (reference results)."""
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text()) or {}
    except yaml.YAMLError as exc:
        raise ScenarioError(f"{path}: invalid YAML: {exc}") from None
    if not isinstance(data, dict):
        raise ScenarioError(f"{path}: scenario file must be a mapping")
    expected = data.pop("expected", None) or {}
    data.setdefault("name", path.stem)
    try:
        return scenario_from_dict(data, **kwargs), dict(expected)
    except ScenarioError as exc:
        raise ScenarioError(f"{path}: {exc}") from None


def load_scenario(path: str | Path, **kwargs) -> Scenario:
    return read_scenario_file(path, **kwargs)[0]
