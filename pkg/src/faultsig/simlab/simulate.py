"""Faulty two-tank simulator (fixed-step RK4)."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .scenario import Scenario

LEVEL_MAX = 10.0
_NEG_TOL = 1e-9


class SimulationError(RuntimeError):
    def __init__(self, message: str, t: float | None = None):
        self.t = t
        super().__init__(message if t is None else f"{message} at t={t:.4g}s")


@dataclass(frozen=True)
class TimeSeries:
    t: np.ndarray
    u: np.ndarray
    y: np.ndarray
    yp: np.ndarray | None = None
    y_true: np.ndarray | None = None
    x1: np.ndarray | None = None
    x2: np.ndarray | None = None

    def __post_init__(self):
        n = len(self.t)
        for name in ("u", "y", "yp", "y_true", "x1", "x2"):
            arr = getattr(self, name)
            if arr is not None and len(arr) != n:
                raise ValueError(f"{name} has {len(arr)} samples, expected {n}")
        if n > 1 and np.any(np.diff(self.t) <= 0):
            raise ValueError("sample times must be strictly increasing")

    def __len__(self):
        return len(self.t)

    def head(self, n: int) -> "TimeSeries":
        def cut(a):
            return None if a is None else a[:n]
        return TimeSeries(self.t[:n], self.u[:n], self.y[:n], cut(self.yp), cut(self.y_true),
                          cut(self.x1), cut(self.x2))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        cols = [("t", self.t), ("u", self.u), ("y", self.y)]
        for name in ("yp", "y_true", "x1", "x2"):
            arr = getattr(self, name)
            if arr is not None:
                cols.append((name, arr))
        w.writerow([c for c, _ in cols])
        for row in zip(*(a for _, a in cols)):
            w.writerow([repr(float(v)) for v in row])
        return buf.getvalue()


def truncated_gaussian(rng: np.random.Generator, amp: float, n: int) -> np.ndarray:
    """N(0, (amp/3)^2) samples redrawn until they fall inside [-amp, amp]."""
    if amp == 0:
        return np.zeros(n)
    out = rng.normal(0.0, amp / 3.0, n)
    bad = np.abs(out) > amp
    while bad.any():
        out[bad] = rng.normal(0.0, amp / 3.0, int(bad.sum()))
        bad = np.abs(out) > amp
    return out


class TwoTank:
    """Right-hand side, controller and output of the faulty two-tank model."""

    def __init__(self, scenario: Scenario):
        self.sc = scenario
        self.p = scenario.params

    def faults_at(self, t: float) -> tuple[float, float, float]:
        return self.sc.faults if t >= self.sc.t_inject else (0.0, 0.0, 0.0)

    def output(self, x1: float, t: float) -> float:
        f1, f2, f3 = self.faults_at(t)
        return self.p[4] * (1 - f3) * math.sqrt(max(x1, 0.0)) + f2

    def control(self, state, t: float) -> float:
        ctrl = self.sc.controller
        if ctrl.constant_input is not None:
            return ctrl.constant_input
        x1, rf = state[0], state[-1]
        if ctrl.feedback == "level":
            level = x1
        else:
            level = (self.output(x1, t) / self.p[4]) ** 2
        u = ctrl.gain * (rf - level)
        if ctrl.feedforward:
            u += self.p[1] * math.sqrt(max(rf, 0.0)) / self.p[0]
        if ctrl.soft_floor > 0:
            # smooth lower saturation keeps u (and y') free of kinks
            u = ctrl.soft_floor * float(np.logaddexp(0.0, u / ctrl.soft_floor))
        return min(max(u, 0.0), ctrl.u_max)

    def rhs(self, state, t: float, active: bool) -> np.ndarray:
        p1, p2, p3, p4, _ = self.p
        f1, _, f3 = self.sc.faults if active else (0.0, 0.0, 0.0)
        x1, x2 = state[0], state[1]
        z1 = math.sqrt(max(x1, 0.0))
        z2 = math.sqrt(max(x2, 0.0))
        u = self.control(state, t if active else min(t, self.sc.t_inject - 1e-12))
        ctrl = self.sc.controller
        # cascade of identical first-order stages on the square reference
        stages = np.empty(len(state) - 2)
        if ctrl.prefilter > 0:
            inputs = np.concatenate([[ctrl.reference(t)], state[2:-1]])
            stages[:] = (inputs - state[2:]) / ctrl.prefilter
        else:
            stages[:] = 0.0
        return np.concatenate([[p1 * (u + f1) - p2 * (1 - f3) * z1, p3 * (1 - f3) * z1 - p4 * z2], stages])


def simulate(scenario: Scenario) -> TimeSeries:
    """Integrate the scenario and sample u, y on the measurement grid.

    Faults act for ``t >= t_inject``; the measured output carries truncated
    Gaussian noise of amplitude ``noise_amp``.
    """
    sc = scenario
    model = TwoTank(sc)
    ctrl = sc.controller
    # filter starts at the initial level so the loop starts without a jump
    r0 = sc.x1_0 if ctrl.prefilter > 0 else ctrl.reference(sc.t0)
    state = np.array([sc.x1_0, sc.x2_0] + [r0] * ctrl.prefilter_order, dtype=float)
    n_samples = int(math.floor((sc.t_end - sc.t0) / sc.sampling + 1e-9)) + 1
    times = sc.t0 + sc.sampling * np.arange(n_samples)
    substeps = int(round(sc.sampling / sc.step))
    h = sc.sampling / substeps

    us, ys, x1s, x2s = [], [], [], []
    t = sc.t0
    for k in range(n_samples):
        t = times[k]
        if ctrl.prefilter == 0:
            state[2:] = ctrl.reference(t)
        _check_levels(state, t)
        us.append(model.control(state, t))
        ys.append(model.output(state[0], t))
        x1s.append(state[0])
        x2s.append(state[1])
        if k == n_samples - 1:
            break
        for j in range(substeps):
            ts = t + j * h
            te = ts + h
            if ts < sc.t_inject < te - 1e-12:
                # split the step so the fault switches exactly at t_inject
                state = _rk4(model, state, ts, sc.t_inject - ts, False)
                state = _rk4(model, state, sc.t_inject, te - sc.t_inject, True)
            else:
                state = _rk4(model, state, ts, h, ts >= sc.t_inject - 1e-12)
            if ctrl.prefilter == 0:
                state[2:] = ctrl.reference(te)
            _check_levels(state, te)
    rng = np.random.default_rng(sc.seed)
    y_true = np.array(ys)
    y = y_true + truncated_gaussian(rng, sc.noise_amp, n_samples)
    return TimeSeries(times, np.array(us), y, None, y_true, np.array(x1s), np.array(x2s))


def _rk4(model: TwoTank, state: np.ndarray, t: float, h: float, active: bool) -> np.ndarray:
    k1 = model.rhs(state, t, active)
    k2 = model.rhs(state + 0.5 * h * k1, t + 0.5 * h, active)
    k3 = model.rhs(state + 0.5 * h * k2, t + 0.5 * h, active)
    k4 = model.rhs(state + h * k3, t + h, active)
    return state + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def _check_levels(state: np.ndarray, t: float) -> None:
    x1, x2 = state[0], state[1]
    if not (np.isfinite(x1) and np.isfinite(x2)):
        raise SimulationError("non-finite state", t)
    if x1 < -_NEG_TOL or x2 < -_NEG_TOL:
        raise SimulationError("tank level became negative", t)
    if x1 > LEVEL_MAX or x2 > LEVEL_MAX:
        raise SimulationError(f"tank level exceeded {LEVEL_MAX}", t)
