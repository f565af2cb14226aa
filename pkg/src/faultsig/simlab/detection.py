"""Online detection and discrimination from sampled input/output data.

Every decision epoch ``k`` only uses samples up to ``k``: the smoothing
spline is refitted on the available samples and the last ``edge`` knots
(where the spline derivative is least reliable) are left out of the
least-squares rows.

Detection compares the fault-free estimate against its nominal value.  A
decision is only taken once the estimate is statistically informative: the
noise level estimated from the spline residuals is propagated through the
derivative operator and the least-squares solve, and decisions start once
``confidence * stderr <= threshold``.  Before that the short window cannot
resolve a deviation of ``threshold`` from noise.  When the sensor noise level
is known it bounds the estimate from below.

Discrimination solves the faulty system on the samples after detection, by
default in integrated form (no derivative enters the rows), and reads each
signature component as zero, nonzero or unknown from its propagated
standard error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from ..model import Estimation, ExhaustiveSummary
from ..polycore import Polynomial
from ..sigtable import Cell, SignatureTable
from ..witness import evaluate_terms
from .derivative import DEFAULT_LAM_FLOOR, MIN_SAMPLES, SmoothingSpline
from .estimation import EstimationError, solve_least_squares


class DetectionError(RuntimeError):
    pass


@dataclass(frozen=True)
class DetectionConfig:
    threshold: float = 1e-3
    start: int = 10              # samples in the first window
    edge: int = 2                # spline knots dropped at each end of a window
    confidence: float = 3.0      # decide once confidence * stderr <= threshold
    min_faulty_rows: int = 4
    zero_threshold: float = 2e-2  # resolution needed to call a component zero
    zero_confidence: float = 3.0  # ... or statistically indistinguishable from 0
    persistence: int = 3         # epochs a unique match must hold to be reported
    lam_floor: float = DEFAULT_LAM_FLOOR
    # known sensor noise standard deviation; the residual-based estimate is
    # used when larger (it collapses when the spline nearly interpolates)
    noise_sigma: float = 0.0
    bias_correction: bool = True
    # "integral": integrated rows (no derivative); "derivative": spline y' rows
    regressor: str = "integral"

    def __post_init__(self):
        if self.regressor not in ("integral", "derivative"):
            raise ValueError(f"unknown regressor {self.regressor!r}")

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class WindowFit:
    """Derivative estimate on a window and its noise model."""

    rows: np.ndarray          # absolute sample indices used as LS rows
    yp: np.ndarray            # derivative at the rows
    dop: np.ndarray           # rows of the derivative operator (len(rows) x window)
    sigma2: float             # residual noise variance of the window
    lam: float


def fit_window(series, lo: int, hi: int, edge: int, lam_floor: float = DEFAULT_LAM_FLOOR,
               noise_sigma: float = 0.0) -> WindowFit:
    """Spline on samples ``lo..hi`` (inclusive); rows exclude ``edge`` knots at each end."""
    t = series.t[lo:hi + 1]
    y = series.y[lo:hi + 1]
    sp = SmoothingSpline(t, y, lam_floor=lam_floor)
    local = np.arange(edge, len(t) - edge)
    return WindowFit(lo + local, sp.derivative_at_knots()[local], sp.derivative_operator()[local],
                     max(sp.noise_variance(), noise_sigma ** 2), sp.lam)


def _ls_with_covariance(A: np.ndarray, b: np.ndarray, weight: np.ndarray, fit: WindowFit):
    """LS solution and covariance from derivative noise entering with ``weight``."""
    x = solve_least_squares(A, b)
    P = np.linalg.pinv(A)
    J = P @ (weight[:, None] * fit.dop)   # sensitivity of x to the window samples
    cov = fit.sigma2 * (J @ J.T)
    return x, cov


def _slot_values(slots: Sequence[str], summary: ExhaustiveSummary, params: dict) -> np.ndarray:
    zero = {f: 0 for f in summary.faults}
    out = []
    for s in slots:
        out.append(float(summary.entry(s).gamma.evaluate({**params, **zero})))
    return np.array(out)


def nominal_x0(summary: ExhaustiveSummary, estimation: Estimation, params: dict) -> np.ndarray:
    """Reported fault-free unknowns at the true parameters."""
    raw = _slot_values(estimation.x0, summary, params)
    return np.array(estimation.x0_sign or [1] * len(raw)) * raw


@dataclass
class DetectionStep:
    t: float
    x0: list[float]
    stderr: float
    distance: float
    decided: bool
    exceeded: bool


@dataclass
class DetectionResult:
    time: float | None
    index: int | None
    first_decision: float | None
    steps: list[DetectionStep]


def detect(series, nominal: Sequence[float], config: DetectionConfig | None = None,
           x0_sign: Sequence[int] | None = None) -> DetectionResult:
    """Growing-window test of the fault-free linear system against ``nominal``."""
    cfg = config or DetectionConfig()
    n = len(series)
    if n < cfg.start:
        raise DetectionError(f"series has {n} samples, detection needs at least {cfg.start}")
    nominal = np.asarray(nominal, dtype=float)
    sign = np.array(x0_sign if x0_sign is not None else [1] * len(nominal), dtype=float)
    steps: list[DetectionStep] = []
    first_decision = None
    for k in range(cfg.start - 1, n):
        fit = fit_window(series, 0, k, cfg.edge, cfg.lam_floor, cfg.noise_sigma)
        r = fit.rows
        if len(r) < 2:
            continue
        y = series.y[r]
        A = np.column_stack([series.u[r], y])
        b = -2.0 * y * fit.yp
        try:
            x, cov = _ls_with_covariance(A, b, -2.0 * y, fit)
        except EstimationError:
            steps.append(DetectionStep(float(series.t[k]), [math.nan] * 2, math.inf, math.nan, False, False))
            continue
        est = sign * x
        dist = float(np.linalg.norm(est - nominal))
        stderr = float(math.sqrt(max(np.trace(cov), 0.0)))
        # the gate only marks the end of the burn-in: once open it stays open
        decided = first_decision is not None or cfg.confidence * stderr <= cfg.threshold
        exceeded = decided and dist > cfg.threshold
        if decided and first_decision is None:
            first_decision = float(series.t[k])
        steps.append(DetectionStep(float(series.t[k]), est.tolist(), stderr, dist, decided, exceeded))
        if exceeded:
            return DetectionResult(float(series.t[k]), k, first_decision, steps)
    return DetectionResult(None, None, first_decision, steps)


@dataclass
class NumericSignature:
    """Signature components ready for numeric evaluation."""

    table: SignatureTable
    components: list[Polynomial]
    summary: ExhaustiveSummary
    estimation: Estimation
    params: dict

    def phi_from_xf(self, xf: np.ndarray) -> dict[str, float]:
        est = self.estimation
        sign = est.xf_sign or (1,) * len(est.xf)
        phi = {s: float(sg) * float(v) for s, sg, v in zip(est.xf, sign, xf)}
        phi.update({s: float(v) for s, v in est.fixed})
        return phi

    def evaluate(self, phi: dict[str, float]) -> tuple[np.ndarray, np.ndarray]:
        env = {k: np.array([float(v)]) for k, v in {**self.params, **phi}.items()}
        vals, scales = [], []
        for c in self.components:
            v, s = evaluate_terms(c, env)
            vals.append(float(v[0]))
            scales.append(float(s[0]))
        return np.array(vals), np.array(scales)

    def gradient(self, phi: dict[str, float], slots: Sequence[str], step: float = 1e-6) -> np.ndarray:
        """Jacobian of the component values with respect to ``slots``."""
        J = np.zeros((len(self.components), len(slots)))
        for j, s in enumerate(slots):
            hi = dict(phi)
            lo = dict(phi)
            hi[s] += step
            lo[s] -= step
            J[:, j] = (self.evaluate(hi)[0] - self.evaluate(lo)[0]) / (2 * step)
        return J


ZERO, NONZERO, UNKNOWN = "0", "!0", "?"


def classify(values: np.ndarray, scales: np.ndarray, stderr: np.ndarray,
             cfg: DetectionConfig) -> list[str]:
    """Three-valued reading of the estimated components.

    Nonzero when the value is outside its confidence interval around 0; zero
    when the interval contains 0 and is narrower than the resolution
    ``zero_threshold * (1 + scale)``; unknown otherwise.
    """
    half = cfg.zero_confidence * np.asarray(stderr)
    resolution = cfg.zero_threshold * (1.0 + np.asarray(scales))
    out = []
    for v, hw, res in zip(np.abs(values), half, resolution):
        if v > hw:
            out.append(NONZERO)
        elif hw <= res:
            out.append(ZERO)
        else:
            out.append(UNKNOWN)
    return out


def _consistent(cell: Cell, reading: str) -> bool:
    if cell is Cell.MAY_VANISH or reading == UNKNOWN:
        return True
    return (cell is Cell.ZERO) == (reading == ZERO)


def matching_rows(table: SignatureTable, readings: Sequence[str], exclude_empty: bool = False) -> list[int]:
    """Rows consistent with the readings, most parsimonious first.

    Only rows of minimal pattern size are returned: among the explanations
    the data cannot tell apart, the one with fewest faults is preferred.
    """
    rows = [i for i in range(len(table.patterns))
            if all(_consistent(c, r) for c, r in zip(table.row_values(i), readings))]
    if exclude_empty:
        rows = [i for i in rows if table.patterns[i].indices]
    if not rows:
        return []
    smallest = min(len(table.patterns[i].indices) for i in rows)
    return [i for i in rows if len(table.patterns[i].indices) == smallest]


@dataclass
class DiscriminationStep:
    t: float
    xf: list[float]
    values: list[float]
    stderr: list[float]
    readings: list[str]
    matches: list[str]


@dataclass
class DiscriminationResult:
    pattern: str | None
    time: float | None
    status: str  # "unique", "ambiguous", "no-match", "insufficient-data"
    candidates: list[str]
    steps: list[DiscriminationStep]


def estimate_faulty(series, lo: int, hi: int, cfg: DetectionConfig):
    """Solve the faulty system on samples ``lo..hi`` with its covariance.

    Measurement noise reaches both ``b`` and the ``y``/``y'`` columns, which
    biases plain least squares towards zero in the ``y'`` coefficient.  With
    ``cfg.bias_correction`` the expected noise contributions to ``A^T A`` and
    ``A^T b`` (known from the spline's linear derivative operator) are removed
    before solving.
    """
    fit = fit_window(series, lo, hi, cfg.edge, cfg.lam_floor, cfg.noise_sigma)
    r = fit.rows
    n, w = len(r), hi - lo + 1
    y, yp = series.y[r], fit.yp
    A = np.column_stack([np.ones(n), series.u[r], y, yp])
    b = -2.0 * y * yp
    x = solve_least_squares(A, b)
    # each perturbation as a linear map of the window's noise samples
    E = np.zeros((n, w))
    E[np.arange(n), r - lo] = 1.0
    D = fit.dop
    if cfg.bias_correction:
        s2 = fit.sigma2
        cols = [None, None, E, D]
        db = -2.0 * y[:, None] * D - 2.0 * yp[:, None] * E
        SA = np.zeros((4, 4))
        cAb = np.zeros(4)
        for j in (2, 3):
            cAb[j] = s2 * np.sum(cols[j] * db)
            for k in (2, 3):
                SA[j, k] = s2 * np.sum(cols[j] * cols[k])
        mean_db = -2.0 * s2 * D[np.arange(n), r - lo]
        M = A.T @ A - SA
        try:
            xc = np.linalg.solve(M, A.T @ b - cAb - A.T @ mean_db)
            if np.all(np.isfinite(xc)) and np.all(np.linalg.eigvalsh((M + M.T) / 2) > 0):
                x = xc
        except np.linalg.LinAlgError:
            pass
    # first-order noise propagation into x
    resid_map = (-2.0 * y - x[3])[:, None] * D + (-2.0 * yp - x[2])[:, None] * E
    pinv = np.linalg.pinv(A)
    J = pinv @ resid_map
    cov = fit.sigma2 * (J @ J.T)
    # misfit beyond the noise model (derivative bias) shows up in the residual
    if n > 4:
        res = b - A @ x
        cov_fit = float(res @ res) / (n - 4) * (pinv @ pinv.T)
        if np.trace(cov_fit) > np.trace(cov):
            cov = cov_fit
    return x, cov


def quadrature_matrix(t: np.ndarray) -> np.ndarray:
    """Matrix W with ``(W @ v)[k]`` the integral from ``t[0]`` to ``t[k]`` of
    the natural cubic interpolant of ``v``."""
    n = len(t)
    cs = CubicSpline(t, np.eye(n), bc_type="natural")
    anti = cs.antiderivative()
    return anti(t) - anti(t[0])


def estimate_faulty_integral(series, lo: int, hi: int, cfg: DetectionConfig):
    """Solve the faulty system in integrated form on samples ``lo..hi``.

    Integrating ``-2 y y' = x1 + x2 u + x3 y + x4 y'`` from ``t[lo]`` gives
    ``-y^2 = c + x1 (t - t[lo]) + x2 int u + x3 int y + x4 y`` with the
    constant ``c`` absorbing the initial values, so no derivative is needed.
    The rows share the noise samples, so the covariance is propagated through
    the quadrature explicitly.
    """
    t = series.t[lo:hi + 1]
    y = series.y[lo:hi + 1]
    u = series.u[lo:hi + 1]
    if len(t) < MIN_SAMPLES:
        raise EstimationError(f"integrated system needs at least {MIN_SAMPLES} samples")
    W = quadrature_matrix(t)
    A = np.column_stack([np.ones_like(t), t - t[0], W @ u, W @ y, y])
    b = -y * y
    sol = solve_least_squares(A, b)
    sigma2 = cfg.noise_sigma ** 2
    if cfg.noise_sigma == 0 or len(t) > 2 * MIN_SAMPLES:
        sigma2 = max(sigma2, SmoothingSpline(t, y, lam_floor=cfg.lam_floor).noise_variance())
    if cfg.bias_correction and sigma2 > 0:
        # the int y and y columns carry the same noise as b = -y^2
        noisy = {3: W, 4: np.eye(len(t))}
        SA = np.zeros((5, 5))
        cAb = np.zeros(5)
        for j, Cj in noisy.items():
            cAb[j] = sigma2 * np.sum(np.diag(Cj) * (-2.0 * y))
            for k, Ck in noisy.items():
                SA[j, k] = sigma2 * np.sum(Cj * Ck)
        M = A.T @ A - SA
        rhs = A.T @ (b + sigma2) - cAb   # E[-e^2] = -sigma^2 per row
        try:
            xc = np.linalg.solve(M, rhs)
            if np.all(np.isfinite(xc)) and np.all(np.linalg.eigvalsh((M + M.T) / 2) > 0):
                sol = xc
        except np.linalg.LinAlgError:
            pass
    x = sol[1:]
    # residual perturbation per noise sample: from b, the y column and the int y column
    resid_map = np.diag(-2.0 * y - x[3]) - x[2] * W
    J = np.linalg.pinv(A) @ resid_map
    cov = sigma2 * (J @ J.T)
    return x, cov[1:, 1:]


def discriminate(series, t_index: int, sig: NumericSignature,
                 config: DetectionConfig | None = None) -> DiscriminationResult:
    """Growing-window matching of the estimated signature after detection."""
    cfg = config or DetectionConfig()
    n = len(series)
    table = sig.table
    steps: list[DiscriminationStep] = []
    est = sig.estimation
    sign = np.array(est.xf_sign or [1] * len(est.xf), dtype=float)
    # the window must hold min_faulty_rows rows besides the dropped edges
    if cfg.regressor == "integral":
        start = t_index + max(cfg.min_faulty_rows + 1, MIN_SAMPLES) - 1
        estimate = estimate_faulty_integral
    else:
        start = t_index + 2 * cfg.edge + cfg.min_faulty_rows - 1
        start = max(start, t_index + MIN_SAMPLES - 1)
        estimate = estimate_faulty
    for k in range(start, n):
        try:
            x, cov_x = estimate(series, t_index, k, cfg)
        except EstimationError:
            continue
        phi = sig.phi_from_xf(x)
        values, scales = sig.evaluate(phi)
        G = sig.gradient(phi, est.xf) * sign[None, :]
        stderr = np.sqrt(np.clip(np.einsum("ij,jk,ik->i", G, cov_x, G), 0, None))
        readings = classify(values, scales, stderr, cfg)
        rows = matching_rows(table, readings, exclude_empty=True)
        steps.append(DiscriminationStep(float(series.t[k]), x.tolist(), values.tolist(), stderr.tolist(),
                                        readings, [table.patterns[i].label for i in rows]))
    if not steps:
        return DiscriminationResult(None, None, "insufficient-data", [], steps)
    # report the unique match holding at the end of the data, timed from the
    # start of its final uninterrupted run
    final = steps[-1].matches
    if len(final) != 1:
        status = "no-match" if not final else "ambiguous"
        if not final:
            final = _nearest_rows(table, steps[-1].readings)
        return DiscriminationResult(None, None, status, final, steps)
    label = final[0]
    j = len(steps) - 1
    while j > 0 and steps[j - 1].matches == [label]:
        j -= 1
    run = len(steps) - j
    if run < cfg.persistence and len(steps) >= cfg.persistence:
        return DiscriminationResult(None, None, "ambiguous", [label], steps)
    return DiscriminationResult(label, steps[j].t, "unique", [label], steps)


def _nearest_rows(table: SignatureTable, readings: Sequence[str]) -> list[str]:
    best, out = None, []
    for i, p in enumerate(table.patterns):
        miss = sum(1 for c, r in zip(table.row_values(i), readings) if not _consistent(c, r))
        if best is None or miss < best:
            best, out = miss, [p.label]
        elif miss == best:
            out.append(p.label)
    return out
