"""Derivative estimation with a cubic smoothing spline.

Natural cubic smoothing spline with knots at the samples (Reinsch form):
minimise ``sum (y_i - g(t_i))^2 + lam * int g''(t)^2 dt``.  The smoothing
weight is chosen by generalised cross-validation, clipped from below by a
floor relative to the data spacing so noise is never interpolated.

The fit is linear in ``y`` for a fixed weight, so the map from data to knot
derivatives is available as a matrix (used to propagate measurement noise).
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import minimize_scalar

MIN_SAMPLES = 6
# lam floor in units of h^3 (h = mean spacing): keeps the spline from
# interpolating measurement noise when GCV drifts to 0
DEFAULT_LAM_FLOOR = 1e-3


class DegenerateGrid(ValueError):
    pass


def _check_grid(t: np.ndarray, y: np.ndarray):
    if t.ndim != 1 or y.shape != t.shape:
        raise DegenerateGrid("t and y must be 1-D arrays of equal length")
    if len(t) < MIN_SAMPLES:
        raise DegenerateGrid(f"need at least {MIN_SAMPLES} samples, got {len(t)}")
    if not (np.all(np.isfinite(t)) and np.all(np.isfinite(y))):
        raise DegenerateGrid("samples must be finite")
    h = np.diff(t)
    if np.any(h <= 0):
        raise DegenerateGrid("sample times must be strictly increasing")
    return h


def _qr_matrices(h: np.ndarray):
    """Q (n x n-2) and R (n-2 x n-2) of the Reinsch algorithm."""
    n = len(h) + 1
    Q = np.zeros((n, n - 2))
    R = np.zeros((n - 2, n - 2))
    inv = 1.0 / h
    for j in range(n - 2):
        Q[j, j] = inv[j]
        Q[j + 1, j] = -inv[j] - inv[j + 1]
        Q[j + 2, j] = inv[j + 1]
        R[j, j] = (h[j] + h[j + 1]) / 3.0
        if j + 1 < n - 2:
            R[j, j + 1] = R[j + 1, j] = h[j + 1] / 6.0
    return Q, R


class SmoothingSpline:
    """Fitted natural cubic smoothing spline."""

    def __init__(self, t, y, lam: float | None = None, lam_floor: float = DEFAULT_LAM_FLOOR):
        t = np.asarray(t, dtype=float)
        y = np.asarray(y, dtype=float)
        h = _check_grid(t, y)
        self.t, self.y, self.h = t, y, h
        Q, R = _qr_matrices(h)
        self._Q, self._R = Q, R
        K = Q @ np.linalg.solve(R, Q.T)  # roughness penalty: g' K g = int g''^2
        s, U = np.linalg.eigh((K + K.T) / 2)
        self._s = np.clip(s, 0.0, None)
        self._U = U
        self._Uy = U.T @ y
        scale = float(np.mean(h)) ** 3
        if lam is None:
            lam = max(self._gcv(scale), lam_floor * scale)
        self.lam = float(lam)
        self.g = self._U @ (self._Uy / (1.0 + self.lam * self._s))
        self.gamma = self._second_derivatives(self.g)

    def _second_derivatives(self, g: np.ndarray) -> np.ndarray:
        inner = np.linalg.solve(self._R, self._Q.T @ g)
        pad = np.zeros((1,) + inner.shape[1:])
        return np.concatenate([pad, inner, pad])

    def gcv_score(self, lam: float) -> float:
        n = len(self.t)
        shrink = lam * self._s / (1.0 + lam * self._s)
        rss = float(np.sum((shrink * self._Uy) ** 2))
        trace = float(np.sum(1.0 / (1.0 + lam * self._s)))
        denom = (1.0 - trace / n) ** 2
        return rss / n / denom if denom > 0 else np.inf

    def _gcv(self, scale: float) -> float:
        lo, hi = np.log10(scale) - 8, np.log10(scale) + 6
        grid = np.linspace(lo, hi, 29)
        scores = [self.gcv_score(10 ** g) for g in grid]
        i = int(np.argmin(scores))
        a, b = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
        res = minimize_scalar(lambda g: self.gcv_score(10 ** g), bounds=(a, b), method="bounded",
                              options={"xatol": 1e-3})
        if res.fun <= scores[i]:
            return float(10 ** res.x)
        return float(10 ** grid[i])

    @property
    def effective_dof(self) -> float:
        return float(np.sum(1.0 / (1.0 + self.lam * self._s)))

    def noise_variance(self) -> float:
        """Residual variance estimate ``RSS / (n - trace(S))``."""
        n = len(self.t)
        rss = float(np.sum((self.y - self.g) ** 2))
        return rss / max(n - self.effective_dof, 1e-12)

    def smoother_matrix(self) -> np.ndarray:
        return (self._U / (1.0 + self.lam * self._s)) @ self._U.T

    def _knot_derivatives(self, g: np.ndarray, gam: np.ndarray) -> np.ndarray:
        h = self.h if g.ndim == 1 else self.h[:, None]
        d = np.empty_like(g)
        d[:-1] = (g[1:] - g[:-1]) / h - h * (2 * gam[:-1] + gam[1:]) / 6.0
        d[-1] = (g[-1] - g[-2]) / h[-1] + h[-1] * (gam[-2] + 2 * gam[-1]) / 6.0
        return d

    def derivative_at_knots(self) -> np.ndarray:
        return self._knot_derivatives(self.g, self.gamma)

    def derivative_operator(self) -> np.ndarray:
        """Matrix D with ``derivative_at_knots() == D @ y``."""
        S = self.smoother_matrix()
        return self._knot_derivatives(S, self._second_derivatives(S))

    def __call__(self, x, nu: int = 0) -> np.ndarray:
        """Evaluate the spline (nu=0) or its first derivative (nu=1)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        t, g, gam = self.t, self.g, self.gamma
        i = np.clip(np.searchsorted(t, x, side="right") - 1, 0, len(t) - 2)
        h = t[i + 1] - t[i]
        a = (t[i + 1] - x) / h
        b = (x - t[i]) / h
        if nu == 0:
            return a * g[i] + b * g[i + 1] + ((a ** 3 - a) * gam[i] + (b ** 3 - b) * gam[i + 1]) * h ** 2 / 6
        if nu == 1:
            return (g[i + 1] - g[i]) / h + (-(3 * a ** 2 - 1) * gam[i] + (3 * b ** 2 - 1) * gam[i + 1]) * h / 6
        raise ValueError("only nu=0 and nu=1 are supported")


def spline_derivative(t, y, lam: float | None = None, lam_floor: float = DEFAULT_LAM_FLOOR) -> np.ndarray:
    """Derivative of the smoothing spline at the sample times."""
    return SmoothingSpline(t, y, lam, lam_floor).derivative_at_knots()


def estimate_derivative(series, lam: float | None = None, lam_floor: float = DEFAULT_LAM_FLOOR):
    """Return a copy of ``series`` with ``yp`` filled from the full-record spline."""
    from .simulate import TimeSeries

    yp = spline_derivative(series.t, series.y, lam, lam_floor)
    return TimeSeries(series.t, series.u, series.y, yp, series.y_true, series.x1, series.x2)


__all__ = ["DegenerateGrid", "SmoothingSpline", "estimate_derivative", "spline_derivative"]
