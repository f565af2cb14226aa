"""Linear least-squares systems for the exhaustive summary."""

from __future__ import annotations

import numpy as np
from scipy.linalg import qr, solve_triangular


class EstimationError(ValueError):
    pass


class RankDeficient(EstimationError):
    def __init__(self, rank: int, cols: int):
        self.rank = rank
        self.cols = cols
        super().__init__(f"least-squares matrix is rank deficient: effective rank {rank} < {cols}")


def _window(series, window):
    if series.yp is None:
        raise EstimationError("series has no derivative estimate")
    n = len(series)
    try:
        return np.arange(n) if window is None else np.arange(n)[window]
    except IndexError:
        raise EstimationError("window indices out of range") from None


def assemble_fault_free(series, window=None):
    """Rows (u, y) with right-hand side -2*y*y'."""
    idx = _window(series, window)
    if len(idx) < 2:
        raise EstimationError("fault-free system needs at least 2 rows")
    u, y, yp = series.u[idx], series.y[idx], series.yp[idx]
    return np.column_stack([u, y]), -2.0 * y * yp


def assemble_faulty(series, window=None):
    """Rows (1, u, y, y') with right-hand side -2*y*y'."""
    idx = _window(series, window)
    if len(idx) < 4:
        raise EstimationError("faulty system has 4 unknowns and needs at least 4 rows")
    u, y, yp = series.u[idx], series.y[idx], series.yp[idx]
    return np.column_stack([np.ones_like(u), u, y, yp]), -2.0 * y * yp


def solve_least_squares(A, b, rcond: float = 1e-10) -> np.ndarray:
    """Minimise ||A x - b|| with a pivoted QR factorisation."""
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    m, n = A.shape
    if m < n:
        raise EstimationError(f"underdetermined system: {m} rows for {n} unknowns")
    Q, R, piv = qr(A, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    rank = int(np.sum(diag > rcond * diag[0])) if diag[0] > 0 else 0
    if rank < n:
        raise RankDeficient(rank, n)
    z = solve_triangular(R, Q.T @ b)
    x = np.empty(n)
    x[piv] = z
    return x
