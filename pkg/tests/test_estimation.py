import numpy as np
import pytest

from faultsig.simlab.derivative import estimate_derivative
from faultsig.simlab.estimation import (
    EstimationError,
    RankDeficient,
    assemble_fault_free,
    assemble_faulty,
    solve_least_squares,
)
from faultsig.simlab.scenario import Scenario
from faultsig.simlab.simulate import TimeSeries, simulate


def _series(u, y, yp):
    n = len(u)
    return TimeSeries(np.arange(n, dtype=float), np.array(u, float), np.array(y, float), np.array(yp, float))


def test_fault_free_row():
    A, b = assemble_fault_free(_series([1, 1], [2, 2], [0.5, 0.5]))
    assert A[0].tolist() == [1, 2]
    assert b[0] == -2


def test_faulty_row():
    A, b = assemble_faulty(_series([1] * 4, [2] * 4, [0.5] * 4))
    assert A[0].tolist() == [1, 1, 2, 0.5]
    assert b[0] == -2


def test_assembly_needs_rows_and_derivative():
    with pytest.raises(EstimationError):
        assemble_faulty(_series([1] * 3, [2] * 3, [0.5] * 3))
    with pytest.raises(EstimationError):
        assemble_fault_free(TimeSeries(np.arange(3.0), np.ones(3), np.ones(3)))
    with pytest.raises(EstimationError):
        assemble_fault_free(_series([1] * 3, [2] * 3, [0] * 3), window=[0, 7])


def test_identity_system():
    assert np.array_equal(solve_least_squares(np.eye(2), [3, 4]), [3, 4])


def test_consistent_overdetermined():
    rng = np.random.default_rng(0)
    A = rng.normal(size=(12, 3))
    x = np.array([1.5, -2.0, 0.25])
    assert np.max(np.abs(solve_least_squares(A, A @ x) - x)) < 1e-12


def test_planted_noisy_system_against_lstsq():
    rng = np.random.default_rng(42)
    A = rng.normal(size=(20, 4))
    x = rng.normal(size=4)
    b = A @ x + rng.normal(0, 1e-3, 20)
    got = solve_least_squares(A, b)
    assert np.max(np.abs(got - x)) < 1e-2
    assert np.allclose(got, np.linalg.lstsq(A, b, rcond=None)[0], atol=1e-12)


def test_rank_deficient_reports_rank():
    A = np.column_stack([np.arange(5.0), 2 * np.arange(5.0), np.ones(5)])
    with pytest.raises(RankDeficient) as info:
        solve_least_squares(A, np.ones(5))
    assert info.value.rank == 2 and info.value.cols == 3


def test_underdetermined():
    with pytest.raises(EstimationError):
        solve_least_squares(np.ones((2, 3)), np.ones(2))


def test_noiseless_rows_nearly_satisfied():
    # fault-free model: -2 y y' = phi2 u + phi3 y with (phi2, phi3) = (-p1 p5^2, p2 p5)
    s = estimate_derivative(simulate(Scenario(noise_amp=0.0)))
    A, b = assemble_fault_free(s, window=slice(2, -2))
    res = A @ np.array([-0.3, 0.3]) - b
    assert np.max(np.abs(res)) < 1e-2
    x = solve_least_squares(A, b)
    assert np.max(np.abs(x - [-0.3, 0.3])) < 1e-3
