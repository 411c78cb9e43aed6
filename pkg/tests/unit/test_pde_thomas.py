import numpy as np
import pytest

pytestmark = pytest.mark.unit


def test_matches_banded_solver_on_dominant_systems():
    import scipy.linalg

    from hjbflow.pde.thomas import thomas_solve

    rng = np.random.default_rng(0)
    for n in (1, 2, 5, 64):
        lower = rng.uniform(-1.0, 0.0, size=n)
        upper = rng.uniform(-1.0, 0.0, size=n)
        diag = 1.0 + np.abs(lower) + np.abs(upper) + rng.uniform(0.0, 1.0, size=n)
        rhs = rng.normal(size=n)
        bands = np.zeros((3, n))
        bands[0, 1:] = upper[:-1]
        bands[1] = diag
        bands[2, :-1] = lower[1:]
        expected = scipy.linalg.solve_banded((1, 1), bands, rhs)
        assert np.max(np.abs(thomas_solve(lower, diag, upper, rhs) - expected)) <= 1e-12


def test_empty_system():
    from hjbflow.pde.thomas import thomas_solve

    assert thomas_solve(np.zeros(0), np.zeros(0), np.zeros(0), np.zeros(0)).shape == (0,)


def test_length_mismatch_raises():
    from hjbflow.pde.thomas import thomas_solve

    with pytest.raises(ValueError):
        thomas_solve(np.zeros(2), np.ones(3), np.zeros(3), np.ones(3))


def test_zero_pivot_reports_row():
    from hjbflow.core.errors import ZeroPivotError
    from hjbflow.pde.thomas import thomas_solve

    with pytest.raises(ZeroPivotError, match="row 0"):
        thomas_solve(np.zeros(2), np.array([0.0, 1.0]), np.zeros(2), np.ones(2))
    # second pivot: 1 - 1 * 1 = 0
    with pytest.raises(ZeroPivotError, match="row 1"):
        thomas_solve(
            np.array([0.0, 1.0]), np.array([1.0, 1.0]), np.array([1.0, 0.0]), np.ones(2)
        )
