import numpy as np
import pytest

pytestmark = pytest.mark.unit


def _away_from_breakpoints(alpha, phis, gap):
    bps = np.array(alpha.breakpoints)
    if bps.size == 0:
        return phis
    dist = np.min(np.abs(phis[:, None] - bps[None, :]), axis=1)
    return phis[dist > gap]


def test_pieces_tile_the_domain(dax_alpha):
    assert dax_alpha.phi_min == 1e-3
    assert dax_alpha.phi_max == 9.0
    for left, right in zip(dax_alpha.pieces, dax_alpha.pieces[1:]):
        assert left.hi == right.lo
        assert left.active_set != right.active_set or left.budget_binding != right.budget_binding
    assert len(dax_alpha.breakpoints) == len(dax_alpha.pieces) - 1


def test_eval_alpha_matches_qp(dax_model, dax_alpha):
    from hjbflow.alpha.piecewise import eval_alpha
    from hjbflow.core.qp import solve_qp

    rng = np.random.default_rng(4)
    for phi in rng.uniform(1e-3, 9.0, size=1000):
        value, deriv = eval_alpha(dax_alpha, float(phi))
        sol = solve_qp(dax_model, float(phi))
        assert abs(value - sol.value) <= 1e-9
        assert abs(deriv - sol.derivative) <= 1e-9


def test_alpha_prime_is_continuous_across_breakpoints(dax_alpha):
    assert dax_alpha.breakpoints
    for left, right in zip(dax_alpha.pieces, dax_alpha.pieces[1:]):
        bp = left.hi
        assert abs(left.derivative(bp) - right.derivative(bp)) <= 1e-7
        assert abs(left.value(bp) - right.value(bp)) <= 1e-9


def test_envelope_derivative_matches_central_difference(dax_alpha):
    rng = np.random.default_rng(5)
    phis = _away_from_breakpoints(dax_alpha, rng.uniform(0.01, 8.99, size=1000), 1e-5)
    step = 1e-6
    for phi in phis:
        p = float(phi)
        fd = (dax_alpha.value(p + step) - dax_alpha.value(p - step)) / (2.0 * step)
        _, deriv = dax_alpha.evaluate(np.array([p]))
        assert abs(float(deriv[0]) - fd) <= 1e-5


def test_evaluate_is_vectorized_and_falls_back_to_qp(dax_model, dax_alpha):
    from hjbflow.core.qp import solve_qp

    phis = np.array([[0.5, 2.0], [5.0, 9.0]])
    value, deriv = dax_alpha.evaluate(phis)
    assert value.shape == (2, 2) and deriv.shape == (2, 2)
    outside = np.array([1e-6, 12.0])
    value, deriv = dax_alpha.evaluate(outside)
    for i, phi in enumerate(outside):
        sol = solve_qp(dax_model, float(phi))
        assert value[i] == pytest.approx(sol.value, abs=1e-12)
        assert deriv[i] == pytest.approx(sol.derivative, abs=1e-12)


def test_alpha_is_strictly_increasing(dax_model, dax_alpha):
    from hjbflow.core.qp import derivative_bounds

    phi = np.linspace(2e-3, 9.0, 4001)
    value, deriv = dax_alpha.evaluate(phi)
    assert np.all(np.diff(value) > 0.0)
    lower, _ = derivative_bounds(dax_model)
    assert np.min(deriv) >= lower - 1e-12
    for a, b in zip(dax_alpha.breakpoints, dax_alpha.breakpoints[1:]):
        assert dax_alpha.value(b) > dax_alpha.value(a)


def test_second_derivative_is_non_positive(dax_alpha):
    for phi in np.linspace(0.01, 9.0, 50):
        piece = dax_alpha.piece_at(float(phi))
        d2 = dax_alpha.second_derivative(float(phi))
        assert d2 <= 0.0
        assert d2 == pytest.approx(-2.0 * piece.b / float(phi) ** 3, rel=1e-14)


def test_active_assets_match_a_qp_sweep(dax_model, dax_alpha):
    from hjbflow.core.qp import solve_qp

    held: set[int] = set()
    for phi in np.linspace(1e-3, 9.0, 2001)[1:]:
        held.update(solve_qp(dax_model, float(phi)).held())
    assert dax_alpha.active_assets() == frozenset(held)


def test_theta_uses_the_piece_affine_form(dax_model, dax_alpha):
    from hjbflow.core.qp import solve_qp

    for phi in (0.05, 1.0, 4.0, 8.5):
        assert np.max(np.abs(dax_alpha.theta(phi) - solve_qp(dax_model, phi).theta)) <= 1e-9


def test_inverse_recovers_phi(dax_alpha):
    from hjbflow.alpha.piecewise import alpha_inverse

    phis = np.linspace(0.01, 9.0, 200)
    zs = np.array([dax_alpha.value(float(p)) for p in phis])
    for phi, z in zip(phis, zs):
        assert alpha_inverse(dax_alpha, float(z)) == pytest.approx(float(phi), rel=1e-9)
    assert np.max(np.abs(dax_alpha.inverse_many(zs) - phis) / phis) <= 1e-9


def test_inverse_outside_the_image_raises(dax_alpha):
    from hjbflow.core.errors import OutOfRangeError

    z_lo, z_hi = dax_alpha.image()
    assert z_lo < z_hi
    with pytest.raises(OutOfRangeError):
        dax_alpha.inverse(z_hi + 1.0)
    with pytest.raises(OutOfRangeError):
        dax_alpha.inverse(z_lo - 1.0)


def test_piece_lookup_outside_domain_raises(dax_alpha):
    from hjbflow.core.errors import OutOfDomainError

    with pytest.raises(OutOfDomainError):
        dax_alpha.piece_index(1e-3)
    with pytest.raises(OutOfDomainError):
        dax_alpha.piece_index(9.5)
    assert dax_alpha.covers(9.0)


def test_build_rejects_empty_range(dax_model):
    from hjbflow.alpha.piecewise import build_piecewise_alpha
    from hjbflow.core.errors import EmptyRangeError

    with pytest.raises(EmptyRangeError):
        build_piecewise_alpha(dax_model, 2.0, 1.0)
    with pytest.raises(EmptyRangeError):
        build_piecewise_alpha(dax_model, 0.0, 1.0)


def test_hand_specified_alpha_has_no_qp_fallback():
    from hjbflow.alpha.piecewise import piecewise_from_coefficients
    from hjbflow.core.errors import OutOfDomainError

    identity = piecewise_from_coefficients([(0.01, 10.0)], [(1.0, 0.0, 0.0)])
    value, deriv = identity.evaluate(np.array([0.5, 3.0]))
    assert value.tolist() == [0.5, 3.0]
    assert deriv.tolist() == [1.0, 1.0]
    assert identity.inverse(2.5) == 2.5
    with pytest.raises(OutOfDomainError):
        identity.evaluate(np.array([20.0]))


def test_merton_pieces_invert(dax_model):
    from hjbflow.alpha.piecewise import build_piecewise_alpha
    from hjbflow.core.market import ConstraintSet

    alpha = build_piecewise_alpha(dax_model, 0.05, 20.0, ConstraintSet.MERTON_SIMPLEX)
    assert any(not p.budget_binding for p in alpha.pieces)
    for phi in (0.1, 1.0, 10.0, 19.0):
        z = alpha.value(phi)
        assert alpha.inverse(z) == pytest.approx(phi, rel=1e-9)
