import logging
import math
import textwrap
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

pytestmark = pytest.mark.unit

_RETURNS = np.array([[0.01, 0.02], [0.03, -0.01], [0.02, 0.0], [-0.015, 0.005]])


def _history():
    from hjbflow.portfolio.history import PriceHistory

    prices = np.vstack([[100.0, 50.0], [100.0, 50.0] * np.exp(np.cumsum(_RETURNS, axis=0))])
    dates = tuple(pd.date_range("2011-01-03", periods=prices.shape[0], freq="B"))
    return PriceHistory(("AAA", "BBB"), dates, prices)


def test_estimate_moments_annualizes_sample_statistics():
    from hjbflow.portfolio.history import estimate_moments

    model = estimate_moments(_history(), periods_per_year=252.0)
    assert model.labels() == ("AAA", "BBB")
    assert np.allclose(model.mu, _RETURNS.mean(axis=0) * 252.0, rtol=1e-12, atol=1e-14)
    expected = np.cov(_RETURNS, rowvar=False, ddof=1) * 252.0
    assert np.allclose(model.sigma, expected, rtol=1e-10, atol=1e-14)


def test_estimate_moments_needs_three_observations():
    from hjbflow.core.errors import InsufficientDataError
    from hjbflow.portfolio.history import PriceHistory, estimate_moments

    dates = tuple(pd.date_range("2011-01-03", periods=2, freq="B"))
    short = PriceHistory(("AAA",), dates, np.array([[1.0], [1.1]]))
    with pytest.raises(InsufficientDataError):
        estimate_moments(short)


def test_non_positive_price_is_rejected():
    from hjbflow.core.errors import NonPositivePriceError
    from hjbflow.portfolio.history import PriceHistory

    dates = tuple(pd.date_range("2011-01-03", periods=3, freq="B"))
    with pytest.raises(NonPositivePriceError, match="BBB"):
        PriceHistory(("AAA", "BBB"), dates, np.array([[1.0, 2.0], [1.0, 0.0], [1.0, 2.0]]))


@pytest.mark.parametrize("growth", [0.001, 0.0123, 0.05])
def test_identical_constant_growth_is_singular(growth: float):
    from hjbflow.core.errors import SingularModelError
    from hjbflow.portfolio.history import PriceHistory, estimate_moments

    t = np.arange(40, dtype=np.float64)
    prices = np.column_stack([100.0 * np.exp(growth * t), 200.0 * np.exp(growth * t)])
    dates = tuple(pd.date_range("2011-01-03", periods=t.shape[0], freq="B"))
    history = PriceHistory(("AAA", "BBB"), dates, prices)
    with pytest.raises(SingularModelError):
        estimate_moments(history)


def test_collinear_assets_are_singular():
    from hjbflow.core.errors import SingularModelError
    from hjbflow.portfolio.history import PriceHistory, estimate_moments

    rng = np.random.default_rng(17)
    walk = np.cumsum(rng.normal(0.0005, 0.01, size=60))
    prices = np.column_stack([100.0 * np.exp(walk), 300.0 * np.exp(walk)])
    dates = tuple(pd.date_range("2011-01-03", periods=walk.shape[0], freq="B"))
    with pytest.raises(SingularModelError):
        estimate_moments(PriceHistory(("AAA", "BBB"), dates, prices))


def test_estimate_moments_recovers_simulated_parameters():
    from hjbflow.portfolio.history import PriceHistory, estimate_moments

    rng = np.random.default_rng(2024)
    periods = 252.0
    mu_true = np.array([0.08, 0.03, 0.12])
    vol = np.array([0.2, 0.1, 0.3])
    corr = np.array([[1.0, 0.3, -0.2], [0.3, 1.0, 0.1], [-0.2, 0.1, 1.0]])
    sigma_true = corr * np.outer(vol, vol)
    count = 100_000
    draws = rng.multivariate_normal(mu_true / periods, sigma_true / periods, size=count)
    prices = 100.0 * np.exp(np.vstack([np.zeros(3), np.cumsum(draws, axis=0)]))
    dates = tuple(pd.date_range("2000-01-03", periods=count + 1, freq="h"))
    model = estimate_moments(PriceHistory(("A", "B", "C"), dates, prices), periods)

    mean_se = np.sqrt(np.diag(sigma_true) * periods / count)
    assert np.all(np.abs(model.mu - mu_true) <= 4.0 * mean_se)
    diag = np.diag(sigma_true)
    cov_se = np.sqrt((np.outer(diag, diag) + sigma_true**2) / count)
    assert np.all(np.abs(model.sigma - sigma_true) <= 4.0 * cov_se)


def test_from_csv_drops_rows_with_gaps(tmp_path: Path, caplog: pytest.LogCaptureFixture):
    from hjbflow.portfolio.history import PriceHistory

    p = tmp_path / "prices.csv"
    p.write_text(
        textwrap.dedent(
            """
            date,AAA,BBB
            2011-01-03,10.0,20.0
            2011-01-04,10.5,
            2011-01-05,10.2,20.4
            2011-01-06,10.8,20.1
            """
        ).lstrip(),
        encoding="utf-8",
    )
    with caplog.at_level(logging.WARNING, logger="hjbflow.portfolio.history"):
        history = PriceHistory.from_csv(p)
    assert history.tickers == ("AAA", "BBB")
    assert len(history.dates) == 3
    assert "dropped 1 price row" in caplog.text
    assert history.log_returns()[0, 0] == pytest.approx(math.log(10.2 / 10.0))


def test_cara_utility_has_constant_phi():
    from hjbflow.portfolio.terminal import cara_utility

    for a in (1.5, 3.0, 9.0):
        for x in (-2.0, 0.0, 1.3):
            _, d1, d2 = cara_utility(a, x)
            assert d1 > 0.0 and d2 < 0.0
            assert 1.0 - d2 / d1 == pytest.approx(a, rel=1e-14)


def test_cara_rejects_weak_risk_aversion():
    from hjbflow.core.errors import InvalidRiskAversionError
    from hjbflow.portfolio.terminal import cara_terminal, cara_utility

    with pytest.raises(InvalidRiskAversionError):
        cara_utility(1.0, 0.0)
    with pytest.raises(InvalidRiskAversionError):
        cara_terminal(0.5)


def test_parse_terminal_variants(tmp_path: Path):
    from hjbflow.core.errors import InvalidProblemError, InvalidRiskAversionError
    from hjbflow.portfolio.terminal import parse_terminal

    fn, sup = parse_terminal("cara:9")
    assert sup == 9.0
    assert fn(np.zeros(4)).tolist() == [9.0] * 4

    p = tmp_path / "terminal.csv"
    p.write_text("x,phi\n1.0,3.0\n-1.0,2.0\n", encoding="utf-8")
    fn, sup = parse_terminal(f"csv:{p}")
    assert sup == 3.0
    assert fn(np.array([-5.0, 0.0, 5.0])).tolist() == [2.0, 2.5, 3.0]

    with pytest.raises(InvalidRiskAversionError):
        parse_terminal("cara:soft")
    with pytest.raises(InvalidRiskAversionError):
        parse_terminal("cara:1")
    with pytest.raises(InvalidProblemError):
        parse_terminal("csv:")
    with pytest.raises(InvalidProblemError):
        parse_terminal("power:2")


def test_terminal_from_csv_rejects_non_positive_values(tmp_path: Path):
    from hjbflow.core.errors import InvalidProblemError
    from hjbflow.portfolio.terminal import terminal_from_csv

    p = tmp_path / "terminal.csv"
    p.write_text("x,phi\n0.0,1.0\n1.0,0.0\n", encoding="utf-8")
    with pytest.raises(InvalidProblemError):
        terminal_from_csv(p)


def test_builtin_dax_model():
    from hjbflow.portfolio.datasets import DAX6_TICKERS, builtin_model

    model = builtin_model("dax6")
    assert model.n == 6
    assert model.labels() == DAX6_TICKERS
    assert float(model.mu[0]) == 0.7315
    assert np.array_equal(model.sigma, model.sigma.T)
    assert np.all(np.linalg.eigvalsh(model.sigma) > 0.0)
    with pytest.raises(KeyError):
        builtin_model("ftse")


def _constant_field(value: float):
    from hjbflow.pde.problem import PhiField, SolveStats

    x = np.linspace(-1.0, 1.0, 5)
    taus = np.array([0.0, 0.5])
    return PhiField(np.full((2, 5), value), x, taus, SolveStats("full"))


def test_extract_strategy_matches_qp(dax_model, dax_alpha):
    from hjbflow.core.qp import solve_qp
    from hjbflow.portfolio.strategy import extract_strategy

    expected = solve_qp(dax_model, 2.0)
    fast = extract_strategy(_constant_field(2.0), dax_model, alpha=dax_alpha)
    slow = extract_strategy(_constant_field(2.0), dax_model)
    assert fast.weights.shape == (2, 5, 6)
    assert fast.n_assets == 6
    assert np.max(np.abs(fast.weights - expected.theta)) <= 1e-9
    assert np.array_equal(slow.weights[1, 3], expected.theta)
    assert fast.active_sets[0][0] == expected.active_set
    assert fast.times.tolist() == [0.5, 0.0]
    assert fast.max_x_increment() == 0.0
    assert np.all(np.abs(fast.weights.sum(axis=2) - 1.0) <= 1e-12)


def test_strategy_frame_layout(dax_model, dax_alpha):
    from hjbflow.core.qp import solve_qp
    from hjbflow.portfolio.strategy import extract_strategy

    surface = extract_strategy(_constant_field(2.0), dax_model, alpha=dax_alpha, layers=[1])
    frame = surface.frame()
    assert list(frame.columns) == ["t", "x", "y"] + [f"theta_{i}" for i in range(1, 7)] + [
        "active_set"
    ]
    assert len(frame) == 5
    assert frame["t"].tolist() == [0.0] * 5
    assert frame["y"].iloc[0] == pytest.approx(math.exp(-1.0))
    expected = ";".join(str(i + 1) for i in solve_qp(dax_model, 2.0).active_set)
    assert set(frame["active_set"]) == {expected}


def test_extract_strategy_rejects_non_positive_phi(dax_model):
    from hjbflow.core.errors import NonPositivePhiError
    from hjbflow.portfolio.strategy import extract_strategy

    with pytest.raises(NonPositivePhiError):
        extract_strategy(_constant_field(-1.0), dax_model)
