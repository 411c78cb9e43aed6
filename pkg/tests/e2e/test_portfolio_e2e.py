from pathlib import Path

import numpy as np
import pandas as pd
import pytest

pytestmark = pytest.mark.e2e


def test_dax_portfolio_run(tmp_path: Path):
    from hjbflow.app.pipeline import run_pipeline
    from hjbflow.schema.config import PortfolioSettings

    settings = PortfolioSettings.model_validate({"model": "dax6", "output-every": 1000})
    result = run_pipeline(settings, tmp_path)

    values = result.field.values
    assert values.shape[0] == result.manifest.diagnostics["m_steps"] + 1
    assert np.all(values > 0.0)
    assert np.max(values) <= 9.0 + 1e-6
    assert result.field.stats.max_iterations <= 100

    strategy = result.strategy
    assert strategy.times[0] == pytest.approx(10.0)
    assert np.all(strategy.weights >= 0.0)
    assert np.max(np.abs(strategy.weights.sum(axis=2) - 1.0)) <= 1e-9
    held = set(np.flatnonzero(strategy.weights.max(axis=(0, 1)) > 1e-10))
    assert held <= set(result.alpha.active_assets())

    frame = pd.read_csv(tmp_path / "strategy.csv")
    assert len(frame) == strategy.times.shape[0] * strategy.x.shape[0]
    assert frame["y"].min() == pytest.approx(0.01)
    assert frame["y"].max() == pytest.approx(10.0)

    # Merck, the highest-return asset, is held most at small wealth early on
    assert result.model.labels()[0] == "Merck"
    earliest = int(np.argmin(strategy.times))
    merck = strategy.weights[earliest, :, 0]
    assert merck[0] > merck[-1]
    assert np.all(np.diff(merck) <= 1e-8)

    # weight increments in x stay within sup |dtheta/dphi| times the phi increments
    phi_grid = np.linspace(float(values.min()), float(values.max()), 20001)
    thetas = np.array([result.alpha.theta(float(p)) for p in phi_grid])
    slope = float(np.max(np.abs(np.diff(thetas, axis=0)) / np.diff(phi_grid)[:, None]))
    phi_step = float(np.max(np.abs(np.diff(values, axis=1))))
    assert strategy.max_x_increment() <= 1.05 * slope * phi_step + 1e-12
