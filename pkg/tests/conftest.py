import sys
from pathlib import Path

import pytest

SRC = Path(__file__).resolve().parents[1] / "src"
if str(SRC) not in sys.path:
    sys.path.insert(0, str(SRC))


@pytest.fixture(scope="session")
def dax_model():
    from hjbflow.portfolio.datasets import dax_six_asset_model

    return dax_six_asset_model()


@pytest.fixture(scope="session")
def dax_alpha(dax_model):
    """Value function of the six-asset model on (1e-3, 9]."""
    from hjbflow.alpha.piecewise import build_piecewise_alpha

    return build_piecewise_alpha(dax_model, 1e-3, 9.0)


@pytest.fixture(scope="session")
def wave_alpha(dax_model):
    """Value function on (1e-3, 3], the default domain for v+ = 1.5."""
    from hjbflow.alpha.piecewise import build_piecewise_alpha

    return build_piecewise_alpha(dax_model, 1e-3, 3.0)


@pytest.fixture()
def model_csv(tmp_path: Path) -> Path:
    """Three-asset model file: mu row, then the covariance rows."""
    path = tmp_path / "model.csv"
    path.write_text(
        "0.12,0.08,0.05\n0.09,0.01,0.0\n0.01,0.04,0.005\n0.0,0.005,0.02\n", encoding="utf-8"
    )
    return path
