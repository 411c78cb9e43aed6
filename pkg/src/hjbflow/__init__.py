__version__ = "0.1.0"

from .alpha.piecewise import PiecewiseAlpha, build_piecewise_alpha, eval_alpha  # noqa: E402
from .alpha.two_asset import TwoAssetParams, alpha_two_asset  # noqa: E402
from .app.pipeline import run_pipeline  # noqa: E402
from .core.market import ConstraintSet, MarketModel  # noqa: E402
from .core.qp import solve_qp  # noqa: E402
from .pde.problem import PdeProblem, PhiField  # noqa: E402
from .pde.solver import Scheme, solve_pde  # noqa: E402
from .schema.config import PortfolioSettings  # noqa: E402
from .verification.eoc import eoc_study  # noqa: E402
from .wave.benchmark import WaveBenchmark, build_wave_benchmark  # noqa: E402

__all__ = [
    "__version__",
    "ConstraintSet",
    "MarketModel",
    "PdeProblem",
    "PhiField",
    "PiecewiseAlpha",
    "PortfolioSettings",
    "Scheme",
    "TwoAssetParams",
    "WaveBenchmark",
    "alpha_two_asset",
    "build_piecewise_alpha",
    "build_wave_benchmark",
    "eoc_study",
    "eval_alpha",
    "run_pipeline",
    "solve_pde",
    "solve_qp",
]
