from __future__ import annotations

import numpy as np

from hjbflow.core.market import MarketModel

DAX6_TICKERS = ("Merck", "VW", "SAP", "FresMed", "Linde", "Fres")

# Annualized mean log-returns and covariances, August 2010 - April 2012.
_DAX6_MU = (0.7315, 0.3413, 0.1877, 0.2202, 0.1932, 0.1351)
_DAX6_SIGMA = (
    (1.6266, -0.0155, -0.0104, -0.0146, -0.0017, -0.0033),
    (-0.0155, 0.1584, 0.0345, 0.0292, 0.0569, 0.0238),
    (-0.0104, 0.0345, 0.0516, 0.0183, 0.0240, 0.0143),
    (-0.0146, 0.0292, 0.0183, 0.0434, 0.0227, 0.0248),
    (-0.0017, 0.0569, 0.0240, 0.0227, 0.0530, 0.0201),
    (-0.0033, 0.0238, 0.0143, 0.0248, 0.0201, 0.0386),
)

BUILTIN_MODELS = ("dax6",)


def dax_six_asset_model() -> MarketModel:
    """Six DAX constituents: Merck, VW, SAP, Fresenius Medical Care, Linde, Fresenius."""
    return MarketModel(np.array(_DAX6_MU), np.array(_DAX6_SIGMA), DAX6_TICKERS)


def builtin_model(name: str) -> MarketModel:
    if name == "dax6":
        return dax_six_asset_model()
    raise KeyError(name)
