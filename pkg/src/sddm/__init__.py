"""Stochastic discounted-dividend pricing for a pair of stocks.

Closed-form price moments (:mod:`sddm.core`), independent checks
(:mod:`sddm.oracle`), estimation from dividend and price histories
(:mod:`sddm.estimate`) and two-asset portfolio choice
(:mod:`sddm.portfolio`).
"""

from importlib import metadata as _metadata

from .core import (
    GrowthDistribution,
    JointGrowthModel,
    MomentInputs,
    PriceMoments,
    StockMoments,
    StockSpec,
    covariance_exists,
    dividend_product_expectation,
    expected_price,
    growth_mean,
    growth_variance,
    joint_growth_correlation,
    joint_growth_covariance,
    price_covariance,
    price_variance,
    risk_adjusted_growth,
    variance_exists,
)
from .errors import (
    DegenerateProblem,
    EstimationError,
    InvalidModel,
    NonConvergent,
    SDDMError,
    TooLarge,
)
from .portfolio import (
    PortfolioResult,
    ReturnMoments,
    alpha_sweep,
    min_variance_portfolio,
    optimal_weight,
    return_moments,
)

try:
    __version__ = _metadata.version("artifact")
except _metadata.PackageNotFoundError:  # running from a source tree
    __version__ = "0+unknown"

__all__ = [
    "DegenerateProblem",
    "EstimationError",
    "GrowthDistribution",
    "InvalidModel",
    "JointGrowthModel",
    "MomentInputs",
    "NonConvergent",
    "PortfolioResult",
    "PriceMoments",
    "ReturnMoments",
    "SDDMError",
    "StockMoments",
    "StockSpec",
    "TooLarge",
    "alpha_sweep",
    "covariance_exists",
    "dividend_product_expectation",
    "expected_price",
    "growth_mean",
    "growth_variance",
    "joint_growth_correlation",
    "joint_growth_covariance",
    "min_variance_portfolio",
    "optimal_weight",
    "price_covariance",
    "price_variance",
    "return_moments",
    "risk_adjusted_growth",
    "variance_exists",
]
