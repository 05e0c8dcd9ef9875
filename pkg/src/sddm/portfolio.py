"""One-period returns and quadratic-utility portfolio choice for two stocks.

Time-1 prices satisfy ``P_m1 = (1 + k_m) P_m0 - d_m1``, so their moments
follow from the time-0 price moments plus the covariances between the
first dividends and the time-0 prices.  Returns are measured against the
expected time-0 price.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass
from typing import Any, Iterable, Sequence, TextIO

import numpy as np

from .core import (
    AnyPair,
    AnyStock,
    as_moment_inputs,
    expected_price,
    price_covariance,
    price_variance,
)
from .errors import DegenerateProblem, InvalidModel, NonConvergent

__all__ = [
    "DEFAULT_ALPHA_GRID",
    "PortfolioResult",
    "ReturnMoments",
    "UtilityDomainWarning",
    "alpha_sweep",
    "dividend_price_covariance",
    "expected_utility",
    "min_variance_portfolio",
    "optimal_weight",
    "price_t1_covariance",
    "price_t1_mean",
    "price_t1_variance",
    "return_moments",
    "sweep_csv",
]

DEFAULT_ALPHA_GRID = np.logspace(-1.0, 3.0, 60)


class UtilityDomainWarning(UserWarning):
    """Optimal returns reach the region where quadratic utility decreases."""


@dataclass(frozen=True)
class ReturnMoments:
    mean_a: float
    mean_b: float
    var_a: float
    var_b: float
    cov_ab: float

    def __post_init__(self) -> None:
        for name in ("mean_a", "mean_b", "var_a", "var_b", "cov_ab"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise InvalidModel(f"{name} must be finite")
            object.__setattr__(self, name, value)
        if self.var_a < 0.0 or self.var_b < 0.0:
            raise InvalidModel("return variances must be >= 0")
        if abs(self.cov_ab) > math.sqrt(self.var_a * self.var_b) * (1.0 + 1e-12):
            raise InvalidModel("|cov_ab| exceeds sqrt(var_a * var_b)")

    def portfolio_mean(self, x_a: float) -> float:
        return self.mean_a * x_a + self.mean_b * (1.0 - x_a)

    def portfolio_variance(self, x_a: float) -> float:
        x_b = 1.0 - x_a
        return self.var_a * x_a**2 + 2.0 * self.cov_ab * x_a * x_b + self.var_b * x_b**2

    def to_dict(self) -> dict[str, float]:
        return {k: getattr(self, k) for k in ("mean_a", "mean_b", "var_a", "var_b", "cov_ab")}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ReturnMoments:
        return cls(data["mean_a"], data["mean_b"], data["var_a"], data["var_b"], data["cov_ab"])


@dataclass(frozen=True)
class PortfolioResult:
    x_a: float
    expected_return: float
    variance: float
    expected_utility: float | None = None
    alpha: float | None = None

    @property
    def x_b(self) -> float:
        return 1.0 - self.x_a

    @property
    def weights(self) -> tuple[float, float]:
        return self.x_a, self.x_b

    def to_dict(self) -> dict[str, Any]:
        return {
            "alpha": self.alpha,
            "x_a": self.x_a,
            "x_b": self.x_b,
            "expected_return": self.expected_return,
            "variance": self.variance,
            "expected_utility": self.expected_utility,
        }


# ---------------------------------------------------------------------------
# Time-1 price moments
# ---------------------------------------------------------------------------


def _pick(m: AnyPair, which: str):
    mi = as_moment_inputs(m)
    side = str(which).upper()
    if side == "A":
        return mi.stock_a
    if side == "B":
        return mi.stock_b
    raise ValueError(f"which must be 'A' or 'B', got {which!r}")


def price_t1_mean(s: AnyStock) -> float:
    return (1.0 + s.discount_rate) * expected_price(s) - s.current_dividend * (1.0 + s.growth_mean)


def dividend_price_covariance(m: AnyPair, div_of: str, price_of: str) -> float:
    """``Cov[d_m1, P_l0]`` for dividend stock ``m`` and price stock ``l``."""
    mi = as_moment_inputs(m)
    div_stock, price_stock = _pick(mi, div_of), _pick(mi, price_of)
    if str(div_of).upper() == str(price_of).upper():
        co = div_stock.growth_variance
    else:
        co = mi.growth_covariance
    return div_stock.current_dividend * co / (1.0 + price_stock.growth_mean) * expected_price(price_stock)


def price_t1_variance(m: AnyPair, which: str) -> float:
    s = _pick(m, which)
    k = s.discount_rate
    return (
        (1.0 + k) ** 2 * price_variance(s)
        - 2.0 * (1.0 + k) * dividend_price_covariance(m, which, which)
        + s.current_dividend**2 * s.growth_variance
    )


def price_t1_covariance(m: AnyPair) -> float:
    mi = as_moment_inputs(m)
    cov0 = price_covariance(mi).cov_ab
    if cov0 is None:
        raise NonConvergent("time-0 price covariance diverges")
    a, b = mi.stock_a, mi.stock_b
    # P_A1 P_B1 pairs d_A1 with (1 + k_B) P_B0 and d_B1 with (1 + k_A) P_A0
    return (
        cov0 * (1.0 + a.discount_rate) * (1.0 + b.discount_rate)
        - (1.0 + b.discount_rate) * dividend_price_covariance(mi, "A", "B")
        - (1.0 + a.discount_rate) * dividend_price_covariance(mi, "B", "A")
        + a.current_dividend * b.current_dividend * mi.growth_covariance
    )


def return_moments(m: AnyPair) -> ReturnMoments:
    """Moments of ``r_m = (P_m1 - E[P_m0]) / E[P_m0]``."""
    mi = as_moment_inputs(m)
    a, b = mi.stock_a, mi.stock_b
    pa, pb = expected_price(a), expected_price(b)
    return ReturnMoments(
        mean_a=(price_t1_mean(a) - pa) / pa,
        mean_b=(price_t1_mean(b) - pb) / pb,
        var_a=price_t1_variance(mi, "A") / pa**2,
        var_b=price_t1_variance(mi, "B") / pb**2,
        cov_ab=price_t1_covariance(mi) / (pa * pb),
    )


# ---------------------------------------------------------------------------
# Portfolio choice
# ---------------------------------------------------------------------------


def expected_utility(x_a: float, alpha: float, rm: ReturnMoments) -> float:
    """``E[u(r(x))]`` for ``u(r) = r - alpha r^2 / 2`` and ``x_b = 1 - x_a``."""
    if not alpha > 0.0:
        raise ValueError("alpha must be > 0")
    mean = rm.portfolio_mean(x_a)
    return mean - 0.5 * alpha * (rm.portfolio_variance(x_a) + mean**2)


def _result(x_a: float, rm: ReturnMoments, alpha: float | None) -> PortfolioResult:
    utility = None if alpha is None else expected_utility(x_a, alpha, rm)
    return PortfolioResult(x_a, rm.portfolio_mean(x_a), rm.portfolio_variance(x_a), utility, alpha)


def optimal_weight(alpha: float, rm: ReturnMoments, *, long_only: bool = False) -> PortfolioResult:
    """Maximiser of expected quadratic utility on ``x_a + x_b = 1``.

    Setting the derivative in ``x_a`` to zero gives::

        x_a = (D/alpha - cov + var_b - mean_b D) / (var_a - 2 cov + var_b + D^2)

    with ``D = mean_a - mean_b``.  ``long_only`` clips to ``[0, 1]``, which
    is the constrained optimum because the objective is concave.
    """
    if not alpha > 0.0:
        raise ValueError("alpha must be > 0")
    delta = rm.mean_a - rm.mean_b
    denom = rm.var_a - 2.0 * rm.cov_ab + rm.var_b + delta**2
    if denom < 1e-15:
        raise DegenerateProblem("utility is not strictly concave along the budget line")
    x_a = (delta / alpha - rm.cov_ab + rm.var_b - rm.mean_b * delta) / denom
    if long_only:
        x_a = min(1.0, max(0.0, x_a))
    result = _result(x_a, rm, alpha)
    if result.expected_return + 3.0 * math.sqrt(result.variance) > 1.0 / alpha:
        warnings.warn(
            f"alpha={alpha:g}: returns beyond 1/alpha are likely, where quadratic utility decreases",
            UtilityDomainWarning,
            stacklevel=2,
        )
    return result


def min_variance_portfolio(rm: ReturnMoments) -> PortfolioResult:
    denom = rm.var_a - 2.0 * rm.cov_ab + rm.var_b
    if not denom > 0.0:
        raise DegenerateProblem("portfolio variance is not strictly convex in x_a")
    return _result((rm.var_b - rm.cov_ab) / denom, rm, None)


def alpha_sweep(
    rm: ReturnMoments, alphas: Iterable[float] = DEFAULT_ALPHA_GRID, *, long_only: bool = False
) -> list[PortfolioResult]:
    alphas = [float(a) for a in alphas]
    if not alphas:
        raise ValueError("empty alpha grid")
    if any(not a > 0.0 for a in alphas):
        raise ValueError("every alpha must be > 0")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UtilityDomainWarning)
        rows = [optimal_weight(a, rm, long_only=long_only) for a in alphas]
    if any(r.expected_return + 3.0 * math.sqrt(r.variance) > 1.0 / r.alpha for r in rows):
        warnings.warn(
            "some sweep rows reach returns beyond 1/alpha", UtilityDomainWarning, stacklevel=2
        )
    return rows


SWEEP_COLUMNS = ("alpha", "x_a", "x_b", "mean", "variance", "utility")


def sweep_csv(rows: Sequence[PortfolioResult], out: TextIO | None = None) -> str:
    """Write sweep rows as CSV; returns the text when ``out`` is None."""
    buf = out if out is not None else io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    for r in rows:
        writer.writerow(
            [repr(r.alpha), repr(r.x_a), repr(r.x_b), repr(r.expected_return),
             repr(r.variance), repr(r.expected_utility)]
        )
    return buf.getvalue() if out is None else ""
