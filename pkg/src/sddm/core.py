"""Domain types and closed-form price moments of the stochastic dividend
discount model.

A stock pays ``d_j = d_{j-1} (1 + g)`` where ``g`` is drawn afresh every
period from a finite-state law.  Discounting at a constant rate ``k`` gives a
random price whose mean, variance and (for two stocks with jointly
distributed growth) covariance have closed forms, all implemented here.

Two parameter paths are supported:

* :class:`JointGrowthModel` carries full state/probability tables; growth
  means, variances and the growth covariance are derived from them.
* :class:`MomentInputs` carries those growth moments directly.  Published
  applications often mix sources (e.g. a sample variance next to a
  two-state table), and every formula below only needs the moments.

All moment functions accept either form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Literal, Sequence, Union

import numpy as np

from .errors import InvalidModel, NonConvergent

__all__ = [
    "PROB_TOL",
    "RENORM_TOL",
    "GrowthDistribution",
    "StockSpec",
    "StockMoments",
    "JointGrowthModel",
    "MomentInputs",
    "PriceMoments",
    "growth_mean",
    "growth_variance",
    "joint_growth_covariance",
    "joint_growth_correlation",
    "expected_price",
    "price_variance",
    "variance_exists",
    "covariance_exists",
    "risk_adjusted_growth",
    "dividend_product_expectation",
    "price_covariance",
    "as_moment_inputs",
]

PROB_TOL = 1e-12
RENORM_TOL = 1e-9

Which = Literal["A", "B", "a", "b"]


def _normalized(probs: tuple[float, ...], what: str) -> tuple[float, ...]:
    total = math.fsum(probs)
    drift = abs(total - 1.0)
    if drift <= PROB_TOL:
        return probs
    if drift < RENORM_TOL:
        return tuple(p / total for p in probs)
    raise InvalidModel(f"{what} sum to {total!r}, not 1")


def _side(which: str) -> str:
    side = str(which).upper()
    if side not in ("A", "B"):
        raise ValueError(f"which must be 'A' or 'B', got {which!r}")
    return side


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GrowthDistribution:
    """Finite-state law of one stock's per-period dividend growth rate.

    States must be strictly increasing and exceed -1; probabilities must be
    positive and sum to one (small rounding drift is renormalised away).
    """

    states: tuple[float, ...]
    probs: tuple[float, ...]

    def __post_init__(self) -> None:
        states = tuple(float(s) for s in self.states)
        probs = tuple(float(p) for p in self.probs)
        if len(states) == 0 or len(states) != len(probs):
            raise InvalidModel("states and probs must be non-empty and of equal length")
        if not all(math.isfinite(s) and s > -1.0 for s in states):
            raise InvalidModel("every growth state must be finite and > -1")
        if any(b <= a for a, b in zip(states, states[1:])):
            raise InvalidModel("growth states must be strictly increasing")
        if not all(math.isfinite(p) and p > 0.0 for p in probs):
            raise InvalidModel("every state probability must be > 0")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "probs", _normalized(probs, "growth probabilities"))

    @classmethod
    def degenerate(cls, rate: float) -> GrowthDistribution:
        return cls((rate,), (1.0,))

    @property
    def n(self) -> int:
        return len(self.states)

    @property
    def mean(self) -> float:
        return growth_mean(self)

    @property
    def variance(self) -> float:
        return growth_variance(self)

    def to_dict(self) -> dict[str, Any]:
        return {"states": list(self.states), "probs": list(self.probs)}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> GrowthDistribution:
        return cls(tuple(data["states"]), tuple(data["probs"]))


@dataclass(frozen=True)
class StockSpec:
    """One stock: current dividend, discount rate and growth law."""

    current_dividend: float
    discount_rate: float
    growth: GrowthDistribution

    def __post_init__(self) -> None:
        object.__setattr__(self, "current_dividend", float(self.current_dividend))
        object.__setattr__(self, "discount_rate", float(self.discount_rate))
        _check_stock(self.current_dividend, self.discount_rate, self.growth.mean)

    @property
    def growth_mean(self) -> float:
        return self.growth.mean

    @property
    def growth_variance(self) -> float:
        return self.growth.variance

    def moments(self) -> StockMoments:
        return StockMoments(
            self.current_dividend, self.discount_rate, self.growth_mean, self.growth_variance
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "current_dividend": self.current_dividend,
            "discount_rate": self.discount_rate,
            "growth": self.growth.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> StockSpec:
        return cls(
            data["current_dividend"],
            data["discount_rate"],
            GrowthDistribution.from_dict(data["growth"]),
        )


@dataclass(frozen=True)
class StockMoments:
    """One stock described only by the first two moments of its growth rate."""

    current_dividend: float
    discount_rate: float
    growth_mean: float
    growth_variance: float

    def __post_init__(self) -> None:
        for name in ("current_dividend", "discount_rate", "growth_mean", "growth_variance"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise InvalidModel(f"{name} must be finite")
            object.__setattr__(self, name, value)
        if self.growth_mean <= -1.0:
            raise InvalidModel("growth_mean must be > -1")
        if self.growth_variance < 0.0:
            raise InvalidModel("growth_variance must be >= 0")
        _check_stock(self.current_dividend, self.discount_rate, self.growth_mean)

    def moments(self) -> StockMoments:
        return self

    def to_dict(self) -> dict[str, Any]:
        return {
            "current_dividend": self.current_dividend,
            "discount_rate": self.discount_rate,
            "growth_mean": self.growth_mean,
            "growth_variance": self.growth_variance,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> StockMoments:
        return cls(
            data["current_dividend"],
            data["discount_rate"],
            data["growth_mean"],
            data["growth_variance"],
        )


def _check_stock(d0: float, k: float, gbar: float) -> None:
    if not (math.isfinite(d0) and d0 > 0.0):
        raise InvalidModel(f"current_dividend must be > 0, got {d0!r}")
    if not math.isfinite(k):
        raise InvalidModel("discount_rate must be finite")
    if k <= gbar:
        raise NonConvergent(
            f"discount rate {k!r} does not exceed mean growth {gbar!r}; expected price diverges"
        )


@dataclass(frozen=True)
class JointGrowthModel:
    """Two stocks whose growth rates follow a joint ``n_A x n_B`` table.

    ``joint_probs[c][d]`` is the probability that A grows at state ``c`` and
    B at state ``d`` in the same period.  Row sums must equal
    ``stock_a.growth.probs`` and column sums ``stock_b.growth.probs``.
    """

    stock_a: StockSpec
    stock_b: StockSpec
    joint_probs: tuple[tuple[float, ...], ...]

    def __post_init__(self) -> None:
        table = np.array(self.joint_probs, dtype=float)
        na, nb = self.stock_a.growth.n, self.stock_b.growth.n
        if table.shape != (na, nb):
            raise InvalidModel(f"joint table has shape {table.shape}, expected ({na}, {nb})")
        if not np.all(np.isfinite(table)) or np.any(table < 0.0):
            raise InvalidModel("joint probabilities must be finite and >= 0")
        flat = _normalized(tuple(table.ravel().tolist()), "joint probabilities")
        table = np.array(flat).reshape(na, nb)
        stock_a = _with_marginal(self.stock_a, table.sum(axis=1), "row")
        stock_b = _with_marginal(self.stock_b, table.sum(axis=0), "column")
        object.__setattr__(self, "stock_a", stock_a)
        object.__setattr__(self, "stock_b", stock_b)
        object.__setattr__(self, "joint_probs", tuple(tuple(row) for row in table.tolist()))

    @classmethod
    def from_table(
        cls,
        states_a: Sequence[float],
        states_b: Sequence[float],
        joint_probs: Sequence[Sequence[float]],
        current_dividends: tuple[float, float],
        discount_rates: tuple[float, float],
    ) -> JointGrowthModel:
        """Build a model whose marginal laws are the table's row/column sums."""
        table = np.asarray(joint_probs, dtype=float)
        growth_a = GrowthDistribution(tuple(states_a), tuple(table.sum(axis=1)))
        growth_b = GrowthDistribution(tuple(states_b), tuple(table.sum(axis=0)))
        return cls(
            StockSpec(current_dividends[0], discount_rates[0], growth_a),
            StockSpec(current_dividends[1], discount_rates[1], growth_b),
            tuple(map(tuple, table.tolist())),
        )

    @classmethod
    def independent(cls, stock_a: StockSpec, stock_b: StockSpec) -> JointGrowthModel:
        table = np.outer(stock_a.growth.probs, stock_b.growth.probs)
        return cls(stock_a, stock_b, tuple(map(tuple, table.tolist())))

    @classmethod
    def self_paired(cls, stock: StockSpec) -> JointGrowthModel:
        """A stock paired with itself (diagonal table)."""
        table = np.diag(stock.growth.probs)
        return cls(stock, stock, tuple(map(tuple, table.tolist())))

    @property
    def table(self) -> np.ndarray:
        return np.array(self.joint_probs)

    @property
    def growth_covariance(self) -> float:
        return joint_growth_covariance(self)

    def moment_inputs(self) -> MomentInputs:
        return MomentInputs(self.stock_a.moments(), self.stock_b.moments(), self.growth_covariance)

    def to_dict(self) -> dict[str, Any]:
        return {
            "stock_a": self.stock_a.to_dict(),
            "stock_b": self.stock_b.to_dict(),
            "joint_probs": [list(row) for row in self.joint_probs],
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> JointGrowthModel:
        """Inverse of :meth:`to_dict`.

        A stock's ``growth.probs`` may be omitted, in which case the marginal
        of the joint table is used.
        """
        table = np.asarray(data["joint_probs"], dtype=float)
        if table.ndim != 2:
            raise InvalidModel("joint_probs must be a two-dimensional table")
        stocks = []
        for key, marginal in (("stock_a", table.sum(axis=1)), ("stock_b", table.sum(axis=0))):
            raw = data[key]
            growth = dict(raw["growth"])
            if growth.get("probs") is None:
                growth["probs"] = marginal.tolist()
            stocks.append(
                StockSpec(
                    raw["current_dividend"],
                    raw["discount_rate"],
                    GrowthDistribution.from_dict(growth),
                )
            )
        return cls(stocks[0], stocks[1], tuple(map(tuple, table.tolist())))


def _with_marginal(stock: StockSpec, marginal: np.ndarray, kind: str) -> StockSpec:
    probs = np.asarray(stock.growth.probs)
    drift = float(np.max(np.abs(probs - marginal)))
    if drift <= PROB_TOL:
        return stock
    if drift < RENORM_TOL:
        growth = GrowthDistribution(stock.growth.states, tuple(marginal.tolist()))
        return StockSpec(stock.current_dividend, stock.discount_rate, growth)
    raise InvalidModel(
        f"joint table {kind} sums differ from the marginal probabilities by {drift:.3g}"
    )


@dataclass(frozen=True)
class MomentInputs:
    """Two stocks given by growth moments plus the growth covariance."""

    stock_a: StockMoments
    stock_b: StockMoments
    growth_covariance: float

    def __post_init__(self) -> None:
        cov = float(self.growth_covariance)
        if not math.isfinite(cov):
            raise InvalidModel("growth_covariance must be finite")
        bound = math.sqrt(self.stock_a.growth_variance * self.stock_b.growth_variance)
        if abs(cov) > bound * (1.0 + 1e-12) + 1e-15:
            raise InvalidModel(
                f"|growth_covariance| = {abs(cov):.6g} exceeds sqrt(var_a * var_b) = {bound:.6g}"
            )
        object.__setattr__(self, "growth_covariance", cov)

    def moment_inputs(self) -> MomentInputs:
        return self

    def to_dict(self) -> dict[str, Any]:
        return {
            "stock_a": self.stock_a.to_dict(),
            "stock_b": self.stock_b.to_dict(),
            "growth_covariance": self.growth_covariance,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> MomentInputs:
        return cls(
            StockMoments.from_dict(data["stock_a"]),
            StockMoments.from_dict(data["stock_b"]),
            data["growth_covariance"],
        )


@dataclass(frozen=True)
class PriceMoments:
    """Closed-form time-0 price moments.

    A moment whose series diverges is ``None`` and its flag is ``False``.
    """

    mean_a: float
    mean_b: float
    var_a: float | None
    var_b: float | None
    cov_ab: float | None
    variance_exists_a: bool
    variance_exists_b: bool
    covariance_exists: bool

    @property
    def all_exist(self) -> bool:
        return self.variance_exists_a and self.variance_exists_b and self.covariance_exists

    @property
    def correlation(self) -> float | None:
        if not self.all_exist or self.var_a == 0.0 or self.var_b == 0.0:
            return None
        return self.cov_ab / math.sqrt(self.var_a * self.var_b)

    def to_dict(self) -> dict[str, Any]:
        return {
            "mean_a": self.mean_a,
            "mean_b": self.mean_b,
            "var_a": self.var_a,
            "var_b": self.var_b,
            "cov_ab": self.cov_ab,
            "variance_exists_a": self.variance_exists_a,
            "variance_exists_b": self.variance_exists_b,
            "covariance_exists": self.covariance_exists,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> PriceMoments:
        return cls(**{k: data[k] for k in cls.__dataclass_fields__})


AnyPair = Union[JointGrowthModel, MomentInputs]
AnyStock = Union[StockSpec, StockMoments]


def as_moment_inputs(m: AnyPair) -> MomentInputs:
    if isinstance(m, (JointGrowthModel, MomentInputs)):
        return m.moment_inputs()
    raise TypeError(f"expected JointGrowthModel or MomentInputs, got {type(m).__name__}")


# ---------------------------------------------------------------------------
# Growth-rate moments
# ---------------------------------------------------------------------------


def growth_mean(g: GrowthDistribution) -> float:
    return math.fsum(s * p for s, p in zip(g.states, g.probs))


def growth_variance(g: GrowthDistribution) -> float:
    mean = growth_mean(g)
    return math.fsum(p * (s - mean) ** 2 for s, p in zip(g.states, g.probs))


def joint_growth_covariance(m: JointGrowthModel) -> float:
    """``sum_cd pi_cd g_Ac g_Bd - mean_A mean_B``."""
    ga, gb = m.stock_a.growth, m.stock_b.growth
    mean_a, mean_b = growth_mean(ga), growth_mean(gb)
    # centred form: same value, no cancellation
    cov = math.fsum(
        pi * (sa - mean_a) * (sb - mean_b)
        for sa, row in zip(ga.states, m.joint_probs)
        for sb, pi in zip(gb.states, row)
    )
    # Cauchy-Schwarz holds exactly for any table; only rounding (e.g. an
    # underflowing variance) can break it
    bound = math.sqrt(growth_variance(ga) * growth_variance(gb))
    return max(-bound, min(bound, cov))


def joint_growth_correlation(m: JointGrowthModel) -> float:
    va, vb = m.stock_a.growth_variance, m.stock_b.growth_variance
    if va == 0.0 or vb == 0.0:
        raise ValueError("correlation undefined for a degenerate growth law")
    return joint_growth_covariance(m) / math.sqrt(va * vb)


# ---------------------------------------------------------------------------
# Single-stock price moments
# ---------------------------------------------------------------------------


def expected_price(s: AnyStock) -> float:
    """Mean price ``d0 (1 + g) / (k - g)``; requires ``k > g``."""
    d0, k, g = s.current_dividend, s.discount_rate, s.growth_mean
    if k <= g:
        raise NonConvergent(f"k = {k!r} <= mean growth {g!r}")
    return d0 * (1.0 + g) / (k - g)


def variance_exists(s: AnyStock) -> bool:
    k, g, v = s.discount_rate, s.growth_mean, s.growth_variance
    return v < (1.0 + k) ** 2 - (1.0 + g) ** 2


def price_variance(s: AnyStock) -> float:
    """Variance of the random price.

    Raises
    ------
    NonConvergent
        If ``Var[g] >= (1+k)^2 - (1+g)^2``.  The mean may still exist.
    """
    mean = expected_price(s)
    k, g, v = s.discount_rate, s.growth_mean, s.growth_variance
    gap = (1.0 + k) ** 2 - (1.0 + g) ** 2
    if not v < gap:
        raise NonConvergent(
            f"price variance diverges: Var[g] = {v!r} >= (1+k)^2 - (1+g)^2 = {gap!r}"
        )
    return v / (gap - v) * (1.0 + k) ** 2 / (1.0 + g) ** 2 * mean**2


# ---------------------------------------------------------------------------
# Two-stock moments
# ---------------------------------------------------------------------------


def risk_adjusted_growth(m: AnyPair, which: Which) -> float:
    """Own mean growth plus growth covariance over one plus the other's mean."""
    mi = as_moment_inputs(m)
    own, other = (mi.stock_a, mi.stock_b) if _side(which) == "A" else (mi.stock_b, mi.stock_a)
    return own.growth_mean + mi.growth_covariance / (1.0 + other.growth_mean)


def _joint_factor(mi: MomentInputs) -> float:
    """``E[(1+g_A)(1+g_B)]``."""
    a, b = mi.stock_a, mi.stock_b
    return (1.0 + a.growth_mean) * (1.0 + b.growth_mean) + mi.growth_covariance


def covariance_exists(m: AnyPair) -> bool:
    mi = as_moment_inputs(m)
    cap = (1.0 + mi.stock_a.discount_rate) * (1.0 + mi.stock_b.discount_rate)
    return abs(_joint_factor(mi)) < cap


def dividend_product_expectation(m: AnyPair, j, p):
    """``E[d_Aj d_Bp]`` for periods ``j, p >= 1``.

    While both dividends are alive they grow jointly, afterwards only the
    longer-lived one keeps growing at its own mean rate.  ``j`` and ``p``
    may be integer arrays (broadcast together).
    """
    mi = as_moment_inputs(m)
    j_arr = np.asarray(j)
    p_arr = np.asarray(p)
    if np.any(j_arr < 1) or np.any(p_arr < 1):
        raise ValueError("periods must be >= 1")
    a, b = mi.stock_a, mi.stock_b
    scale = a.current_dividend * b.current_dividend
    ga_adj = risk_adjusted_growth(mi, "A")
    gb_adj = risk_adjusted_growth(mi, "B")
    j_f = j_arr.astype(float)
    p_f = p_arr.astype(float)
    with np.errstate(over="ignore"):  # the branch not selected may overflow
        a_first = scale * (1.0 + ga_adj) ** j_f * (1.0 + b.growth_mean) ** p_f
        b_first = scale * (1.0 + gb_adj) ** p_f * (1.0 + a.growth_mean) ** j_f
    out = np.where(j_arr <= p_arr, a_first, b_first)
    return float(out) if out.ndim == 0 else out


def price_covariance(m: AnyPair) -> PriceMoments:
    """All closed-form time-0 price moments with existence flags.

    The covariance exists when ``|E[(1+g_A)(1+g_B)]| < (1+k_A)(1+k_B)``;
    each variance has its own condition (see :func:`price_variance`).
    """
    mi = as_moment_inputs(m)
    a, b = mi.stock_a, mi.stock_b
    mean_a, mean_b = expected_price(a), expected_price(b)
    var_a = price_variance(a) if variance_exists(a) else None
    var_b = price_variance(b) if variance_exists(b) else None

    cov_ab = None
    exists = covariance_exists(mi)
    if exists:
        cap = (1.0 + a.discount_rate) * (1.0 + b.discount_rate)
        mean_factor = (1.0 + a.growth_mean) * (1.0 + b.growth_mean)
        cov_g = mi.growth_covariance
        cov_ab = cov_g / (cap - mean_factor - cov_g) * cap / mean_factor * mean_a * mean_b
    return PriceMoments(
        mean_a=mean_a,
        mean_b=mean_b,
        var_a=var_a,
        var_b=var_b,
        cov_ab=cov_ab,
        variance_exists_a=var_a is not None,
        variance_exists_b=var_b is not None,
        covariance_exists=exists,
    )
