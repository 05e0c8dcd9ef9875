"""From dividend and price histories to model inputs.

Dividend histories give yearly growth rates, which are discretised into two
states per stock (below/above a threshold) and cross-tabulated into a joint
probability table.  Weekly prices give CAPM betas and discount rates.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import asdict, dataclass, field
from typing import Any, Literal, Sequence

import numpy as np
from scipy import stats as sps

from .core import (
    GrowthDistribution,
    JointGrowthModel,
    MomentInputs,
    StockMoments,
)
from .errors import (
    DegenerateRegressor,
    EmptyBucket,
    EstimationError,
    NonPositiveDividend,
    NoOverlap,
)

Method = Literal["geometric_mean", "median"]
METHODS: tuple[str, ...] = ("geometric_mean", "median")
_METHOD_ALIASES = {"geometric_mean": "geometric_mean", "geomean": "geometric_mean", "median": "median"}

# growth rates within this distance of the median count as ties
TIE_TOL = 1e-9


def canonical_method(method: str) -> str:
    try:
        return _METHOD_ALIASES[method]
    except KeyError:
        raise ValueError(f"unknown discretisation method {method!r}") from None


@dataclass(frozen=True)
class DividendSeries:
    ticker: str
    observations: tuple[tuple[int, float], ...]

    def __post_init__(self) -> None:
        obs = tuple((int(y), float(d)) for y, d in self.observations)
        if len(obs) < 2:
            raise EstimationError(f"{self.ticker}: need at least two dividends")
        years = [y for y, _ in obs]
        if any(b <= a for a, b in zip(years, years[1:])):
            raise EstimationError(f"{self.ticker}: years must be strictly increasing")
        object.__setattr__(self, "observations", obs)

    @property
    def years(self) -> list[int]:
        return [y for y, _ in self.observations]

    @property
    def dividends(self) -> list[float]:
        return [d for _, d in self.observations]


@dataclass(frozen=True)
class GrowthSample:
    """Yearly growth rates; ``years[i]`` is the year the rate ends in."""

    rates: tuple[float, ...]
    years: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        rates = tuple(float(r) for r in self.rates)
        years = tuple(int(y) for y in self.years) or tuple(range(1, len(rates) + 1))
        if len(years) != len(rates):
            raise ValueError("rates and years differ in length")
        if any(r <= -1.0 for r in rates):
            raise EstimationError("growth rates must be > -1")
        object.__setattr__(self, "rates", rates)
        object.__setattr__(self, "years", years)

    def __len__(self) -> int:
        return len(self.rates)

    def restrict(self, years: Sequence[int]) -> GrowthSample:
        keep = set(years)
        pairs = [(y, r) for y, r in zip(self.years, self.rates) if y in keep]
        return GrowthSample(tuple(r for _, r in pairs), tuple(y for y, _ in pairs))


@dataclass(frozen=True)
class SummaryStats:
    count: int
    min: float
    max: float
    geometric_mean: float
    median: float
    sample_variance: float | None  # None for a single rate


@dataclass(frozen=True)
class RegressionResult:
    alpha: float
    beta: float
    t_alpha: float
    t_beta: float
    p_alpha: float
    p_beta: float
    r_squared: float
    n_obs: int


def growth_rates(d: DividendSeries) -> GrowthSample:
    """Consecutive ratios minus one."""
    divs = np.array(d.dividends)
    bad = np.flatnonzero(divs <= 0.0)
    if bad.size:
        year = d.years[int(bad[0])]
        raise NonPositiveDividend(f"{d.ticker}: dividend for {year} is not positive")
    rates = divs[1:] / divs[:-1] - 1.0
    return GrowthSample(tuple(rates.tolist()), tuple(d.years[1:]))


def geometric_mean_rate(rates: Sequence[float]) -> float:
    """``(prod(1 + g))**(1/T) - 1``."""
    if len(rates) == 0:
        raise EmptyBucket("geometric mean of an empty set of rates")
    return math.expm1(math.fsum(math.log1p(r) for r in rates) / len(rates))


def sample_variance(gs: GrowthSample) -> float:
    if len(gs) < 2:
        raise EstimationError("sample variance needs at least two rates")
    return statistics.variance(gs.rates)


def summary_stats(gs: GrowthSample) -> SummaryStats:
    if len(gs) == 0:
        raise EstimationError("empty growth sample")
    return SummaryStats(
        count=len(gs),
        min=min(gs.rates),
        max=max(gs.rates),
        geometric_mean=geometric_mean_rate(gs.rates),
        median=statistics.median(gs.rates),
        sample_variance=sample_variance(gs) if len(gs) > 1 else None,
    )


def _threshold(rates: Sequence[float], method: str) -> float:
    if method == "geometric_mean":
        return geometric_mean_rate(rates)
    return statistics.median(rates)


def _bucket_state(rates: Sequence[float], method: str) -> float:
    if method == "geometric_mean":
        return geometric_mean_rate(rates)
    return statistics.median(rates)


def _classify(rates: np.ndarray, threshold: float, method: str) -> tuple[np.ndarray, np.ndarray]:
    """Masks ``(kept, upper)``; ties with the median are dropped, ties with
    the geometric mean go up."""
    if method == "median":
        kept = np.abs(rates - threshold) > TIE_TOL
        return kept, rates > threshold
    return np.ones(len(rates), dtype=bool), rates >= threshold


def discretize(gs: GrowthSample, method: Method) -> GrowthDistribution:
    """Two-state growth law from a sample.

    ``geometric_mean``: split at the overall geometric mean, each state is
    the geometric mean of its bucket.  ``median``: split at the median after
    dropping rates equal to it, each state is the median of its half.
    Probabilities are bucket frequencies.
    """
    method = canonical_method(method)
    rates = np.asarray(gs.rates)
    threshold = _threshold(gs.rates, method)
    kept, upper = _classify(rates, threshold, method)
    low = rates[kept & ~upper]
    high = rates[kept & upper]
    if low.size == 0 or high.size == 0:
        raise EmptyBucket(f"{method} split at {threshold:.6g} leaves a bucket empty")
    total = low.size + high.size
    return GrowthDistribution(
        (_bucket_state(low.tolist(), method), _bucket_state(high.tolist(), method)),
        (low.size / total, high.size / total),
    )


@dataclass(frozen=True)
class JointTable:
    """Year-by-year cross-tabulation of two discretised growth samples."""

    method: str
    years: tuple[int, ...]
    dropped_years: tuple[int, ...]
    thresholds: tuple[float, float]
    states_a: tuple[float, float]
    states_b: tuple[float, float]
    counts: tuple[tuple[int, int], tuple[int, int]]

    @property
    def total(self) -> int:
        return sum(map(sum, self.counts))

    @property
    def joint_probs(self) -> tuple[tuple[float, ...], ...]:
        total = self.total
        return tuple(tuple(c / total for c in row) for row in self.counts)

    def model(
        self, current_dividends: tuple[float, float], discount_rates: tuple[float, float]
    ) -> JointGrowthModel:
        return JointGrowthModel.from_table(
            self.states_a, self.states_b, self.joint_probs, current_dividends, discount_rates
        )

    def to_dict(self) -> dict[str, Any]:
        out = asdict(self)
        out["total"] = self.total
        out["joint_probs"] = [list(r) for r in self.joint_probs]
        return out


def joint_table(gs_a: GrowthSample, gs_b: GrowthSample, method: Method) -> JointTable:
    """Joint bucket frequencies over the years both samples cover.

    Thresholds are computed per stock on the common years.  Under the
    median method a year is dropped when either stock ties its own median;
    bucket states are then recomputed on the remaining years so that the
    table's marginals and states describe the same observations.
    """
    method = canonical_method(method)
    common = sorted(set(gs_a.years) & set(gs_b.years))
    if len(common) < 2:
        raise NoOverlap(f"only {len(common)} common year(s) between the two samples")
    ra = np.asarray(gs_a.restrict(common).rates)
    rb = np.asarray(gs_b.restrict(common).rates)
    thr_a = _threshold(ra.tolist(), method)
    thr_b = _threshold(rb.tolist(), method)
    kept_a, up_a = _classify(ra, thr_a, method)
    kept_b, up_b = _classify(rb, thr_b, method)
    kept = kept_a & kept_b
    years = np.asarray(common)

    states = []
    for rates, up in ((ra, up_a), (rb, up_b)):
        low, high = rates[kept & ~up], rates[kept & up]
        if low.size == 0 or high.size == 0:
            raise EmptyBucket(f"{method} joint split leaves a bucket empty")
        states.append((_bucket_state(low.tolist(), method), _bucket_state(high.tolist(), method)))

    counts = tuple(
        tuple(int(np.sum(kept & (up_a == bool(c)) & (up_b == bool(d)))) for d in (0, 1))
        for c in (0, 1)
    )
    return JointTable(
        method=method,
        years=tuple(int(y) for y in years[kept]),
        dropped_years=tuple(int(y) for y in years[~kept]),
        thresholds=(thr_a, thr_b),
        states_a=states[0],
        states_b=states[1],
        counts=counts,
    )


def ols(excess_stock: Sequence[float], excess_market: Sequence[float]) -> RegressionResult:
    """OLS of stock excess returns on market excess returns, with intercept."""
    y = np.asarray(excess_stock, dtype=float)
    x = np.asarray(excess_market, dtype=float)
    n = len(y)
    if len(x) != n or n < 3:
        raise EstimationError("need two equal-length series with at least 3 observations")
    if np.ptp(x) == 0.0:
        raise DegenerateRegressor("market excess returns have zero variance")
    xc = x - x.mean()
    yc = y - y.mean()
    sxx = float(xc @ xc)
    beta = float(xc @ yc) / sxx
    alpha = float(y.mean() - beta * x.mean())
    resid = yc - beta * xc
    ssr = float(resid @ resid)
    sst = float(yc @ yc)
    dof = n - 2
    sigma2 = ssr / dof
    se_beta = math.sqrt(sigma2 / sxx)
    se_alpha = math.sqrt(sigma2 * (1.0 / n + x.mean() ** 2 / sxx))

    def t_and_p(est: float, se: float) -> tuple[float, float]:
        if se == 0.0:
            return (0.0, 1.0) if est == 0.0 else (math.copysign(math.inf, est), 0.0)
        t = est / se
        return t, float(2.0 * sps.t.sf(abs(t), dof))

    t_alpha, p_alpha = t_and_p(alpha, se_alpha)
    t_beta, p_beta = t_and_p(beta, se_beta)
    r2 = 0.0 if sst == 0.0 else min(1.0, max(0.0, 1.0 - ssr / sst))
    return RegressionResult(alpha, beta, t_alpha, t_beta, p_alpha, p_beta, r2, n)


def capm_rate(beta: float, rf: float, rm: float) -> float:
    return rf + beta * (rm - rf)


# ---------------------------------------------------------------------------
# Price histories and the full pipeline
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PriceSeries:
    dates: tuple[str, ...]
    stock_close: tuple[float, ...]
    index_close: tuple[float, ...]

    def __post_init__(self) -> None:
        if not len(self.dates) == len(self.stock_close) == len(self.index_close):
            raise ValueError("price columns differ in length")
        if len(self.dates) < 4:
            raise EstimationError("need at least 4 prices (3 returns) for a regression")
        if min(self.stock_close) <= 0.0 or min(self.index_close) <= 0.0:
            raise EstimationError("prices must be positive")


@dataclass(frozen=True)
class EstimationConfig:
    risk_free_rate: float
    market_return: float | None = None  # None: annualised mean log index return
    method: str = "both"
    return_convention: Literal["simple", "log"] = "simple"
    periods_per_year: int = 52

    def __post_init__(self) -> None:
        if self.return_convention not in ("simple", "log"):
            raise ValueError(f"unknown return convention {self.return_convention!r}")
        if self.method != "both":
            object.__setattr__(self, "method", canonical_method(self.method))
        if self.periods_per_year < 1:
            raise ValueError("periods_per_year must be >= 1")

    @property
    def methods(self) -> tuple[str, ...]:
        return METHODS if self.method == "both" else (self.method,)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> EstimationConfig:
        known = {k: data[k] for k in cls.__dataclass_fields__ if k in data}
        return cls(**known)


def _returns(prices: np.ndarray, convention: str) -> np.ndarray:
    ratio = prices[1:] / prices[:-1]
    return np.log(ratio) if convention == "log" else ratio - 1.0


def periodic_risk_free(cfg: EstimationConfig) -> float:
    if cfg.return_convention == "log":
        return math.log1p(cfg.risk_free_rate) / cfg.periods_per_year
    return (1.0 + cfg.risk_free_rate) ** (1.0 / cfg.periods_per_year) - 1.0


def market_return(prices: PriceSeries, cfg: EstimationConfig) -> float:
    if cfg.market_return is not None:
        return cfg.market_return
    index = np.asarray(prices.index_close)
    return float(np.mean(np.log(index[1:] / index[:-1])) * cfg.periods_per_year)


def capm_regression(prices: PriceSeries, cfg: EstimationConfig) -> RegressionResult:
    rf = periodic_risk_free(cfg)
    stock = _returns(np.asarray(prices.stock_close), cfg.return_convention) - rf
    index = _returns(np.asarray(prices.index_close), cfg.return_convention) - rf
    return ols(stock, index)


@dataclass(frozen=True)
class StockEstimate:
    ticker: str
    current_dividend: float
    last_year: int
    sample: GrowthSample
    stats: SummaryStats
    distributions: dict[str, GrowthDistribution]
    regression: RegressionResult | None = None
    discount_rate: float | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "ticker": self.ticker,
            "current_dividend": self.current_dividend,
            "last_year": self.last_year,
            "growth_rates": dict(zip(map(str, self.sample.years), self.sample.rates)),
            "summary": asdict(self.stats),
            "distributions": {k: v.to_dict() for k, v in self.distributions.items()},
            "regression": None if self.regression is None else asdict(self.regression),
            "discount_rate": self.discount_rate,
        }


@dataclass(frozen=True)
class EstimationReport:
    """Everything estimated from the raw histories.

    Two parameterisations of the pair are derived per method: the
    two-state ``model`` (growth moments from the discretised laws) and
    ``moment_inputs`` (growth mean = geometric mean of the sample, variance
    = sample variance, covariance from the joint table).
    """

    stocks: tuple[StockEstimate, ...]
    joint: dict[str, JointTable]
    risk_free_rate: float
    market_return: float | None
    config: EstimationConfig
    provenance: dict[str, Any] = field(default_factory=dict)

    def model(self, method: str) -> JointGrowthModel:
        table = self._pair_table(method)
        a, b = self.stocks
        return table.model(
            (a.current_dividend, b.current_dividend), self._discount_rates()
        )

    def moment_inputs(self, method: str) -> MomentInputs:
        table = self._pair_table(method)
        a, b = self.stocks
        ka, kb = self._discount_rates()
        cov = _table_covariance(table)
        return MomentInputs(
            StockMoments(a.current_dividend, ka, a.stats.geometric_mean, a.stats.sample_variance),
            StockMoments(b.current_dividend, kb, b.stats.geometric_mean, b.stats.sample_variance),
            cov,
        )

    def _pair_table(self, method: str) -> JointTable:
        method = canonical_method(method)
        if len(self.stocks) != 2:
            raise EstimationError("a joint model needs exactly two stocks")
        if method not in self.joint:
            raise EstimationError(f"method {method!r} was not estimated")
        return self.joint[method]

    def _discount_rates(self) -> tuple[float, float]:
        rates = tuple(s.discount_rate for s in self.stocks)
        if any(r is None for r in rates):
            raise EstimationError("discount rates unavailable (no price data)")
        return rates  # type: ignore[return-value]

    def to_dict(self) -> dict[str, Any]:
        methods: dict[str, Any] = {}
        for method in self.config.methods:
            entry: dict[str, Any] = {"method": method, "joint": None, "model": None, "moment_inputs": None}
            if method in self.joint:
                table = self.joint[method]
                entry["joint"] = table.to_dict()
                entry["joint"]["growth_covariance"] = _table_covariance(table)
                entry["joint"]["growth_correlation"] = _table_correlation(table)
                try:
                    entry["model"] = self.model(method).to_dict()
                    entry["moment_inputs"] = self.moment_inputs(method).to_dict()
                except EstimationError:
                    pass
            methods[method] = entry
        return {
            "stocks": [s.to_dict() for s in self.stocks],
            "risk_free_rate": self.risk_free_rate,
            "market_return": self.market_return,
            "config": asdict(self.config),
            "methods": methods,
            "provenance": self.provenance,
        }


def _table_distributions(table: JointTable) -> tuple[GrowthDistribution, GrowthDistribution]:
    probs = np.array(table.joint_probs)
    return (
        GrowthDistribution(table.states_a, tuple(probs.sum(axis=1))),
        GrowthDistribution(table.states_b, tuple(probs.sum(axis=0))),
    )


def _table_covariance(table: JointTable) -> float:
    ga, gb = _table_distributions(table)
    probs = table.joint_probs
    return math.fsum(
        probs[c][d] * (ga.states[c] - ga.mean) * (gb.states[d] - gb.mean)
        for c in range(2)
        for d in range(2)
    )


def _table_correlation(table: JointTable) -> float:
    ga, gb = _table_distributions(table)
    return _table_covariance(table) / math.sqrt(ga.variance * gb.variance)


def build_report(
    dividends: Sequence[DividendSeries],
    prices: Sequence[PriceSeries | None],
    cfg: EstimationConfig,
    provenance: dict[str, Any] | None = None,
) -> EstimationReport:
    """Run the estimation pipeline for one or two stocks."""
    if len(dividends) not in (1, 2):
        raise EstimationError("expected one or two dividend series")
    if len(prices) not in (0, len(dividends)):
        raise EstimationError("give price histories for every stock or for none")
    prices = list(prices) or [None] * len(dividends)

    rm = None
    stocks = []
    for series, px in zip(dividends, prices):
        sample = growth_rates(series)
        regression = k = None
        if px is not None:
            rm = market_return(px, cfg)
            regression = capm_regression(px, cfg)
            k = capm_rate(regression.beta, cfg.risk_free_rate, rm)
        stocks.append(
            StockEstimate(
                ticker=series.ticker,
                current_dividend=series.dividends[-1],
                last_year=series.years[-1],
                sample=sample,
                stats=summary_stats(sample),
                distributions={m: discretize(sample, m) for m in cfg.methods},
                regression=regression,
                discount_rate=k,
            )
        )

    joint = {}
    if len(stocks) == 2:
        joint = {m: joint_table(stocks[0].sample, stocks[1].sample, m) for m in cfg.methods}
    return EstimationReport(
        stocks=tuple(stocks),
        joint=joint,
        risk_free_rate=cfg.risk_free_rate,
        market_return=rm if rm is not None else cfg.market_return,
        config=cfg,
        provenance=dict(provenance or {}),
    )
