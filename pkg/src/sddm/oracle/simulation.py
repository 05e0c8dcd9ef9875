"""Monte Carlo simulation of the joint dividend recursion.

Each period one ``(c, d)`` cell of the joint growth table is drawn by
inverse CDF over the row-major flattened table, and both dividends grow by
the corresponding rates.  Uniforms come from a counter-based generator keyed
by ``(seed, path index, period)``, so a path's prices depend on nothing
else: serial, chunked and threaded runs agree bit for bit.

The hot loop lives in the compiled ``sddm._simkernel`` extension; when it is
unavailable (or ``SDDM_PURE_PYTHON`` is set) the numpy fallback in
``sddm._simfallback`` is used.  Both produce identical bits.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Callable

import numpy as np

from .. import _simfallback
from ..core import JointGrowthModel, PriceMoments
from .series import DEFAULT_EPSILON, auto_horizon

_KERNELS: dict[str, Callable] = {"python": _simfallback.simulate_block}
if not os.environ.get("SDDM_PURE_PYTHON"):
    try:
        from .._simkernel import simulate_block as _compiled_block
    except ImportError:  # extension not built
        pass
    else:
        _KERNELS["cython"] = _compiled_block

KERNEL = "cython" if "cython" in _KERNELS else "python"


def available_kernels() -> tuple[str, ...]:
    return tuple(_KERNELS)


@dataclass(frozen=True)
class SimConfig:
    """Simulation settings.

    ``horizon=None`` truncates the price sums at :func:`auto_horizon` for
    ``epsilon``.  ``workers`` and ``chunk_size`` only change how the work is
    split, never the result.
    """

    n_paths: int
    seed: int
    horizon: int | None = None
    antithetic: bool = False
    epsilon: float = DEFAULT_EPSILON
    n_batches: int = 100
    workers: int = 1
    chunk_size: int = 1 << 16

    def __post_init__(self) -> None:
        if self.n_paths < 1:
            raise ValueError("n_paths must be >= 1")
        if self.horizon is not None and self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.antithetic and self.n_paths % 2:
            raise ValueError("antithetic sampling needs an even number of paths")
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError("epsilon must lie in (0, 1)")
        if self.n_batches < 2 or self.workers < 1 or self.chunk_size < 1:
            raise ValueError("n_batches >= 2, workers >= 1 and chunk_size >= 1 required")

    def resolve_horizon(self, m: JointGrowthModel) -> int:
        return self.horizon if self.horizon is not None else auto_horizon(m, self.epsilon)


@dataclass(frozen=True)
class MomentEstimate:
    value: float
    std_error: float
    n_samples: int

    def covers(self, target: float, n_se: float = 4.0) -> bool:
        return abs(self.value - target) <= n_se * self.std_error


@dataclass(frozen=True)
class MCPriceMoments:
    mean_a: MomentEstimate
    mean_b: MomentEstimate
    var_a: MomentEstimate
    var_b: MomentEstimate
    cov_ab: MomentEstimate
    horizon: int
    seed: int
    antithetic: bool
    kernel: str

    def coverage(self, closed: PriceMoments, n_se: float = 4.0) -> dict[str, bool]:
        """Which closed-form moments fall inside ``n_se`` standard errors."""
        out = {}
        for name in ("mean_a", "mean_b", "var_a", "var_b", "cov_ab"):
            target = getattr(closed, name)
            out[name] = target is not None and getattr(self, name).covers(target, n_se)
        return out

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def _cell_arrays(m: JointGrowthModel) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    ga = np.asarray(m.stock_a.growth.states)
    gb = np.asarray(m.stock_b.growth.states)
    pi = m.table.ravel()
    cum = np.cumsum(pi)
    # from the last reachable cell on, accept every u (covers u == 1 under antithetics)
    last = int(np.flatnonzero(pi > 0.0)[-1])
    cum[last:] = np.inf
    fa = np.repeat(1.0 + ga, len(gb))
    fb = np.tile(1.0 + gb, len(ga))
    return np.ascontiguousarray(cum), fa, fb


def simulate_joint_paths(
    m: JointGrowthModel, cfg: SimConfig, kernel: str | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Truncated discounted dividend sums ``(P_A, P_B)`` for every path."""
    name = kernel or KERNEL
    if name not in _KERNELS:
        raise ValueError(f"kernel {name!r} not available; have {available_kernels()}")
    block = _KERNELS[name]
    horizon = cfg.resolve_horizon(m)
    cum, fa, fb = _cell_arrays(m)
    steps = np.arange(1, horizon + 1, dtype=float)
    disc_a = (1.0 + m.stock_a.discount_rate) ** -steps
    disc_b = (1.0 + m.stock_b.discount_rate) ** -steps
    d0a, d0b = m.stock_a.current_dividend, m.stock_b.current_dividend
    seed = int(cfg.seed) & ((1 << 64) - 1)

    starts = range(0, cfg.n_paths, cfg.chunk_size)

    def run(start: int) -> tuple[np.ndarray, np.ndarray]:
        count = min(cfg.chunk_size, cfg.n_paths - start)
        return block(cum, fa, fb, disc_a, disc_b, d0a, d0b, seed, start, count, cfg.antithetic)

    if cfg.workers > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            parts = list(pool.map(run, starts))
    else:
        parts = [run(s) for s in starts]
    price_a = np.concatenate([pa for pa, _ in parts])
    price_b = np.concatenate([pb for _, pb in parts])
    return price_a, price_b


def _sample_cov(x: np.ndarray, y: np.ndarray) -> float:
    # shifting by the first sample makes identical samples give exactly 0
    dx = x - x[0]
    dy = y - y[0]
    return float(np.sum((dx - dx.mean()) * (dy - dy.mean())) / (len(x) - 1))


def _mean_estimate(x: np.ndarray, antithetic: bool) -> MomentEstimate:
    units = 0.5 * (x[0::2] + x[1::2]) if antithetic else x
    shifted = units - units[0]
    se = math.sqrt(_sample_cov(shifted, shifted) / len(units)) if len(units) > 1 else math.inf
    return MomentEstimate(float(np.mean(x)), se, len(x))


def _batched(x: np.ndarray, y: np.ndarray, n_batches: int, antithetic: bool) -> MomentEstimate:
    n = len(x)
    # batch boundaries fall between antithetic pairs
    unit = 2 if antithetic else 1
    n_units = n // unit
    batches = min(n_batches, n_units // 2)
    if batches < 2:
        return MomentEstimate(_sample_cov(x, y), math.inf, n)
    edges = [unit * (i * n_units // batches) for i in range(batches + 1)]
    values = np.array([_sample_cov(x[lo:hi], y[lo:hi]) for lo, hi in zip(edges, edges[1:])])
    spread = _sample_cov(values, values)
    return MomentEstimate(_sample_cov(x, y), math.sqrt(spread / batches), n)


def mc_price_moments(
    m: JointGrowthModel, cfg: SimConfig, kernel: str | None = None
) -> MCPriceMoments:
    """Sample means, variances and covariance of simulated prices.

    Mean standard errors are classical (computed on antithetic pair averages
    when pairing is on); variance and covariance standard errors come from
    ``cfg.n_batches`` contiguous batch means.
    """
    if cfg.n_paths < 2:
        raise ValueError("need at least two paths to estimate second moments")
    pa, pb = simulate_joint_paths(m, cfg, kernel)
    anti = cfg.antithetic
    return MCPriceMoments(
        mean_a=_mean_estimate(pa, anti),
        mean_b=_mean_estimate(pb, anti),
        var_a=_batched(pa, pa, cfg.n_batches, anti),
        var_b=_batched(pb, pb, cfg.n_batches, anti),
        cov_ab=_batched(pa, pb, cfg.n_batches, anti),
        horizon=cfg.resolve_horizon(m),
        seed=cfg.seed,
        antithetic=anti,
        kernel=kernel or KERNEL,
    )


def write_paths_csv(path: str | Path, price_a: np.ndarray, price_b: np.ndarray) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["path_id", "price_a", "price_b"])
        for i, (a, b) in enumerate(zip(price_a.tolist(), price_b.tolist())):
            writer.writerow([i, repr(a), repr(b)])
