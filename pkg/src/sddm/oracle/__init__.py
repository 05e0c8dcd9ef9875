"""Independent verification engines for the closed forms in :mod:`sddm.core`.

* :mod:`.enumeration` sums over every growth path explicitly;
* :mod:`.series` truncates the discounted double series, with an a-priori
  geometric bound on the neglected tail;
* :mod:`.simulation` runs the dividend recursion forward under a
  counter-based RNG (compiled kernel with numpy fallback).
"""

from .enumeration import enumerate_dividend_product, enumeration_size
from .series import (
    auto_horizon,
    tail_bound,
    tail_ratio,
    truncated_price_means,
    truncated_price_product,
)
from .simulation import (
    KERNEL,
    MCPriceMoments,
    MomentEstimate,
    SimConfig,
    available_kernels,
    mc_price_moments,
    simulate_joint_paths,
    write_paths_csv,
)

__all__ = [
    "KERNEL",
    "MCPriceMoments",
    "MomentEstimate",
    "SimConfig",
    "auto_horizon",
    "available_kernels",
    "enumerate_dividend_product",
    "enumeration_size",
    "mc_price_moments",
    "simulate_joint_paths",
    "tail_bound",
    "tail_ratio",
    "truncated_price_means",
    "truncated_price_product",
    "write_paths_csv",
]
