"""Truncated discounted double series for ``E[P_A0 P_B0]``.

Every term of the series is bounded by ``d_A0 d_B0 q**max(j, p)`` where
``q`` is the largest of the per-stock ratios ``(1+g_m)/(1+k_m)`` and the
joint ratio ``E[(1+g_A)(1+g_B)] / ((1+k_A)(1+k_B))``.  Summing that bound
over the ``2m - 1`` index pairs with ``max(j, p) = m > H`` gives
:func:`tail_bound`.
"""

from __future__ import annotations

import math

import numpy as np

from ..core import (
    AnyPair,
    as_moment_inputs,
    covariance_exists,
    expected_price,
)
from ..errors import NonConvergent, TooLarge

DEFAULT_EPSILON = 1e-9
MAX_SERIES_TERMS = 4 * 10**8
_ROW_BLOCK = 512


def tail_ratio(m: AnyPair) -> float:
    mi = as_moment_inputs(m)
    a, b = mi.stock_a, mi.stock_b
    gamma_a = (1.0 + a.growth_mean) / (1.0 + a.discount_rate)
    gamma_b = (1.0 + b.growth_mean) / (1.0 + b.discount_rate)
    joint = (
        (1.0 + a.growth_mean) * (1.0 + b.growth_mean) + mi.growth_covariance
    ) / ((1.0 + a.discount_rate) * (1.0 + b.discount_rate))
    return max(gamma_a, gamma_b, joint)


def tail_bound(m: AnyPair, horizon: int) -> float:
    """Upper bound on ``|E[P_A0 P_B0] - truncated_price_product(m, horizon)|``."""
    mi = as_moment_inputs(m)
    q = tail_ratio(mi)
    if not q < 1.0:
        raise NonConvergent(f"dominant series ratio {q!r} >= 1")
    h = horizon
    scale = mi.stock_a.current_dividend * mi.stock_b.current_dividend
    q_next = q ** (h + 1)
    weighted = q_next * ((h + 1) - h * q) / (1.0 - q) ** 2
    return scale * (2.0 * weighted - q_next / (1.0 - q))


def auto_horizon(m: AnyPair, epsilon: float = DEFAULT_EPSILON) -> int:
    """Smallest horizon whose tail bound is below ``epsilon * P_A0 * P_B0``."""
    mi = as_moment_inputs(m)
    q = tail_ratio(mi)
    if not q < 1.0:
        raise NonConvergent(f"dominant series ratio {q!r} >= 1")
    target = epsilon * expected_price(mi.stock_a) * expected_price(mi.stock_b)
    scale = mi.stock_a.current_dividend * mi.stock_b.current_dividend
    # first guess ignores the polynomial factor; the bound decreases in H
    guess = math.log(target * (1.0 - q) ** 2 / (2.0 * scale)) / math.log(q)
    hi = max(1, math.ceil(guess))
    while tail_bound(mi, hi) > target:
        hi *= 2
    lo = 0
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if tail_bound(mi, mid) > target:
            lo = mid
        else:
            hi = mid
    return max(hi, 1)


def truncated_price_product(m: AnyPair, horizon: int) -> float:
    """``sum_{j,p <= H} E[d_Aj d_Bp] / ((1+k_A)^j (1+k_B)^p)``."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    mi = as_moment_inputs(m)
    if not covariance_exists(mi):
        raise NonConvergent("price product series diverges")
    if horizon * horizon > MAX_SERIES_TERMS:
        raise TooLarge(f"horizon {horizon} needs {horizon * horizon} terms (limit {MAX_SERIES_TERMS})")
    a, b = mi.stock_a, mi.stock_b
    # discounted E[d_Aj d_Bp] = d_A0 d_B0 J^min(j,p) gamma^|j-p|, where J is the joint
    # ratio while both dividends grow together and gamma the survivor's own ratio;
    # every factor is below 1, so nothing overflows however long the horizon
    joint = ((1.0 + a.growth_mean) * (1.0 + b.growth_mean) + mi.growth_covariance) / (
        (1.0 + a.discount_rate) * (1.0 + b.discount_rate)
    )
    gamma_a = (1.0 + a.growth_mean) / (1.0 + a.discount_rate)
    gamma_b = (1.0 + b.growth_mean) / (1.0 + b.discount_rate)
    scale = a.current_dividend * b.current_dividend
    steps = np.arange(1, horizon + 1)
    p = steps[None, :]
    total = 0.0
    # row blocks keep memory at O(block * H)
    with np.errstate(under="ignore"):
        for lo in range(0, horizon, _ROW_BLOCK):
            j = steps[lo : lo + _ROW_BLOCK, None]
            gap = (p - j).astype(float)
            tail = np.where(gap >= 0.0, gamma_b ** np.abs(gap), gamma_a ** np.abs(gap))
            terms = joint ** np.minimum(j, p).astype(float) * tail
            total += float(np.sum(terms))
    return scale * total


def truncated_price_means(m: AnyPair, horizon: int) -> tuple[float, float]:
    """Truncated single-stock sums ``sum_{j <= H} d0 ((1+g)/(1+k))^j``."""
    mi = as_moment_inputs(m)
    steps = np.arange(1, horizon + 1, dtype=float)
    out = []
    for s in (mi.stock_a, mi.stock_b):
        ratio = (1.0 + s.growth_mean) / (1.0 + s.discount_rate)
        out.append(float(s.current_dividend * np.sum(ratio**steps)))
    return out[0], out[1]
