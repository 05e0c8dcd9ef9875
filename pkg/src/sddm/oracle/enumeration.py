"""Brute-force expectation of dividend products over all growth paths."""

from __future__ import annotations

import itertools

import numpy as np

from ..core import JointGrowthModel
from ..errors import TooLarge

MAX_SEQUENCES = 10**7


def enumeration_size(m: JointGrowthModel, j: int, p: int, marginal_tail: bool = True) -> int:
    na, nb = m.stock_a.growth.n, m.stock_b.growth.n
    if not marginal_tail:
        return (na * nb) ** max(j, p)
    return (na * nb) ** min(j, p) * max(na, nb) ** abs(j - p)


def _all_sequences(n_symbols: int, length: int) -> np.ndarray:
    seqs = list(itertools.product(range(n_symbols), repeat=length))
    return np.array(seqs, dtype=np.intp).reshape(len(seqs), length)


def enumerate_dividend_product(
    m: JointGrowthModel,
    j: int,
    p: int,
    *,
    marginal_tail: bool = True,
    limit: int = MAX_SEQUENCES,
) -> float:
    """Exact ``E[d_Aj d_Bp]`` by listing every path.

    The first ``min(j, p)`` periods run over joint ``(c, d)`` cells with
    probability ``pi_cd``; the remaining ``|j - p|`` periods of the
    longer-lived dividend run over its marginal states.  With
    ``marginal_tail=False`` every period is enumerated over joint cells
    instead, which needs no marginalisation at all but is costlier.
    """
    if j < 1 or p < 1:
        raise ValueError("periods must be >= 1")
    size = enumeration_size(m, j, p, marginal_tail)
    if size > limit:
        raise TooLarge(f"{size} paths exceed the enumeration limit {limit}")

    ga = np.asarray(m.stock_a.growth.states)
    gb = np.asarray(m.stock_b.growth.states)
    pi = m.table.ravel()
    cell_a = np.repeat(1.0 + ga, len(gb))  # row-major (c, d) cells
    cell_b = np.tile(1.0 + gb, len(ga))
    scale = m.stock_a.current_dividend * m.stock_b.current_dividend

    if not marginal_tail:
        seqs = _all_sequences(len(pi), max(j, p))
        prob = np.prod(pi[seqs], axis=1)
        growth_a = np.prod(cell_a[seqs[:, :j]], axis=1)
        growth_b = np.prod(cell_b[seqs[:, :p]], axis=1)
        return float(scale * np.sum(prob * growth_a * growth_b))

    short = min(j, p)
    joint = _all_sequences(len(pi), short)
    head = np.prod(pi[joint], axis=1) * np.prod(cell_a[joint], axis=1) * np.prod(cell_b[joint], axis=1)

    if p >= j:
        tail_states, tail_probs = 1.0 + gb, np.asarray(m.stock_b.growth.probs)
    else:
        tail_states, tail_probs = 1.0 + ga, np.asarray(m.stock_a.growth.probs)
    rest = _all_sequences(len(tail_states), abs(j - p))
    tail = np.prod(tail_probs[rest], axis=1) * np.prod(tail_states[rest], axis=1)

    # every complete path = one head sequence followed by one tail sequence
    return float(scale * np.sum(np.multiply.outer(head, tail)))
