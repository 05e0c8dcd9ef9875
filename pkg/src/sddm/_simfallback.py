"""Pure-numpy simulation kernel.

Mirrors ``_simkernel.pyx`` operation for operation so that both produce
bit-identical prices.  Vectorised across paths, sequential over periods.
"""

import numpy as np

_U64 = np.uint64
GOLDEN = 0x9E3779B97F4A7C15
PATH_GAMMA = 0xD1B54A32D192ED03
_MASK = (1 << 64) - 1
_TO_UNIT = 1.0 / 9007199254740992.0  # 2**-53


def mix64(z):
    """SplitMix64 finaliser on a uint64 array (wrapping arithmetic)."""
    z = z ^ (z >> _U64(30))
    z = z * _U64(0xBF58476D1CE4E5B9)
    z = z ^ (z >> _U64(27))
    z = z * _U64(0x94D049BB133111EB)
    return z ^ (z >> _U64(31))


def path_keys(seed, paths):
    """Stream key of every path index in ``paths``."""
    base = mix64(np.array([(seed + GOLDEN) & _MASK], dtype=np.uint64))[0]
    paths = np.asarray(paths, dtype=np.uint64)
    return mix64(base + (paths + _U64(1)) * _U64(PATH_GAMMA))


def uniforms(keys, step):
    z = mix64(keys + _U64(((step + 1) * GOLDEN) & _MASK))
    return (z >> _U64(11)).astype(np.float64) * _TO_UNIT


def simulate_block(cum, fa, fb, disc_a, disc_b, d0a, d0b, seed, start, count, antithetic):
    idx = np.arange(start, start + count, dtype=np.int64)
    if antithetic:
        src = idx - (idx & 1)
        flip = (idx & 1).astype(bool)
    else:
        src = idx
        flip = None
    keys = path_keys(seed & _MASK, src)
    da = np.full(count, d0a, dtype=np.float64)
    db = np.full(count, d0b, dtype=np.float64)
    sa = np.zeros(count)
    sb = np.zeros(count)
    for t in range(len(disc_a)):
        u = uniforms(keys, t)
        if flip is not None:
            u[flip] = 1.0 - u[flip]
        cell = np.searchsorted(cum, u, side="right")
        da = da * fa[cell]
        db = db * fb[cell]
        sa = sa + da * disc_a[t]
        sb = sb + db * disc_b[t]
    return sa, sb
