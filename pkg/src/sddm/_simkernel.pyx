# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled simulation kernel.

Same stream layout and floating-point operation order as
``sddm._simfallback``; the two must agree bit for bit.
"""

import numpy as np

from libc.stdint cimport uint64_t, int64_t

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef uint64_t PATH_GAMMA = 0xD1B54A32D192ED03ULL
cdef uint64_t M1 = 0xBF58476D1CE4E5B9ULL
cdef uint64_t M2 = 0x94D049BB133111EBULL
cdef double TO_UNIT = 1.0 / 9007199254740992.0


cdef inline uint64_t mix64(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * M1
    z = (z ^ (z >> 27)) * M2
    return z ^ (z >> 31)


def simulate_block(const double[::1] cum, const double[::1] fa, const double[::1] fb,
                   const double[::1] disc_a, const double[::1] disc_b,
                   double d0a, double d0b, seed, int64_t start, int64_t count,
                   bint antithetic):
    cdef uint64_t useed = <uint64_t>(seed & 0xFFFFFFFFFFFFFFFF)
    cdef double[::1] sa = np.zeros(count)
    cdef double[::1] sb = np.zeros(count)
    cdef Py_ssize_t ncell = cum.shape[0]
    cdef Py_ssize_t horizon = disc_a.shape[0]
    cdef uint64_t base, key
    cdef int64_t i, path, src
    cdef Py_ssize_t t, c, k
    cdef double u, da, db, acc_a, acc_b
    cdef bint flip
    with nogil:
        base = mix64(useed + GOLDEN)
        for i in range(count):
            path = start + i
            if antithetic:
                src = path - (path & 1)
                flip = (path & 1) != 0
            else:
                src = path
                flip = False
            key = mix64(base + (<uint64_t>src + 1) * PATH_GAMMA)
            da = d0a
            db = d0b
            acc_a = 0.0
            acc_b = 0.0
            for t in range(horizon):
                # the shifted value fits in 53 bits, so the signed conversion is exact
                u = <double><int64_t>(mix64(key + (<uint64_t>t + 1) * GOLDEN) >> 11) * TO_UNIT
                if flip:
                    u = 1.0 - u
                # branchless: index of the first cum entry above u
                c = 0
                for k in range(ncell - 1):
                    c += cum[k] <= u
                da = da * fa[c]
                db = db * fb[c]
                acc_a = acc_a + da * disc_a[t]
                acc_b = acc_b + db * disc_b[t]
            sa[i] = acc_a
            sb[i] = acc_b
    return np.asarray(sa), np.asarray(sb)
