# cython: boundscheck=False, wraparound=False, cdivision=True
# cython: language_level=3
"""Compiled episode kernels.

Mirrors ``_py.py`` exactly: same rule encodings, same probability formulas,
same draw discipline, and the same Philox4x64-10 per-trial streams (the block
function below reproduces numpy's Philox bit for bit; the test suite checks
this).  Loops run without the GIL so the Monte Carlo runner can use real
thread parallelism.
"""

import numpy as np

from libc.math cimport INFINITY, NAN, fabs
from libc.stdint cimport int64_t, uint8_t, uint64_t

cdef extern from *:
    """
    #include <stdint.h>
    #define DEVLAB_PHILOX_M0 0xD2E7470EE14C6C93ULL
    #define DEVLAB_PHILOX_M1 0xCA5A826395121157ULL
    #define DEVLAB_PHILOX_W0 0x9E3779B97F4A7C15ULL
    #define DEVLAB_PHILOX_W1 0xBB67AE8584CAA73BULL
    static inline uint64_t devlab_mulhi64(uint64_t a, uint64_t b) {
        return (uint64_t)(((__uint128_t)a * (__uint128_t)b) >> 64);
    }
    """
    uint64_t DEVLAB_PHILOX_M0
    uint64_t DEVLAB_PHILOX_M1
    uint64_t DEVLAB_PHILOX_W0
    uint64_t DEVLAB_PHILOX_W1
    uint64_t devlab_mulhi64(uint64_t a, uint64_t b) nogil


cdef struct PhiloxStream:
    uint64_t key0
    uint64_t key1
    uint64_t counter
    uint64_t buf[4]
    int pos


cdef inline void ph_init(PhiloxStream* st, uint64_t seed, uint64_t trial) noexcept nogil:
    st.key0 = seed
    st.key1 = trial
    st.counter = 0
    st.pos = 4


cdef inline void ph_block(PhiloxStream* st) noexcept nogil:
    cdef uint64_t c0 = st.counter, c1 = 0, c2 = 0, c3 = 0
    cdef uint64_t k0 = st.key0, k1 = st.key1
    cdef uint64_t hi0, lo0, hi1, lo1, t0, t1, t2, t3
    cdef int r
    for r in range(10):
        hi0 = devlab_mulhi64(DEVLAB_PHILOX_M0, c0)
        lo0 = DEVLAB_PHILOX_M0 * c0
        hi1 = devlab_mulhi64(DEVLAB_PHILOX_M1, c2)
        lo1 = DEVLAB_PHILOX_M1 * c2
        t0 = hi1 ^ c1 ^ k0
        t1 = lo1
        t2 = hi0 ^ c3 ^ k1
        t3 = lo0
        c0 = t0
        c1 = t1
        c2 = t2
        c3 = t3
        k0 = k0 + DEVLAB_PHILOX_W0
        k1 = k1 + DEVLAB_PHILOX_W1
    st.buf[0] = c0
    st.buf[1] = c1
    st.buf[2] = c2
    st.buf[3] = c3


cdef inline double ph_next(PhiloxStream* st) noexcept nogil:
    # numpy's uint64 -> double mapping: (u >> 11) * 2^-53.
    cdef double v
    if st.pos == 4:
        st.counter += 1
        ph_block(st)
        st.pos = 0
    v = <double>(st.buf[st.pos] >> 11) * (1.0 / 9007199254740992.0)
    st.pos += 1
    return v


def philox_block(seed, trial, block_index):
    """Uniforms of one counter block of a keyed stream (test hook for numpy
    equivalence); block_index=1 is the first block a fresh stream emits."""
    cdef PhiloxStream st
    ph_init(&st, <uint64_t>seed, <uint64_t>trial)
    st.counter = <uint64_t>block_index - 1  # ph_next pre-increments
    out = np.empty(4)
    cdef double[::1] view = out
    cdef int i
    for i in range(4):
        view[i] = ph_next(&st)
    return out


def adj_batch(double mu, long horizon, rules, seed, trial_start, n_trials):
    """See _py.adj_batch; identical contract and outputs."""
    cdef int kind_a = rules[0][0]
    cdef double x_a = rules[0][1]
    cdef int kind_b = rules[1][0]
    cdef double x_b = rules[1][1]
    cdef uint64_t seed_u = <uint64_t>seed
    cdef long t0 = trial_start
    cdef long nt = n_trials

    rejected = np.zeros(nt, dtype=np.uint8)
    reject_period = np.zeros(nt, dtype=np.int64)
    wsum_prefix = np.zeros(nt)
    wsum_full = np.zeros(nt)
    cdef uint8_t[::1] rej = rejected
    cdef int64_t[::1] rp = reject_period
    cdef double[::1] wp = wsum_prefix
    cdef double[::1] wf = wsum_full

    cdef PhiloxStream st
    cdef long t, n, m
    cdef int kind, prev, bit, is_rej
    cdef double p, u, x, term, w_full, w_pre

    with nogil:
        for t in range(nt):
            ph_init(&st, seed_u, <uint64_t>(t0 + t))
            prev = 0
            is_rej = 0
            w_full = 0.0
            w_pre = 0.0
            for n in range(1, horizon + 1):
                if n & 1:
                    kind = kind_a
                    x = x_a
                else:
                    kind = kind_b
                    x = x_b
                m = (n + 1) >> 1
                if kind == 0:
                    p = mu / n
                elif kind == 1 or kind == 2:
                    p = x
                elif kind == 3:
                    p = x if m == 1 else mu / n
                else:
                    p = x + (1.0 - x) * (mu / n)
                if p <= 0.0:
                    bit = 0
                elif p >= 1.0:
                    bit = 1
                else:
                    u = ph_next(&st)
                    bit = 1 if u >= 1.0 - p else 0
                if n & 1:
                    prev = bit
                    if bit:
                        term = mu / (<double>n + 1.0)
                        w_full += term
                        if not is_rej:
                            w_pre += term
                else:
                    if (not is_rej) and prev == 1 and bit == 1:
                        is_rej = 1
                        rp[t] = n
            rej[t] = <uint8_t>is_rej
            wf[t] = w_full
            wp[t] = w_pre if is_rej else w_full
    return rejected, reject_period, wsum_prefix, wsum_full


cdef inline double rw_prob(int kind, double x1, double x2, long m, long s) noexcept nogil:
    if kind == 0:
        return 0.5
    elif kind == 1 or kind == 2:
        return x1
    elif kind == 3:
        return x1 if m == 1 else 0.5
    elif kind == 4:
        return x1 + (1.0 - x1) * 0.5
    elif kind == 5:
        if s < x1 or s == 1:
            return 1.0
        if s > x2:
            return 0.0
        return 0.5
    else:
        return 1.0 if s == 1 else 0.5


def rw_scan(long start, long horizon, rules, seed, trial_start, n_trials):
    """See _py.rw_scan; identical contract and outputs."""
    cdef int kind_a = rules[0][0]
    cdef double a1 = rules[0][1], a2 = rules[0][2]
    cdef int kind_b = rules[1][0]
    cdef double b1 = rules[1][1], b2 = rules[1][2]
    cdef uint64_t seed_u = <uint64_t>seed
    cdef long t0 = trial_start
    cdef long nt = n_trials

    hit_time = np.empty(nt, dtype=np.int64)
    cdef int64_t[::1] ht = hit_time

    cdef PhiloxStream st
    cdef long t, n, m, s
    cdef int kind, mv
    cdef double p, u, x1, x2

    with nogil:
        for t in range(nt):
            ph_init(&st, seed_u, <uint64_t>(t0 + t))
            s = start
            ht[t] = -1
            for n in range(1, horizon + 1):
                if n & 1:
                    kind = kind_a
                    x1 = a1
                    x2 = a2
                else:
                    kind = kind_b
                    x1 = b1
                    x2 = b2
                m = (n + 1) >> 1
                p = rw_prob(kind, x1, x2, m, s)
                if p <= 0.0:
                    mv = -1
                elif p >= 1.0:
                    mv = 1
                else:
                    u = ph_next(&st)
                    mv = 1 if u >= 1.0 - p else -1
                s += mv
                if s == 0:
                    ht[t] = n
                    break
    return hit_time


def rw_stats_batch(long start, long horizon, rules, seed, trial_indices, long n0, tables):
    """See _py.rw_stats_batch; identical contract and outputs."""
    cdef int kind_a = rules[0][0]
    cdef double a1 = rules[0][1], a2 = rules[0][2]
    cdef int kind_b = rules[1][0]
    cdef double b1 = rules[1][1], b2 = rules[1][2]
    cdef uint64_t seed_u = <uint64_t>seed

    idx_arr = np.ascontiguousarray(trial_indices, dtype=np.int64)
    cdef int64_t[::1] idx = idx_arr
    cdef long n_out = idx_arr.shape[0]

    w1_arr = np.ascontiguousarray(tables[0])
    w2_arr = np.ascontiguousarray(tables[1])
    w3_arr = np.ascontiguousarray(tables[2])
    w4_arr = np.ascontiguousarray(tables[3])
    cdef double[::1] w1 = w1_arr
    cdef double[::1] w2 = w2_arr
    cdef double[::1] w3 = w3_arr
    cdef double[::1] w4 = w4_arr

    hit_time = np.empty(n_out, dtype=np.int64)
    s1a_arr = np.full(n_out, np.nan)
    s1b_arr = np.full(n_out, np.nan)
    s2a_arr = np.full(n_out, np.nan)
    s2b_arr = np.full(n_out, np.nan)
    todd_arr = np.full(n_out, np.nan)
    teven_arr = np.full(n_out, np.nan)
    cdef int64_t[::1] ht = hit_time
    cdef double[::1] o_s1a = s1a_arr
    cdef double[::1] o_s1b = s1b_arr
    cdef double[::1] o_s2a = s2a_arr
    cdef double[::1] o_s2b = s2b_arr
    cdef double[::1] o_todd = todd_arr
    cdef double[::1] o_teven = teven_arr

    cdef PhiloxStream st
    cdef long j, n, m, s, s_prev, xa, xb
    cdef int kind, mv, hit
    cdef double p, u, x1, x2, val
    cdef double sa, sb, s1a, s1b, s2a, s2b, t_odd, t_even

    with nogil:
        for j in range(n_out):
            ph_init(&st, seed_u, <uint64_t>idx[j])
            s = start
            hit = 0
            xa = 0
            xb = 0
            sa = 0.0
            sb = 0.0
            s1a = -INFINITY
            s1b = -INFINITY
            s2a = -INFINITY
            s2b = -INFINITY
            t_odd = 0.0
            t_even = 0.0
            for n in range(1, horizon + 1):
                if n & 1:
                    kind = kind_a
                    x1 = a1
                    x2 = a2
                else:
                    kind = kind_b
                    x1 = b1
                    x2 = b2
                m = (n + 1) >> 1
                p = rw_prob(kind, x1, x2, m, s)
                if p <= 0.0:
                    mv = -1
                elif p >= 1.0:
                    mv = 1
                else:
                    u = ph_next(&st)
                    mv = 1 if u >= 1.0 - p else -1
                s_prev = s
                s += mv
                if s == 0:
                    ht[j] = n
                    hit = 1
                    break
                if n & 1:
                    # player A's move number m: LIL + series stats, odd drift term n-1 = m-1
                    xa += mv
                    if m >= n0:
                        val = xa * w1[m]
                        if val > s1a:
                            s1a = val
                    sa += mv * w2[m]
                    if m >= n0:
                        val = fabs(sa)
                        if val > s2a:
                            s2a = val
                    if m >= 2:
                        t_odd += (s * s - s_prev * s_prev) * w3[m - 1]
                else:
                    xb += mv
                    if m >= n0:
                        val = xb * w1[m]
                        if val > s1b:
                            s1b = val
                    sb += mv * w2[m]
                    if m >= n0:
                        val = fabs(sb)
                        if val > s2b:
                            s2b = val
                    if m >= 2:
                        t_even += (s * s - s_prev * s_prev) * w4[m]
            if not hit:
                ht[j] = -1
                o_s1a[j] = s1a
                o_s1b[j] = s1b
                o_s2a[j] = s2a
                o_s2b[j] = s2b
                o_todd[j] = t_odd
                o_teven[j] = t_even
    return hit_time, s1a_arr, s1b_arr, s2a_arr, s2b_arr, todd_arr, teven_arr
