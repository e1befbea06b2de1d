# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels for per-view tracing, Sp-MART sweeps and the Siddon baseline.

Semantics match ``_kernels_py`` exactly; see that module for the cache layout.
"""

import numpy as np

from libc.math cimport fmod, floor, ceil, fabs, sqrt
from libc.stdint cimport int64_t, int32_t, uint32_t, uint8_t

NAME = "cython"


cdef inline double _norm_angle(double a) noexcept nogil:
    a = fmod(a, 360.0)
    if a < 0.0:
        a += 360.0
    if a >= 360.0:
        a -= 360.0
    return a


cdef inline double _rotate(double p, double theta) noexcept nogil:
    # theta is pre-normalised to [0, 360); for p in [0, 360) one exact
    # subtraction gives the same value as fmod
    cdef double a = p + theta
    if a >= 360.0:
        a -= 360.0
    if a < 0.0 or a >= 360.0:
        a = _norm_angle(a)
    return a


cdef inline int64_t _sector(double a, int64_t ng) noexcept nogil:
    cdef int64_t g = <int64_t>floor(a * ng / 360.0)
    if g < 0:
        g = 0
    if g > ng - 1:
        g = ng - 1
    return g


cdef int64_t _emit_line(const double[::1] phi, const uint32_t[::1] code,
                        int64_t start, int64_t stop, double theta, int64_t per_slice,
                        const int64_t[::1] heads, const int64_t[::1] counts,
                        int64_t[::1] stamp, int64_t tag,
                        int64_t[::1] out, int64_t pos,
                        const double* field, double* acc) noexcept nogil:
    cdef int64_t k, ring, base, ng, ga, gb, lo, hi, i, loc, g
    cdef uint32_t c
    cdef double a, b
    for k in range(start, stop - 1):
        c = code[k]
        if c == 0:
            continue
        ring = c & 0xFFFF
        base = <int64_t>(c >> 16) * per_slice + heads[ring]
        ng = counts[ring]
        a = _rotate(phi[k], theta)
        b = _rotate(phi[k + 1], theta)
        ga = _sector(a, ng)
        gb = _sector(b, ng)
        if fabs(a - b) <= 180.0:
            if ga <= gb:
                lo = ga
                hi = gb
            else:
                lo = gb
                hi = ga
            for loc in range(lo, hi + 1):
                g = base + loc
                if stamp[g] != tag:
                    stamp[g] = tag
                    out[pos] = g
                    pos += 1
                    if field != NULL:
                        acc[0] += field[g]
        else:
            # lo = head (larger local), hi = tail; walk through the ring seam
            if ga >= gb:
                lo = ga
                hi = gb
            else:
                lo = gb
                hi = ga
            for i in range(lo - ng, hi + 1):
                loc = i + ng if i < 0 else i
                g = base + loc
                if stamp[g] != tag:
                    stamp[g] = tag
                    out[pos] = g
                    pos += 1
                    if field != NULL:
                        acc[0] += field[g]
    return pos


cdef inline int64_t _line_bound(const uint32_t[::1] code, int64_t start, int64_t stop,
                                const int64_t[::1] counts) noexcept nogil:
    cdef int64_t k, total = 0
    for k in range(start, stop - 1):
        if code[k] != 0:
            total += counts[code[k] & 0xFFFF]
    return total


def trace_view(const double[::1] phi, const uint32_t[::1] code, const int64_t[::1] ptr,
               double theta, int64_t N, const int64_t[::1] heads, const int64_t[::1] counts,
               int64_t n_grids, int64_t capacity=0):
    cdef int64_t n_lines = ptr.shape[0] - 1
    cdef int64_t j, pos = 0, bound
    cdef int64_t[::1] stamp = np.zeros(n_grids, dtype=np.int64)
    theta = _norm_angle(theta)
    out_arr = np.empty(max(capacity, 1024), dtype=np.int64)
    cdef int64_t[::1] out = out_arr
    out_ptr_arr = np.zeros(n_lines + 1, dtype=np.int64)
    cdef int64_t[::1] out_ptr = out_ptr_arr
    for j in range(n_lines):
        bound = _line_bound(code, ptr[j], ptr[j + 1], counts)
        if bound > n_grids:
            bound = n_grids
        if pos + bound > out.shape[0]:
            out_arr = np.resize(out_arr, max(2 * out.shape[0], pos + bound))
            out = out_arr
        with nogil:
            pos = _emit_line(phi, code, ptr[j], ptr[j + 1], theta, N * N, heads, counts,
                             stamp, j + 1, out, pos, NULL, NULL)
        out_ptr[j + 1] = pos
    return out_ptr_arr, out_arr[:pos].copy()


def forward_view(const double[::1] field, const double[::1] phi, const uint32_t[::1] code,
                 const int64_t[::1] ptr, double theta, int64_t N,
                 const int64_t[::1] heads, const int64_t[::1] counts):
    cdef int64_t n_lines = ptr.shape[0] - 1
    cdef int64_t n_grids = field.shape[0]
    cdef int64_t j, t, n
    cdef double s
    cdef int64_t[::1] stamp = np.zeros(n_grids, dtype=np.int64)
    cdef int64_t[::1] buf = np.empty(n_grids, dtype=np.int64)
    proj_arr = np.zeros(n_lines, dtype=np.float64)
    cdef double[::1] proj = proj_arr
    theta = _norm_angle(theta)
    with nogil:
        for j in range(n_lines):
            s = 0.0
            _emit_line(phi, code, ptr[j], ptr[j + 1], theta, N * N, heads, counts,
                       stamp, j + 1, buf, 0, &field[0], &s)
            proj[j] = s
    return proj_arr


def mart_sweep(double[::1] field, const double[::1] phi, const uint32_t[::1] code,
               const int64_t[::1] ptr, const double[::1] thetas, const double[:, ::1] data,
               int64_t N, const int64_t[::1] heads, const int64_t[::1] counts,
               double beta, double p_floor, double factor_floor, bint skip_zero,
               uint8_t[::1] touched, bint mark=True):
    cdef int64_t n_lines = ptr.shape[0] - 1
    cdef int64_t n_views = thetas.shape[0]
    cdef int64_t n_grids = field.shape[0]
    cdef int64_t v, j, t, n, g, tag = 0
    cdef int64_t n_zero = 0, n_clamped = 0
    cdef uint8_t bit
    cdef double meas, pbar, ratio, fac, theta
    cdef int64_t[::1] stamp = np.zeros(n_grids, dtype=np.int64)
    cdef int64_t[::1] buf = np.empty(n_grids, dtype=np.int64)
    with nogil:
        for v in range(n_views):
            theta = _norm_angle(thetas[v])
            for j in range(n_lines):
                tag += 1
                pbar = 0.0
                n = _emit_line(phi, code, ptr[j], ptr[j + 1], theta, N * N, heads, counts,
                               stamp, tag, buf, 0, &field[0], &pbar)
                if n == 0:
                    continue
                meas = data[v, j]
                if meas == 0.0 and skip_zero:
                    n_zero += 1
                    continue
                ratio = meas / (pbar if pbar > p_floor else p_floor)
                fac = 1.0 - beta * (1.0 - ratio)
                if fac < factor_floor:
                    fac = factor_floor
                    n_clamped += 1
                for t in range(n):
                    g = buf[t]
                    field[g] = field[g] * fac
                if mark:
                    bit = 2 if meas == 0.0 else 1
                    for t in range(n):
                        touched[buf[t]] |= bit
    return n_zero, n_clamped


# ---------------------------------------------------------------------------
# Cartesian baseline
# ---------------------------------------------------------------------------

cdef struct CGrid:
    int64_t n[3]
    double o[3]
    double v[3]
    int ndim


cdef CGrid _cgrid(tuple cgrid):
    cdef CGrid g
    g.n[0], g.n[1], g.n[2] = cgrid[0], cgrid[1], cgrid[2]
    g.o[0], g.o[1], g.o[2] = cgrid[3], cgrid[4], cgrid[5]
    g.v[0], g.v[1], g.v[2] = cgrid[6], cgrid[7], cgrid[8]
    g.ndim = 3 if cgrid[9] else 2
    return g


cdef int64_t _siddon(const double* S, const double* E, CGrid* g,
                     int32_t* out_idx, double* out_len) noexcept nogil:
    cdef double d[3]
    cdef double a_min = 0.0, a_max = 1.0, a0, a1, length = 0.0
    cdef int64_t nxt[3]
    cdef int64_t step[3]
    cdef int64_t remaining[3]
    cdef int ax, best
    cdef double prev, a, cand, mid
    cdef int64_t i, flat, stride, count = 0
    for ax in range(g.ndim):
        d[ax] = E[ax] - S[ax]
        length += d[ax] * d[ax]
        if d[ax] != 0.0:
            a0 = (g.o[ax] - S[ax]) / d[ax]
            a1 = (g.o[ax] + g.n[ax] * g.v[ax] - S[ax]) / d[ax]
            if a0 > a1:
                a0, a1 = a1, a0
            if a0 > a_min:
                a_min = a0
            if a1 < a_max:
                a_max = a1
        elif not (g.o[ax] <= S[ax] <= g.o[ax] + g.n[ax] * g.v[ax]):
            return 0
    length = sqrt(length)
    if a_max <= a_min:
        return 0
    for ax in range(g.ndim):
        if d[ax] > 0.0:
            nxt[ax] = <int64_t>ceil((S[ax] + a_min * d[ax] - g.o[ax]) / g.v[ax])
            remaining[ax] = <int64_t>floor((S[ax] + a_max * d[ax] - g.o[ax]) / g.v[ax]) - nxt[ax] + 1
            step[ax] = 1
        elif d[ax] < 0.0:
            nxt[ax] = <int64_t>floor((S[ax] + a_min * d[ax] - g.o[ax]) / g.v[ax])
            remaining[ax] = nxt[ax] - <int64_t>ceil((S[ax] + a_max * d[ax] - g.o[ax]) / g.v[ax]) + 1
            step[ax] = -1
        else:
            remaining[ax] = 0
    prev = a_min
    while True:
        best = -1
        a = a_max
        for ax in range(g.ndim):
            if remaining[ax] > 0:
                cand = (g.o[ax] + nxt[ax] * g.v[ax] - S[ax]) / d[ax]
                if best < 0 or cand < a:
                    a = cand
                    best = ax
        if best >= 0:
            nxt[best] += step[best]
            remaining[best] -= 1
        if a > prev:
            mid = 0.5 * (a + prev)
            flat = 0
            stride = 1
            for ax in range(g.ndim):
                i = <int64_t>floor((S[ax] + mid * d[ax] - g.o[ax]) / g.v[ax])
                if i < 0:
                    i = 0
                if i > g.n[ax] - 1:
                    i = g.n[ax] - 1
                flat += i * stride
                stride *= g.n[ax]
            out_idx[count] = <int32_t>flat
            out_len[count] = (a - prev) * length
            count += 1
            prev = a
        if best < 0:
            break
    return count


cdef inline int64_t _siddon_cap(CGrid* g) noexcept nogil:
    return g.n[0] + g.n[1] + g.n[2] + 4


def siddon_line(S, E, tuple cgrid):
    cdef CGrid g = _cgrid(cgrid)
    cdef double s[3]
    cdef double e[3]
    for ax in range(3):
        s[ax] = S[ax] if ax < len(S) else 0.0
        e[ax] = E[ax] if ax < len(E) else 0.0
    idx_arr = np.empty(_siddon_cap(&g), dtype=np.int32)
    len_arr = np.empty(_siddon_cap(&g), dtype=np.float64)
    cdef int32_t[::1] idx = idx_arr
    cdef double[::1] lens = len_arr
    cdef int64_t n = _siddon(s, e, &g, &idx[0], &lens[0])
    return idx_arr[:n].tolist(), len_arr[:n].tolist()


def siddon_view(const double[::1] S, const double[:, ::1] Ds, tuple cgrid):
    cdef CGrid g = _cgrid(cgrid)
    cdef int64_t n_lines = Ds.shape[0], j, n, pos = 0, t
    cdef int64_t cap = _siddon_cap(&g)
    ptr_arr = np.zeros(n_lines + 1, dtype=np.int64)
    cdef int64_t[::1] ptr = ptr_arr
    idx_arr = np.empty(n_lines * cap, dtype=np.int32)
    tmp_arr = np.empty(n_lines * cap, dtype=np.float64)
    cdef int32_t[::1] idx = idx_arr
    cdef double[::1] tmp = tmp_arr
    with nogil:
        for j in range(n_lines):
            n = _siddon(&S[0], &Ds[j, 0], &g, &idx[pos], &tmp[pos])
            pos += n
            ptr[j + 1] = pos
    return ptr_arr, idx_arr[:pos].copy(), tmp_arr[:pos].astype(np.float32)


cdef inline int64_t _weighted_update(double[::1] field, const int32_t* idx, const double* w,
                                     int64_t n, double meas, double beta, double p_floor,
                                     double factor_floor, uint8_t[::1] touched,
                                     bint mark) noexcept nogil:
    cdef int64_t t, g
    cdef double pbar = 0.0, wmax = 0.0, ratio, fac
    cdef int64_t clamped = 0
    cdef uint8_t bit = 2 if meas == 0.0 else 1
    for t in range(n):
        pbar = pbar + w[t] * field[idx[t]]
        if w[t] > wmax:
            wmax = w[t]
    ratio = meas / (pbar if pbar > p_floor else p_floor)
    for t in range(n):
        fac = 1.0 - beta * (w[t] / wmax) * (1.0 - ratio)
        if fac < factor_floor:
            fac = factor_floor
            clamped = 1
        g = idx[t]
        field[g] = field[g] * fac
        if mark:
            touched[g] |= bit
    return clamped


def cart_sweep_stored(double[::1] field, const int64_t[::1] ptr, const int32_t[::1] idx,
                      const float[::1] lens, const double[:, ::1] data, double beta,
                      double p_floor, double factor_floor, bint skip_zero,
                      uint8_t[::1] touched, bint mark=True):
    cdef int64_t n_views = data.shape[0], n_lines = data.shape[1]
    cdef int64_t v, j, r, a, b, t
    cdef int64_t n_zero = 0, n_clamped = 0
    cdef double meas
    cdef int64_t longest = 1
    for r in range(n_views * n_lines):
        if ptr[r + 1] - ptr[r] > longest:
            longest = ptr[r + 1] - ptr[r]
    cdef double[::1] w = np.empty(longest, dtype=np.float64)
    with nogil:
        for v in range(n_views):
            for j in range(n_lines):
                r = v * n_lines + j
                a = ptr[r]
                b = ptr[r + 1]
                if a == b:
                    continue
                meas = data[v, j]
                if meas == 0.0 and skip_zero:
                    n_zero += 1
                    continue
                for t in range(b - a):
                    w[t] = lens[a + t]
                n_clamped += _weighted_update(field, &idx[a], &w[0], b - a, meas, beta,
                                              p_floor, factor_floor, touched, mark)
    return n_zero, n_clamped


def cart_sweep_onthefly(double[::1] field, const double[:, ::1] sources,
                        const double[:, :, ::1] dets, tuple cgrid, const double[:, ::1] data,
                        double beta, double p_floor, double factor_floor, bint skip_zero,
                        uint8_t[::1] touched, bint mark=True):
    cdef CGrid g = _cgrid(cgrid)
    cdef int64_t n_views = data.shape[0], n_lines = data.shape[1]
    cdef int64_t v, j, n
    cdef int64_t n_zero = 0, n_clamped = 0
    cdef double meas
    cdef int64_t cap = _siddon_cap(&g)
    cdef int32_t[::1] idx = np.empty(cap, dtype=np.int32)
    cdef double[::1] w = np.empty(cap, dtype=np.float64)
    with nogil:
        for v in range(n_views):
            for j in range(n_lines):
                n = _siddon(&sources[v, 0], &dets[v, j, 0], &g, &idx[0], &w[0])
                if n == 0:
                    continue
                meas = data[v, j]
                if meas == 0.0 and skip_zero:
                    n_zero += 1
                    continue
                n_clamped += _weighted_update(field, &idx[0], &w[0], n, meas, beta,
                                              p_floor, factor_floor, touched, mark)
    return n_zero, n_clamped
