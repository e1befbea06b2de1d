"""Pure-Python kernels; same signatures and results as the compiled ``_kernels``.

Cache layout shared by both backends: for line ``j`` the points
``ptr[j]:ptr[j+1]`` carry azimuths ``phi`` (degrees, view 0) and ``code[k]``
describes the chord from point ``k`` to ``k + 1`` as ``(slice << 16) | ring``;
code 0 marks "no chord" (last point of a line, grazing contacts).
"""

import math

import numpy as np

NAME = "python"


def _norm_angle(a):
    a = math.fmod(a, 360.0)
    if a < 0.0:
        a += 360.0
    if a >= 360.0:
        a -= 360.0
    return a


def _rotate(p, theta):
    # theta already in [0, 360); exact for p in [0, 360)
    a = p + theta
    if a >= 360.0:
        a -= 360.0
    if a < 0.0 or a >= 360.0:
        a = _norm_angle(a)
    return a


def _emit_line(phi, code, start, stop, theta, per_slice, heads, counts, stamp, tag, out):
    for k in range(start, stop - 1):
        c = int(code[k])
        if c == 0:
            continue
        ring = c & 0xFFFF
        base = (c >> 16) * per_slice + int(heads[ring])
        ng = int(counts[ring])
        a = _rotate(float(phi[k]), theta)
        b = _rotate(float(phi[k + 1]), theta)
        ga = min(max(int(math.floor(a * ng / 360.0)), 0), ng - 1)
        gb = min(max(int(math.floor(b * ng / 360.0)), 0), ng - 1)
        if abs(a - b) <= 180.0:
            lo, hi = (ga, gb) if ga <= gb else (gb, ga)
            locs = range(lo, hi + 1)
        else:
            head, tail = (ga, gb) if ga >= gb else (gb, ga)
            # from the head's negative index up through the tail's positive index
            locs = (i % ng for i in range(head - ng, tail + 1))
        for loc in locs:
            g = base + loc
            if stamp[g] != tag:
                stamp[g] = tag
                out.append(g)


def trace_view(phi, code, ptr, theta, N, heads, counts, n_grids, capacity=0):
    n_lines = len(ptr) - 1
    stamp = np.zeros(n_grids, dtype=np.int64)
    theta = _norm_angle(float(theta))
    out = []
    out_ptr = np.zeros(n_lines + 1, dtype=np.int64)
    for j in range(n_lines):
        _emit_line(phi, code, int(ptr[j]), int(ptr[j + 1]), theta, N * N,
                   heads, counts, stamp, j + 1, out)
        out_ptr[j + 1] = len(out)
    return out_ptr, np.asarray(out, dtype=np.int64)


def forward_view(field, phi, code, ptr, theta, N, heads, counts):
    n_lines = len(ptr) - 1
    stamp = np.zeros(field.shape[0], dtype=np.int64)
    proj = np.zeros(n_lines, dtype=np.float64)
    theta = _norm_angle(float(theta))
    for j in range(n_lines):
        out = []
        _emit_line(phi, code, int(ptr[j]), int(ptr[j + 1]), theta, N * N,
                   heads, counts, stamp, j + 1, out)
        s = 0.0
        for g in out:
            s += field[g]
        proj[j] = s
    return proj


def _mart_factor(pbar, meas, beta, p_floor, factor_floor):
    ratio = meas / (pbar if pbar > p_floor else p_floor)
    fac = 1.0 - beta * (1.0 - ratio)
    if fac < factor_floor:
        return factor_floor, True
    return fac, False


def mart_sweep(field, phi, code, ptr, thetas, data, N, heads, counts, beta, p_floor,
               factor_floor, skip_zero, touched, mark=True):
    """One row-action pass over every view and line, updating ``field`` in place.

    When ``mark`` is set, cells of updated lines get bit 1 of ``touched`` and
    cells of zero-measurement lines get bit 2.
    Returns ``(n_zero_lines, n_clamped)``.
    """
    n_lines = len(ptr) - 1
    stamp = np.zeros(field.shape[0], dtype=np.int64)
    tag = 0
    n_zero = n_clamped = 0
    for v in range(len(thetas)):
        theta = _norm_angle(float(thetas[v]))
        for j in range(n_lines):
            tag += 1
            out = []
            _emit_line(phi, code, int(ptr[j]), int(ptr[j + 1]), theta, N * N,
                       heads, counts, stamp, tag, out)
            if not out:
                continue
            meas = float(data[v, j])
            if meas == 0.0 and skip_zero:
                n_zero += 1
                continue
            pbar = 0.0
            for g in out:
                pbar += field[g]
            fac, clamped = _mart_factor(pbar, meas, beta, p_floor, factor_floor)
            n_clamped += clamped
            bit = 2 if meas == 0.0 else 1
            for g in out:
                field[g] *= fac
                if mark:
                    touched[g] |= bit
    return n_zero, n_clamped


# ---------------------------------------------------------------------------
# Cartesian baseline: standard Siddon traversal and weighted Sp-MART sweeps.
# ``cgrid`` is (nx, ny, nz, x0, y0, z0, vx, vy, vz, is3d); voxel (i, j, k)
# has flat index (k * ny + j) * nx + i.
# ---------------------------------------------------------------------------

def _axis_plane_alphas(s, d, o, n, v, a_min, a_max):
    if d == 0.0:
        return []
    if d > 0.0:
        i0 = math.ceil((s + a_min * d - o) / v)
        i1 = math.floor((s + a_max * d - o) / v)
        rng = range(i0, i1 + 1)
    else:
        i0 = math.ceil((s + a_max * d - o) / v)
        i1 = math.floor((s + a_min * d - o) / v)
        rng = range(i1, i0 - 1, -1)
    return [(o + i * v - s) / d for i in rng]


def siddon_line(S, E, cgrid):
    """Voxels crossed by segment S->E with their chord lengths."""
    nx, ny, nz, x0, y0, z0, vx, vy, vz, is3d = cgrid
    axes = [(S[0], E[0] - S[0], x0, nx, vx), (S[1], E[1] - S[1], y0, ny, vy)]
    if is3d:
        axes.append((S[2], E[2] - S[2], z0, nz, vz))
    length = math.sqrt(sum(d * d for _, d, _, _, _ in axes))
    a_min, a_max = 0.0, 1.0
    for s, d, o, n, v in axes:
        if d != 0.0:
            a0 = (o - s) / d
            a1 = (o + n * v - s) / d
            a_min = max(a_min, min(a0, a1))
            a_max = min(a_max, max(a0, a1))
        elif not (o <= s <= o + n * v):
            return [], []
    if a_max <= a_min:
        return [], []
    alphas = []
    for s, d, o, n, v in axes:
        alphas.extend(_axis_plane_alphas(s, d, o, n, v, a_min, a_max))
    alphas.sort()
    alphas.append(a_max)
    idx, lens = [], []
    prev = a_min
    for a in alphas:
        if a <= prev:
            continue
        mid = 0.5 * (a + prev)
        flat = 0
        stride = 1
        for s, d, o, n, v in axes:
            i = int(math.floor((s + mid * d - o) / v))
            i = min(max(i, 0), n - 1)
            flat += i * stride
            stride *= n
        idx.append(flat)
        lens.append((a - prev) * length)
        prev = a
    return idx, lens


def siddon_view(S, Ds, cgrid):
    ptr = np.zeros(len(Ds) + 1, dtype=np.int64)
    all_idx, all_len = [], []
    for j in range(len(Ds)):
        idx, lens = siddon_line(S, Ds[j], cgrid)
        all_idx.extend(idx)
        all_len.extend(lens)
        ptr[j + 1] = len(all_idx)
    return ptr, np.asarray(all_idx, dtype=np.int32), np.asarray(all_len, dtype=np.float32)


def _weighted_update(field, idx, lens, meas, beta, p_floor, factor_floor, touched, mark):
    pbar = 0.0
    wmax = 0.0
    for g, w in zip(idx, lens):
        pbar += w * field[g]
        if w > wmax:
            wmax = w
    ratio = meas / (pbar if pbar > p_floor else p_floor)
    clamped = 0
    for g, w in zip(idx, lens):
        fac = 1.0 - beta * (w / wmax) * (1.0 - ratio)
        if fac < factor_floor:
            fac = factor_floor
            clamped = 1
        field[g] *= fac
        if mark:
            touched[g] |= 2 if meas == 0.0 else 1
    return clamped


def cart_sweep_stored(field, ptr, idx, lens, data, beta, p_floor, factor_floor, skip_zero,
                      touched, mark=True):
    n_views, n_lines = data.shape
    n_zero = n_clamped = 0
    for v in range(n_views):
        for j in range(n_lines):
            r = v * n_lines + j
            a, b = int(ptr[r]), int(ptr[r + 1])
            if a == b:
                continue
            meas = float(data[v, j])
            if meas == 0.0 and skip_zero:
                n_zero += 1
                continue
            n_clamped += _weighted_update(field, idx[a:b].tolist(), lens[a:b].tolist(), meas,
                                          beta, p_floor, factor_floor, touched, mark)
    return n_zero, n_clamped


def cart_sweep_onthefly(field, sources, dets, cgrid, data, beta, p_floor, factor_floor,
                        skip_zero, touched, mark=True):
    n_views, n_lines = data.shape
    n_zero = n_clamped = 0
    for v in range(n_views):
        for j in range(n_lines):
            idx, lens = siddon_line(sources[v], dets[v, j], cgrid)
            if not idx:
                continue
            meas = float(data[v, j])
            if meas == 0.0 and skip_zero:
                n_zero += 1
                continue
            n_clamped += _weighted_update(field, idx, lens, meas, beta, p_floor,
                                          factor_floor, touched, mark)
    return n_zero, n_clamped
