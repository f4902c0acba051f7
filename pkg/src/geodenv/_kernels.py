"""Numba kernels for the hot loops.

Everything here is deterministic given its inputs; randomness is always drawn
outside (numpy Philox streams) and passed in as arrays, so the kernels stay
pure and the draw order stays independent of chunking and worker count.

Index conventions: dynamic-programming grids are indexed [i, j] with i along
the first lattice axis.  Recursions that scan a row in place rely on the fact
that cell (i, j) reads row i-1 at column j and row i at column j-1 only.
"""

from __future__ import annotations

import numpy as np
from numba import njit

# ---------------------------------------------------------------------------
# Directed last-passage DP (maximal up-right path sums)
# ---------------------------------------------------------------------------


@njit(cache=True)
def lpp_passage_field(w):
    """T[i,j] = w[i,j] + max(T[i-1,j], T[i,j-1]), missing neighbours ignored."""
    na, nb = w.shape
    T = np.empty((na, nb), dtype=np.float64)
    for i in range(na):
        for j in range(nb):
            if i > 0 and j > 0:
                up = T[i - 1, j]
                left = T[i, j - 1]
                best = up if up > left else left
            elif i > 0:
                best = T[i - 1, j]
            elif j > 0:
                best = T[i, j - 1]
            else:
                best = 0.0
            T[i, j] = best + w[i, j]
    return T


@njit(cache=True)
def lpp_backtrack(T):
    """Greedy backtrack from the NE corner to (0,0).

    Ties between the two predecessors are resolved toward the (0,1)
    predecessor, i.e. (i, j-1); exact float ties have probability zero for
    continuous weights and are counted for diagnostics.

    Returns (path, ties): path is an (n,2) int64 array ordered from (0,0).
    """
    na, nb = T.shape
    n = na + nb - 1
    path = np.empty((n, 2), dtype=np.int64)
    ties = 0
    i = na - 1
    j = nb - 1
    for k in range(n - 1, -1, -1):
        path[k, 0] = i
        path[k, 1] = j
        if i > 0 and j > 0:
            up = T[i - 1, j]
            left = T[i, j - 1]
            if up == left:
                ties += 1
            if up > left:
                i -= 1
            else:
                j -= 1
        elif i > 0:
            i -= 1
        elif j > 0:
            j -= 1
    return path, ties


# ---------------------------------------------------------------------------
# Busemann box fill (min-recursion toward the south-west)
# ---------------------------------------------------------------------------


@njit(cache=True)
def busemann_fill(G, xi):
    """Fill G interior given NE boundary values already placed.

    G[i,j] = min(G[i+1,j], G[i,j+1]) - xi[i,j] for i < na-1, j < nb-1.
    """
    na, nb = G.shape
    for i in range(na - 2, -1, -1):
        for j in range(nb - 2, -1, -1):
            right = G[i + 1, j]
            up = G[i, j + 1]
            m = right if right < up else up
            G[i, j] = m - xi[i, j]


# ---------------------------------------------------------------------------
# Stationary-boundary growth field, rolling row + predecessor bitmap.
#
# H(i,j) = max(H(i-1,j), H(i,j-1)) + w(i,j); H(i,0), H(0,j) are boundary
# random walks.  Bit 1 at (i,j) means the argmax predecessor is (i-1,j);
# ties prefer (i,j-1) and are counted.
# ---------------------------------------------------------------------------


@njit(cache=True)
def h_row_update(row, w, rowbits):
    """Advance one row in place.

    On entry ``row`` holds row i-1 and ``row[0]`` must already hold H(i,0);
    ``w[j]`` for j >= 1 are the additive weights of row i.  Writes packed
    predecessor bits for j >= 1 into ``rowbits`` and returns the tie count.
    """
    nb = row.shape[0]
    ties = 0
    for j in range(1, nb):
        up = row[j]
        left = row[j - 1]
        if up == left:
            ties += 1
        if up > left:
            rowbits[j >> 3] |= np.uint8(1 << (j & 7))
            row[j] = up + w[j]
        else:
            row[j] = left + w[j]
    return ties


@njit(cache=True)
def h_backtrack(bits, ia, jb, steps, keepout):
    """Walk ``steps`` predecessor steps from (ia, jb) through the bitmap.

    Returns (path, n_done): path is (steps+1, 2) int64 ordered from (ia, jb);
    the walk stops early (n_done < steps) if it would enter i < keepout or
    j < keepout, where boundary values rather than interior recursion hold.
    """
    path = np.empty((steps + 1, 2), dtype=np.int64)
    path[0, 0] = ia
    path[0, 1] = jb
    i = ia
    j = jb
    done = 0
    for k in range(steps):
        if i <= keepout or j <= keepout:
            break
        if bits[i, j >> 3] & np.uint8(1 << (j & 7)):
            i -= 1
        else:
            j -= 1
        path[k + 1, 0] = i
        path[k + 1, 1] = j
        done = k + 1
    return path, done


# ---------------------------------------------------------------------------
# Pair-tracked corner growth over the label lattice.
#
# Swap times of (hole a, particle b) pairs satisfy
#     L(a,b) = max(L(a-1,b), L(a,b-1)) + Exp(1)
# seeded with L = 0 on the initially-interchanged set; the tracked pair's
# trajectory is the argmin ray from label (0,0).  These kernels fill the
# label grid per replica and read out pair-centred occupancy windows, the
# forward-quadrant swap times, and the ray's clock process.
# ---------------------------------------------------------------------------


@njit(cache=True)
def _label_maps(occ, site_lo):
    """Hole/particle positions by label from an occupancy snapshot.

    Returns (s_h, i0, s_p, i1, ok): s_h[i0 + a] is the site of hole label a
    (labels ascend left to right, site 0 is label 0); s_p[i1 - b] is the site
    of particle label b (labels ascend right to left, site 1 is label 0).
    ok = 0 when sites 0/1 do not hold a hole-particle pair.
    """
    n = occ.shape[0]
    nh = 0
    for k in range(n):
        if occ[k] == 0:
            nh += 1
    s_h = np.empty(nh, dtype=np.int64)
    s_p = np.empty(n - nh, dtype=np.int64)
    ih = 0
    ip = 0
    i0 = -1
    i1 = -1
    for k in range(n):
        site = site_lo + k
        if occ[k] == 0:
            if site == 0:
                i0 = ih
            s_h[ih] = site
            ih += 1
        else:
            if site == 1:
                i1 = ip
            s_p[ip] = site
            ip += 1
    ok = 1
    if i0 < 0 or i1 < 0:
        ok = 0
        i0 = 0
        i1 = 0
    return s_h, i0, s_p, i1, ok


@njit(cache=True)
def _staircase_row_bounds(s_h, i0, s_p, i1, aL, aH):
    """B0[a - aL] = largest particle label strictly right of hole a at time 0.

    Pairs (a, b) with b <= B0(a) are already interchanged at time zero.
    """
    nA = aH - aL + 1
    B0 = np.empty(nA, dtype=np.int64)
    npart = s_p.shape[0]
    for r in range(nA):
        sh = s_h[i0 + aL + r]
        # particles stored left to right; labels decrease rightward.
        lo = 0
        hi = npart
        while lo < hi:
            mid = (lo + hi) // 2
            if s_p[mid] > sh:
                hi = mid
            else:
                lo = mid + 1
        B0[r] = i1 - lo
    return B0


@njit(cache=True)
def _grid_labels_ok(i0, nh, i1, npart, aL, aH, bL, bH):
    """Labels aL..aH and bL..bH must exist in the snapshot."""
    if i0 + aL < 0 or i0 + aH >= nh:
        return 0
    if i1 - bH < 0 or i1 - bL >= npart:
        return 0
    return 1


@njit(cache=True)
def _fill_swap_grid(B0, wgrid, L, aL, bL):
    """Fill L over the label rectangle; cells in the time-zero set get 0.

    Requires the rectangle's first row and first column to lie entirely in
    the time-zero set (returns 0 if not: the caller's bounds are too tight).
    """
    nA, nB = L.shape
    for r in range(nA):
        b0 = B0[r]
        for c in range(nB):
            b = bL + c
            if b <= b0:
                L[r, c] = 0.0
            else:
                if r == 0 or c == 0:
                    return 0
                up = L[r - 1, c]
                left = L[r, c - 1]
                m = up if up > left else left
                L[r, c] = m + wgrid[r, c]
    return 1


@njit(cache=True)
def _ray_until(L, aL, bL, tmax):
    """Argmin ray from label (0,0) until its clock exceeds tmax.

    Returns (labels, times, n, ok): labels[k] = (a,b) of ray vertex k with
    times[k] = L(a,b); vertex 0 is (0,0) at time 0.  ok = 0 if the walk hits
    the grid edge before the clock passes tmax.
    """
    nA, nB = L.shape
    cap = nA + nB
    labels = np.empty((cap, 2), dtype=np.int64)
    times = np.empty(cap, dtype=np.float64)
    r = -aL
    c = -bL
    labels[0, 0] = 0
    labels[0, 1] = 0
    times[0] = 0.0
    n = 1
    ok = 1
    while True:
        if r + 1 >= nA or c + 1 >= nB:
            ok = 0
            break
        tr = L[r + 1, c]
        tu = L[r, c + 1]
        if tr < tu:
            r += 1
            t = tr
        else:
            c += 1
            t = tu
        labels[n, 0] = r + aL
        labels[n, 1] = c + bL
        times[n] = t
        n += 1
        if t > tmax:
            break
    return labels, times, n, ok


@njit(cache=True)
def _window_at_time(L, B0, s_h, i0, s_p, i1, aL, bL, at, bt, t, wlo, whi, win):
    """Occupancy of sites [c+wlo, c+whi] around the pair hole at time t.

    c = at - bt is the pair hole's site.  Hole label a sits at its initial
    site minus its swap count by time t; particle label b at its initial
    site plus its swap count.  Returns 1 and fills ``win`` with 0/1, or 0
    when the grid cannot resolve the window.
    """
    nA, nB = L.shape
    c = at - bt
    width = whi - wlo + 1
    for k in range(width):
        win[k] = -1
    # holes: scan labels downward from at, then upward from at+1; positions
    # are strictly increasing in the label at fixed t.
    for direction in range(2):
        a = at if direction == 0 else at + 1
        while True:
            r = a - aL
            if r < 0 or r >= nA:
                return 0
            cstart = B0[r] - bL + 1
            if cstart < 1:
                return 0
            cnt = 0
            cc = cstart
            while cc < nB and L[r, cc] <= t:
                cnt += 1
                cc += 1
            if cc == nB:
                return 0  # swap count may be incomplete
            x = s_h[i0 + a] - cnt
            if direction == 0:
                if x < c + wlo:
                    break
                if x <= c + whi:
                    win[x - c - wlo] = 0
                a -= 1
            else:
                if x > c + whi:
                    break
                if x >= c + wlo:
                    win[x - c - wlo] = 0
                a += 1
    # particles: scan labels downward from bt (positions increase), then
    # upward from bt+1 (positions decrease).
    for direction in range(2):
        b = bt if direction == 0 else bt + 1
        while True:
            col = b - bL
            if col < 1 or col >= nB:
                return 0
            cnt = 0
            rr = 0
            while rr < nA and B0[rr] >= b:
                rr += 1
            while rr < nA and L[rr, col] <= t:
                cnt += 1
                rr += 1
            if rr == nA:
                return 0
            x = s_p[i1 - b] + cnt
            if direction == 0:
                if x > c + whi:
                    break
                if x >= c + wlo:
                    win[x - c - wlo] = 1
                b -= 1
            else:
                if x < c + wlo:
                    break
                if x <= c + whi:
                    win[x - c - wlo] = 1
                b += 1
    for k in range(width):
        if win[k] < 0:
            return 0
    return 1


@njit(cache=True)
def pair_window_farm(occ_chunk, site_lo, aL, aH, bL, bH, w_chunk, ts, wlo, whi):
    """Per replica: fill the swap grid, walk the ray, read pair windows.

    occ_chunk: (R, S) int8 occupancy snapshots, pair at sites 0/1.
    w_chunk:   (R, nA, nB) Exp(1) waiting times.
    ts:        ascending readout times.

    Returns (codes, ab, ok): codes[r, k] encodes the 0/1 window at ts[k] as
    a little-endian integer over sites wlo..whi; ab[r, k] = pair labels; a
    zero ok[r] flags a replica whose grid or snapshot was too small.
    """
    R = occ_chunk.shape[0]
    nt = ts.shape[0]
    width = whi - wlo + 1
    nA = aH - aL + 1
    nB = bH - bL + 1
    codes = np.zeros((R, nt), dtype=np.int64)
    ab = np.zeros((R, nt, 2), dtype=np.int64)
    ok = np.ones(R, dtype=np.int8)
    L = np.empty((nA, nB), dtype=np.float64)
    win = np.empty(width, dtype=np.int8)
    for r in range(R):
        s_h, i0, s_p, i1, mok = _label_maps(occ_chunk[r], site_lo)
        if mok == 0 or _grid_labels_ok(i0, s_h.shape[0], i1, s_p.shape[0], aL, aH, bL, bH) == 0:
            ok[r] = 0
            continue
        B0 = _staircase_row_bounds(s_h, i0, s_p, i1, aL, aH)
        if _fill_swap_grid(B0, w_chunk[r], L, aL, bL) == 0:
            ok[r] = 0
            continue
        labels, times, n, rok = _ray_until(L, aL, bL, ts[nt - 1])
        if rok == 0:
            ok[r] = 0
            continue
        k = 0
        for q in range(nt):
            t = ts[q]
            while k + 1 < n and times[k + 1] <= t:
                k += 1
            at = labels[k, 0]
            bt = labels[k, 1]
            ab[r, q, 0] = at
            ab[r, q, 1] = bt
            if _window_at_time(L, B0, s_h, i0, s_p, i1, aL, bL, at, bt, t, wlo, whi, win) == 0:
                ok[r] = 0
                break
            code = 0
            for m in range(width):
                code |= int(win[m]) << m
            codes[r, q] = code
    return codes, ab, ok


@njit(cache=True)
def quadrant_farm(occ_chunk, site_lo, aL, aH, bL, bH, w_chunk, k_top):
    """Per replica: swap times on the forward label quadrant [0, k_top]^2.

    Returns (Lq, ok) with Lq[r] the (k_top+1, k_top+1) sub-grid of swap
    times; ok flags replicas whose bounds were insufficient.
    """
    R = occ_chunk.shape[0]
    nA = aH - aL + 1
    nB = bH - bL + 1
    Lq = np.zeros((R, k_top + 1, k_top + 1), dtype=np.float64)
    ok = np.ones(R, dtype=np.int8)
    L = np.empty((nA, nB), dtype=np.float64)
    for r in range(R):
        s_h, i0, s_p, i1, mok = _label_maps(occ_chunk[r], site_lo)
        if mok == 0 or _grid_labels_ok(i0, s_h.shape[0], i1, s_p.shape[0], aL, aH, bL, bH) == 0:
            ok[r] = 0
            continue
        B0 = _staircase_row_bounds(s_h, i0, s_p, i1, aL, aH)
        if _fill_swap_grid(B0, w_chunk[r], L, aL, bL) == 0:
            ok[r] = 0
            continue
        for a in range(k_top + 1):
            for b in range(k_top + 1):
                Lq[r, a, b] = L[a - aL, b - bL]
    return Lq, ok


@njit(cache=True)
def ray_clock_farm(occ_chunk, site_lo, aL, aH, bL, bH, w_chunk, t_probe):
    """Per replica: the ray's jump interval covering time t_probe.

    Returns (length, ok): length[r] = L(next jump) - L(previous jump) for the
    interval containing t_probe along the tracked pair's trajectory.
    """
    R = occ_chunk.shape[0]
    nA = aH - aL + 1
    nB = bH - bL + 1
    out = np.zeros(R, dtype=np.float64)
    ok = np.ones(R, dtype=np.int8)
    L = np.empty((nA, nB), dtype=np.float64)
    for r in range(R):
        s_h, i0, s_p, i1, mok = _label_maps(occ_chunk[r], site_lo)
        if mok == 0 or _grid_labels_ok(i0, s_h.shape[0], i1, s_p.shape[0], aL, aH, bL, bH) == 0:
            ok[r] = 0
            continue
        B0 = _staircase_row_bounds(s_h, i0, s_p, i1, aL, aH)
        if _fill_swap_grid(B0, w_chunk[r], L, aL, bL) == 0:
            ok[r] = 0
            continue
        labels, times, n, rok = _ray_until(L, aL, bL, t_probe)
        if rok == 0 or n < 2 or times[n - 1] <= t_probe:
            ok[r] = 0
            continue
        out[r] = times[n - 1] - times[n - 2]
    return out, ok
