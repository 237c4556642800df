"""int64 fast paths for the first-return machinery.

Every kernel mirrors a pure-python routine in returnmap.py line for line;
the callers there dispatch here only when the whole computation provably
fits in int64 (coordinate envelope checked before and during the run), so
the fast path is bit-for-bit identical to the exact one.  The test suite
asserts that equality directly.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]):
            return args[0]

        def wrap(f):
            return f

        return wrap


@njit(cache=True)
def _member64(X, Y, p, q, m, W, s_lo, s_hi):
    S = X + Y
    if S < s_lo or S > s_hi:
        return False
    i = X - Y
    if i < -W or i >= W:
        return False
    if (p * X) // q != m or (p * Y) // q != m:
        return False
    d0 = (p * X) // q
    d1 = (p * (d0 - Y)) // q
    d2 = (p * (d1 - X)) // q
    d3 = (p * (d2 - d0 + Y)) // q
    if d3 - d1 != W or d2 - d0 != -W:
        return False
    return (p * (X + W)) // q == m and (p * (Y - W)) // q == m


@njit(cache=True)
def _ray_candidate(px, py, qx, qy, c, s, L, r, p, q, m, W, s_lo, s_hi):
    """Earliest member among the phase-r iterates of ray indices 0..L-1.

    (px, py) is the iterate at index 0, (qx, qy) its per-index increment,
    c the strip coordinate at index 0 and s its slope.  Returns the step
    offset 4*j + r and the point, or offset -1."""
    if s == 0:
        return -1, 0, 0
    if s > 0:
        j0 = -((W + c) // s)
        j1 = (W - 1 - c) // s
    else:
        j0 = -((1 - W + c) // s)
        j1 = (-W - c) // s
    if j0 < 0:
        j0 = 0
    if j1 > L - 1:
        j1 = L - 1
    for j in range(j0, j1 + 1):
        fx = px + j * qx
        fy = py + j * qy
        if _member64(fx, fy, p, q, m, W, s_lo, s_hi):
            return 4 * j + r, fx, fy
    return -1, 0, 0


@njit(cache=True)
def phi_fast(X, Y, p, q, m, W, s_lo, s_hi, cap, lim):
    """First return by strip transits; see _phi_strip_py.

    Returns (X, Y, steps, status): status 0 found, 1 cap exhausted,
    3 coordinate envelope left (caller must redo in exact arithmetic).
    """
    if X > lim or X < -lim or Y > lim or Y < -lim:
        return X, Y, 0, 3
    Xc = (p * X) // q - Y
    Yc = X
    f = 1
    if _member64(Xc, Yc, p, q, m, W, s_lo, s_hi):
        return Xc, Yc, f, 0
    while f < cap:
        if Xc > lim or Xc < -lim or Yc > lim or Yc < -lim:
            return Xc, Yc, f, 3
        bm = (p * Xc) // q
        bn = (p * Yc) // q
        d0 = bm
        d1 = (p * (d0 - Yc)) // q
        d2 = (p * (d1 - Xc)) // q
        d3 = (p * (d2 - d0 + Yc)) // q
        X4 = Xc + d3 - d1
        Y4 = Yc + d2 - d0
        wx = 2 * bn + 1
        wy = -(2 * bm + 1)
        am = bm if bm >= 0 else -bm
        an = bn if bn >= 0 else -bn
        big = am if am > an else an
        jump_ok = (X4 - Xc == wx and Y4 - Yc == wy
                   and (p * X4) // q == bm and (p * Y4) // q == bn
                   and q > p * (2 * big + 3))
        # intermediate iterates of the ray start: points, increments,
        # strip coordinates and slopes (see _phi_strip_py)
        p1x = d0 - Yc
        p1y = Xc
        c1 = p1x - p1y
        s1 = -(wx + wy)
        p2x = d1 - Xc
        p2y = d0 - Yc
        c2 = p2x - p2y
        s2 = wy - wx
        p3x = d2 - d0 + Yc
        p3y = d1 - Xc
        c3 = p3x - p3y
        s3 = wx + wy
        if jump_ok:
            # a constant strip coordinate inside the diagonal box would
            # make every ray point a candidate; degrade to single blocks
            if ((d1 == m and d0 == m and s1 == 0 and -W <= c1 < W)
                    or (d2 == m and d1 == m and s2 == 0 and -W <= c2 < W)
                    or (d3 == m and d2 == m and s3 == 0 and -W <= c3 < W)):
                jump_ok = False
        if not jump_ok:
            if _member64(p1x, p1y, p, q, m, W, s_lo, s_hi):
                return p1x, p1y, f + 1, 0
            if _member64(p2x, p2y, p, q, m, W, s_lo, s_hi):
                return p2x, p2y, f + 2, 0
            if _member64(p3x, p3y, p, q, m, W, s_lo, s_hi):
                return p3x, p3y, f + 3, 0
            Xc = X4
            Yc = Y4
            f += 4
            if _member64(Xc, Yc, p, q, m, W, s_lo, s_hi):
                return Xc, Yc, f, 0
            continue
        if wx > 0:
            jx = ((bm + 1) * q - 1 - p * Xc) // (p * wx)
        else:
            jx = (p * Xc - bm * q) // (-p * wx)
        if wy > 0:
            jy = ((bn + 1) * q - 1 - p * Yc) // (p * wy)
        else:
            jy = (p * Yc - bn * q) // (-p * wy)
        k = jx if jx < jy else jy
        Xe = Xc + k * wx
        Ye = Yc + k * wy
        e1 = (p * (d0 - Ye)) // q
        e2 = (p * (e1 - Xe)) // q
        e3 = (p * (e2 - d0 + Ye)) // q
        if e1 == d1 and e2 == d2 and e3 == d3:
            L = k
            arrived = True
        else:
            lo = 0
            hi = k
            while hi - lo > 1:
                mid = (lo + hi) // 2
                Xm = Xc + mid * wx
                Ym = Yc + mid * wy
                m1 = (p * (d0 - Ym)) // q
                m2 = (p * (m1 - Xm)) // q
                m3 = (p * (m2 - d0 + Ym)) // q
                if m1 == d1 and m2 == d2 and m3 == d3:
                    lo = mid
                else:
                    hi = mid
            L = hi
            arrived = False
        # earliest member among the block's candidates; the ray itself
        # can satisfy the strip condition at most once
        best_f = -1
        best_x = 0
        best_y = 0
        if bm == m and bn == m:
            i0 = Xc - Yc
            jc = -((i0 + W) // (2 * W))
            if 1 <= jc <= L:
                Xj = Xc + jc * wx
                Yj = Yc + jc * wy
                if _member64(Xj, Yj, p, q, m, W, s_lo, s_hi):
                    best_f = 4 * jc
                    best_x = Xj
                    best_y = Yj
        if d1 == m and d0 == m:
            off, fx, fy = _ray_candidate(p1x, p1y, -wy, wx, c1, s1, L, 1,
                                         p, q, m, W, s_lo, s_hi)
            if off >= 0 and (best_f < 0 or off < best_f):
                best_f = off
                best_x = fx
                best_y = fy
        if d2 == m and d1 == m:
            off, fx, fy = _ray_candidate(p2x, p2y, -wx, -wy, c2, s2, L, 2,
                                         p, q, m, W, s_lo, s_hi)
            if off >= 0 and (best_f < 0 or off < best_f):
                best_f = off
                best_x = fx
                best_y = fy
        if d3 == m and d2 == m:
            off, fx, fy = _ray_candidate(p3x, p3y, wy, -wx, c3, s3, L, 3,
                                         p, q, m, W, s_lo, s_hi)
            if off >= 0 and (best_f < 0 or off < best_f):
                best_f = off
                best_x = fx
                best_y = fy
        if best_f >= 0:
            return best_x, best_y, f + best_f, 0
        Xc += L * wx
        Yc += L * wy
        f += 4 * L
        if not arrived and _member64(Xc, Yc, p, q, m, W, s_lo, s_hi):
            return Xc, Yc, f, 0
    return Xc, Yc, f, 1


@njit(cache=True)
def phi_direct(X, Y, p, q, m, W, s_lo, s_hi, cap, lim):
    """Literal first return by single steps; see _phi_direct_py."""
    k = 0
    while k < cap:
        if X > lim or X < -lim or Y > lim or Y < -lim:
            return X, Y, k, 3
        Xn = (p * X) // q - Y
        Yn = X
        k += 1
        if _member64(Xn, Yn, p, q, m, W, s_lo, s_hi):
            return Xn, Yn, k, 0
        X = Xn
        Y = Yn
    return X, Y, k, 1


_IBUF = np.empty(0, dtype=np.int64)
_SBUF = np.empty(0, dtype=np.int64)


def orbit_buffers(n: int):
    """Reusable scratch for orbit_trace results (single-threaded use)."""
    global _IBUF, _SBUF
    if _IBUF.shape[0] < n:
        size = max(n, 2 * _IBUF.shape[0], 1 << 16)
        _IBUF = np.empty(size, dtype=np.int64)
        _SBUF = np.empty(size, dtype=np.int64)
    return _IBUF, _SBUF


@njit(cache=True)
def _orbit_trace(X0, Y0, p, q, m, W, s_lo, s_hi, phi_cap, lim, ibuf, sbuf):
    cap = ibuf.shape[0]
    Xc = X0
    Yc = Y0
    n = 0
    g = 0
    h = 0
    s_min = X0 + Y0
    s_max = s_min
    while True:
        Xn, Yn, f, st = phi_fast(Xc, Yc, p, q, m, W, s_lo, s_hi, phi_cap, lim)
        if st != 0:
            return n, s_min, s_max, g, h, st
        i2 = Xn - Yn
        if i2 == -W:
            gx = Xn
            gy = Yn
        else:
            gx = Yn
            gy = Xn
        if gx == Xc and gy == Yc:
            h += 1
        if i2 == 0 or i2 == -W:
            g += 1
        if n >= cap:
            return n, s_min, s_max, g, h, 2
        S2 = Xn + Yn
        ibuf[n] = i2
        sbuf[n] = S2
        n += 1
        if S2 < s_min:
            s_min = S2
        if S2 > s_max:
            s_max = S2
        if Xn == X0 and Yn == Y0:
            return n, s_min, s_max, g, h, 0
        Xc = Xn
        Yc = Yn


def orbit_trace(X0, Y0, p, q, m, W, s_lo, s_hi, phi_cap, lim, point_cap):
    """Trace one return-map orbit to closure inside int64.

    Returns (count, s_min, s_max, g_hits, h_hits, status); the visited
    points are left in the buffers from orbit_buffers(count) as (i, S)
    pairs.  Status: 0 closed, 1 escaped/cap in the step map, 2 point cap,
    3 left the int64 envelope.
    """
    ibuf, sbuf = orbit_buffers(point_cap)
    return _orbit_trace(X0, Y0, p, q, m, W, s_lo, s_hi, phi_cap, lim,
                        ibuf[:point_cap], sbuf[:point_cap])


@njit(cache=True)
def member_batch(Xs, Ys, p, q, m, W, s_lo, s_hi, out):
    for k in range(Xs.shape[0]):
        out[k] = _member64(Xs[k], Ys[k], p, q, m, W, s_lo, s_hi)


@njit(cache=True)
def band_points(s_a, s_b, p, q, m, W, s_lo, s_hi, Xs, Ys):
    """Fill Xs, Ys with every domain point whose S lies in [s_a, s_b];
    returns the count.  Buffer overflow returns -1 (caller enlarges)."""
    n = 0
    cap = Xs.shape[0]
    for i in range(-W, W):
        first = s_a + ((i - s_a) % 2)
        for S in range(first, s_b + 1, 2):
            X = (S + i) // 2
            Y = X - i
            if _member64(X, Y, p, q, m, W, s_lo, s_hi):
                if n >= cap:
                    return -1
                Xs[n] = X
                Ys[n] = Y
                n += 1
    return n