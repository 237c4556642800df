"""Strip maps and the first-return dynamics on the diagonal domain.

For small rotation number the round-off map F follows the integrable flow
closely: off a thin set of transition points, four steps of F advance a
lattice point by exactly one field step w.  The long-time dynamics is
captured by the first-return map Phi to a strip domain X^e straddling the
positive diagonal, one strip per polygon class.  This module builds those
domains, computes Phi exactly (two independent routes: literal F-iteration
and composed strip transits with verified ray jumps), exposes the cylinder
coordinates in which Phi is a perturbed linear twist, and provides the
continuum (unperturbed) return machinery used for exact conjugacy checks.

All public operations are exact over arbitrary-precision integers, with an
int64 fast path (kernels module) that is bit-for-bit identical inside its
validated envelope.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .integrable import (
    CriticalNumber,
    DegenerateTwist,
    NoSolution,
    OnCriticalBoundary,
    PlanePoint,
    PolygonClass,
    class_of,
    flow_advance,
    hamiltonian,
    period_T,
    polygon_class,
)
from .lattice import LatticePoint

Q = Fraction


class CapExceeded(Exception):
    """A strip transit did not reach a transition point within its cap."""


class LambdaTooLarge(Exception):
    """The step parameter is too coarse for the requested construction."""


class Escaped(Exception):
    """A first-return computation failed: the orbit left the admissible
    region or exhausted its step cap.  Marks the seed as critical."""

    def __init__(self, steps: int, reason: str = "no return"):
        super().__init__(f"{reason} after {steps} steps")
        self.steps = steps
        self.reason = reason


# ---------------------------------------------------------------------------
# boxes, transition points, the strip map


def box_of(z: LatticePoint, lam: Fraction) -> tuple[int, int]:
    """Unit-box index (m, n) of the plane point lambda*z."""
    p, q = lam.numerator, lam.denominator
    return (p * z[0] // q, p * z[1] // q)


def _chain(X: int, Y: int, p: int, q: int) -> tuple[int, int, int, int]:
    """Floor values consumed by four consecutive steps of F from (X, Y).

    F^4(X, Y) = (X + d3 - d1, Y + d2 - d0), and the tuple is constant
    exactly where F^4 acts as a fixed translation.
    """
    d0 = (p * X) // q
    d1 = (p * (d0 - Y)) // q
    d2 = (p * (d1 - X)) // q
    d3 = (p * (d2 - d0 + Y)) // q
    return d0, d1, d2, d3


def _f4(X: int, Y: int, p: int, q: int) -> tuple[int, int]:
    d0, d1, d2, d3 = _chain(X, Y, p, q)
    return X + d3 - d1, Y + d2 - d0


def is_transition(z: LatticePoint, lam: Fraction) -> bool:
    """True iff four steps of F move z to a different unit box."""
    if z == (0, 0):
        raise ValueError("the origin is excluded from the transition set")
    p, q = lam.numerator, lam.denominator
    X4, Y4 = _f4(z[0], z[1], p, q)
    return ((p * X4) // q, (p * Y4) // q) != ((p * z[0]) // q, (p * z[1]) // q)


@dataclass(frozen=True)
class StripHit:
    """Arrival of a strip transit at a transition point.

    point        : the transition point reached
    transit_time : number of four-step blocks taken from the input
    box          : unit box in which the transit ran (the hit's own box)
    defect       : point - start - transit_time * w_box, the accumulated
                   round-off deviation from pure field translation
    """

    point: LatticePoint
    transit_time: int
    box: tuple[int, int]
    defect: tuple[int, int]


def _next_transition_py(X: int, Y: int, p: int, q: int, cap: int,
                        advance: bool) -> tuple[int, int, int]:
    """First transition point at t >= (1 if advance else 0) blocks ahead.

    Walks four-step blocks, collapsing runs of pure field steps inside one
    box into a single ray jump.  A jump is taken only when the floor chain
    is identical at both ends of the ray, which (for q large against the
    box index) forces it to be constant along the ray; otherwise the first
    chain break is located by bisection and the walk resumes there.  Falls
    back to pointwise blocks when the size guard fails, so the result is
    exact for every input.  Returns (X, Y, t).
    """
    t = 0
    while True:
        bm, bn = (p * X) // q, (p * Y) // q
        d = _chain(X, Y, p, q)
        X4, Y4 = X + d[3] - d[1], Y + d[2] - d[0]
        if ((p * X4) // q, (p * Y4) // q) != (bm, bn):
            if t > 0 or not advance:
                return X, Y, t
            X, Y, t = X4, Y4, 1  # forced first block out of the strip
            if t > cap:
                raise CapExceeded(f"no transition within {cap} blocks")
            continue
        wx, wy = 2 * bn + 1, -(2 * bm + 1)
        jump_ok = (X4 - X, Y4 - Y) == (wx, wy) and q > p * (2 * max(abs(bm), abs(bn)) + 3)
        if not jump_ok:
            X, Y, t = X4, Y4, t + 1
            if t > cap:
                raise CapExceeded(f"no transition within {cap} blocks")
            continue
        # longest ray from (X, Y) along (wx, wy) staying in box (bm, bn)
        if wx > 0:
            jx = ((bm + 1) * q - 1 - p * X) // (p * wx)
        else:
            jx = (p * X - bm * q) // (-p * wx)
        if wy > 0:
            jy = ((bn + 1) * q - 1 - p * Y) // (p * wy)
        else:
            jy = (p * Y - bn * q) // (-p * wy)
        k = min(jx, jy)  # >= 1 since the verified block stayed in the box
        if _chain(X + k * wx, Y + k * wy, p, q) == d:
            # constant chain along the whole ray: every block is a field
            # step and the ray end exits the box on its next block
            X, Y, t = X + k * wx, Y + k * wy, t + k
            if t > cap:
                raise CapExceeded(f"no transition within {cap} blocks")
            return X, Y, t
        lo, hi = 0, k
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if _chain(X + mid * wx, Y + mid * wy, p, q) == d:
                lo = mid
            else:
                hi = mid
        X, Y, t = X + hi * wx, Y + hi * wy, t + hi
        if t > cap:
            raise CapExceeded(f"no transition within {cap} blocks")


def strip_map(z: LatticePoint, lam: Fraction, cap: int = 10**9, *,
              advance: bool = False) -> StripHit:
    """Iterate four-step blocks to the first arrival at a transition point.

    With advance=False (the default) a point already in the transition set
    is returned unchanged with transit_time 0; advance=True demands at
    least one block, which is the composition semantics used to rebuild
    the first-return map.
    """
    if z == (0, 0):
        raise ValueError("the origin is excluded from the strip map")
    p, q = lam.numerator, lam.denominator
    X, Y, t = _next_transition_py(z[0], z[1], p, q, cap, advance)
    bm, bn = (p * X) // q, (p * Y) // q
    wx, wy = 2 * bn + 1, -(2 * bm + 1)
    defect = (X - z[0] - t * wx, Y - z[1] - t * wy)
    return StripHit(point=(X, Y), transit_time=t, box=(bm, bn), defect=defect)


# ---------------------------------------------------------------------------
# the return domain on the positive diagonal


@dataclass(frozen=True)
class ReturnDomain:
    """One diagonal strip domain X^e with its admitted energy window.

    cls        : the polygon class (field named cls since `class` is reserved)
    lam        : the exact step parameter
    base_point : diagonal lattice point (X0, X0) mapping to the cylinder origin
    interval   : closed admitted energy window [lo, hi], a subset of the
                 class interval shrunk clear of the box walls and class ends
    s_lo, s_hi : the same window as inclusive integer bounds on S = X + Y
    """

    cls: PolygonClass
    lam: Fraction
    base_point: LatticePoint
    interval: tuple[Fraction, Fraction]
    s_lo: int
    s_hi: int

    @property
    def width(self) -> int:
        return self.cls.width


def _domain_window(cls: PolygonClass, lam: Fraction) -> tuple[Fraction, Fraction, int, int]:
    """Admitted energy window of the strip domain and its integer S bounds.

    The window keeps every admitted point at least ~2*lam*width away from
    the walls of the diagonal box (so the whole theta-fibre of each level
    stays inside) and ~4*lam*width away from the critical class ends.
    Membership additionally demands pointwise regularity, so the window
    only needs to be safely inside; it does not have to be sharp.
    """
    e, nxt = cls.interval
    m, W = cls.m_half, cls.width
    wall = 2 * lam * W          # margin in the diagonal coordinate
    end = 4 * lam * W           # margin in energy off the class ends
    lo = max(e + end, 2 * m * m + 2 * W * wall)
    hi = min(nxt - end, 2 * m * m + 2 * W * (1 - wall))
    if lo >= hi:
        raise LambdaTooLarge(f"lambda={lam} leaves no admitted window in class {cls.e.e}")
    # energy is affine in S inside the diagonal box: H = 2m^2 + W*(lam*S - 2m)
    def s_of(a: Fraction) -> Fraction:
        return ((a - 2 * m * m) / W + 2 * m) / lam
    s_lo = math.ceil(s_of(lo))
    s_hi = math.floor(s_of(hi))
    if s_lo > s_hi:
        raise LambdaTooLarge(f"lambda={lam} admits no lattice level in class {cls.e.e}")
    return lo, hi, s_lo, s_hi


def _member(X: int, Y: int, p: int, q: int, m: int, W: int,
            s_lo: int, s_hi: int) -> bool:
    """Exact membership test for the strip domain (box, strip, window,
    regularity of the four-step block)."""
    S = X + Y
    if S < s_lo or S > s_hi:
        return False
    i = X - Y
    if i < -W or i >= W:
        return False
    if (p * X) // q != m or (p * Y) // q != m:
        return False
    d0, d1, d2, d3 = _chain(X, Y, p, q)
    if d3 - d1 != W or d2 - d0 != -W:
        return False
    X4, Y4 = X + W, Y - W
    return (p * X4) // q == m and (p * Y4) // q == m


def in_domain_Xe(z: LatticePoint, dom: ReturnDomain) -> bool:
    """True iff z lies in the return domain: on the diagonal strip, inside
    the admitted energy window (which forces X + Y > 0), and regular."""
    p, q = dom.lam.numerator, dom.lam.denominator
    return _member(z[0], z[1], p, q, dom.cls.m_half, dom.cls.width,
                   dom.s_lo, dom.s_hi)


@dataclass(frozen=True)
class CylinderCoord:
    """Exact cylinder coordinates: theta in [-1/2, 1/2) along the strip,
    rho across it (action direction), both rational."""

    theta: Fraction
    rho: Fraction


def eta(z: LatticePoint, dom: ReturnDomain) -> CylinderCoord:
    """Cylinder coordinates of a domain point.

    theta = (X - Y) / (2*width), rho = (X + Y - 2*X0) / (2*width); the
    strip condition puts theta in [-1/2, 1/2) with no wrapping needed.
    """
    W = dom.cls.width
    X0 = dom.base_point[0]
    return CylinderCoord(theta=Q(z[0] - z[1], 2 * W),
                         rho=Q(z[0] + z[1] - 2 * X0, 2 * W))


def symmetry_Ge(z: LatticePoint, dom: ReturnDomain) -> LatticePoint:
    """Reversing symmetry of the return map: coordinate swap on the open
    strip, identity on the identified edge X - Y = -width."""
    i = z[0] - z[1]
    W = dom.cls.width
    if i == -W:
        return z
    if -W < i < W:
        return (z[1], z[0])
    raise ValueError("point outside the reversor strip")


def _wrap_half(u: Fraction) -> Fraction:
    """Reduce into [-1/2, 1/2)."""
    return (u + Q(1, 2)) % 1 - Q(1, 2)


def rotation_number(z: LatticePoint, dom: ReturnDomain) -> Fraction:
    """Rotation number rho/rho_star reduced into [-1/2, 1/2)."""
    return _wrap_half(_rotation_full(z, dom))


def fundamental_index(z: LatticePoint, dom: ReturnDomain) -> int:
    """Integer part of the rotation number under the same reduction;
    indexes the fundamental domain the point falls in."""
    nu = _rotation_full(z, dom)
    return int(nu - _wrap_half(nu))


def _rotation_full(z: LatticePoint, dom: ReturnDomain) -> Fraction:
    if dom.cls.rho_star is None:
        raise DegenerateTwist(f"twist vanishes on class {dom.cls.e.e}")
    return eta(z, dom).rho / dom.cls.rho_star


def choose_base_point(cls: PolygonClass, lam: Fraction,
                      window: tuple[Fraction, Fraction] | None = None) -> LatticePoint:
    """Diagonal lattice point whose level best satisfies the return-phase
    condition (period congruent to lambda mod 4*lambda), ties toward
    smaller X0.  Restricting `window` narrows the admitted energy range."""
    for X0, _ in _base_candidates(cls, lam, window, 1):
        return (X0, X0)
    raise NoSolution(f"no admissible diagonal point in class {cls.e.e} at lambda={lam}")


def _base_candidates(cls: PolygonClass, lam: Fraction,
                     window: tuple[Fraction, Fraction] | None,
                     count: int) -> list[tuple[int, Fraction]]:
    """Up to `count` regular diagonal points ranked by the phase residual
    |1/4 - T/(4*lambda)| to the nearest integer.  Exact arithmetic; the
    scan is O(window-size) with an affine period evaluation per point."""
    if cls.kappa == 0:
        raise DegenerateTwist(f"twist vanishes on class {cls.e.e}")
    lo, hi, s_lo, s_hi = _domain_window(cls, lam)
    if window is not None:
        lo, hi = max(lo, window[0]), min(hi, window[1])
        if lo > hi:
            raise NoSolution("requested energy window misses the admitted one")
    p, q = lam.numerator, lam.denominator
    m, W = cls.m_half, cls.width
    # diagonal point (X0, X0): level = 2m^2 + 2W(lam*X0 - m), affine in X0
    def level(X0: int) -> Fraction:
        return 2 * m * m + 2 * W * (lam * X0 - m)
    x_lo = math.ceil((lo - 2 * m * m) / (2 * W * lam) + Q(m) / lam)
    x_hi = math.floor((hi - 2 * m * m) / (2 * W * lam) + Q(m) / lam)
    anchor = Q(cls.e.e + cls.e.next, 2)
    t_anchor = period_T(anchor)
    # residual of 1/4 - T/(4 lam) as an affine map of X0
    c0 = Q(1, 4) - (t_anchor + cls.t_prime * (level(x_lo) - anchor)) / (4 * lam)
    c1 = -cls.t_prime * 2 * W * lam / (4 * lam)
    ranked: list[tuple[Fraction, int]] = []
    worst: Fraction | None = None
    for X0 in range(x_lo, x_hi + 1):
        u = (c0 + c1 * (X0 - x_lo)) % 1
        r = min(u, 1 - u)
        if worst is not None and r >= worst and len(ranked) >= count:
            continue
        ranked.append((r, X0))
        ranked.sort()
        if len(ranked) > 4 * count:
            ranked = ranked[: 2 * count]
            worst = ranked[-1][0]
    out: list[tuple[int, Fraction]] = []
    for r, X0 in sorted(ranked):
        if _member(X0, X0, p, q, m, W, s_lo, s_hi):
            out.append((X0, r))
            if len(out) == count:
                break
    return out


def _band_window(cls: PolygonClass, lam: Fraction, band_m: int,
                 band_pad: Fraction | int = 2) -> tuple[Fraction, Fraction]:
    """Energy window for base points that keep a band of band_m fundamental
    domains (plus band_pad of spare room on each side) inside the admitted
    S window.  LambdaTooLarge when no base position fits."""
    if cls.rho_star is None:
        raise DegenerateTwist(f"twist vanishes on class {cls.e.e}")
    if band_m < 1:
        raise ValueError("band_m must be a positive integer")
    _, _, s_lo, s_hi = _domain_window(cls, lam)
    rs = cls.rho_star
    W = cls.width
    pad = Q(band_pad)
    extent = Q(s_hi - s_lo, 2 * W)  # available range of rho
    if extent < (band_m + 2 * pad) * abs(rs):
        raise LambdaTooLarge(
            f"lambda={lam} spans {float(extent / abs(rs)):.2f} fundamental "
            f"domains in class {cls.e.e}; need >= {float(band_m + 2 * pad)}")
    band = sorted((-(Q(1, 2) + pad) * rs, (band_m - Q(1, 2) + pad) * rs))
    # base point must keep the whole band inside the S window
    margin = 2
    slo_b = s_lo + margin - math.floor(2 * W * band[0])
    shi_b = s_hi - margin - math.ceil(2 * W * band[1])
    if slo_b > shi_b:
        raise LambdaTooLarge(f"band of {band_m} domains does not fit at lambda={lam}")
    m = cls.m_half
    return (2 * m * m + cls.width * (lam * slo_b - 2 * m),
            2 * m * m + cls.width * (lam * shi_b - 2 * m))


def make_return_domain(cls, lam: Fraction,
                       base_point: LatticePoint | None = None,
                       band_m: int | None = None,
                       band_pad: Fraction | int = 2) -> ReturnDomain:
    """Assemble the return domain for a class at step parameter lam.

    When band_m is given, the base point is chosen so the orbit band of
    band_m fundamental domains fits inside the admitted window with
    band_pad fundamental domains of spare room on each side (orbits
    through band points excurse past the band; without padding they
    escape the window and are lost as unresolved).  LambdaTooLarge when
    it cannot fit; the coverage precondition of build_A is validated
    here.
    """
    if isinstance(cls, (int, CriticalNumber)):
        cls = polygon_class(cls)
    lam = Q(lam)
    if lam <= 0:
        raise ValueError("lambda must be positive")
    lo, hi, s_lo, s_hi = _domain_window(cls, lam)
    window = None
    if band_m is not None:
        window = _band_window(cls, lam, band_m, band_pad)
    if base_point is None:
        base_point = choose_base_point(cls, lam, window)
    p, q = lam.numerator, lam.denominator
    if base_point[0] != base_point[1]:
        raise ValueError("base point must lie on the diagonal")
    if not _member(base_point[0], base_point[1], p, q, cls.m_half, cls.width, s_lo, s_hi):
        raise ValueError("base point is not a regular domain member")
    return ReturnDomain(cls=cls, lam=lam, base_point=base_point,
                        interval=(lo, hi), s_lo=s_lo, s_hi=s_hi)


# ---------------------------------------------------------------------------
# the first-return map, two exact routes


def _default_phi_cap(lam: Fraction) -> int:
    # one return costs ~ period/lambda < 4q/p single steps; allow a few
    return 12 * (lam.denominator // lam.numerator) + 64


def _phi_direct_py(X: int, Y: int, p: int, q: int, m: int, W: int,
                   s_lo: int, s_hi: int, cap: int) -> tuple[int, int, int]:
    """Literal first return: iterate single F steps, test membership at
    every step.  This is the defining route; everything faster must agree
    with it exactly."""
    k = 0
    while k < cap:
        X, Y = (p * X) // q - Y, X
        k += 1
        if _member(X, Y, p, q, m, W, s_lo, s_hi):
            return X, Y, k
    raise Escaped(k, "direct iteration cap")


def _phi_strip_py(X: int, Y: int, p: int, q: int, m: int, W: int,
                  s_lo: int, s_hi: int, cap: int) -> tuple[int, int, int]:
    """First return by strip transits: one F step, then four-step blocks
    with verified ray jumps.  While the floor chain holds, the three
    intermediate iterates of every ray point are affine in the ray index,
    so each of the four step phases contributes at most a short candidate
    window inside the diagonal box; every candidate is confirmed by the
    full membership test.  Exact; agrees with the direct route bit for
    bit (enforced by tests)."""
    X, Y = (p * X) // q - Y, X
    f = 1
    if _member(X, Y, p, q, m, W, s_lo, s_hi):
        return X, Y, f
    while f < cap:
        bm, bn = (p * X) // q, (p * Y) // q
        d = _chain(X, Y, p, q)
        d0, d1, d2, d3 = d
        X4, Y4 = X + d3 - d1, Y + d2 - d0
        wx, wy = 2 * bn + 1, -(2 * bm + 1)
        jump_ok = ((X4 - X, Y4 - Y) == (wx, wy)
                   and ((p * X4) // q, (p * Y4) // q) == (bm, bn)
                   and q > p * (2 * max(abs(bm), abs(bn)) + 3))
        # intermediate iterates of the ray start, their per-ray-step
        # increments, boxes, and strip coordinate (value at the start,
        # slope per ray step); exact floors even on irregular blocks
        phases = (((d0 - Y, X), (-wy, wx), (d1, d0),
                   d0 - Y - X, -(wx + wy)),
                  ((d1 - X, d0 - Y), (-wx, -wy), (d2, d1),
                   (d1 - X) - (d0 - Y), wy - wx),
                  ((d2 - d0 + Y, d1 - X), (wy, -wx), (d3, d2),
                   (d2 - d0 + Y) - (d1 - X), wx + wy))
        if jump_ok:
            for _start, _step, box, c, s in phases:
                # a constant strip coordinate inside the diagonal box
                # would make every ray point a candidate; degrade such a
                # block (never seen in practice) to single steps
                if box == (m, m) and s == 0 and -W <= c < W:
                    jump_ok = False
                    break
        if not jump_ok:
            for r, (start, _step, _box, _c, _s) in enumerate(phases, 1):
                if _member(start[0], start[1], p, q, m, W, s_lo, s_hi):
                    return start[0], start[1], f + r
            X, Y, f = X4, Y4, f + 4
            if _member(X, Y, p, q, m, W, s_lo, s_hi):
                return X, Y, f
            continue
        if wx > 0:
            jx = ((bm + 1) * q - 1 - p * X) // (p * wx)
        else:
            jx = (p * X - bm * q) // (-p * wx)
        if wy > 0:
            jy = ((bn + 1) * q - 1 - p * Y) // (p * wy)
        else:
            jy = (p * Y - bn * q) // (-p * wy)
        k = min(jx, jy)
        if _chain(X + k * wx, Y + k * wy, p, q) == d:
            L = k
            arrived = True  # ray end is the transition point of this box
        else:
            lo, hi = 0, k
            while hi - lo > 1:
                mid = (lo + hi) // 2
                if _chain(X + mid * wx, Y + mid * wy, p, q) == d:
                    lo = mid
                else:
                    hi = mid
            L = hi
            arrived = False
        # earliest member among the block's candidates; the ray itself
        # can satisfy the strip condition at most once
        best_f, best = -1, (0, 0)
        if bm == m and bn == m:
            i0 = X - Y
            jc = -((i0 + W) // (2 * W))
            if 1 <= jc <= L:
                Xc, Yc = X + jc * wx, Y + jc * wy
                if _member(Xc, Yc, p, q, m, W, s_lo, s_hi):
                    best_f, best = 4 * jc, (Xc, Yc)
        for r, (start, step, box, c, s) in enumerate(phases, 1):
            if box != (m, m) or s == 0:
                continue
            if s > 0:
                j0, j1 = -((W + c) // s), (W - 1 - c) // s
            else:
                j0, j1 = -((1 - W + c) // s), (-W - c) // s
            for j in range(max(j0, 0), min(j1, L - 1) + 1):
                px, py = start[0] + j * step[0], start[1] + j * step[1]
                if _member(px, py, p, q, m, W, s_lo, s_hi):
                    if best_f < 0 or 4 * j + r < best_f:
                        best_f, best = 4 * j + r, (px, py)
                    break
        if best_f >= 0:
            return best[0], best[1], f + best_f
        X, Y, f = X + L * wx, Y + L * wy, f + 4 * L
        if not arrived and _member(X, Y, p, q, m, W, s_lo, s_hi):
            # a chain break is not a field step, so this point was not a
            # ray candidate; test it like a pointwise block landing
            return X, Y, f
    raise Escaped(f, "strip iteration cap")


def return_map_Phi(z: LatticePoint, dom: ReturnDomain, cap: int | None = None,
                   method: str = "auto") -> LatticePoint:
    """First return of the F-orbit of z to the domain (z itself excluded).

    method "direct" iterates single steps (the definition), "strip"
    composes verified strip transits, "auto" picks the fast exact path.
    Raises Escaped when the orbit fails to return within cap steps.
    """
    zp, _ = phi_with_steps(z, dom, cap, method)
    return zp


def phi_with_steps(z: LatticePoint, dom: ReturnDomain, cap: int | None = None,
                   method: str = "auto") -> tuple[LatticePoint, int]:
    """return_map_Phi plus the number of F steps taken.  On returns that
    stay within the first winding the count is 1 mod 4; orbits that wind
    several times before re-entering the domain can return any residue."""
    if cap is None:
        cap = _default_phi_cap(dom.lam)
    p, q = dom.lam.numerator, dom.lam.denominator
    m, W = dom.cls.m_half, dom.cls.width
    if method == "auto":
        res = _kernel_phi(z, dom, cap)
        if res is not None:
            return res
        method = "strip"
    if method == "strip":
        X, Y, f = _phi_strip_py(z[0], z[1], p, q, m, W, dom.s_lo, dom.s_hi, cap)
    elif method == "direct":
        X, Y, f = _phi_direct_py(z[0], z[1], p, q, m, W, dom.s_lo, dom.s_hi, cap)
    else:
        raise ValueError(f"unknown method {method!r}")
    return (X, Y), f


def _kernel_envelope(dom: ReturnDomain) -> int | None:
    """Coordinate bound within which the int64 kernels are exact for this
    domain, or None when int64 cannot hold the arithmetic."""
    p, q = dom.lam.numerator, dom.lam.denominator
    # orbit excursions stay within the polygon's box range; allow slack
    reach = (dom.cls.n_full + 4) * q // p + 2 * q
    if p * (reach + q) >= 2**62:
        return None
    return reach


def _kernel_phi(z: LatticePoint, dom: ReturnDomain, cap: int) -> tuple[LatticePoint, int] | None:
    from . import kernels
    if not kernels.HAVE_NUMBA:
        return None
    lim = _kernel_envelope(dom)
    if lim is None or abs(z[0]) > lim or abs(z[1]) > lim:
        return None
    p, q = dom.lam.numerator, dom.lam.denominator
    X, Y, f, status = kernels.phi_fast(
        z[0], z[1], p, q, dom.cls.m_half, dom.cls.width,
        dom.s_lo, dom.s_hi, cap, lim)
    if status == 3:
        return None  # left the validated envelope; caller falls back
    if status != 0:
        raise Escaped(f, "strip iteration cap")
    return (X, Y), f


# ---------------------------------------------------------------------------
# orbit bands and closures


def build_A(dom: ReturnDomain, m: int) -> set[LatticePoint]:
    """All domain lattice points whose rotation number lies in the closed
    band [-1/2, m - 1/2]: m fundamental domains starting at the base."""
    if m < 1:
        raise ValueError("the band must span at least one fundamental domain")
    if dom.cls.rho_star is None:
        raise DegenerateTwist(f"twist vanishes on class {dom.cls.e.e}")
    rs = dom.cls.rho_star
    W = dom.cls.width
    extent = Q(dom.s_hi - dom.s_lo, 2 * W)
    if extent < (m + 1) * abs(rs):
        raise LambdaTooLarge(
            f"domain spans {float(extent / abs(rs)):.2f} fundamental domains; "
            f"need >= {m + 1} for a band of {m}")
    lo_rho, hi_rho = sorted((-rs / 2, (m - Q(1, 2)) * rs))
    X0 = dom.base_point[0]
    s_a = math.ceil(2 * X0 + 2 * W * lo_rho)
    s_b = math.floor(2 * X0 + 2 * W * hi_rho)
    if s_a < dom.s_lo or s_b > dom.s_hi:
        raise LambdaTooLarge("band is clipped by the admitted window; "
                             "rebuild the domain with band_m set")
    p, q = dom.lam.numerator, dom.lam.denominator
    mh = dom.cls.m_half
    from . import kernels
    lim = _kernel_envelope(dom) if kernels.HAVE_NUMBA else None
    if lim is not None:
        import numpy as np
        size = 1 << 16
        while True:
            Xs = np.empty(size, dtype=np.int64)
            Ys = np.empty(size, dtype=np.int64)
            n = kernels.band_points(s_a, s_b, p, q, mh, W,
                                    dom.s_lo, dom.s_hi, Xs, Ys)
            if n >= 0:
                return {(int(x), int(y)) for x, y in zip(Xs[:n], Ys[:n])}
            size *= 4
    out: set[LatticePoint] = set()
    for i in range(-W, W):
        first = s_a + ((i - s_a) % 2)  # S must share parity with i
        for S in range(first, s_b + 1, 2):
            X = (S + i) // 2
            Y = X - i
            if _member(X, Y, p, q, mh, W, dom.s_lo, dom.s_hi):
                out.add((X, Y))
    return out


@dataclass(frozen=True)
class OrbitSummary:
    """Raw trace of one return-map orbit (exact integers throughout).

    seed      : the A-point the trace started from
    period    : number of return-map steps to close, or None if unresolved
    s_min/max : extreme values of X + Y over the visited points
    g_hits    : visited points on the symmetry line (X = Y or X - Y = -W)
    h_hits    : visited points fixed by (return map) o (reversor)
    points    : the visited points (empty for unresolved orbits)
    """

    seed: LatticePoint
    period: int | None
    s_min: int
    s_max: int
    g_hits: int
    h_hits: int
    points: tuple[LatticePoint, ...]


def _trace_orbit_py(seed: LatticePoint, dom: ReturnDomain, cap: int,
                    phi_cap: int) -> OrbitSummary:
    pts: list[LatticePoint] = []
    W = dom.cls.width
    cur = seed
    s_min = s_max = seed[0] + seed[1]
    g = h = 0
    try:
        while True:
            nxt, _ = phi_with_steps(cur, dom, phi_cap, method="strip")
            i2 = nxt[0] - nxt[1]
            if symmetry_Ge(nxt, dom) == cur:
                h += 1
            if i2 == 0 or i2 == -W:
                g += 1
            S2 = nxt[0] + nxt[1]
            s_min, s_max = min(s_min, S2), max(s_max, S2)
            pts.append(nxt)
            if nxt == seed:
                return OrbitSummary(seed, len(pts), s_min, s_max, g, h, tuple(pts))
            if len(pts) >= cap:
                return OrbitSummary(seed, None, s_min, s_max, g, h, tuple(pts))
            cur = nxt
    except Escaped:
        return OrbitSummary(seed, None, s_min, s_max, g, h, tuple(pts))


def _trace_orbit(seed: LatticePoint, dom: ReturnDomain, cap: int,
                 phi_cap: int) -> OrbitSummary:
    from . import kernels
    lim = _kernel_envelope(dom) if kernels.HAVE_NUMBA else None
    if lim is None:
        return _trace_orbit_py(seed, dom, cap, phi_cap)
    p, q = dom.lam.numerator, dom.lam.denominator
    W = dom.cls.width
    n, s_min, s_max, g, h, status = kernels.orbit_trace(
        seed[0], seed[1], p, q, dom.cls.m_half, W,
        dom.s_lo, dom.s_hi, phi_cap, lim, cap)
    if status == 3:
        return _trace_orbit_py(seed, dom, cap, phi_cap)
    ibuf, sbuf = kernels.orbit_buffers(n)
    pts = tuple(((int(S) + int(i)) // 2, (int(S) - int(i)) // 2)
                for i, S in zip(ibuf[:n], sbuf[:n]))
    period = n if status == 0 else None
    return OrbitSummary(seed, period, int(s_min), int(s_max), g, h, pts)


def trace_orbits(dom: ReturnDomain, A: set[LatticePoint], cap: int = 10**6,
                 phi_cap: int | None = None) -> tuple[list[OrbitSummary], set[LatticePoint], int, int, int]:
    """Trace the return-map orbit of every band point.

    Returns (orbit summaries, closure set, g, h, unresolved) where the
    closure is the union of the closed orbits through A, g counts closure
    points on the symmetry line, h counts closure points fixed by
    (return map) o (reversor), and unresolved counts band seeds whose
    orbit escaped or failed to close within cap.  Unresolved orbits
    contribute nothing to the closure; they are reported, never dropped
    silently.
    """
    if phi_cap is None:
        phi_cap = _default_phi_cap(dom.lam)
    summaries: list[OrbitSummary] = []
    a_bar: set[LatticePoint] = set()
    bad: set[LatticePoint] = set()
    g = h = unresolved = 0
    for seed in sorted(A):
        if seed in a_bar:
            continue
        if seed in bad:
            unresolved += 1
            continue
        summ = _trace_orbit(seed, dom, cap, phi_cap)
        if summ.period is None:
            unresolved += 1
            bad.add(seed)
            bad.update(summ.points)
            summaries.append(OrbitSummary(seed, None, summ.s_min, summ.s_max,
                                          summ.g_hits, summ.h_hits, ()))
        else:
            a_bar.update(summ.points)
            g += summ.g_hits
            h += summ.h_hits
            summaries.append(summ)
    return summaries, a_bar, g, h, unresolved


def closure_A_bar(dom: ReturnDomain, A: set[LatticePoint],
                  cap: int = 10**6) -> tuple[set[LatticePoint], int, int, int]:
    """Smallest return-map-invariant superset of A (union of the closed
    orbits through A), with the symmetry-line count g, the composed-fixed
    count h, and the number of unresolved seeds."""
    _, a_bar, g, h, unresolved = trace_orbits(dom, A, cap)
    return a_bar, g, h, unresolved


# ---------------------------------------------------------------------------
# the unperturbed (continuum) return map and its twist normal form


def unperturbed_return(z: PlanePoint, lam: Fraction) -> PlanePoint:
    """One application of the time-advance return step: flow for time
    (lam - period)/4, a quarter turn backward plus a lam/4 creep."""
    T = period_T(hamiltonian(z))
    return flow_advance(z, (Q(lam) - T) / 4)


def flow_return_time(z: PlanePoint, lam: Fraction) -> int:
    """Steps of the time-advance map until first return to the diagonal
    section, by the exact ceiling formula (verified in tests against a
    brute-force minimal-phase search)."""
    lam = Q(lam)
    alpha = hamiltonian(z)
    cls = class_of(alpha)
    T = period_T(alpha)
    theta = (z[0] - z[1]) / (2 * lam * cls.width)
    return 4 * math.ceil(T / (4 * lam) - theta - Q(3, 4)) + 1


def flow_first_return(z: PlanePoint, lam: Fraction) -> tuple[PlanePoint, int]:
    """Exact first return of the time-advance map to the diagonal section,
    with its return time."""
    lam = Q(lam)
    t = flow_return_time(z, lam)
    T = period_T(hamiltonian(z))
    adv = (t * (lam - T) / 4) % T
    return flow_advance(z, adv), t


def continuum_base(cls: PolygonClass, lam: Fraction) -> PlanePoint:
    """Diagonal point (x0, x0) whose period satisfies the return-phase
    condition exactly: period = lam * (1 + 4j) for an integer j, choosing
    the admissible level closest to the class midpoint."""
    lam = Q(lam)
    if cls.t_prime == 0:
        raise DegenerateTwist(f"twist vanishes on class {cls.e.e}")
    lo, hi, _, _ = _domain_window(cls, lam)
    anchor = Q(cls.e.e + cls.e.next, 2)
    t_anchor = period_T(anchor)
    # T(alpha) = t_anchor + t_prime*(alpha - anchor) spans [T(lo), T(hi)]
    t_ends = sorted((t_anchor + cls.t_prime * (lo - anchor),
                     t_anchor + cls.t_prime * (hi - anchor)))
    j_lo = math.ceil((t_ends[0] / lam - 1) / 4)
    j_hi = math.floor((t_ends[1] / lam - 1) / 4)
    if j_lo > j_hi:
        raise NoSolution(f"no phase-aligned level in class {cls.e.e} at lambda={lam}")
    best = None
    for j in range(j_lo, j_hi + 1):
        alpha = anchor + (lam * (1 + 4 * j) - t_anchor) / cls.t_prime
        d = abs(alpha - anchor)
        if best is None or d < best[0]:
            best = (d, alpha)
    from .integrable import piecewise_P_inv
    x0 = piecewise_P_inv(best[1] / 2)
    return (x0, x0)


def eta_plane(z: PlanePoint, lam: Fraction, cls: PolygonClass,
              x0: Fraction) -> CylinderCoord:
    """Continuum cylinder coordinates about the diagonal base level x0."""
    lam = Q(lam)
    W = cls.width
    return CylinderCoord(theta=(z[0] - z[1]) / (2 * lam * W),
                         rho=(z[0] + z[1] - 2 * x0) / (2 * lam * W))


def section_point(cls: PolygonClass, lam: Fraction, x0: Fraction,
                  theta: Fraction, rho: Fraction) -> PlanePoint:
    """The section point with cylinder coordinates (theta, rho): start on
    the diagonal at action offset rho and flow for time lam*theta."""
    lam = Q(lam)
    xd = x0 + lam * cls.width * Q(rho)
    return flow_advance((xd, xd), lam * Q(theta))


def twist_T(c: CylinderCoord, cls: PolygonClass) -> CylinderCoord:
    """The linear twist normal form of the unperturbed return map:
    (theta, rho) -> (theta + kappa*rho mod 1, rho).

    The positive sign on kappa*rho is the convention the exact conjugacy
    check singles out: with it, eta(flow_first_return(z)) == twist_T(eta(z))
    holds as a rational identity.  The reflected convention belongs to the
    inverse map.
    """
    return CylinderCoord(theta=_wrap_half(c.theta + cls.kappa * c.rho),
                         rho=c.rho)


def twist_reversor(c: CylinderCoord, cls: PolygonClass) -> CylinderCoord:
    """The involution H with twist_T = H o reflect; Fix H is the line
    theta = kappa*rho/2."""
    return CylinderCoord(theta=_wrap_half(-c.theta + cls.kappa * c.rho),
                         rho=c.rho)


def cylinder_reflect(c: CylinderCoord) -> CylinderCoord:
    """The reflection (theta, rho) -> (-theta, rho) on the cylinder."""
    return CylinderCoord(theta=_wrap_half(-c.theta), rho=c.rho)