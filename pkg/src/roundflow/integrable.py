"""The limiting integrable system: piecewise-affine energy, flow, periods, twists.

In the vanishing-rotation limit the round-off map is governed by an exactly
solvable Hamiltonian system on the plane.  The conserved quantity is

    hamiltonian(x, y) = P(x) + P(y),    P(x) = floor(x)^2 + (2*floor(x)+1)*frac(x)

with P the piecewise-affine interpolation of the squared coordinate through
the integers.  Level sets are convex polygons, invariant under the dihedral
symmetries of the square; the time evolution transports points along them
(clockwise) with the piecewise-constant velocity

    field_w(x, y) = (2*floor(y) + 1, -(2*floor(x) + 1)).

Level values that are sums of two integer squares ("critical numbers") give
degenerate polygons passing through grid points, where the flow is undefined;
all such levels are rejected.  Between consecutive critical numbers the
polygon shape is combinatorially constant, which makes the period of the
flow an affine function of the level value there.  Everything below is exact
rational arithmetic except the two explicitly approximate asymptotic helpers
at the bottom.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

Q = Fraction

PlanePoint = tuple[Fraction, Fraction]

# 50 decimal digits of pi as an exact rational, for comparing rational
# period values against the limiting value with error < 1e-49, far below
# every tolerance used in this package.
PI_RATIONAL = Q(31415926535897932384626433832795028841971693993751,
                10**49)


class OnCriticalBoundary(Exception):
    """Raised when an operation needs a non-degenerate level set but the
    given energy is a critical value (a sum of two integer squares)."""


class DegenerateTwist(Exception):
    """Raised when 1/kappa is needed but the twist kappa vanishes."""


class NoSolution(Exception):
    """Raised when an exact solve has no admissible solution."""


# ---------------------------------------------------------------------------
# the piecewise-affine square and its inverse


def floor_sqrt(x) -> int:
    """Largest integer r with r*r <= x, for a nonnegative int or Fraction."""
    if x < 0:
        raise ValueError("floor_sqrt needs a nonnegative argument")
    if isinstance(x, int):
        return math.isqrt(x)
    a, b = x.numerator, x.denominator
    r = math.isqrt(a // b)
    # isqrt of the integer part can be off by one for non-integers
    while (r + 1) * (r + 1) * b <= a:
        r += 1
    while r * r * b > a:
        r -= 1
    return r


def piecewise_P(x: Fraction) -> Fraction:
    """Piecewise-affine square: x^2 at integers, affine in between."""
    x = Q(x)
    m = math.floor(x)
    return m * m + (2 * m + 1) * (x - m)


def piecewise_P_inv(x: Fraction) -> Fraction:
    """Inverse of piecewise_P on the nonnegative axis.

    piecewise_P_inv(piecewise_P(x)) == abs(x) and
    floor(piecewise_P_inv(x)) == floor_sqrt(x), both exactly.
    """
    x = Q(x)
    if x < 0:
        raise ValueError("piecewise_P_inv needs a nonnegative argument")
    r = floor_sqrt(x)
    return (x + r * (1 + r)) / (2 * r + 1)


def hamiltonian(z: PlanePoint) -> Fraction:
    """The conserved energy P(x) + P(y)."""
    return piecewise_P(z[0]) + piecewise_P(z[1])


def field_w(z: PlanePoint) -> tuple[int, int]:
    """Velocity of the flow in the unit box containing z (constant there)."""
    return (2 * math.floor(z[1]) + 1, -(2 * math.floor(z[0]) + 1))


# ---------------------------------------------------------------------------
# critical numbers (sums of two squares) and polygon classes


def is_critical_number(n: int) -> bool:
    """True iff n is a sum of two integer squares (n >= 0)."""
    if n < 0:
        return False
    for a in range(math.isqrt(n) + 1):
        b2 = n - a * a
        r = math.isqrt(b2)
        if r * r == b2:
            return True
    return False


def next_critical(e: int) -> int:
    """Smallest critical number strictly greater than e."""
    n = e + 1
    while not is_critical_number(n):
        n += 1
    return n


def critical_floor(alpha: Fraction) -> int:
    """Largest critical number e with e <= alpha (alpha >= 0)."""
    alpha = Q(alpha)
    if alpha < 0:
        raise ValueError("critical_floor needs a nonnegative argument")
    n = math.floor(alpha)
    while not is_critical_number(n):
        n -= 1
    return n


@dataclass(frozen=True)
class CriticalNumber:
    """A critical number e together with its successor in the sequence.

    The open interval (e, next) contains no sum of two squares; all level
    polygons with value in it share one shape class.
    """

    e: int
    next: int


def critical_number(e) -> CriticalNumber:
    """Build the CriticalNumber record for e (validating criticality)."""
    if isinstance(e, CriticalNumber):
        return e
    if not is_critical_number(e):
        raise ValueError(f"{e} is not a sum of two squares")
    return CriticalNumber(e=e, next=next_critical(e))


def _e_value(e) -> int:
    return e.e if isinstance(e, CriticalNumber) else e


def _is_critical_level(alpha: Fraction) -> bool:
    return alpha.denominator == 1 and is_critical_number(alpha.numerator)


# ---------------------------------------------------------------------------
# traversal period of the flow and its derivative on a class


@lru_cache(maxsize=4096)
def period_T(alpha: Fraction) -> Fraction:
    """Time for the flow to traverse the level polygon of value alpha once.

    Exact rational, defined for non-critical alpha > 0.  The value is
    8 * (x_d / (2*r_h + 1) - 2 * sum of corner corrections), where x_d is
    the coordinate of the diagonal crossing, r_h = floor_sqrt(alpha/2),
    and the sum runs over the polygon corners strictly between the
    diagonal and the axis.  Cross-checked exactly against traverse_time.
    """
    alpha = Q(alpha)
    if alpha <= 0 or _is_critical_level(alpha):
        raise OnCriticalBoundary(f"no traversal period at level {alpha}")
    rh = floor_sqrt(alpha / 2)
    rf = floor_sqrt(alpha)
    total = piecewise_P_inv(alpha / 2) / (2 * rh + 1)
    for n in range(rh + 1, rf + 1):
        total -= 2 * piecewise_P_inv(alpha - n * n) / (4 * n * n - 1)
    return 8 * total


def period_T_prime(e) -> Fraction:
    """Slope of the (affine) period on the class interval of e.

    Exact rational.  Tends to 0 as e grows; the period itself tends to pi.
    """
    e = _e_value(e)
    if not is_critical_number(e):
        raise ValueError(f"{e} is not a sum of two squares")
    rh = floor_sqrt(Q(e, 2))
    rf = floor_sqrt(e)
    total = Q(1, (2 * rh + 1) ** 2)
    for n in range(rh + 1, rf + 1):
        total -= Q(4, (4 * n * n - 1) * (2 * floor_sqrt(e - n * n) + 1))
    return 4 * total


def twist_kappa(e) -> Fraction:
    """Twist coefficient of the class: -(1/2) * width^2 * period_T_prime(e),
    where width = 2*floor_sqrt(e/2) + 1 counts boxes along the diagonal."""
    e = _e_value(e)
    w = 2 * floor_sqrt(Q(e, 2)) + 1
    return -Q(w * w, 2) * period_T_prime(e)


def rho_star(e) -> Fraction:
    """Reciprocal twist: the shear period of the return dynamics in the
    action direction."""
    k = twist_kappa(e)
    if k == 0:
        raise DegenerateTwist(f"twist vanishes on class {_e_value(e)}")
    return 1 / k


@dataclass(frozen=True)
class PolygonClass:
    """Exact derived constants of one class of level polygons.

    e         : CriticalNumber record (e.e, e.next) = the open class interval
    m_half    : floor_sqrt(e/2); the strip width is 2*m_half + 1
    n_full    : floor_sqrt(e), index of the last octant corner
    t_prime   : d(period)/d(level) on the interval
    kappa     : twist coefficient, -(1/2)*(2*m_half+1)^2 * t_prime
    rho_star  : 1/kappa, or None when kappa == 0 (degenerate twist)
    """

    e: CriticalNumber
    m_half: int
    n_full: int
    t_prime: Fraction
    kappa: Fraction
    rho_star: Fraction | None

    @property
    def width(self) -> int:
        """Lattice width of the diagonal strip, 2*m_half + 1."""
        return 2 * self.m_half + 1

    @property
    def interval(self) -> tuple[Fraction, Fraction]:
        return (Q(self.e.e), Q(self.e.next))

    @property
    def shear(self) -> Fraction:
        if self.rho_star is None:
            raise DegenerateTwist(f"twist vanishes on class {self.e.e}")
        return self.rho_star

    def period_at(self, alpha: Fraction) -> Fraction:
        """Traversal period at a level of this class, by affinity."""
        alpha = Q(alpha)
        if not self.e.e < alpha < self.e.next:
            raise ValueError(f"level {alpha} is not in ({self.e.e}, {self.e.next})")
        anchor = Q(self.e.e + self.e.next, 2)
        return period_T(anchor) + self.t_prime * (alpha - anchor)


def polygon_class(e) -> PolygonClass:
    """PolygonClass record for the critical number e."""
    cn = critical_number(e)
    tp = period_T_prime(cn.e)
    w = 2 * floor_sqrt(Q(cn.e, 2)) + 1
    kap = -Q(w * w, 2) * tp
    return PolygonClass(
        e=cn,
        m_half=floor_sqrt(Q(cn.e, 2)),
        n_full=floor_sqrt(cn.e),
        t_prime=tp,
        kappa=kap,
        rho_star=None if kap == 0 else 1 / kap,
    )


def class_of(alpha: Fraction) -> PolygonClass:
    """The polygon class whose open interval contains the level alpha."""
    alpha = Q(alpha)
    if alpha <= 0 or _is_critical_level(alpha):
        raise OnCriticalBoundary(f"level {alpha} lies on a class boundary")
    return polygon_class(critical_floor(alpha))


def class_at(n: int, b: Fraction) -> CriticalNumber:
    """Critical number e(n, b) of the class reached by the level (n+b)^2.

    For b = 0 the level is the critical number n^2 itself and that is
    returned; for 0 < b < 1 the class is the one whose open interval
    contains (n+b)^2.
    """
    b = Q(b)
    if not 0 <= b < 1:
        raise ValueError("offset must lie in [0, 1)")
    if n < 1:
        raise ValueError("n must be positive")
    alpha = (n + b) ** 2
    return critical_number(critical_floor(alpha))


# ---------------------------------------------------------------------------
# level polygons and the flow along them


def polygon_vertices(alpha: Fraction) -> list[PlanePoint]:
    """Vertices of the level polygon of alpha, counterclockwise.

    Vertices are exactly the crossings of the polygon with the integer
    grid lines.  On a non-critical level no crossing is a grid point, so
    each vertex lies on exactly one grid line and the count is 8*r + 4
    with r = floor_sqrt(alpha).
    """
    alpha = Q(alpha)
    if alpha <= 0 or _is_critical_level(alpha):
        raise OnCriticalBoundary(f"level {alpha} is degenerate")
    r = floor_sqrt(alpha)
    quarter: list[PlanePoint] = []
    for n in range(r + 1):
        rest = alpha - n * n
        if n > 0:
            quarter.append((Q(n), piecewise_P_inv(rest)))   # crossing of x = n
        quarter.append((piecewise_P_inv(rest), Q(n)))       # crossing of y = n
    # Off critical levels the first-quadrant x values are pairwise distinct,
    # so descending x orders the arc counterclockwise from the x-axis.  The
    # y-axis crossing is supplied by the rotation of the x-axis one.
    quarter.sort(key=lambda v: v[0], reverse=True)
    out: list[PlanePoint] = []
    out.extend(quarter)
    out.extend((-y, x) for (x, y) in quarter)       # second quadrant
    out.extend((-x, -y) for (x, y) in quarter)      # third
    out.extend((y, -x) for (x, y) in quarter)       # fourth
    return out


def _motion_box(x: Fraction, y: Fraction, sgn: int) -> tuple[int, int]:
    """Unit box (m, n) whose field moves (x, y) with time sign sgn.

    On a grid line the box is chosen so the signed velocity points into
    it.  Grid points (corners) only occur on critical levels and are
    rejected by the callers before we get here.
    """
    xi, yi = x.denominator == 1, y.denominator == 1
    if xi and yi:
        raise OnCriticalBoundary(f"flow hit the grid point ({x}, {y})")
    if not xi and not yi:
        return (math.floor(x), math.floor(y))
    if xi:
        n = math.floor(y)
        vx = sgn * (2 * n + 1)
        m = int(x) if vx > 0 else int(x) - 1
        return (m, n)
    m = math.floor(x)
    vy = sgn * (-(2 * m + 1))
    n = int(y) if vy > 0 else int(y) - 1
    return (m, n)


def flow_advance(z: PlanePoint, t: Fraction) -> PlanePoint:
    """Exact time-t flow along the level polygon through z (t of either sign).

    Walks the polygon segment by segment; each segment crossing is an
    exact rational event time, so the result is exact.  Raises
    OnCriticalBoundary for degenerate levels.
    """
    x, y = Q(z[0]), Q(z[1])
    alpha = piecewise_P(x) + piecewise_P(y)
    if alpha <= 0 or _is_critical_level(alpha):
        raise OnCriticalBoundary(f"no flow on level {alpha}")
    rem = Q(t)
    while rem != 0:
        sgn = 1 if rem > 0 else -1
        m, n = _motion_box(x, y, sgn)
        vx = sgn * (2 * n + 1)
        vy = sgn * (-(2 * m + 1))
        # exit times of the current box in each coordinate
        dtx = ((m + 1) - x) / vx if vx > 0 else (m - x) / vx
        dty = ((n + 1) - y) / vy if vy > 0 else (n - y) / vy
        dt = min(dtx, dty)
        # a simultaneous exit is a corner hit, impossible off critical levels
        assert dtx != dty, "corner contact on a non-critical level"
        if dt >= abs(rem):
            return (x + vx * abs(rem), y + vy * abs(rem))
        x, y = x + vx * dt, y + vy * dt
        rem -= sgn * dt
    return (x, y)


def _next_crossing(x: Fraction, y: Fraction) -> tuple[PlanePoint, Fraction]:
    """Forward flow from (x, y) to the next grid-line crossing; returns
    the crossing and the (positive) time to reach it."""
    m, n = _motion_box(x, y, 1)
    vx, vy = 2 * n + 1, -(2 * m + 1)
    dtx = ((m + 1) - x) / vx if vx > 0 else (m - x) / vx
    dty = ((n + 1) - y) / vy if vy > 0 else (n - y) / vy
    dt = min(dtx, dty)
    assert dtx != dty, "corner contact on a non-critical level"
    return (x + vx * dt, y + vy * dt), dt


def traverse_time(z: PlanePoint) -> Fraction:
    """Time for the flow to first return to z, measured by walking the
    polygon segment by segment.  Independent of the period formula; the
    two are cross-checked in the tests."""
    x, y = Q(z[0]), Q(z[1])
    alpha = piecewise_P(x) + piecewise_P(y)
    if alpha <= 0 or _is_critical_level(alpha):
        raise OnCriticalBoundary(f"no flow on level {alpha}")
    # advance to the first crossing, then time whole segments around the loop
    start, _ = _next_crossing(x, y)
    pos, total = _next_crossing(*start)
    guard = 10 * (8 * floor_sqrt(alpha) + 4)
    while pos != start:
        pos, dt = _next_crossing(*pos)
        total += dt
        guard -= 1
        assert guard > 0, "traversal did not close"
    return total


# ---------------------------------------------------------------------------
# asymptotic (floating-point) helpers for the large-energy regime


def asymptotic_profile(b: float) -> float:
    """Limit of n^(3/2) * (period_T((n+b)^2) - pi) / 4 as n grows, 0 <= b < 1."""
    if not 0 <= b < 1:
        raise ValueError("profile offset must lie in [0, 1)")
    return (2 * b + 1) ** 1.5 / 3 - math.sqrt(2 * b)


def approx_rho_star(n: int, b: float) -> float:
    """Large-n approximation of rho_star on the class of (n+b)^2, 0 < b < 1.

    Not valid uniformly in b: it blows up near the root of
    sqrt(2b+1) = 1/sqrt(2b) (b ~ 0.309) and near b = 0, where the exact
    value tends to +1/4 instead.
    """
    if not 0 < b < 1:
        raise ValueError("offset must lie in (0, 1)")
    return -(math.sqrt(n) / 2) / (math.sqrt(2 * b + 1) - 1 / math.sqrt(2 * b))