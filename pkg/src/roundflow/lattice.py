"""Exact integer dynamics of the round-off rotation on a lattice.

States are integer pairs (X, Y) standing for the plane point lambda*(X, Y)
with lambda = p/q > 0 a rational in lowest terms.  A single step of the
map F is

    (X, Y)  ->  (floor(p*X / q) - Y, X)

which is the round-off rotation in rescaled coordinates; the rescaling never
enters the iteration, only the interpretation of states.  Everything in this
module is exact arithmetic on arbitrary-precision ints.

F is invertible, and conjugate to its inverse by the coordinate swap
G(X, Y) = (Y, X), so orbits come in symmetric pairs.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

Q = Fraction

LatticePoint = tuple[int, int]

# Iteration guard for orbit scans.  Desk-scale orbits close far below this.
DEFAULT_CAP = 10**9


def floor_div(a: int, b: int) -> int:
    """Floor of a/b, flooring toward -inf. b must be positive."""
    if b <= 0:
        raise ValueError("floor_div needs a positive divisor")
    return a // b


def map_F(z: LatticePoint, lam: Fraction) -> LatticePoint:
    """One application of the round-off rotation F."""
    p, q = lam.numerator, lam.denominator
    X, Y = z
    return (p * X // q - Y, X)


def map_F_inv(z: LatticePoint, lam: Fraction) -> LatticePoint:
    """Inverse of F; map_F_inv(map_F(z, lam), lam) == z exactly."""
    p, q = lam.numerator, lam.denominator
    X, Y = z
    return (Y, p * Y // q - X)


def symmetry_G(z: LatticePoint) -> LatticePoint:
    """The reversing symmetry G(X, Y) = (Y, X); an involution with
    G o F o G = F^-1."""
    return (z[1], z[0])


def iterate_F(z: LatticePoint, lam: Fraction, n: int) -> LatticePoint:
    """n-fold composition of map_F (n >= 0), or of map_F_inv for n < 0."""
    f = map_F if n >= 0 else map_F_inv
    for _ in range(abs(n)):
        z = f(z, lam)
    return z


def discrete_field_v(z: LatticePoint, lam: Fraction) -> tuple[int, int]:
    """Net displacement of four steps, F^4(z) - z, in lattice units.

    Away from box boundaries this equals the local value of the
    piecewise-constant guiding field (integrable.field_w); near them it
    picks up round-off defects.
    """
    u = iterate_F(z, lam, 4)
    return (u[0] - z[0], u[1] - z[1])


@dataclass(frozen=True)
class Unresolved:
    """Marker for an orbit scan that hit its iteration cap without closing."""

    cap: int


def orbit_period(z: LatticePoint, lam: Fraction, cap: int = DEFAULT_CAP):
    """Minimal t >= 1 with F^t(z) = z, or Unresolved(cap).

    Cycle detection stores only the seed: all orbits are expected to be
    periodic, so the first revisit of the seed closes the cycle.  Memory
    is O(1) per orbit.  Unresolved is an outcome, not an error; callers
    must surface it.
    """
    if cap < 1:
        raise ValueError("cap must be >= 1")
    u = map_F(z, lam)
    t = 1
    while u != z:
        if t >= cap:
            return Unresolved(cap)
        u = map_F(u, lam)
        t += 1
    return t


def orbit_points(z: LatticePoint, lam: Fraction, cap: int = DEFAULT_CAP) -> list[LatticePoint]:
    """The full orbit of z as a list [z, F(z), ...], if it closes within cap."""
    pts = [z]
    u = map_F(z, lam)
    while u != z:
        if len(pts) >= cap:
            raise RuntimeError(f"orbit did not close within {cap} steps")
        pts.append(u)
        u = map_F(u, lam)
    return pts
