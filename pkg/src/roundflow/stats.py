"""Periodic-orbit statistics and the agreement-density count.

Converts raw orbit traces into per-orbit records, aggregates them into the
scaled empirical period distribution D with its reference law
R(x) = 1 - e^{-x}(1+x), computes excursion and symmetry statistics, and
counts exactly (by residue decomposition, no orbit iteration) the density
of lattice points on which four map steps equal one field step.

All counts, the scale gamma and the excursion ranges are exact rationals;
only the distribution's evaluation grid and the L1 gap are floating point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .lattice import LatticePoint, Unresolved
from .integrable import PolygonClass
from .returnmap import OrbitSummary

Q = Fraction


class EmptyInput(Exception):
    """A statistic was requested over no (resolved) records."""


class RegionTooLarge(Exception):
    """The agreement count would exceed its configured work budget."""


@dataclass(frozen=True)
class OrbitRecord:
    """One return-map orbit.

    period     : orbit length in return-map steps, or Unresolved
    symmetric  : the orbit set is invariant under the reversor (detected
                 by meeting Fix G ∪ Fix(Phi o G))
    rho_range  : extent of rho visited along the orbit (Delta rho >= 0)
    nu_range   : rho_range / |rho_star|, the unreduced rotation-number
                 excursion (not taken mod 1: observed ranges exceed 1/2)
    critical   : the trace failed to close (escaped or hit its cap);
                 such orbits carry no statistics weight
    """

    seed: LatticePoint
    period: int | Unresolved
    symmetric: bool
    rho_range: Fraction
    nu_range: Fraction
    critical: bool


def records_from_orbits(summaries: list[OrbitSummary], cls: PolygonClass,
                        cap: int) -> list[OrbitRecord]:
    """Per-orbit records from raw traces; needs the class for the width
    normalisation and the fundamental length."""
    W = cls.width
    rs = abs(cls.rho_star) if cls.rho_star is not None else None
    out = []
    for s in summaries:
        rho_range = Q(s.s_max - s.s_min, 2 * W)
        nu_range = rho_range / rs if rs is not None else Q(0)
        unresolved = s.period is None
        out.append(OrbitRecord(
            seed=s.seed,
            period=Unresolved(cap) if unresolved else s.period,
            symmetric=(s.g_hits + s.h_hits) > 0,
            rho_range=rho_range,
            nu_range=nu_range,
            critical=unresolved,
        ))
    return out


def _resolved(records: list[OrbitRecord]) -> list[OrbitRecord]:
    return [r for r in records if isinstance(r.period, int)]


def gamma_law(x) -> float:
    """The reference period-distribution law R(x) = 1 - e^{-x}(1 + x)."""
    x = float(x)
    if x < 0:
        raise ValueError("the law is defined for x >= 0")
    return -math.expm1(-x) - x * math.exp(-x)


# evaluation grid for D and the L1 gap: 0, 0.05, ..., 16
GRID = tuple(Q(k, 20) for k in range(321))


@dataclass(frozen=True)
class DistributionReport:
    """Aggregated period-distribution experiment.

    The step parameter field is named lam (`lambda` is reserved).  gamma
    is the exact scale 2 * count_A_bar / (g + h); samples tabulate the
    step function D on the fixed grid; l1_gap integrates |R - D| over
    [0, 16] by the trapezoid rule on that grid.
    """

    e: int | None
    m: int | None
    lam: Fraction | None
    count_A: int | None
    count_A_bar: int
    g: int
    h: int
    gamma: Fraction
    samples: tuple[tuple[float, float], ...]
    l1_gap: float
    symmetric_fraction: float
    unresolved: int


def period_distribution(records: list[OrbitRecord], g: int, h: int, *,
                        e: int | None = None, m: int | None = None,
                        lam: Fraction | None = None,
                        count_A: int | None = None) -> DistributionReport:
    """Scaled empirical distribution of orbit periods, point-weighted.

    D(x) = (number of closure points whose orbit period is <= gamma*x)
    divided by the closure size; each orbit contributes its length.
    Unresolved records are excluded from D and reported by count.
    """
    res = _resolved(records)
    if not res:
        raise EmptyInput("no resolved orbit records")
    if g + h <= 0:
        raise EmptyInput("no symmetry-line points: gamma undefined")
    count = sum(r.period for r in res)
    gamma = Q(2 * count, g + h)
    # point-weighted cumulative counts of tau <= gamma*x, exact compare
    taus = sorted((r.period, r.period) for r in res)  # (tau, weight)
    samples = []
    acc = 0
    k = 0
    for x in GRID:
        bound = gamma * x
        while k < len(taus) and taus[k][0] <= bound:
            acc += taus[k][1]
            k += 1
        samples.append((float(x), acc / count))
    l1 = 0.0
    prev = None
    for (x, d) in samples:
        gap = abs(gamma_law(x) - d)
        if prev is not None:
            l1 += 0.5 * (prev + gap) * 0.05
        prev = gap
    sym = symmetric_fraction(records)
    return DistributionReport(
        e=e, m=m, lam=lam, count_A=count_A, count_A_bar=count,
        g=g, h=h, gamma=gamma, samples=tuple(samples), l1_gap=l1,
        symmetric_fraction=sym,
        unresolved=sum(1 for r in records if not isinstance(r.period, int)))


@dataclass(frozen=True)
class ExcursionStats:
    """Point-weighted medians and maxima of the orbit excursion ranges."""

    median_rho: Fraction
    max_rho: Fraction
    median_nu: Fraction
    max_nu: Fraction


def excursion_stats(records: list[OrbitRecord],
                    weight: str = "points") -> ExcursionStats:
    """Medians and maxima of Delta-rho and Delta-nu over the closure.

    weight="points" (the default) weights each orbit by its length, i.e.
    by the fraction of closure points sampled from it; weight="orbits"
    counts each orbit once (for comparison only).
    """
    res = _resolved(records)
    if not res:
        raise EmptyInput("no resolved orbit records")
    if weight not in ("points", "orbits"):
        raise ValueError("weight must be 'points' or 'orbits'")

    def wmedian(pairs):
        pairs = sorted(pairs)
        total = sum(w for _, w in pairs)
        acc = 0
        for v, w in pairs:
            acc += 2 * w
            if acc >= total:
                return v
        return pairs[-1][0]

    wts = [(r.period if weight == "points" else 1) for r in res]
    rho = [(r.rho_range, w) for r, w in zip(res, wts)]
    nu = [(r.nu_range, w) for r, w in zip(res, wts)]
    return ExcursionStats(
        median_rho=wmedian(rho), max_rho=max(v for v, _ in rho),
        median_nu=wmedian(nu), max_nu=max(v for v, _ in nu))


def symmetric_fraction(records: list[OrbitRecord]) -> float:
    """Fraction of closure points lying on reversor-invariant orbits."""
    res = _resolved(records)
    if not res:
        raise EmptyInput("no resolved orbit records")
    total = sum(r.period for r in res)
    sym = sum(r.period for r in res if r.symmetric)
    return sym / total


# ---------------------------------------------------------------------------
# agreement density, counted exactly by residue decomposition


def _floor_segments(a: int, s: int, b: int, lo: int, hi: int):
    """Segments of constant floor((a + s*t) / b) for integer t in [lo, hi].

    Yields (seg_lo, seg_hi, value); s is nonzero, b positive.  The number
    of segments is 1 + |s|*(hi - lo)/b, small for every caller here.
    """
    t = lo
    while t <= hi:
        v = (a + s * t) // b
        if s > 0:
            # largest t' with a + s t' < (v+1) b
            t2 = ((v + 1) * b - 1 - a) // s
        else:
            # largest t' with a + s t' >= v b  (floor still v)
            t2 = (a - v * b) // (-s)
        t2 = min(t2, hi)
        yield t, t2, v
        t = t2 + 1


def agreement_density(r, lam: Fraction, box_budget: int = 10**6) -> Fraction:
    """Exact fraction of lattice points z with ||lambda z||_inf < r on
    which four map steps equal one field step (F^4(z) = z + w of z's box).

    The count decomposes each unit box into at most a handful of residue
    rectangles on which the four floor values are constant, so the cost
    grows with the squared number of boxes, never with the lattice size.
    Raises RegionTooLarge when the box grid exceeds box_budget cells.
    """
    r = Q(r)
    if r <= 0:
        raise ValueError("r must be positive")
    lam = Q(lam)
    p, q = lam.numerator, lam.denominator
    xmax = math.ceil(r * q / p) - 1  # |X| <= xmax iff |lambda X| < r
    if xmax < 0:
        return Q(0)
    m_lo, m_hi = (-p * xmax) // q, (p * xmax) // q
    nbox = m_hi - m_lo + 1
    if nbox * nbox > box_budget:
        raise RegionTooLarge(f"{nbox}^2 boxes exceed the budget {box_budget}")

    def box_range(b: int) -> tuple[int, int]:
        lo = -((-b * q) // p)  # ceil(b q / p)
        hi = -((-(b + 1) * q) // p) - 1
        return max(lo, -xmax), min(hi, xmax)

    agree = 0
    for bm in range(m_lo, m_hi + 1):
        x_lo, x_hi = box_range(bm)
        if x_lo > x_hi:
            continue
        for bn in range(m_lo, m_hi + 1):
            y_lo, y_hi = box_range(bn)
            if y_lo > y_hi:
                continue
            wx, wy = 2 * bn + 1, -(2 * bm + 1)
            # d0 = bm on the whole box; split the rest by their floors
            for (y1, y2, d1) in _floor_segments(p * bm, -p, q, y_lo, y_hi):
                for (x1, x2, d2) in _floor_segments(p * d1, -p, q, x_lo, x_hi):
                    if d2 - bm != wy:
                        continue
                    for (y3, y4, d3) in _floor_segments(p * (d2 - bm), p, q, y1, y2):
                        if d3 - d1 == wx:
                            agree += (x2 - x1 + 1) * (y4 - y3 + 1)
    total = 2 * xmax + 1
    return Q(agree, total * total)