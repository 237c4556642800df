"""Level geometry, the traversal period and per-class constants.

Closed-form values are pinned against independent routes: segment
walking for the period, finite differences for its slope, and a literal
two-squares scan for the critical numbers (regenerated by
scripts/oracle_flow_period.py).
"""

import math
import random
from fractions import Fraction as Q

import pytest
from hypothesis import given
from hypothesis import strategies as st

from roundflow.integrable import (
    CriticalNumber,
    OnCriticalBoundary,
    asymptotic_profile,
    class_at,
    class_of,
    critical_floor,
    critical_number,
    field_w,
    floor_sqrt,
    flow_advance,
    hamiltonian,
    is_critical_number,
    next_critical,
    period_T,
    period_T_prime,
    piecewise_P,
    piecewise_P_inv,
    polygon_class,
    polygon_vertices,
    rho_star,
    traverse_time,
    twist_kappa,
)

fractions = st.fractions(min_value=Q(-10**4), max_value=Q(10**4),
                         max_denominator=10**4)


# ---------------------------------------------------------------------------
# the piecewise square and its inverse


@given(fractions)
def test_P_inverts_to_absolute_value(x):
    assert piecewise_P_inv(piecewise_P(x)) == abs(x)


@given(st.fractions(min_value=Q(0), max_value=Q(10**6), max_denominator=10**4))
def test_P_inv_floor_is_integer_square_root(x):
    assert math.floor(piecewise_P_inv(x)) == floor_sqrt(x)


@given(st.fractions(min_value=Q(0), max_value=Q(10**4), max_denominator=100),
       st.fractions(min_value=Q(0), max_value=Q(10**4), max_denominator=100))
def test_P_is_strictly_increasing(a, b):
    if a != b:
        lo, hi = min(a, b), max(a, b)
        assert piecewise_P(lo) < piecewise_P(hi)


def test_floor_sqrt_rejects_negative():
    with pytest.raises(ValueError):
        floor_sqrt(-1)
    with pytest.raises(ValueError):
        floor_sqrt(Q(-1, 3))


# ---------------------------------------------------------------------------
# critical numbers


def _brute_critical(n):
    return any(a * a + b * b == n
               for a in range(int(math.isqrt(n)) + 1)
               for b in range(a, int(math.isqrt(n)) + 1))


def test_critical_numbers_match_two_squares_scan():
    for n in range(0, 600):
        assert is_critical_number(n) == _brute_critical(n), n


def test_next_critical_is_least_upper():
    for e in range(0, 200):
        if not is_critical_number(e):
            continue
        nxt = next_critical(e)
        assert nxt > e and is_critical_number(nxt)
        assert not any(is_critical_number(k) for k in range(e + 1, nxt))


def test_critical_floor():
    assert critical_floor(Q(3)) == 2
    assert critical_floor(Q(10000)) == 10000
    assert critical_floor(Q(19999, 2)) == 9997  # 9998 = 2 * 4999 is not
    with pytest.raises(ValueError):
        critical_floor(Q(-1))


def test_critical_number_validates():
    cn = critical_number(10000)
    assert cn == CriticalNumber(e=10000, next=10001)
    assert critical_number(cn) is cn
    with pytest.raises(ValueError):
        critical_number(3)  # not a sum of two squares


# ---------------------------------------------------------------------------
# the traversal period


def test_period_anchor_values():
    assert period_T(Q(1, 2)) == 2
    assert period_T(Q(3)) == Q(28, 9)


def test_period_slope_anchor_values():
    assert period_T_prime(1) == Q(-4, 3)
    assert period_T_prime(2) == Q(4, 9)
    assert period_T_prime(5) == Q(4, 45)
    assert period_T_prime(25) == Q(-188, 1617)


def test_period_rejects_critical_levels():
    for bad in [Q(0), Q(-3), Q(4), Q(10000)]:
        with pytest.raises(OnCriticalBoundary):
            period_T(bad)
    with pytest.raises(ValueError):
        period_T_prime(3)


def test_period_equals_segment_walk():
    rng = random.Random(1)
    done = 0
    while done < 10:
        alpha = Q(rng.randrange(1, 4000), rng.choice([7, 64, 1000]))
        try:
            want = period_T(alpha)
        except OnCriticalBoundary:
            continue
        x = piecewise_P_inv(alpha / 2)
        assert traverse_time((x, x)) == want
        done += 1


def test_period_slope_equals_finite_difference():
    for e in [1, 2, 5, 10, 25, 100]:
        lo, hi = polygon_class(e).interval
        a1 = Q(3 * lo + hi, 4)
        a2 = Q(lo + 3 * hi, 4)
        fd = (period_T(a2) - period_T(a1)) / (a2 - a1)
        assert fd == period_T_prime(e)


def test_period_at_matches_formula():
    cls = polygon_class(25)
    mid = Q(51, 2)
    assert cls.period_at(mid) == period_T(mid)
    with pytest.raises(ValueError):
        cls.period_at(Q(27))


# ---------------------------------------------------------------------------
# the flow on level polygons


@given(st.fractions(min_value=Q(1, 9), max_value=Q(200), max_denominator=97),
       st.fractions(min_value=Q(-2), max_value=Q(2), max_denominator=64))
def test_flow_conserves_level(alpha, t):
    try:
        x = piecewise_P_inv(alpha / 2)
        z = (x, x)
        assert hamiltonian(flow_advance(z, t)) == alpha
    except OnCriticalBoundary:
        pass  # critical level drawn: the flow is undefined there


def test_flow_closes_after_one_period():
    for alpha in [Q(1, 2), Q(7, 2), Q(101, 7)]:
        x = piecewise_P_inv(alpha / 2)
        assert flow_advance((x, x), period_T(alpha)) == (x, x)
        assert flow_advance((x, x), -period_T(alpha)) == (x, x)


def test_polygon_vertices_count_and_level():
    for alpha in [Q(1, 2), Q(3), Q(21, 2), Q(1001, 10)]:
        vs = polygon_vertices(alpha)
        assert len(vs) == 8 * floor_sqrt(alpha) + 4
        assert len(set(vs)) == len(vs)
        assert all(hamiltonian(v) == alpha for v in vs)


def test_field_values():
    assert field_w((Q(3, 2), Q(1, 2))) == (1, -3)    # box (1, 0)
    assert field_w((Q(-1, 2), Q(5, 2))) == (5, 1)    # box (-1, 2)


# ---------------------------------------------------------------------------
# classes and their constants


def test_class_records():
    cls = polygon_class(10000)
    assert cls.width == 141 and cls.m_half == 70 and cls.n_full == 100
    assert cls.interval == (Q(10000), Q(10001))
    assert cls.kappa == -Q(cls.width ** 2, 2) * cls.t_prime
    assert cls.rho_star == 1 / cls.kappa
    assert twist_kappa(10000) == cls.kappa
    assert rho_star(10000) == cls.rho_star


def test_twist_anchor_values():
    assert twist_kappa(1) == Q(2, 3) and rho_star(1) == Q(3, 2)
    assert twist_kappa(2) == -2 and rho_star(2) == Q(-1, 2)
    assert twist_kappa(25) == Q(94, 33)


def test_class_of_levels():
    assert class_of(Q(3)).e.e == 2
    assert class_of(Q(20001, 2)).e.e == 10000
    with pytest.raises(OnCriticalBoundary):
        class_of(Q(4))


def test_class_at_grid():
    assert class_at(100, Q(0)).e == 10000
    assert class_at(400, Q(3, 10)).e == 160234
    cn = class_at(7, Q(1, 3))
    assert cn.e <= (7 + Q(1, 3)) ** 2 < cn.next
    with pytest.raises(ValueError):
        class_at(7, Q(3, 2))
    with pytest.raises(ValueError):
        class_at(0, Q(1, 2))


def test_asymptotic_profile():
    assert asymptotic_profile(0.0) == pytest.approx(1 / 3, abs=1e-15)
    with pytest.raises(ValueError):
        asymptotic_profile(1.0)
    with pytest.raises(ValueError):
        asymptotic_profile(-0.1)
