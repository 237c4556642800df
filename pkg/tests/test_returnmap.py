"""The strip domain, the two first-return routes, orbit tracing, and the
continuum return with its twist normal form.

Every fast route is checked against its defining slow route on the same
inputs: strip transits vs literal iteration, the compiled kernels vs the
Python tracer, the return-time formula vs a brute minimal-phase search,
and the closure counts vs a recount from the raw orbits (regenerated by
scripts/oracle_return_map.py).
"""

import math
import random
from fractions import Fraction as Q

import pytest

from roundflow import kernels
from roundflow.integrable import hamiltonian, period_T, polygon_class
from roundflow.lattice import iterate_F
from roundflow.returnmap import (
    CapExceeded,
    CylinderCoord,
    Escaped,
    LambdaTooLarge,
    _band_window,
    _trace_orbit,
    _trace_orbit_py,
    _wrap_half,
    box_of,
    build_A,
    closure_A_bar,
    continuum_base,
    cylinder_reflect,
    eta,
    eta_plane,
    flow_advance,
    flow_first_return,
    flow_return_time,
    fundamental_index,
    in_domain_Xe,
    is_transition,
    make_return_domain,
    phi_with_steps,
    return_map_Phi,
    rotation_number,
    section_point,
    strip_map,
    symmetry_Ge,
    trace_orbits,
    twist_T,
    twist_reversor,
)


def random_member(rng, dom):
    W = dom.cls.width
    for _ in range(10000):
        S = rng.randrange(dom.s_lo, dom.s_hi + 1)
        i = rng.randrange(-W, W)
        if (S - i) % 2:
            continue
        z = ((S + i) // 2, (S - i) // 2)
        if in_domain_Xe(z, dom):
            return z
    raise RuntimeError("no member found")


@pytest.fixture(scope="module")
def dom5():
    return make_return_domain(polygon_class(5), Q(1, 211))


@pytest.fixture(scope="module")
def dom100():
    return make_return_domain(polygon_class(100), Q(1, 1000))


# ---------------------------------------------------------------------------
# domain geometry and cylinder coordinates


def test_domain_base_point(dom5):
    X0, Y0 = dom5.base_point
    assert X0 == Y0
    assert in_domain_Xe(dom5.base_point, dom5)
    c = eta(dom5.base_point, dom5)
    assert (c.theta, c.rho) == (0, 0)


def test_base_point_level_is_admitted(dom5):
    x0 = dom5.lam * dom5.base_point[0]
    alpha = hamiltonian((x0, x0))
    assert dom5.interval[0] <= alpha <= dom5.interval[1]
    lo, hi = dom5.cls.interval
    assert lo < alpha < hi


def test_eta_ranges(dom5):
    rng = random.Random(2)
    W = dom5.cls.width
    for _ in range(40):
        z = random_member(rng, dom5)
        c = eta(z, dom5)
        assert -Q(1, 2) <= c.theta < Q(1, 2)
        assert c.theta == Q(z[0] - z[1], 2 * W)
        assert c.rho == Q(z[0] + z[1] - 2 * dom5.base_point[0], 2 * W)


def test_rotation_number_wrap(dom5):
    rng = random.Random(3)
    rs = dom5.cls.rho_star
    for _ in range(25):
        z = random_member(rng, dom5)
        nu_full = eta(z, dom5).rho / rs
        assert rotation_number(z, dom5) == _wrap_half(nu_full)
        assert fundamental_index(z, dom5) + rotation_number(z, dom5) == nu_full


def test_wrap_half_range():
    for num in range(-40, 40):
        u = Q(num, 8)
        w = _wrap_half(u)
        assert -Q(1, 2) <= w < Q(1, 2)
        assert (u - w).denominator == 1


def test_symmetry_Ge(dom5):
    rng = random.Random(4)
    W = dom5.cls.width
    for _ in range(20):
        z = random_member(rng, dom5)
        u = symmetry_Ge(z, dom5)
        assert symmetry_Ge(u, dom5) == z
    # the identified edge is fixed pointwise
    edge = (10, 10 + W)
    assert symmetry_Ge(edge, dom5) == edge
    with pytest.raises(ValueError):
        symmetry_Ge((dom5.base_point[0] + 2 * W, dom5.base_point[0]), dom5)


def test_domain_rejects_bad_bases(dom5):
    cls = dom5.cls
    with pytest.raises(ValueError):
        make_return_domain(cls, dom5.lam,
                           base_point=(dom5.base_point[0], dom5.base_point[0] + 1))
    with pytest.raises(ValueError):
        make_return_domain(cls, dom5.lam, base_point=(0, 0))
    with pytest.raises(ValueError):
        make_return_domain(cls, Q(-1, 5))


def test_lambda_too_large():
    with pytest.raises(LambdaTooLarge):
        make_return_domain(polygon_class(5), Q(1, 2))
    with pytest.raises(LambdaTooLarge):
        make_return_domain(polygon_class(5), Q(1, 211), band_m=50)


def test_band_window_narrows(dom5):
    cls = dom5.cls
    lo, hi = _band_window(cls, dom5.lam, 1)
    assert cls.interval[0] < lo < hi < cls.interval[1]
    dom = make_return_domain(cls, dom5.lam, band_m=1)
    alpha = hamiltonian((dom.lam * dom.base_point[0],) * 2)
    assert lo <= alpha <= hi


# ---------------------------------------------------------------------------
# the strip map


def test_strip_map_blocks_are_exact():
    lam = Q(1, 97)
    rng = random.Random(5)
    for _ in range(40):
        z = (rng.randrange(30, 300), rng.randrange(30, 300))
        hit = strip_map(z, lam, advance=True)
        assert is_transition(hit.point, lam)
        assert hit.transit_time >= 1
        # verified jumps: the composed blocks equal literal iteration
        assert iterate_F(z, lam, 4 * hit.transit_time) == hit.point
        bm, bn = hit.box
        assert box_of(hit.point, lam) == (bm, bn)
        w = (2 * bn + 1, -(2 * bm + 1))
        assert hit.defect == (hit.point[0] - z[0] - hit.transit_time * w[0],
                              hit.point[1] - z[1] - hit.transit_time * w[1])


def test_strip_map_advance_semantics():
    lam = Q(1, 97)
    z = (40, 40)
    hit = strip_map(z, lam, advance=True)
    again = strip_map(hit.point, lam)  # already a transition point
    assert again.point == hit.point and again.transit_time == 0
    with pytest.raises(ValueError):
        strip_map((0, 0), lam)
    with pytest.raises(CapExceeded):
        strip_map(z, lam, cap=0, advance=True)


# ---------------------------------------------------------------------------
# the first-return map, strip vs direct vs kernel


@pytest.mark.parametrize("e,lam", [(2, Q(1, 97)), (5, Q(1, 211)),
                                   (100, Q(1, 1000)), (100, Q(3, 2999))])
def test_phi_routes_agree(e, lam):
    dom = make_return_domain(polygon_class(e), lam)
    rng = random.Random(e)
    for _ in range(40):
        z = random_member(rng, dom)
        try:
            zs, fs = phi_with_steps(z, dom, method="strip")
        except Escaped:
            continue
        zd, fd = phi_with_steps(z, dom, method="direct")
        assert (zs, fs) == (zd, fd)
        assert in_domain_Xe(zs, dom)
        za, fa = phi_with_steps(z, dom, method="auto")
        assert (za, fa) == (zs, fs)


def test_phi_rejects_unknown_method(dom5):
    with pytest.raises(ValueError):
        phi_with_steps(dom5.base_point, dom5, method="magic")


def test_phi_escapes_at_tiny_cap(dom5):
    with pytest.raises(Escaped) as err:
        return_map_Phi(dom5.base_point, dom5, cap=2, method="strip")
    assert "cap" in err.value.reason
    assert err.value.steps >= 1


def test_phi_reversibility(dom100):
    rng = random.Random(7)
    checked = 0
    while checked < 60:
        z = random_member(rng, dom100)
        try:
            w = return_map_Phi(z, dom100, method="strip")
            u = symmetry_Ge(w, dom100)
            if not in_domain_Xe(u, dom100):
                continue
            v = return_map_Phi(u, dom100, method="strip")
        except Escaped:
            continue
        assert v == symmetry_Ge(z, dom100)
        checked += 1


@pytest.mark.skipif(not kernels.HAVE_NUMBA, reason="no compiled kernels")
def test_kernel_phi_matches_python(dom100):
    p, q = dom100.lam.numerator, dom100.lam.denominator
    cls = dom100.cls
    rng = random.Random(8)
    cap = 12 * (q // p) + 64
    lim = 10**9
    for _ in range(30):
        z = random_member(rng, dom100)
        X, Y, steps, status = kernels.phi_fast(
            z[0], z[1], p, q, cls.m_half, cls.width,
            dom100.s_lo, dom100.s_hi, cap, lim)
        assert status == 0
        zp, fp = phi_with_steps(z, dom100, method="strip")
        assert ((X, Y), steps) == (zp, fp)
        X2, Y2, steps2, status2 = kernels.phi_direct(
            z[0], z[1], p, q, cls.m_half, cls.width,
            dom100.s_lo, dom100.s_hi, cap, lim)
        assert (status2, (X2, Y2), steps2) == (0, zp, fp)


# ---------------------------------------------------------------------------
# bands, orbit tracing, closure


def test_build_A_matches_brute_scan():
    m = 2
    dom = make_return_domain(polygon_class(5), Q(1, 211), band_m=m)
    A = build_A(dom, m)
    rs = dom.cls.rho_star
    W = dom.cls.width
    brute = set()
    for S in range(dom.s_lo, dom.s_hi + 1):
        for i in range(-W, W):
            if (S - i) % 2:
                continue
            z = ((S + i) // 2, (S - i) // 2)
            if not in_domain_Xe(z, dom):
                continue
            nu = Q(S - 2 * dom.base_point[0], 2 * W) / rs
            if -Q(1, 2) <= nu <= m - Q(1, 2):
                brute.add(z)
    assert A and A == brute


def test_build_A_needs_fitting_band(dom5):
    with pytest.raises(LambdaTooLarge):
        build_A(dom5, 10**6)


def test_trace_orbits_counts():
    dom5 = make_return_domain(polygon_class(5), Q(1, 211), band_m=1)
    A = build_A(dom5, 1)
    summaries, a_bar, g, h, unresolved = trace_orbits(dom5, A, cap=10**5)
    assert unresolved == 0
    assert A <= a_bar
    W = dom5.cls.width
    # recount both symmetry-line tallies from the raw orbits
    g2 = h2 = total = 0
    for s in summaries:
        assert s.period == len(s.points)
        assert s.points[-1] == s.seed  # closed exactly at the seed
        total += s.period
        prev = s.seed
        for znext in s.points:
            g2 += znext[0] - znext[1] in (0, -W)
            h2 += symmetry_Ge(znext, dom5) == prev
            prev = znext
        s_vals = [z[0] + z[1] for z in s.points] + [s.seed[0] + s.seed[1]]
        assert (s.s_min, s.s_max) == (min(s_vals), max(s_vals))
    assert (g2, h2) == (g, h)
    assert total == len(a_bar)
    # the closure is forward invariant
    rng = random.Random(11)
    for z in rng.sample(sorted(a_bar), 25):
        assert return_map_Phi(z, dom5) in a_bar
    # and closure_A_bar is the same computation
    a_bar2, g3, h3, un3 = closure_A_bar(dom5, A, cap=10**5)
    assert (a_bar2, g3, h3, un3) == (a_bar, g, h, 0)


@pytest.mark.skipif(not kernels.HAVE_NUMBA, reason="no compiled kernels")
def test_kernel_trace_matches_python(dom5):
    rng = random.Random(12)
    phi_cap = 12 * 211 + 64
    for _ in range(8):
        z = random_member(rng, dom5)
        a = _trace_orbit_py(z, dom5, 10**5, phi_cap)
        b = _trace_orbit(z, dom5, 10**5, phi_cap)
        assert (a.seed, a.period, a.s_min, a.s_max, a.g_hits, a.h_hits) == \
               (b.seed, b.period, b.s_min, b.s_max, b.g_hits, b.h_hits)
        assert a.points == b.points


def test_trace_orbit_reports_point_cap(dom5):
    rng = random.Random(13)
    z = random_member(rng, dom5)
    summ = _trace_orbit_py(z, dom5, 3, 12 * 211 + 64)
    if summ.period is not None:
        pytest.skip("orbit closed below the tiny cap")
    assert len(summ.points) == 3


# ---------------------------------------------------------------------------
# the continuum return and the twist normal form


def test_continuum_base_phase():
    for e, lam in [(2, Q(1, 1000)), (25, Q(1, 5000))]:
        cls = polygon_class(e)
        z0 = continuum_base(cls, lam)
        alpha = hamiltonian(z0)
        assert cls.interval[0] < alpha < cls.interval[1]
        res = (period_T(alpha) / lam - 1) / 4
        assert res == int(res)  # period exactly lam*(1 + 4j)


def test_return_time_matches_brute_search():
    rng = random.Random(14)
    for e, lam in [(2, Q(1, 40)), (5, Q(1, 60))]:
        cls = polygon_class(e)
        x0 = continuum_base(cls, lam)[0]
        for _ in range(3):
            theta = Q(rng.randrange(-499, 500), 1000)
            rho = Q(rng.randrange(-200, 200), 1000)
            z = section_point(cls, lam, x0, theta, rho)
            T = period_T(hamiltonian(z))
            t_formula = flow_return_time(z, lam)
            step = (lam - T) / 4
            u, brute = z, None
            for t in range(1, 3 * int(T / lam) + 9):
                u = flow_advance(u, step)
                th = (u[0] - u[1]) / (2 * lam * cls.width)
                if -Q(1, 2) <= th < Q(1, 2):
                    v = flow_advance(u, -lam * th)
                    if v[0] == v[1] and v[0] > 0:
                        brute = t
                        break
            assert t_formula == brute


def test_flow_return_conjugates_to_twist():
    rng = random.Random(15)
    for e in [2, 5]:
        cls = polygon_class(e)
        lam = Q(1, 10000)
        x0 = continuum_base(cls, lam)[0]
        for _ in range(25):
            theta = Q(rng.randrange(-499, 500), 1000)
            rho = Q(rng.randrange(-300, 300), 1000)
            z = section_point(cls, lam, x0, theta, rho)
            assert eta_plane(z, lam, cls, x0) == CylinderCoord(theta, rho)
            z2, t = flow_first_return(z, lam)
            assert t == flow_return_time(z, lam) and t % 4 == 1
            c2 = eta_plane(z2, lam, cls, x0)
            assert c2 == twist_T(CylinderCoord(theta, rho), cls)


def test_twist_normal_form_algebra():
    cls = polygon_class(5)
    c = CylinderCoord(Q(1, 8), Q(3, 7))
    # H is an involution and T = H o reflect
    assert twist_reversor(twist_reversor(c, cls), cls) == c
    assert twist_T(c, cls) == twist_reversor(cylinder_reflect(c), cls)
    assert cylinder_reflect(cylinder_reflect(c)) == c
    # Fix H is the line theta = kappa*rho/2
    on_fix = CylinderCoord(_wrap_half(cls.kappa * Q(2, 9) / 2), Q(2, 9))
    assert twist_reversor(on_fix, cls) == on_fix
