"""Oracle run: the first-return map by definition vs the strip route.

The direct route iterates single map steps and tests membership every
step; the strip route composes verified box transits.  They must agree
bit for bit.  Also checks the reversibility identity on returned points,
the return-time ceiling formula against a brute minimal-phase search,
and the exact conjugacy of the continuum return with the linear twist.
"""

import random
import sys
from fractions import Fraction as Q

sys.path.insert(0, "src")

from roundflow.integrable import hamiltonian, period_T, polygon_class
from roundflow.returnmap import (
    Escaped, continuum_base, eta_plane, flow_advance, flow_first_return,
    flow_return_time, in_domain_Xe, make_return_domain, phi_with_steps,
    section_point, symmetry_Ge, twist_T,
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


def main():
    rng = random.Random(20260814)

    # two exact routes for the first return
    for e, lam in [(2, Q(1, 97)), (5, Q(1, 211)), (100, Q(1, 1000)),
                   (100, Q(3, 2999)), (10000, Q(1, 20000))]:
        dom = make_return_domain(polygon_class(e), lam)
        n = 200 if e < 10000 else 25
        mism = bad_mod = 0
        for _ in range(n):
            z = random_member(rng, dom)
            try:
                zs, fs = phi_with_steps(z, dom, method="strip")
            except Escaped:
                continue
            zd, fd = phi_with_steps(z, dom, method="direct")
            mism += (zs, fs) != (zd, fd)
            bad_mod += fs % 4 != 1
        print(f"e={e} lam={lam}: {n} seeds, strip vs direct mismatches={mism}, "
              f"steps not 1 mod 4: {bad_mod}")

    # reversibility: Phi(Ge(Phi(z))) == Ge(z) whenever both sides apply
    dom = make_return_domain(polygon_class(100), Q(1, 1000))
    checked = mism = 0
    for _ in range(300):
        z = random_member(rng, dom)
        try:
            w, _ = phi_with_steps(z, dom, method="strip")
            u = symmetry_Ge(w, dom)
            if not in_domain_Xe(u, dom):
                continue
            v, _ = phi_with_steps(u, dom, method="strip")
        except Escaped:
            continue
        checked += 1
        mism += v != symmetry_Ge(z, dom)
    print(f"reversibility: {checked} samples, {mism} mismatches")

    # return-time formula vs brute minimal-phase search (continuum flow).
    # Section membership is exact: theta in [-1/2, 1/2) alone would alias
    # the other diagonal crossings, so flow back by lam*theta and demand
    # the positive diagonal.
    def on_section(u, lam, cls):
        th = (u[0] - u[1]) / (2 * lam * cls.width)
        if not -Q(1, 2) <= th < Q(1, 2):
            return False
        v = flow_advance(u, -lam * th)
        return v[0] == v[1] and v[0] > 0

    for e, lam in [(2, Q(1, 40)), (5, Q(1, 60))]:
        cls = polygon_class(e)
        x0 = continuum_base(cls, lam)[0]
        for _ in range(5):
            theta = Q(rng.randrange(-499, 500), 1000)
            rho = Q(rng.randrange(-200, 200), 1000)
            z = section_point(cls, lam, x0, theta, rho)
            T = period_T(hamiltonian(z))
            t_formula = flow_return_time(z, lam)
            step = (lam - T) / 4
            t_brute = None
            u = z
            for t in range(1, 3 * int(T / lam) + 9):
                u = flow_advance(u, step)
                if on_section(u, lam, cls):
                    t_brute = t
                    break
            print(f"e={e} lam={lam} theta={theta} rho={rho}: "
                  f"formula={t_formula} brute={t_brute} "
                  f"equal={t_formula == t_brute}")

    # conjugacy of the continuum return with the linear twist
    for e in [2, 5, 10, 25]:
        cls = polygon_class(e)
        for lam in [Q(1, 10000), Q(1, 100000)]:
            x0 = continuum_base(cls, lam)[0]
            mism = 0
            for _ in range(40):
                theta = Q(rng.randrange(-499, 500), 1000)
                rho = Q(rng.randrange(-300, 300), 1000)
                z = section_point(cls, lam, x0, theta, rho)
                c = eta_plane(z, lam, cls, x0)
                z2, _ = flow_first_return(z, lam)
                mism += eta_plane(z2, lam, cls, x0) != twist_T(c, cls)
            print(f"conjugacy e={e} lam={lam}: 40 samples, {mism} mismatches")


if __name__ == "__main__":
    main()
