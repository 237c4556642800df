"""Oracle run: traversal period by segment walking vs the closed form.

Walks the level polygon segment by segment (traverse_time) and compares
with the period formula, exactly, on a spread of levels.  Also prints a
few anchor values that the unit tests freeze as literals.
"""

import random
import sys
from fractions import Fraction as Q

sys.path.insert(0, "src")

from roundflow.integrable import (
    OnCriticalBoundary, flow_advance, period_T, period_T_prime,
    piecewise_P_inv, polygon_class, polygon_vertices, rho_star,
    traverse_time, twist_kappa,
)


def main():
    rng = random.Random(20260814)
    bad = 0
    for _ in range(60):
        alpha = Q(rng.randrange(1, 400_000), rng.choice([7, 64, 101, 1000]))
        try:
            t_formula = period_T(alpha)
        except OnCriticalBoundary:
            continue  # critical level drawn, skip
        z = (piecewise_P_inv(alpha / 2), piecewise_P_inv(alpha / 2))
        t_walk = traverse_time(z)
        ok = t_formula == t_walk
        bad += not ok
        if not ok:
            print(f"MISMATCH alpha={alpha}: formula={t_formula} walk={t_walk}")
    print(f"period formula vs walk: {bad} mismatches")

    # closure of the flow after one period
    for alpha in [Q(1, 2), Q(7, 2), Q(101, 7), Q(1234, 9)]:
        x = piecewise_P_inv(alpha / 2)
        z = (x, x)
        back = flow_advance(z, period_T(alpha))
        print(f"alpha={alpha}: flow closes after one period: {back == z}")

    # anchor literals for the tests
    print("period_T(1/2) =", period_T(Q(1, 2)))
    print("period_T(3)   =", period_T(Q(3)))
    for e in [1, 2, 5, 25]:
        print(f"period_T_prime({e}) =", period_T_prime(e))
    for e in [1, 2, 25]:
        print(f"twist_kappa({e}) =", twist_kappa(e), " rho_star =", rho_star(e))
    for e in [1, 10000]:
        cls = polygon_class(e)
        print(f"interval({e}) =", cls.interval, " width =", cls.width)

    # slope of the period on a class interval, by finite differences
    for e in [1, 2, 5, 10, 25]:
        lo, hi = polygon_class(e).interval
        a1 = Q(3 * lo + hi, 4)
        a2 = Q(lo + 3 * hi, 4)
        fd = (period_T(a2) - period_T(a1)) / (a2 - a1)
        print(f"e={e}: finite-diff slope == period_T_prime: {fd == period_T_prime(e)}")

    # vertex counts: 8*root + 4, and closure of the vertex walk
    for alpha in [Q(1, 2), Q(3), Q(21, 2), Q(1001, 10)]:
        vs = polygon_vertices(alpha)
        root = 0
        while (root + 1) ** 2 <= alpha:
            root += 1
        print(f"alpha={alpha}: {len(vs)} vertices (expect {8 * root + 4})")


if __name__ == "__main__":
    main()
