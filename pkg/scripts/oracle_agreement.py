"""Oracle run: agreement density by literal lattice scan vs the
residue-segment count.

The fast count decomposes boxes into floor-constant rectangles; the
oracle applies four map steps to every lattice point in the region and
compares displacements with the local field.  Exact equality expected.
"""

import sys
from fractions import Fraction as Q

sys.path.insert(0, "src")

from roundflow.integrable import field_w
from roundflow.lattice import iterate_F
from roundflow.stats import agreement_density


def brute_fraction(r, lam):
    p, q = lam.numerator, lam.denominator
    xmax = -((-r.numerator * q) // (r.denominator * p)) - 1  # ceil - 1
    agree = total = 0
    for X in range(-xmax, xmax + 1):
        for Y in range(-xmax, xmax + 1):
            z = (X, Y)
            u = iterate_F(z, lam, 4)
            w = field_w((lam * X, lam * Y))
            total += 1
            agree += (u[0] - X, u[1] - Y) == w
    return Q(agree, total)


def main():
    for r, lam in [(Q(5), Q(1, 20)), (Q(5), Q(1, 50)), (Q(3), Q(1, 100)),
                   (Q(5, 2), Q(1, 64)), (Q(7, 3), Q(2, 199))]:
        fast = agreement_density(r, lam)
        slow = brute_fraction(r, lam)
        print(f"r={r} lam={lam}: fast={fast} brute={slow} "
              f"equal={fast == slow}  ({float(fast):.6f})")


if __name__ == "__main__":
    main()
