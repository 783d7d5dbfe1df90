"""Check the k2 normalization: int k2(p, q) sqrt(J(q)) dq = 2 nu(p) sqrt(J(p)).

The identity follows from K sqrt(J) = nu sqrt(J) and fixes the constant
relkin.kernels.K2_CONSTANT. Prints the relative defect for several
cross-section families and |p|.
"""

import argparse

import numpy as np

from relkin.crosssec import CrossSection
from relkin.kernels import K2_CONSTANT, collision_frequency_radial, kernel_k2_full
from relkin.kinematics import sqrt_juttner
from relkin.quadrature import pair_rule, points

FAMILIES = {
    "soft": CrossSection.soft(),
    "hard": CrossSection.hard(),
    "hardball": CrossSection.hardball(),
    "soft b=2 gamma=1": CrossSection("soft", 0.0, 2.0, 1.0),
}


def defect(cs, r, n=16, levels=12):
    rule = pair_rule(r, n, levels)
    p, q = points(r, rule)
    lhs = float(np.dot(rule.weight, kernel_k2_full(cs, p, q) * sqrt_juttner(q)))
    rhs = 2.0 * collision_frequency_radial(cs, r) * float(sqrt_juttner(p))
    return lhs / rhs - 1.0


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--radii", type=float, nargs="+", default=[0.0, 0.5, 2.0, 5.0])
    args = ap.parse_args()
    print(f"K2_CONSTANT = {K2_CONSTANT}")
    for name, cs in FAMILIES.items():
        for r in args.radii:
            print(f"{name:18s} |p| = {r:5.2f}  relative defect {defect(cs, r):+.3e}")


if __name__ == "__main__":
    main()
