"""Coercivity gap, asymmetry and null residuals under radial grid refinement."""

import argparse
import time

from relkin.crosssec import CrossSection
from relkin.grid import MomentumGrid
from relkin.linop import assemble_L, coercivity_gap, hydro_basis, null_residuals


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--model", default="soft", choices=["soft", "hard", "hardball"])
    ap.add_argument("--radial", type=int, nargs="+", default=[20, 30, 45])
    ap.add_argument("--sphere", type=int, default=50)
    args = ap.parse_args()
    cs = getattr(CrossSection, args.model)()
    print("radial,sphere,size,asymmetry,max_null_residual,delta0,seconds")
    for n in args.radial:
        t = time.perf_counter()
        grid = MomentumGrid(radial_nodes=n, sphere_nodes=args.sphere)
        op = assemble_L(cs, grid)
        delta = coercivity_gap(op, hydro_basis(grid))
        res = null_residuals(op).max()
        print(f"{n},{args.sphere},{grid.size},{op.asymmetry:.4g},{res:.3e},{delta:.5g},{time.perf_counter() - t:.1f}")


if __name__ == "__main__":
    main()
