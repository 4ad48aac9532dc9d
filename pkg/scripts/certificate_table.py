"""Print the plateau-state certificate table for a few couplings.

    python scripts/certificate_table.py [--r-max 30] [--n 3000]
"""

import argparse

from qball.errors import CertificateFailed
from qball.grid import RadialGrid
from qball.potential import Potential
from qball.sweep import certify_hylomorphy


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--r-max", type=float, default=30.0)
    ap.add_argument("--n", type=int, default=3000)
    ap.add_argument("--q", type=float, nargs="+", default=[0.0, 0.05, 0.1, 1.0, 10.0])
    args = ap.parse_args()
    p = Potential.reference()
    g = RadialGrid(args.r_max, args.n)
    for q in args.q:
        try:
            cert = certify_hylomorphy(p, q, g)
            table = cert.table
            print(f"q = {q}: certified, R = {cert.R}, ramp = {cert.ramp}, "
                  f"Lambda = {cert.lambda_measured:.6f}, delta_inf >= {cert.delta_inf_lower:.4e}")
        except CertificateFailed as exc:
            table = exc.table
            print(f"q = {q}: failed ({exc})")
        print(f"  {'R':>5} {'ramp':>5} {'energy':>12} {'Lambda':>10}")
        for e in table:
            print(f"  {e.R:5g} {e.ramp:5g} {e.energy:12.5g} {e.lambda_measured:10.6f}")


if __name__ == "__main__":
    main()
