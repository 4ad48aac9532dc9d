"""Trace the delta family at fixed q and report where J_delta can drop below m.

Solves at a geometric ladder of deltas up to the certified bound, then prints
Lambda + d*E along the family for a probe value d (default 0.05). If that
column never goes below m, no state on the family has J_d < m.

    python scripts/family_scan.py [--q 0] [--probe 0.05] [--points 8]
"""

import argparse

import numpy as np

from qball.grid import RadialGrid
from qball.potential import Potential
from qball.solver import SolverConfig
from qball.sweep import certify_hylomorphy, family_sweep


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--q", type=float, default=0.0)
    ap.add_argument("--probe", type=float, default=0.05)
    ap.add_argument("--points", type=int, default=8)
    ap.add_argument("--top", type=float, default=0.9,
                    help="largest delta as a multiple of the certified bound")
    ap.add_argument("--n", type=int, default=3000)
    args = ap.parse_args()
    p = Potential.reference()
    cfg = SolverConfig(delta=1e-4, q=args.q, n=args.n)
    cert = certify_hylomorphy(p, args.q, RadialGrid(cfg.r_max, cfg.n))
    top = cert.delta_inf_lower
    deltas = top * np.geomspace(1e-3, args.top, args.points)
    res = family_sweep(deltas, cfg, p)
    print(f"certified delta_inf >= {top:.4e}")
    print(f"{'delta':>11} {'omega':>9} {'energy':>10} {'Lambda':>9} {'Lambda+probe*E':>15}")
    for r in res.rows:
        print(f"{r.delta:11.4e} {r.omega:9.6f} {r.energy:10.4f} {r.lambda_:9.6f} "
              f"{r.lambda_ + args.probe * r.energy:15.4f}")
    for d, msg in res.failures.items():
        print(f"{d:11.4e} failed: {msg}")
    print("verdict:", res.verdict.to_dict())


if __name__ == "__main__":
    main()
