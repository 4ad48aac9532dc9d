"""Conservation, stability and dispersion runs for one soliton.

    python scripts/dynamics_report.py [--q 0.05] [--delta 1e-4] [--t-final 50]
"""

import argparse

from qball.dynamics import (EvolutionConfig, conservation_run, dispersion_probe, embed_soliton,
                            stability_probe, star_norm_series, time_reversal_error)
from qball.potential import Potential
from qball.solver import SolverConfig, minimize_j_delta


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--q", type=float, default=0.05)
    ap.add_argument("--delta", type=float, default=1e-4)
    ap.add_argument("--t-final", type=float, default=50.0)
    ap.add_argument("--perturbation", type=float, default=0.01)
    args = ap.parse_args()
    p = Potential.reference()
    sol = minimize_j_delta(SolverConfig(delta=args.delta, q=args.q), p)
    print(f"soliton: omega = {sol.omega:.6f}, E = {sol.energy:.6f}, C = {sol.charge:.6f}, "
          f"Lambda = {sol.lambda_ratio:.6f}, residual = {sol.residual:.2e}")
    cfg = EvolutionConfig.at_cfl(sol.state.grid, args.t_final, args.q, snapshot_stride=100)
    s0 = embed_soliton(sol, args.q)

    _, rep = conservation_run(s0, cfg, p, sol.energy, sol.charge)
    print(f"conservation: E drift {rep.energy_drift:.2e}, C drift {rep.charge_drift:.2e}, "
          f"V drift {rep.liapunov_drift:.2e}")
    print(f"time reversal error: {time_reversal_error(s0, cfg, p):.2e}")

    st = stability_probe(sol, args.perturbation, cfg, p)
    print(f"stability: distance {st.initial_distance:.4e} -> max {st.max_distance:.4e} "
          f"(growth {st.growth:.3f})")

    _, pulse = dispersion_probe(0.01, cfg, p)
    _, soliton = star_norm_series(s0, cfg, p)
    print(f"star norm kept at t = {args.t_final:g}: pulse {pulse[-1] / pulse[0]:.4f}, "
          f"soliton {soliton[-1] / soliton[0]:.6f}")


if __name__ == "__main__":
    main()
