"""Command-line front end.

    qball check-potential --config run.toml
    qball solve     --config run.toml --out out/
    qball sweep     --config run.toml --threads 2
    qball certify   --config run.toml
    qball evolve    --config run.toml
    qball stability --config run.toml

Exit codes: 0 success, 1 potential not hylomorphic or other failure,
2 configuration error, 3 collapse, 4 no convergence, 5 certificate failed,
6 numeric abort.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import logging
import platform
import sys
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .config import RunConfig, load_config
from .dynamics import (EvolutionConfig, SnapshotWriter, conserved_charge, conserved_energy,
                       embed_soliton, evolve, gaussian_pulse, orbit_distance,
                       stability_probe)
from .errors import (Collapse, CertificateFailed, ConfigError, DegenerateFit, NoConvergence,
                     NoGroundState, NumericAbort, QBallError, ZeroCharge)
from .grid import ReducedState, write_columns
from .observables import star_norm
from .potential import check_assumptions
from .solver import read_profile, solution_from_state, solve
from .sweep import SweepRow, certify_hylomorphy, family_sweep

log = logging.getLogger("qball")

EXIT_CODES = (
    (ConfigError, 2),
    (Collapse, 3),
    (ZeroCharge, 3),
    (NoConvergence, 4),
    (NoGroundState, 4),
    (CertificateFailed, 5),
    (NumericAbort, 6),
    (DegenerateFit, 6),
)


def exit_code(exc: BaseException) -> int:
    for cls, code in EXIT_CODES:
        if isinstance(exc, cls):
            return code
    return 1


def _clean(obj):
    """numpy scalars/arrays -> plain Python for json."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def write_json(path: Path, obj) -> None:
    # float repr is the shortest string that round-trips exactly
    path.write_text(json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n")


class Run:
    def __init__(self, cfg: RunConfig, out: Path, command: str, threads: int):
        self.cfg, self.out, self.command, self.threads = cfg, out, command, threads
        self.outputs: list[str] = []
        out.mkdir(parents=True, exist_ok=True)

    def json(self, name: str, obj) -> None:
        write_json(self.out / name, obj)
        self.outputs.append(name)

    def csv(self, name: str, header, columns) -> None:
        write_columns(self.out / name, list(header), columns)
        self.outputs.append(name)

    def manifest(self, status: str) -> None:
        write_json(self.out / "manifest.json", {
            "command": self.command,
            "status": status,
            "config_sha256": self.cfg.sha256,
            "config": self.cfg.text,
            "grid": self.cfg.grid.to_dict(),
            "outputs": self.outputs,
            "versions": {"qball": __version__, "python": platform.python_version(),
                         "numpy": np.__version__, "scipy": scipy.__version__},
            "created": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        })


# -- subcommands -------------------------------------------------------------

def run_check_potential(run: Run) -> int:
    report = check_assumptions(run.cfg.potential)
    run.json("potential_report.json", {**report.to_dict(), "all_ok": report.all_ok})
    return 0 if report.all_ok and report.hylomorphy_ok else 1


def _write_solution(run: Run, sol, stem: str = "") -> None:
    s = sol.state
    run.csv(f"{stem}profile.csv", ("r", "u", "theta", "phi"), [s.grid.r, s.u, s.theta, s.phi])
    run.json(f"{stem}solution.json", sol.to_dict())


def run_solve(run: Run) -> int:
    cfg = run.cfg
    cfg.require_single_target()
    sol = solve(cfg.solver, cfg.potential)
    _write_solution(run, sol)
    return 0


def _certificate(run: Run):
    cfg = run.cfg
    return certify_hylomorphy(cfg.potential, cfg.q, cfg.grid, ladder=cfg.ladder,
                              ramps=cfg.ramps, threads=run.threads)


def run_certify(run: Run) -> int:
    try:
        cert = _certificate(run)
    except CertificateFailed as exc:
        table = getattr(exc, "table", [])
        run.json("certificate.json", {"valid": False, "q": run.cfg.q, "reason": str(exc),
                                      "table": [vars(e) for e in table]})
        raise
    run.json("certificate.json", cert.to_dict())
    return 0


def run_sweep(run: Run) -> int:
    cfg = run.cfg
    deltas = list(cfg.sweep.deltas)
    if cfg.sweep.relative:
        cert = _certificate(run)
        run.json("certificate.json", cert.to_dict())
        deltas = [d * cert.delta_inf_lower for d in deltas]
    res = family_sweep(deltas, cfg.solver, cfg.potential, warm_start=cfg.sweep.warm_start,
                       threads=run.threads, residual_tol=cfg.sweep.residual_tol)
    cols = list(zip(*[r.values() for r in res.rows])) if res.rows else [[]] * 8
    run.csv("sweep.csv", SweepRow.HEADER, cols)
    run.json("verdict.json", {**res.verdict.to_dict(), "deltas": deltas,
                              "failures": {repr(k): v for k, v in res.failures.items()}})
    if not res.rows:
        raise NoConvergence("no sweep row converged")
    return 0


def _evolution_config(cfg: RunConfig) -> EvolutionConfig:
    d = cfg.dynamics
    dt = d.dt if d.dt is not None else d.cfl_safety * cfg.grid.h
    try:
        return EvolutionConfig(cfg.grid, dt, d.t_final, cfg.q, d.snapshot_stride, d.cfl_safety)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _soliton(run: Run):
    cfg = run.cfg
    if cfg.dynamics.init_file:
        grid, u, theta = read_profile(cfg.dynamics.init_file, cfg.grid)
        state = ReducedState.from_fields(grid, np.abs(u), theta, cfg.q)
        return solution_from_state(state, cfg.potential, cfg.q)
    cfg.require_single_target()
    sol = solve(cfg.solver, cfg.potential)
    _write_solution(run, sol)
    return sol


def run_evolve(run: Run) -> int:
    cfg, p = run.cfg, run.cfg.potential
    ecfg = _evolution_config(cfg)
    sol = None
    if cfg.dynamics.amplitude is not None and not cfg.dynamics.init_file:
        s0 = gaussian_pulse(cfg.grid, cfg.dynamics.amplitude, cfg.dynamics.width, p.m, cfg.q)
    else:
        sol = _soliton(run)
        s0 = embed_soliton(sol, cfg.q)

    def obs(s):
        rec = {"t": s.t, "energy": conserved_energy(s, p, cfg.q),
               "charge": conserved_charge(s, cfg.q),
               "star_norm": star_norm(s.grid, np.abs(s.psi))}
        if sol is not None:
            rec["orbit_distance"] = orbit_distance(s, sol, cfg.q)
        return rec

    writer = SnapshotWriter(run.out / "snapshots.csv")
    try:
        _, rec = evolve(s0, ecfg, p, obs, writer)
    finally:
        writer.close()
    run.outputs.append("snapshots.csv")
    series = {k: [r[k] for r in rec] for k in rec[0]}
    e, c = np.array(series["energy"]), np.array(series["charge"])
    summary = {"dt": ecfg.dt, "t_final": ecfg.t_final, "steps": ecfg.n_steps,
               "energy_drift": float(np.max(np.abs(e - e[0])) / abs(e[0])) if e[0] else 0.0,
               "charge_drift": float(np.max(np.abs(c - c[0])) / abs(c[0])) if c[0] else 0.0,
               "series": series}
    if sol is not None:
        summary["max_orbit_distance"] = max(series["orbit_distance"])
        v = (e - sol.energy) ** 2 + (np.abs(c) - abs(sol.charge)) ** 2
        summary["liapunov"] = v.tolist()
        summary["liapunov_drift"] = float(np.max(np.abs(v - v[0])))
    run.json("summary.json", summary)
    return 0


def run_stability(run: Run) -> int:
    cfg = run.cfg
    ecfg = _evolution_config(cfg)
    sol = _soliton(run)
    writer = SnapshotWriter(run.out / "snapshots.csv")
    try:
        rep = stability_probe(sol, cfg.dynamics.perturbation, ecfg, cfg.potential, writer)
    finally:
        writer.close()
    run.outputs.append("snapshots.csv")
    run.json("stability.json", rep.to_dict())
    return 0


COMMANDS = {
    "check-potential": run_check_potential,
    "solve": run_solve,
    "sweep": run_sweep,
    "certify": run_certify,
    "evolve": run_evolve,
    "stability": run_stability,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qball", description="Charged Q-ball toolkit")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", required=True, help="TOML run configuration")
    ap.add_argument("--out", help="output directory (overrides output.dir)")
    ap.add_argument("--threads", type=int, default=1,
                    help="worker threads for certificate ladders and cold-start sweeps")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return 2
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    out = Path(args.out if args.out else cfg.out_dir)
    run = Run(cfg, out, args.command, args.threads)
    try:
        code = COMMANDS[args.command](run)
    except QBallError as exc:
        code = exit_code(exc)
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        run.manifest(f"error:{type(exc).__name__}")
        return code
    run.manifest("ok" if code == 0 else "failed")
    return code


if __name__ == "__main__":
    sys.exit(main())
