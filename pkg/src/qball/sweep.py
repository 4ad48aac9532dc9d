"""Hylomorphy certificates from explicit plateau states, and delta-family sweeps."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .errors import CertificateFailed, QBallError
from .grid import RadialGrid, ReducedState
from .observables import observe
from .potential import Potential, check_assumptions
from .solver import SolitonSolution, SolverConfig, minimize_j_delta

log = logging.getLogger(__name__)

DEFAULT_LADDER = (2.0, 4.0, 8.0, 16.0, 32.0)
DEFAULT_RAMPS = (1.0, 2.0, 4.0, 8.0, 16.0)


def build_test_profile(R: float, s0: float, grid: RadialGrid, ramp: float = 1.0) -> np.ndarray:
    """Plateau s0 on r < R, linear ramp to zero on R < r < R + ramp."""
    if R < 1 or not ramp > 0:
        raise ValueError("need R >= 1 and ramp > 0")
    if R + ramp > grid.r_max:
        raise ValueError(f"grid too small: R + ramp = {R + ramp} > r_max = {grid.r_max}")
    return s0 * np.clip((R + ramp - grid.r) / ramp, 0.0, 1.0)


@dataclass(frozen=True)
class CertificateEntry:
    R: float
    ramp: float
    energy: float
    charge: float
    lambda_measured: float

    def margin(self, m: float) -> float:
        return m - self.lambda_measured

    def delta_inf_lower(self, m: float) -> float:
        return (m - self.lambda_measured) / self.energy


@dataclass
class HylomorphyCertificate:
    R: float
    ramp: float
    q: float
    alpha: float
    s0: float
    lambda_measured: float
    energy: float
    margin: float
    delta_inf_lower: float
    table: list[CertificateEntry] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return self.margin > 0

    def unit_ramp_gaps(self) -> list[tuple[float, float]]:
        """(R, Lambda - alpha) for the unit-width ramps, in ladder order."""
        return [(e.R, e.lambda_measured - self.alpha) for e in self.table if e.ramp == 1.0]

    def to_dict(self) -> dict:
        d = {k: v for k, v in asdict(self).items() if k != "table"}
        d["valid"] = self.valid
        d["table"] = [asdict(e) for e in self.table]
        return d


def _measure(R, ramp, s0, alpha, grid, q, p) -> CertificateEntry:
    u = build_test_profile(R, s0, grid, ramp)
    s = ReducedState.from_fields(grid, u, alpha * u, q)
    obs = observe(s, p)
    return CertificateEntry(R, ramp, obs.energy, obs.charge, obs.hylenic_ratio)


def certify_hylomorphy(p: Potential, q: float, grid: RadialGrid,
                       ladder=DEFAULT_LADDER, ramps=DEFAULT_RAMPS,
                       threads: int = 1) -> HylomorphyCertificate:
    """Search plateau states (u_R, theta = alpha*u_R) for Lambda < m.

    Radii and ramp widths are in units of 1/m; pairs that do not fit the grid
    are skipped. The reported state maximizes the certified lower bound
    (m - Lambda)/E on delta_inf among states with Lambda < m.
    """
    report = check_assumptions(p)
    if not report.hylomorphy_ok:
        raise CertificateFailed("potential is not hylomorphic")
    s0 = report.s_star
    alpha = float(np.sqrt(p.ratio(s0)))
    pairs = [(R / p.m, w / p.m) for w in ramps for R in ladder
             if R / p.m >= 1 and R / p.m + w / p.m <= grid.r_max]
    if not pairs:
        raise CertificateFailed("no ladder radius fits the grid")
    job = lambda rw: _measure(rw[0], rw[1], s0, alpha, grid, q, p)
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            table = list(ex.map(job, pairs))
    else:
        table = [job(rw) for rw in pairs]

    good = [e for e in table if e.lambda_measured < p.m]
    if not good:
        best = min(table, key=lambda e: e.lambda_measured)
        err = CertificateFailed(
            f"q = {q}: no test state with Lambda < m (best {best.lambda_measured:.6g} "
            f"at R = {best.R}, ramp = {best.ramp})")
        err.table = table
        raise err
    best = max(good, key=lambda e: e.delta_inf_lower(p.m))
    return HylomorphyCertificate(
        R=best.R, ramp=best.ramp, q=q, alpha=alpha, s0=s0,
        lambda_measured=best.lambda_measured, energy=best.energy,
        margin=best.margin(p.m), delta_inf_lower=best.delta_inf_lower(p.m),
        table=table)


# -- delta sweeps --------------------------------------------------------------

@dataclass(frozen=True)
class SweepRow:
    delta: float
    omega: float
    energy: float
    charge_abs: float
    lambda_: float
    j_value: float
    residual: float
    iterations: int

    HEADER = ("delta", "omega", "energy", "charge_abs", "lambda", "j_value",
              "residual", "iterations")

    def values(self) -> tuple:
        return (self.delta, self.omega, self.energy, self.charge_abs, self.lambda_,
                self.j_value, self.residual, self.iterations)


@dataclass
class SweepVerdict:
    n_rows: int
    strict: dict[str, bool]
    weak: dict[str, bool]

    @property
    def monotone(self) -> bool:
        return all(self.strict.values())

    def to_dict(self) -> dict:
        return {"n_rows": self.n_rows, "strict": dict(self.strict),
                "weak": dict(self.weak), "monotone": self.monotone}


@dataclass
class SweepResult:
    rows: list[SweepRow]
    failures: dict[float, str]
    verdict: SweepVerdict
    solutions: list[SolitonSolution] = field(default_factory=list, repr=False)


# chain name, row attribute, +1 for increasing in delta, -1 for decreasing
CHAINS = (("lambda", "lambda_", +1), ("j_value", "j_value", +1),
          ("energy", "energy", -1), ("charge_abs", "charge_abs", -1))


def monotonicity_verdict(rows: list[SweepRow], rel_slack: float = 1e-9) -> SweepVerdict:
    """Strict: every step moves the right way by more than the slack.
    Weak: no step moves the wrong way by more than the slack."""
    strict, weak = {}, {}
    for name, attr, sign in CHAINS:
        vals = np.array([getattr(r, attr) for r in rows], dtype=float)
        if len(vals) < 2:
            strict[name] = weak[name] = True
            continue
        slack = rel_slack * float(np.max(np.abs(vals)))
        d = sign * np.diff(vals)
        strict[name] = bool(np.all(d > slack))
        weak[name] = bool(np.all(d > -slack))
    return SweepVerdict(len(rows), strict, weak)


def _row(sol: SolitonSolution) -> SweepRow:
    return SweepRow(sol.delta, sol.omega, sol.energy, abs(sol.charge), sol.lambda_ratio,
                    sol.j_value, sol.residual, sol.iterations)


def family_sweep(deltas, cfg: SolverConfig, p: Potential, warm_start: bool = True,
                 threads: int = 1, residual_tol: float = 1e-6) -> SweepResult:
    """Solve for each delta (ascending) and check the monotonicity chains.

    In warm-start mode each solve starts from the previous converged profile.
    Failed or insufficiently converged rows are recorded and left out of the
    verdict.
    """
    deltas = [float(d) for d in deltas]
    if any(b <= a for a, b in zip(deltas, deltas[1:])):
        raise ValueError("deltas must be strictly ascending")

    def run(delta, init):
        try:
            return minimize_j_delta(replace(cfg, delta=delta), p, init=init), None
        except (QBallError, AssertionError) as exc:
            return None, f"{type(exc).__name__}: {exc}"

    outcomes = []
    if warm_start:
        init = None
        for d in deltas:
            sol, err = run(d, init)
            if sol is not None:
                init = (np.array(sol.state.u), np.array(sol.state.theta))
            outcomes.append((d, sol, err))
    else:
        with ThreadPoolExecutor(max(threads, 1)) as ex:
            results = list(ex.map(lambda d: run(d, None), deltas))
        outcomes = [(d, s, e) for d, (s, e) in zip(deltas, results)]

    rows, sols, failures = [], [], {}
    for d, sol, err in outcomes:
        if sol is None:
            failures[d] = err
        elif not sol.residual < residual_tol:
            failures[d] = f"residual {sol.residual:.3e} above {residual_tol:g}"
        else:
            rows.append(_row(sol))
            sols.append(sol)
    for d, msg in failures.items():
        log.warning("sweep row delta=%g excluded: %s", d, msg)
    return SweepResult(rows, failures, monotonicity_verdict(rows), sols)
