"""Radial time evolution of the charged field in the electrostatic gauge.

psi is stored in Cartesian (complex) form together with dpsi = d_t psi and
the Coulomb potential phi, with Laplacian(phi) = -rho and

    rho = q (-Im(conj(psi) dpsi) - q phi |psi|^2).

Note the sign: this phi is the physical potential, the negative of the phi
used by the static reduced state (see :func:`embed_soliton`).

The stepper works with the covariant momentum P = dpsi + i q phi psi, for
which the Hamiltonian splits into three exactly solvable pieces:

* Coulomb part: rho = -q Im(conj(psi) P) is invariant, so phi is frozen and
  both psi and P rotate by exp(-i q phi t);
* potential part: P -= t (-Laplacian(psi) + W'(|psi|) psi/|psi|);
* kinetic part: psi += t P.

The symmetric composition is symplectic, time-reversible and conserves the
charge -sum(w Im(conj(psi) P)) exactly in exact arithmetic. phi recovered
from (psi, P) by the plain Poisson solve is the same field as the screened
solve Lap(phi) - q^2 |psi|^2 phi = q Im(conj(psi) dpsi) applied to (psi, dpsi).
"""

from __future__ import annotations

import logging
import queue
import threading
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy import linalg

from .errors import NumericAbort
from .grid import (FOUR_PI, RadialGrid, ReducedState, gradient_energy, integrate,
                   laplacian_radial, poisson_solve)
from .observables import electric_energy, star_norm
from .potential import Potential

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class DynamicState:
    grid: RadialGrid
    psi: np.ndarray      # complex
    dpsi: np.ndarray     # complex, d_t psi
    phi: np.ndarray      # physical potential
    t: float = 0.0

    @property
    def psi_re(self) -> np.ndarray:
        return self.psi.real

    @property
    def psi_im(self) -> np.ndarray:
        return self.psi.imag

    @property
    def pi_re(self) -> np.ndarray:
        return self.dpsi.real

    @property
    def pi_im(self) -> np.ndarray:
        return self.dpsi.imag

    @property
    def amplitude(self) -> np.ndarray:
        return np.abs(self.psi)

    def momentum(self, q: float) -> np.ndarray:
        """Covariant momentum d_t psi + i q phi psi."""
        return self.dpsi + 1j * q * self.phi * self.psi


@dataclass(frozen=True)
class EvolutionConfig:
    grid: RadialGrid
    dt: float
    t_final: float
    q: float = 0.0
    snapshot_stride: int = 100
    cfl_safety: float = 0.5

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.t_final >= 0:
            raise ValueError("t_final must be non-negative")
        if self.snapshot_stride < 1:
            raise ValueError("snapshot_stride must be at least 1")
        if self.dt > self.cfl_safety * self.grid.h * (1 + 1e-12):
            raise ValueError(f"dt = {self.dt} violates dt <= {self.cfl_safety} * h = "
                             f"{self.cfl_safety * self.grid.h}")
        if self.t_final >= self.grid.r_max:
            log.warning("t_final >= r_max: radiation reflected at r_max will return")

    @classmethod
    def at_cfl(cls, grid: RadialGrid, t_final: float, q: float = 0.0,
               cfl_safety: float = 0.5, **kw) -> "EvolutionConfig":
        return cls(grid, cfl_safety * grid.h, t_final, q, cfl_safety=cfl_safety, **kw)

    @property
    def n_steps(self) -> int:
        return int(round(self.t_final / self.dt))


# -- Gauss law -----------------------------------------------------------------

def screened_gauss_solve(grid: RadialGrid, psi: np.ndarray, dpsi: np.ndarray,
                         q: float) -> np.ndarray:
    """Solve Lap(phi) - q^2 |psi|^2 phi = q Im(conj(psi) dpsi) (Coulomb tail at r_max)."""
    if q == 0.0:
        return grid.zeros()
    n, k, w = grid.n, grid.face_coeff, grid.weights
    diag = np.zeros(n + 1)
    diag[:-1] += k
    diag[1:] += k
    diag[-1] += FOUR_PI * grid.r_max
    diag += q**2 * w * np.abs(psi) ** 2
    ab = np.zeros((2, n + 1))
    ab[0, 1:] = -k
    ab[1] = diag
    rhs = -q * w * np.imag(np.conj(psi) * dpsi)
    return linalg.solveh_banded(ab, rhs)


def make_state(grid: RadialGrid, psi, dpsi, q: float, t: float = 0.0) -> DynamicState:
    psi = np.asarray(psi, dtype=complex).copy()
    dpsi = np.asarray(dpsi, dtype=complex).copy()
    psi[-1] = dpsi[-1] = 0.0
    return DynamicState(grid, psi, dpsi, screened_gauss_solve(grid, psi, dpsi, q), t)


def _from_momentum(grid, psi, P, q, t) -> DynamicState:
    phi = poisson_solve(grid, np.imag(np.conj(psi) * P), q)
    return DynamicState(grid, psi, P - 1j * q * phi * psi, phi, t)


def embed_soliton(sol_or_state, q: float | None = None) -> DynamicState:
    """Standing wave at t = 0: psi = u, covariant momentum -i theta.

    Equivalently d_t psi = -i omega u with omega from the multiplier relation;
    building it from theta keeps the discrete energy equal to the static one.
    """
    state = getattr(sol_or_state, "state", sol_or_state)
    q = sol_or_state.q if q is None else q
    g = state.grid
    psi = np.asarray(state.u, dtype=complex).copy()
    P = -1j * np.asarray(state.theta, dtype=float)
    psi[-1] = P[-1] = 0.0
    return _from_momentum(g, psi, P, q, 0.0)


def gaussian_pulse(grid: RadialGrid, amplitude: float, width: float, m: float,
                   q: float = 0.0) -> DynamicState:
    """psi = A exp(-(r/width)^2) with d_t psi = -i m psi (a charged, dispersing packet)."""
    psi = amplitude * np.exp(-(grid.r / width) ** 2)
    return make_state(grid, psi, -1j * m * psi, q)


# -- conserved quantities ----------------------------------------------------------

def conserved_energy(s: DynamicState, p: Potential, q: float) -> float:
    g = s.grid
    P = s.momentum(q)
    return (0.5 * integrate(g, np.abs(P) ** 2)
            + 0.5 * (gradient_energy(g, s.psi.real) + gradient_energy(g, s.psi.imag))
            + integrate(g, p.W(np.abs(s.psi)))
            + electric_energy(g, s.phi))


def conserved_charge(s: DynamicState, q: float) -> float:
    return integrate(s.grid, -np.imag(np.conj(s.psi) * s.dpsi) - q * s.phi * np.abs(s.psi) ** 2)


def liapunov_v(s: DynamicState, e_target: float, c_target: float, p: Potential,
               q: float) -> float:
    return ((conserved_energy(s, p, q) - e_target) ** 2
            + (abs(conserved_charge(s, q)) - abs(c_target)) ** 2)


def orbit_distance(s: DynamicState, sol, q: float | None = None) -> float:
    """Energy-norm distance from s to the phase orbit of the standing wave.

    The squared distance is |a|^2 + |b|^2 - 2 Re(e^{i chi} <a, b>) plus
    phase-independent terms, so the optimal phase is available in closed form.
    The norm covers psi (gradient and mass terms), the covariant momentum and
    the electric field.
    """
    ref = embed_soliton(sol, q)
    q = sol.q if q is None else q
    g = s.grid
    m2 = sol.mass**2
    a_psi, b_psi = s.psi, ref.psi
    a_P, b_P = s.momentum(q), ref.momentum(q)

    def inner(f1, f2):
        grad = np.dot(g.face_coeff, np.conj(np.diff(f1)) * np.diff(f2))
        return grad + np.dot(g.weights, np.conj(f1) * f2) * m2

    cross = inner(a_psi, b_psi) + np.dot(g.weights, np.conj(a_P) * b_P)
    norm_a = inner(a_psi, a_psi).real + integrate(g, np.abs(a_P) ** 2)
    norm_b = inner(b_psi, b_psi).real + integrate(g, np.abs(b_P) ** 2)
    field = 2.0 * electric_energy(g, s.phi - ref.phi)
    d2 = norm_a + norm_b - 2.0 * abs(cross) + field
    return float(np.sqrt(max(d2, 0.0)))


# -- stepping -----------------------------------------------------------------------

def _lap_complex(g: RadialGrid, f: np.ndarray) -> np.ndarray:
    return laplacian_radial(g, f.real) + 1j * laplacian_radial(g, f.imag)


class Stepper:
    """Strang splitting Coulomb(dt/2) kick(dt/2) drift(dt) kick(dt/2) Coulomb(dt/2)."""

    def __init__(self, cfg: EvolutionConfig, p: Potential):
        self.cfg, self.p = cfg, p
        self.g, self.q, self.dt = cfg.grid, cfg.q, cfg.dt

    def _phi(self, psi, P):
        return poisson_solve(self.g, np.imag(np.conj(psi) * P), self.q)

    def _coulomb(self, psi, P, tau):
        if self.q == 0.0:
            return psi, P
        rot = np.exp(-1j * self.q * tau * self._phi(psi, P))
        return psi * rot, P * rot

    def force(self, psi):
        f = -_lap_complex(self.g, psi) + self.p.W_prime_over_s(np.abs(psi)) * psi
        f[-1] = 0.0
        return f

    def advance(self, psi, P, steps: int):
        dt, half = self.dt, 0.5 * self.dt
        for _ in range(steps):
            psi, P = self._coulomb(psi, P, half)
            P = P - half * self.force(psi)
            psi = psi + dt * P
            P = P - half * self.force(psi)
            psi, P = self._coulomb(psi, P, half)
        if not (np.all(np.isfinite(psi)) and np.all(np.isfinite(P))):
            raise NumericAbort(f"non-finite field after {steps} steps "
                               f"(max |psi| before abort unknown; dt = {dt})")
        return psi, P


def step(s: DynamicState, cfg: EvolutionConfig, p: Potential, steps: int = 1) -> DynamicState:
    st = Stepper(cfg, p)
    psi, P = st.advance(s.psi.copy(), s.momentum(cfg.q), steps)
    return _from_momentum(s.grid, psi, P, cfg.q, s.t + steps * cfg.dt)


def reverse(s: DynamicState) -> DynamicState:
    """Time reversal: d_t psi -> -d_t psi (phi flips sign with the current)."""
    return DynamicState(s.grid, s.psi.copy(), -s.dpsi, -s.phi, s.t)


class SnapshotWriter:
    """Append snapshots (t, r, re, im, phi) to CSV on a background thread."""

    def __init__(self, path: str | Path):
        self._q: queue.Queue = queue.Queue(maxsize=64)
        self._fh = open(path, "w")
        self._fh.write("t,r,re,im,phi\n")
        self._thread = threading.Thread(target=self._drain, daemon=True)
        self._thread.start()

    def _drain(self):
        while True:
            item = self._q.get()
            if item is None:
                break
            t, r, psi, phi = item
            lines = [f"{t!r},{ri!r},{a!r},{b!r},{c!r}\n"
                     for ri, a, b, c in zip(r.tolist(), psi.real.tolist(),
                                            psi.imag.tolist(), phi.tolist())]
            self._fh.writelines(lines)

    def put(self, s: DynamicState):
        self._q.put((float(s.t), s.grid.r, s.psi.copy(), s.phi.copy()))

    def close(self):
        self._q.put(None)
        self._thread.join()
        self._fh.close()


def evolve(s: DynamicState, cfg: EvolutionConfig, p: Potential, observe=None,
           writer: SnapshotWriter | None = None) -> tuple[DynamicState, list]:
    """Run to t_final; ``observe(state)`` is recorded every snapshot_stride steps."""
    st = Stepper(cfg, p)
    psi, P = s.psi.copy(), s.momentum(cfg.q)
    done, total = 0, cfg.n_steps
    cur = s
    records = [observe(cur)] if observe else []
    if writer:
        writer.put(cur)
    while done < total:
        k = min(cfg.snapshot_stride, total - done)
        psi, P = st.advance(psi, P, k)
        done += k
        cur = _from_momentum(s.grid, psi, P, cfg.q, s.t + done * cfg.dt)
        if observe:
            records.append(observe(cur))
        if writer:
            writer.put(cur)
    return cur, records


# -- probes --------------------------------------------------------------------------

@dataclass
class ConservationReport:
    t: list[float]
    energy: list[float]
    charge: list[float]
    liapunov: list[float]
    e_target: float
    c_target: float

    @property
    def energy_drift(self) -> float:
        e = np.asarray(self.energy)
        return float(np.max(np.abs(e - e[0])) / abs(e[0])) if e[0] else float(np.max(np.abs(e)))

    @property
    def charge_drift(self) -> float:
        c = np.asarray(self.charge)
        return float(np.max(np.abs(c - c[0])) / abs(c[0])) if c[0] else float(np.max(np.abs(c)))

    @property
    def liapunov_drift(self) -> float:
        v = np.asarray(self.liapunov)
        return float(np.max(np.abs(v - v[0])))

    def to_dict(self) -> dict:
        return {"energy_drift": self.energy_drift, "charge_drift": self.charge_drift,
                "liapunov_drift": self.liapunov_drift, "e_target": self.e_target,
                "c_target": self.c_target, "t": self.t, "energy": self.energy,
                "charge": self.charge, "liapunov": self.liapunov}


def conservation_run(s0: DynamicState, cfg: EvolutionConfig, p: Potential,
                     e_target: float, c_target: float, writer=None):
    def obs(s):
        e, c = conserved_energy(s, p, cfg.q), conserved_charge(s, cfg.q)
        return s.t, e, c, (e - e_target) ** 2 + (abs(c) - abs(c_target)) ** 2

    final, rec = evolve(s0, cfg, p, obs, writer)
    t, e, c, v = (list(map(float, x)) for x in zip(*rec))
    return final, ConservationReport(t, e, c, v, e_target, c_target)


def time_reversal_error(s0: DynamicState, cfg: EvolutionConfig, p: Potential) -> float:
    """Relative error after evolving forward, flipping d_t psi and evolving back."""
    fwd = step(s0, cfg, p, cfg.n_steps)
    back = reverse(step(reverse(fwd), cfg, p, cfg.n_steps))
    num = np.sqrt(integrate(s0.grid, np.abs(back.psi - s0.psi) ** 2
                            + np.abs(back.dpsi - s0.dpsi) ** 2))
    den = np.sqrt(integrate(s0.grid, np.abs(s0.psi) ** 2 + np.abs(s0.dpsi) ** 2))
    return float(num / den)


@dataclass
class StabilityReport:
    rel_perturbation: float
    t: list[float]
    distance: list[float]
    liapunov: list[float]
    energy_drift: float
    charge_drift: float

    @property
    def initial_distance(self) -> float:
        return self.distance[0]

    @property
    def max_distance(self) -> float:
        return float(max(self.distance))

    @property
    def growth(self) -> float:
        d0 = self.initial_distance
        return self.max_distance / d0 if d0 > 0 else float("inf")

    def to_dict(self) -> dict:
        return {"rel_perturbation": self.rel_perturbation,
                "initial_distance": self.initial_distance,
                "max_distance": self.max_distance, "growth": self.growth,
                "energy_drift": self.energy_drift, "charge_drift": self.charge_drift,
                "max_liapunov": float(max(self.liapunov)),
                "t": self.t, "distance": self.distance, "liapunov": self.liapunov}


def stability_probe(sol, rel_perturbation: float, cfg: EvolutionConfig, p: Potential,
                    writer=None) -> StabilityReport:
    """Evolve psi = (1 + eps) u_delta and track the distance to the soliton orbit."""
    if not 0 <= rel_perturbation <= 0.05:
        raise ValueError("rel_perturbation must lie in [0, 0.05]")
    base = embed_soliton(sol, cfg.q)
    s0 = _from_momentum(base.grid, (1 + rel_perturbation) * base.psi,
                        base.momentum(cfg.q), cfg.q, 0.0)
    e_t, c_t = sol.energy, abs(sol.charge)

    def obs(s):
        e, c = conserved_energy(s, p, cfg.q), conserved_charge(s, cfg.q)
        return (s.t, orbit_distance(s, sol, cfg.q),
                (e - e_t) ** 2 + (abs(c) - c_t) ** 2, e, c)

    _, rec = evolve(s0, cfg, p, obs, writer)
    t, d, v, e, c = (np.array(x, dtype=float) for x in zip(*rec))
    return StabilityReport(rel_perturbation, t.tolist(), d.tolist(), v.tolist(),
                           float(np.max(np.abs(e - e[0])) / abs(e[0])),
                           float(np.max(np.abs(c - c[0])) / abs(c[0])))


def star_norm_series(s0: DynamicState, cfg: EvolutionConfig,
                     p: Potential) -> tuple[np.ndarray, np.ndarray]:
    _, rec = evolve(s0, cfg, p, lambda s: (s.t, star_norm(s.grid, np.abs(s.psi))))
    t, v = zip(*rec)
    return np.array(t), np.array(v)


def dispersion_probe(amplitude: float, cfg: EvolutionConfig, p: Potential,
                     width: float = 2.0) -> tuple[np.ndarray, np.ndarray]:
    """star-norm time series of a small gaussian pulse (checked to have Lambda > m)."""
    s0 = gaussian_pulse(cfg.grid, amplitude, width, p.m, cfg.q)
    if amplitude == 0:
        return star_norm_series(s0, cfg, p)
    lam = conserved_energy(s0, p, cfg.q) / abs(conserved_charge(s0, cfg.q))
    if not lam > p.m:
        raise ValueError(f"pulse is hylomorphic (Lambda = {lam:.6g} <= m); use a smaller amplitude")
    return star_norm_series(s0, cfg, p)
