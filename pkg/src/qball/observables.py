"""Gauge-invariant functionals of a static state: energy, charge, ratio and norms."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import ZeroCharge
from .grid import FOUR_PI, RadialGrid, ReducedState, gradient_energy, integrate
from .potential import Potential


@dataclass(frozen=True)
class EnergyBreakdown:
    grad_u_term: float
    mass_term: float
    theta_term: float
    efield_term: float
    N_term: float

    @property
    def quadratic(self) -> float:
        return self.grad_u_term + self.mass_term + self.theta_term + self.efield_term

    @property
    def total(self) -> float:
        return self.quadratic + self.N_term


@dataclass(frozen=True)
class Observables:
    energy: float
    charge: float
    hylenic_ratio: float
    j_delta: float | None
    breakdown: EnergyBreakdown

    def to_dict(self) -> dict:
        return {
            "energy": self.energy,
            "charge": self.charge,
            "lambda": self.hylenic_ratio,
            "j_delta": self.j_delta,
            "breakdown": asdict(self.breakdown),
        }


def electric_energy(grid: RadialGrid, phi: np.ndarray) -> float:
    """(1/2) int |grad phi|^2 over R^3, including the Coulomb tail beyond r_max."""
    inner = float(np.dot(grid.face_coeff, np.diff(phi) ** 2))
    tail = FOUR_PI * grid.r_max * phi[-1] ** 2
    return 0.5 * (inner + tail)


def energy(s: ReducedState, p: Potential) -> EnergyBreakdown:
    g = s.grid
    return EnergyBreakdown(
        grad_u_term=0.5 * gradient_energy(g, s.u),
        mass_term=0.5 * p.m**2 * integrate(g, s.u**2),
        theta_term=0.5 * integrate(g, s.theta**2),
        efield_term=electric_energy(g, s.phi),
        N_term=integrate(g, p.N(s.u)),
    )


def charge(s: ReducedState) -> float:
    return integrate(s.grid, s.theta * s.u)


def zero_charge_threshold(e: float) -> float:
    return 1e-12 * (1.0 + abs(e))


def hylenic_ratio(s: ReducedState, p: Potential) -> float:
    e = energy(s, p).total
    c = charge(s)
    if abs(c) < zero_charge_threshold(e):
        raise ZeroCharge(f"|C| = {abs(c):.3e} too small for E = {e:.3e}")
    return e / abs(c)


def j_delta(s: ReducedState, p: Potential, delta: float) -> float:
    if not delta > 0:
        raise ValueError("delta must be positive")
    return hylenic_ratio(s, p) + delta * energy(s, p).total


def observe(s: ReducedState, p: Potential, delta: float | None = None) -> Observables:
    b = energy(s, p)
    c = charge(s)
    e = b.total
    lam = e / abs(c) if abs(c) >= zero_charge_threshold(e) else float("inf")
    jd = lam + delta * e if delta is not None else None
    return Observables(e, c, lam, jd, b)


def _face_to_node(grid: RadialGrid, face_values: np.ndarray) -> np.ndarray:
    """Split per-face integrals half-and-half onto neighbouring nodes."""
    out = np.zeros(grid.n + 1)
    out[:-1] += 0.5 * face_values
    out[1:] += 0.5 * face_values
    return out


def energy_density(s: ReducedState, p: Potential) -> np.ndarray:
    """Pointwise energy integrand; its weighted sum is exactly the energy."""
    g = s.grid
    u = s.u.copy()
    u[-1] = 0.0
    grad_u = _face_to_node(g, g.face_coeff * np.diff(u) ** 2) / g.weights
    efield = _face_to_node(g, g.face_coeff * np.diff(s.phi) ** 2)
    efield[-1] += FOUR_PI * g.r_max * s.phi[-1] ** 2
    efield /= g.weights
    return (0.5 * (grad_u + p.m**2 * s.u**2 + s.theta**2 + efield)
            + p.N(s.u))


def binding_energy_density(s: ReducedState, p: Potential,
                           lambda0: float | None = None) -> np.ndarray:
    """Negative part of rho_E - lambda0*|rho_C|; lambda0 defaults to the mass."""
    lam0 = p.m if lambda0 is None else lambda0
    if not lam0 > 0:
        raise ValueError("lambda0 must be positive")
    excess = energy_density(s, p) - lam0 * np.abs(s.theta * s.u)
    return np.maximum(-excess, 0.0)


def support_region(grid: RadialGrid, beta: np.ndarray, tol: float = 0.0) -> list[tuple[float, float]]:
    """Maximal radial intervals (node to node) where beta exceeds tol*max(beta)."""
    if tol < 0:
        raise ValueError("tol must be non-negative")
    top = float(np.max(beta)) if len(beta) else 0.0
    if top <= 0:
        return []
    mask = beta > tol * top
    idx = np.flatnonzero(np.diff(np.concatenate(([0], mask.astype(int), [0]))))
    starts, stops = idx[::2], idx[1::2] - 1
    return [(float(grid.r[a]), float(grid.r[b])) for a, b in zip(starts, stops)]


def lebesgue_norm(grid: RadialGrid, u: np.ndarray, exponent: float) -> float:
    return integrate(grid, np.abs(u) ** exponent) ** (1.0 / exponent)


def sharp_seminorm(grid: RadialGrid, u: np.ndarray, r_exp: float, q_exp: float) -> float:
    return max(lebesgue_norm(grid, u, r_exp), lebesgue_norm(grid, u, q_exp))


def _shell_area_in_ball(r: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Area of the sphere |x| = r lying inside the unit ball centred at distance d."""
    with np.errstate(divide="ignore", invalid="ignore"):
        cap = np.pi * r * (1.0 - (r - d) ** 2) / d
    full = FOUR_PI * r**2
    area = np.where(r <= 1.0 - d, full, cap)
    area = np.where(np.abs(r - d) <= 1.0, area, 0.0)
    return np.clip(np.where(d == 0, np.where(r <= 1.0, full, 0.0), area), 0.0, None)


def _ball_integrals(grid: RadialGrid, au: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Trapezoid sums over the nodes within distance 1 of each centre d.

    The shell area vanishes at |r - d| = 1 and is continuous where the shell
    leaves the ball, so the node sum is second order in h.
    """
    n, h = grid.n, grid.h
    k = np.arange(-(int(np.ceil(1.0 / h)) + 1), int(np.ceil(1.0 / h)) + 2)
    idx = np.rint(d / h).astype(int)[:, None] + k[None, :]
    valid = (idx >= 0) & (idx <= n)
    idx = np.clip(idx, 0, n)
    wts = np.where((idx == 0) | (idx == n), 0.5 * h, h) * valid
    vals = au[idx] * _shell_area_in_ball(grid.r[idx], d[:, None])
    return np.sum(vals * wts, axis=1)


def star_norm(grid: RadialGrid, u: np.ndarray, chunk: int = 512) -> float:
    """sup over centres x0 of the integral of |u| over the unit ball B_1(x0).

    A radial field attains the sup on any ray, so centres are taken on
    x0 = (d, 0, 0): first every node, then a local refinement around the best.
    The angular integral is done in closed form.
    """
    if not np.any(u):
        return 0.0
    au = np.abs(np.asarray(u, dtype=float))
    d = grid.r
    vals = np.concatenate([_ball_integrals(grid, au, d[i:i + chunk])
                           for i in range(0, len(d), chunk)])
    k = int(np.argmax(vals))
    fine = np.linspace(d[max(k - 1, 0)], d[min(k + 1, len(d) - 1)], 33)
    return float(max(vals[k], _ball_integrals(grid, au, fine).max()))
