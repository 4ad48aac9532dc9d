"""Radial discretization of spherically symmetric fields on R^3.

Fields are plain float arrays sampled at the nodes r_i = i*h, i = 0..n, of a
:class:`RadialGrid`. The Laplacian is a finite-volume stencil whose control
volumes are exact spherical shells, which makes it symmetric with respect to
the quadrature weights, second order, and exact on even quadratics up to r = 0.

Sign convention for the electrostatic potential of the static problem: phi
solves ``Laplacian(phi) = q * theta * u``, the form in which the stationary
equations and the multiplier relation theta = (q*phi - lambda)*u are stated.
It is the negative of the Coulomb potential of the charge density q*theta*u.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy import linalg

FOUR_PI = 4.0 * np.pi


@dataclass(frozen=True)
class RadialGrid:
    r_max: float
    n: int

    def __post_init__(self):
        if not self.r_max > 0 or self.n < 2:
            raise ValueError("need r_max > 0 and n >= 2")

    @property
    def h(self) -> float:
        return self.r_max / self.n

    @cached_property
    def r(self) -> np.ndarray:
        return np.arange(self.n + 1) * self.h

    @cached_property
    def r_face(self) -> np.ndarray:
        """Cell faces r_{i+1/2}, i = 0..n-1."""
        return (np.arange(self.n) + 0.5) * self.h

    @cached_property
    def weights(self) -> np.ndarray:
        """Shell volumes, so that sum(w * f) approximates the integral over R^3."""
        edges = np.concatenate(([0.0], self.r_face, [self.r_max]))
        return FOUR_PI * (edges[1:] ** 3 - edges[:-1] ** 3) / 3.0

    @cached_property
    def face_coeff(self) -> np.ndarray:
        """4*pi*r_{i+1/2}^2 / h: flux through face i+1/2 is face_coeff * (f[i+1]-f[i])."""
        return FOUR_PI * self.r_face**2 / self.h

    def zeros(self) -> np.ndarray:
        return np.zeros(self.n + 1)

    def sample(self, fn) -> np.ndarray:
        return np.asarray(fn(self.r), dtype=float) * np.ones(self.n + 1)

    def to_dict(self) -> dict:
        return {"r_max": self.r_max, "n": self.n}


# -- differential and integral operators -------------------------------------

def face_gradient(grid: RadialGrid, f: np.ndarray) -> np.ndarray:
    return np.diff(f) / grid.h


def laplacian_radial(grid: RadialGrid, f: np.ndarray, bc: str = "dirichlet") -> np.ndarray:
    """Finite-volume Laplacian d^2/dr^2 + (2/r) d/dr.

    ``bc="dirichlet"`` treats f(r_max) as 0 (matter fields); the last entry
    carries no equation and is returned as 0. ``bc="robin"`` closes the last
    cell with the Coulomb-tail flux, i.e. f' + f/r = 0 at r_max (potentials).
    """
    f = np.asarray(f, dtype=float)
    if bc == "dirichlet":
        f = f.copy()
        f[-1] = 0.0
    flux = grid.face_coeff * np.diff(f)
    net = np.empty_like(f)
    net[0] = flux[0]
    net[1:-1] = flux[1:] - flux[:-1]
    if bc == "dirichlet":
        net[-1] = 0.0
    elif bc == "robin":
        net[-1] = -FOUR_PI * grid.r_max * f[-1] - flux[-1]
    else:
        raise ValueError(f"unknown boundary condition {bc!r}")
    return net / grid.weights


def integrate(grid: RadialGrid, f: np.ndarray) -> float:
    """Integral over R^3 of a radial function."""
    return float(np.dot(grid.weights, f))


def gradient_energy(grid: RadialGrid, f: np.ndarray) -> float:
    """Integral of |grad f|^2 (Dirichlet closure, f(r_max) = 0)."""
    f = np.asarray(f, dtype=float).copy()
    f[-1] = 0.0
    return float(np.dot(grid.face_coeff, np.diff(f) ** 2))


def enclosed_charge(grid: RadialGrid, density: np.ndarray) -> np.ndarray:
    """Charge inside each face r_{i+1/2}; the last entry is the total."""
    cum = np.cumsum(grid.weights * density)
    return cum


def enclosed_field(grid: RadialGrid, density: np.ndarray) -> np.ndarray:
    """Radial Coulomb field Q_enc(r)/(4 pi r^2) at the faces r_{i+1/2}."""
    q_enc = enclosed_charge(grid, density)[:-1]
    return q_enc / (FOUR_PI * grid.r_face**2)


def poisson_solve(grid: RadialGrid, source: np.ndarray, q_coupling: float) -> np.ndarray:
    """Solve Laplacian(phi) = q*source with the Coulomb tail, by Gauss's law.

    The flux through each face equals the enclosed charge of q*source; phi is
    then accumulated inward from the analytic tail phi(r_max) = -Q/(4 pi r_max).
    The result satisfies ``laplacian_radial(phi, "robin") == q*source`` to
    rounding.
    """
    source = np.asarray(source, dtype=float)
    if not np.all(np.isfinite(source)):
        raise ValueError("Poisson source has non-finite values")
    if q_coupling == 0.0:
        return grid.zeros()
    q_enc = enclosed_charge(grid, q_coupling * source)
    phi = np.empty(grid.n + 1)
    phi[-1] = -q_enc[-1] / (FOUR_PI * grid.r_max)
    steps = q_enc[:-1] / grid.face_coeff
    # phi[i] = phi[i+1] - steps[i], accumulated from the outside in
    phi[:-1] = phi[-1] - np.cumsum(steps[::-1])[::-1]
    return phi


def poisson_solve_tridiagonal(grid: RadialGrid, source: np.ndarray,
                              q_coupling: float) -> np.ndarray:
    """Independent check: pointwise centered stencil, ghost-node Robin closure.

    Solves phi'' + (2/r) phi' = q*source with 6(phi_1 - phi_0)/h^2 at the
    origin and a ghost value from phi' + phi/r = 0 at r_max.
    """
    n, h, r = grid.n, grid.h, grid.r
    rhs = q_coupling * np.asarray(source, dtype=float)
    lower = np.zeros(n + 1)   # coefficient of phi[i-1]
    diag = np.full(n + 1, -2.0 / h**2)
    upper = np.zeros(n + 1)   # coefficient of phi[i+1]
    ri = r[1:]
    lower[1:] = 1.0 / h**2 - 1.0 / (ri * h)
    upper[1:] = 1.0 / h**2 + 1.0 / (ri * h)
    diag[0], upper[0] = -6.0 / h**2, 6.0 / h**2
    # ghost phi[n+1] = phi[n-1] - 2 h phi[n] / r_n
    lower[n] += upper[n]
    diag[n] += upper[n] * (-2.0 * h / r[n])
    upper[n] = 0.0
    ab = np.zeros((3, n + 1))
    ab[0, 1:] = upper[:-1]
    ab[1] = diag
    ab[2, :-1] = lower[1:]
    return linalg.solve_banded((1, 1), ab, rhs)


# -- states ------------------------------------------------------------------

@dataclass(frozen=True)
class ReducedState:
    """Static gauge-invariant triple (u, theta, phi) on a grid."""

    grid: RadialGrid
    u: np.ndarray
    theta: np.ndarray
    phi: np.ndarray

    def __post_init__(self):
        for name in ("u", "theta", "phi"):
            a = np.asarray(getattr(self, name), dtype=float)
            if a.shape != (self.grid.n + 1,):
                raise ValueError(f"{name} has shape {a.shape}, expected ({self.grid.n + 1},)")
            if not np.all(np.isfinite(a)):
                raise ValueError(f"{name} has non-finite values")
            a = a.copy()
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        if np.any(self.u < 0):
            raise ValueError("u must be non-negative")

    @classmethod
    def from_fields(cls, grid: RadialGrid, u, theta, q: float) -> "ReducedState":
        u = np.asarray(u, dtype=float).copy()
        u[-1] = 0.0
        theta = np.asarray(theta, dtype=float)
        return cls(grid, u, theta, poisson_solve(grid, theta * u, q))

    @property
    def charge_density(self) -> np.ndarray:
        return self.theta * self.u


def project_gauss(s: ReducedState, q: float) -> ReducedState:
    """Replace phi by the Gauss-law solve for the current (u, theta)."""
    return replace(s, phi=poisson_solve(s.grid, s.theta * s.u, q))


# -- CSV import/export -------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x)) if np.isfinite(x) else str(float(x))


def write_columns(path: str | Path, header: list[str], columns: list[np.ndarray]) -> None:
    """Write aligned columns as CSV, numbers with round-trip precision."""
    rows = zip(*columns)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def read_columns(path: str | Path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    data = np.array([[float(v) for v in row] for row in rows[1:] if row], dtype=float)
    if data.ndim != 2 or data.shape[1] != len(header):
        raise ValueError(f"{path}: ragged or empty CSV")
    return {name: data[:, i] for i, name in enumerate(header)}


def write_field(path: str | Path, grid: RadialGrid, f: np.ndarray, name: str = "value") -> None:
    write_columns(path, ["r", name], [grid.r, f])


def read_field(path: str | Path) -> tuple[RadialGrid, np.ndarray]:
    cols = read_columns(path)
    names = list(cols)
    r, f = cols[names[0]], cols[names[1]]
    return grid_from_nodes(r), f


def grid_from_nodes(r: np.ndarray) -> RadialGrid:
    n = len(r) - 1
    grid = RadialGrid(float(r[-1]), n)
    if r[0] != 0.0 or not np.allclose(r, grid.r, rtol=0, atol=1e-12 * grid.r_max):
        raise ValueError("nodes are not a uniform radial grid starting at r = 0")
    return grid


def resample(f: np.ndarray, src: RadialGrid, dst: RadialGrid) -> np.ndarray:
    """Linear interpolation onto another grid, zero beyond the source range."""
    return np.interp(dst.r, src.r, f, right=0.0)
