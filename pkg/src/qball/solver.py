"""Minimization of J_delta = E/|C| + delta*E and of E at fixed charge.

The unknowns are (u, theta); phi is always the Gauss-law solve of the current
pair, so every iterate lies in the constrained phase space. Descent is a
Sobolev-preconditioned gradient flow: the u-gradient is mapped through
(-Laplacian + m^2)^{-1}, theta keeps the L^2 metric. Step lengths come from
the Barzilai-Borwein rule, cut back until the objective does not increase.

Discretely, the gradients are exact derivatives of the finite-volume energy,
so stationary points satisfy the stationary system

    -Lap u + W'(u) = (q*phi - lam)^2 u,   Lap phi = q*theta*u,
    theta = (q*phi - lam) u,              omega = -lam,

to solver precision rather than to truncation error.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, optimize
from scipy.sparse.linalg import LinearOperator, cg

from .errors import Collapse, DegenerateFit, NoConvergence, ZeroCharge
from .grid import (RadialGrid, ReducedState, gradient_energy, integrate,
                   laplacian_radial, poisson_solve, read_columns, resample,
                   grid_from_nodes)
from .observables import zero_charge_threshold
from .potential import Potential, check_assumptions

log = logging.getLogger(__name__)

# J is evaluated to about this relative precision; smaller increases are noise
_ROUNDOFF_SLACK = 8 * np.finfo(float).eps


@dataclass(frozen=True)
class InitSpec:
    """Initial profile: ``auto``, ``gaussian``, ``plateau`` or ``file``.

    gaussian: u = amplitude * exp(-(r/width)^2); plateau: u = amplitude on
    r < radius with a linear ramp of the given width. ``auto`` tries gaussians
    with amplitude s_star and several widths and keeps the lowest objective.
    """

    kind: str = "auto"
    amplitude: float | None = None
    width: float | None = None
    radius: float | None = None
    path: str | None = None


@dataclass(frozen=True)
class SolverConfig:
    delta: float | None = None
    q: float = 0.0
    r_max: float = 30.0
    n: int = 3000
    max_iters: int = 20000
    step_init: float = 1.0
    grad_tol: float = 1e-10
    collapse_tol: float = 1e-6
    init: InitSpec = field(default_factory=InitSpec)
    charge_target: float | None = None

    def __post_init__(self):
        if self.delta is not None and not self.delta > 0:
            raise ValueError("delta must be positive")
        if self.q < 0:
            raise ValueError("q must be non-negative")
        for name in ("step_init", "grad_tol", "collapse_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    @property
    def grid(self) -> RadialGrid:
        return RadialGrid(self.r_max, self.n)


@dataclass
class SolitonSolution:
    state: ReducedState
    omega: float
    energy: float
    charge: float
    lambda_ratio: float
    j_value: float | None
    el_residual: float
    gauss_residual: float
    multiplier_residual: float
    iterations: int
    q: float
    delta: float | None = None
    rel_gradient: float = float("nan")
    eigen_cosine: float = float("nan")
    mass: float = 1.0
    history: list[float] = field(default_factory=list, repr=False)

    @property
    def residual(self) -> float:
        return max(self.el_residual, self.gauss_residual, self.multiplier_residual)

    def to_dict(self) -> dict:
        return {
            "delta": self.delta,
            "q": self.q,
            "omega": self.omega,
            "energy": self.energy,
            "charge": self.charge,
            "lambda": self.lambda_ratio,
            "j_delta": self.j_value,
            "residuals": {
                "stationary_matter": self.el_residual,
                "gauss": self.gauss_residual,
                "multiplier": self.multiplier_residual,
            },
            "rel_gradient": self.rel_gradient,
            "eigen_cosine": self.eigen_cosine,
            "iterations": self.iterations,
            "grid": self.state.grid.to_dict(),
        }


# -- the discrete functional -------------------------------------------------

@dataclass
class _Eval:
    u: np.ndarray
    theta: np.ndarray
    phi: np.ndarray
    E: float
    C: float
    gu: np.ndarray   # L^2 gradient densities of E
    gt: np.ndarray


class _Functional:
    """Energy, charge and exact discrete gradients on a fixed grid."""

    def __init__(self, grid: RadialGrid, p: Potential, q: float):
        self.grid, self.p, self.q = grid, p, q
        n, k, w = grid.n, grid.face_coeff, grid.weights
        diag = k.copy()
        diag[1:] += k[:-1]
        diag += p.m**2 * w[:n]
        ab = np.zeros((2, n))
        ab[0, 1:] = -k[:-1]
        ab[1] = diag
        self._chol = linalg.cholesky_banded(ab)

    def __call__(self, u: np.ndarray, theta: np.ndarray) -> _Eval:
        g, p, q = self.grid, self.p, self.q
        phi = poisson_solve(g, theta * u, q)
        rho = theta * u
        E = (0.5 * gradient_energy(g, u)
             + integrate(g, 0.5 * p.m**2 * u**2 + 0.5 * theta**2 + p.N(u)))
        if q:
            E -= 0.5 * q * integrate(g, phi * rho)
        gu = -laplacian_radial(g, u) + p.W_prime(u) - q * phi * theta
        gu[-1] = 0.0
        gt = theta - q * phi * u
        return _Eval(u, theta, phi, E, integrate(g, rho), gu, gt)

    def precondition(self, gu: np.ndarray) -> np.ndarray:
        """(-Lap + m^2)^{-1} applied to a u-gradient density (Dirichlet)."""
        w = self.grid.weights
        out = np.zeros_like(gu)
        out[:-1] = linalg.cho_solve_banded((self._chol, False), w[:-1] * gu[:-1])
        return out

    def dot(self, a_u, a_t, b_u, b_t) -> float:
        w = self.grid.weights
        return float(np.dot(w, a_u * b_u) + np.dot(w, a_t * b_t))

    def metric(self, su: np.ndarray, st: np.ndarray) -> float:
        w = self.grid.weights
        return (gradient_energy(self.grid, su) + self.p.m**2 * float(np.dot(w, su * su))
                + float(np.dot(w, st * st)))

    def theta_direction(self, u: np.ndarray) -> np.ndarray:
        """K^{-1} u where K = 1 + q^2 (Coulomb kernel): the optimal theta shape."""
        if self.q == 0.0:
            return u.copy()
        g, q, w = self.grid, self.q, self.grid.weights

        def matvec(x):
            return w * (x - q * u * poisson_solve(g, u * x, q))

        size = (g.n + 1, g.n + 1)
        op = LinearOperator(size, matvec=matvec, dtype=float)
        # 1/w makes this CG in the weighted inner product, where K is close to 1
        pre = LinearOperator(size, matvec=lambda x: x / w, dtype=float)
        x, info = cg(op, w * u, x0=u.copy(), M=pre, rtol=1e-13, atol=0.0, maxiter=500)
        if info != 0:
            log.warning("theta shape CG did not converge (info=%d)", info)
        return x


def optimal_theta(grid: RadialGrid, u: np.ndarray, p: Potential, q: float,
                  delta: float = 0.0) -> np.ndarray:
    """theta minimizing Lambda + delta*E for fixed u (exact; the problem is 1D).

    With v = K^{-1} u, E = A + B t^2/2 and C = B t along theta = t v; the
    optimum solves delta*B t^3 + t^2/2 = A/B.
    """
    f = _Functional(grid, p, q)
    u = np.asarray(u, dtype=float).copy()
    u[-1] = 0.0
    v = f.theta_direction(u)
    B = integrate(grid, u * v)
    A = f(u, np.zeros_like(u)).E
    if B <= 0 or A <= 0:
        raise ZeroCharge("profile carries no charge capacity")
    if delta == 0.0:
        t = np.sqrt(2 * A / B)
    else:
        t = optimize.brentq(lambda t: delta * B * t**3 + 0.5 * t**2 - A / B,
                            0.0, np.sqrt(2 * A / B) + 1.0, xtol=1e-15)
    return t * v


# -- initial data ------------------------------------------------------------

def _profile(grid: RadialGrid, spec: InitSpec, p: Potential) -> np.ndarray:
    r = grid.r
    if spec.kind == "gaussian":
        amp = spec.amplitude if spec.amplitude is not None else check_assumptions(p).s_star
        width = spec.width if spec.width is not None else 2.0 / p.m
        return amp * np.exp(-(r / width) ** 2)
    if spec.kind == "plateau":
        amp = spec.amplitude if spec.amplitude is not None else check_assumptions(p).s_star
        radius = spec.radius if spec.radius is not None else 4.0 / p.m
        width = spec.width if spec.width is not None else 1.0
        return amp * np.clip((radius + width - r) / width, 0.0, 1.0)
    raise ValueError(f"unknown init kind {spec.kind!r}")


def initial_state(cfg: SolverConfig, p: Potential, delta: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    grid = cfg.grid
    spec = cfg.init
    if spec.kind == "file":
        _, u, theta = read_profile(spec.path, grid)
        u = np.abs(u)
        u[-1] = 0.0
        return u, theta
    if spec.kind == "auto":
        s_star = check_assumptions(p).s_star
        best = None
        f = _Functional(grid, p, cfg.q)
        for width in (2.0, 3.0, 4.0, 6.0, 8.0):
            w = width / p.m
            if 3 * w > grid.r_max:
                continue
            u = s_star * np.exp(-(grid.r / w) ** 2)
            u[-1] = 0.0
            theta = optimal_theta(grid, u, p, cfg.q, delta)
            ev = f(u, theta)
            score = ev.E / abs(ev.C) + delta * ev.E
            if best is None or score < best[0]:
                best = (score, u, theta)
        return best[1], best[2]
    u = _profile(grid, spec, p)
    u[-1] = 0.0
    return u, optimal_theta(grid, u, p, cfg.q, delta)


# -- residuals ---------------------------------------------------------------

def el_residual(s: ReducedState, p: Potential, q: float,
                u_floor: float | None = None) -> tuple[float, float, float, float]:
    """Sup-norm residuals of the stationary system and the fitted frequency.

    lambda is fitted by least squares from theta = (q*phi - lambda) u on nodes
    with u > u_floor (default 1e-8 * max u). Returns
    (matter residual, Gauss residual, multiplier residual, omega = -lambda).
    """
    g = s.grid
    u, theta, phi = s.u, s.theta, s.phi
    if u_floor is None:
        u_floor = 1e-8 * float(np.max(u))
    mask = u > u_floor
    if np.count_nonzero(mask) < 10:
        raise DegenerateFit(f"only {np.count_nonzero(mask)} nodes with u > {u_floor:g}")
    um = u[mask]
    lam = -float(np.dot(um, theta[mask] - q * phi[mask] * um) / np.dot(um, um))
    factor = q * phi - lam
    matter = -laplacian_radial(g, u) + p.W_prime(u) - factor**2 * u
    gauss = -laplacian_radial(g, phi, bc="robin") + q * theta * u
    mult = theta - factor * u
    return (float(np.max(np.abs(matter[:-1]))), float(np.max(np.abs(gauss))),
            float(np.max(np.abs(mult))), -lam)


# -- descent -----------------------------------------------------------------

def _finish(f: _Functional, ev: _Eval, it: int, q: float, delta, rel: float,
            history: list[float]) -> SolitonSolution:
    state = ReducedState(f.grid, ev.u, ev.theta, ev.phi)
    res_u, res_g, res_m, omega = el_residual(state, f.p, q)
    lam = ev.E / abs(ev.C)
    du = f.precondition(ev.gu)
    cu = f.precondition(ev.theta)
    num = f.dot(ev.gu, ev.gt, cu, ev.u)
    den = np.sqrt(f.dot(ev.gu, ev.gt, du, ev.gt) * f.dot(ev.theta, ev.u, cu, ev.u))
    return SolitonSolution(
        state=state, omega=omega, energy=ev.E, charge=ev.C, lambda_ratio=lam,
        j_value=(lam + delta * ev.E) if delta is not None else None,
        el_residual=res_u, gauss_residual=res_g, multiplier_residual=res_m,
        iterations=it, q=q, delta=delta, rel_gradient=rel,
        eigen_cosine=float(abs(num) / den) if den > 0 else float("nan"),
        mass=f.p.m, history=history)


def _fail(exc, ev: _Eval):
    """Attach the last iterate (u, theta) for diagnostics and reproducibility checks."""
    exc.last_iterate = (ev.u.copy(), ev.theta.copy())
    return exc


def _check_alive(ev: _Eval, cfg: SolverConfig):
    if float(np.max(np.abs(ev.u))) < cfg.collapse_tol:
        raise _fail(Collapse(f"max u = {np.max(ev.u):.3e} below collapse_tol"), ev)
    if abs(ev.C) < zero_charge_threshold(ev.E):
        raise _fail(ZeroCharge(f"|C| = {abs(ev.C):.3e} vanished"), ev)


def _descend(f: _Functional, u, theta, cfg: SolverConfig, objective, direction,
             restore=None, record: bool = False):
    """Shared BB-gradient loop. ``direction`` returns (gu, gt, rel) for an _Eval."""
    ev = f(u, theta)
    _check_alive(ev, cfg)
    J = objective(ev)
    tau = cfg.step_init
    prev = None
    history = [J] if record else []
    rel = np.inf
    for it in range(cfg.max_iters + 1):
        Gu, Gt, rel = direction(ev)
        du = f.precondition(Gu)
        if prev is not None:
            su, st = ev.u - prev[0], ev.theta - prev[1]
            yu, yt = Gu - prev[2], Gt - prev[3]
            sy = f.dot(su, st, yu, yt)
            if sy > 0:
                tau = f.metric(su, st) / sy
        prev = (ev.u, ev.theta, Gu, Gt)
        if rel < cfg.grad_tol:
            return ev, it, rel, history
        if it == cfg.max_iters:
            break
        for _ in range(200):
            un = np.abs(ev.u - tau * du)
            un[-1] = 0.0
            tn = ev.theta - tau * Gt
            if restore is not None:
                un, tn = restore(un, tn)
            new = f(un, tn)
            Jn = objective(new)
            if np.isfinite(Jn) and Jn <= J + _ROUNDOFF_SLACK * abs(J):
                break
            tau *= 0.5
        else:
            raise _fail(NoConvergence("line search failed to find a non-increasing step"), ev)
        assert Jn <= J + _ROUNDOFF_SLACK * abs(J)
        ev, J = new, Jn
        _check_alive(ev, cfg)
        if record:
            history.append(J)
    raise _fail(NoConvergence(f"relative gradient {rel:.3e} after {cfg.max_iters} iterations"), ev)


def _reject_nonhylomorphic(sol: SolitonSolution, p: Potential):
    if not sol.lambda_ratio < p.m:
        exc = Collapse(
            f"stationary point has Lambda = {sol.lambda_ratio:.6f} >= m: a box-limited "
            "vanishing state, not a soliton")
        exc.last_iterate = (np.array(sol.state.u), np.array(sol.state.theta))
        exc.solution = sol
        raise exc


def minimize_j_delta(cfg: SolverConfig, p: Potential, init=None,
                     record: bool = False) -> SolitonSolution:
    """Minimize Lambda + delta*E by preconditioned gradient flow.

    ``init`` may be a (u, theta) pair (warm start); otherwise ``cfg.init``.
    """
    if cfg.delta is None:
        raise ValueError("minimize_j_delta needs cfg.delta")
    delta, f = cfg.delta, _Functional(cfg.grid, p, cfg.q)
    u, theta = init if init is not None else initial_state(cfg, p, delta)

    def objective(ev):
        return ev.E / abs(ev.C) + delta * ev.E

    def direction(ev):
        sgn = np.sign(ev.C)
        a = 1.0 / abs(ev.C) + delta
        b = sgn * ev.E / ev.C**2
        Gu = a * ev.gu - b * ev.theta
        Gt = a * ev.gt - b * ev.u
        gnorm = np.sqrt(max(f.dot(Gu, Gt, f.precondition(Gu), Gt), 0.0))
        enorm = np.sqrt(max(f.dot(ev.gu, ev.gt, f.precondition(ev.gu), ev.gt), 0.0))
        return Gu, Gt, gnorm / (a * enorm) if enorm > 0 else np.inf

    ev, it, rel, hist = _descend(f, np.asarray(u, float), np.asarray(theta, float),
                                 cfg, objective, direction, record=record)
    sol = _finish(f, ev, it, cfg.q, delta, rel, hist)
    _reject_nonhylomorphic(sol, p)
    return sol


def minimize_e_fixed_c(c_target: float, cfg: SolverConfig, p: Potential, init=None,
                       record: bool = False) -> SolitonSolution:
    """Minimize E on {C = c_target}; the constraint is restored by rescaling theta."""
    if c_target == 0:
        raise ValueError("c_target must be nonzero")
    f = _Functional(cfg.grid, p, cfg.q)
    if init is not None:
        u, theta = init
    else:
        u, theta = initial_state(cfg, p)

    def restore(u, theta):
        c = integrate(f.grid, theta * u)
        if abs(c) < 1e-300:
            raise ZeroCharge("charge vanished during projection")
        return u, theta * (c_target / c)

    def objective(ev):
        return ev.E

    def direction(ev):
        # tangent part of grad E, in the preconditioned metric
        du, cu = f.precondition(ev.gu), f.precondition(ev.theta)
        mu = f.dot(ev.gu, ev.gt, cu, ev.u) / f.dot(ev.theta, ev.u, cu, ev.u)
        Gu, Gt = ev.gu - mu * ev.theta, ev.gt - mu * ev.u
        gnorm = np.sqrt(max(f.dot(Gu, Gt, f.precondition(Gu), Gt), 0.0))
        enorm = np.sqrt(max(f.dot(ev.gu, ev.gt, du, ev.gt), 0.0))
        return Gu, Gt, gnorm / enorm if enorm > 0 else np.inf

    u, theta = restore(np.asarray(u, float), np.asarray(theta, float))
    ev, it, rel, hist = _descend(f, u, theta, cfg, objective, direction,
                                 restore=restore, record=record)
    sol = _finish(f, ev, it, cfg.q, None, rel, hist)
    _reject_nonhylomorphic(sol, p)
    return sol


def solve(cfg: SolverConfig, p: Potential, init=None) -> SolitonSolution:
    """Dispatch on whichever of delta / charge_target is set."""
    if (cfg.delta is None) == (cfg.charge_target is None):
        raise ValueError("set exactly one of delta and charge_target")
    if cfg.delta is not None:
        return minimize_j_delta(cfg, p, init)
    return minimize_e_fixed_c(cfg.charge_target, cfg, p, init)


def l2_distance(grid: RadialGrid, a: np.ndarray, b: np.ndarray) -> float:
    return float(np.sqrt(integrate(grid, (a - b) ** 2)))


def solution_from_state(state: ReducedState, p: Potential, q: float,
                        delta: float | None = None) -> SolitonSolution:
    """Wrap a stored profile (e.g. read back from CSV) with its diagnostics."""
    f = _Functional(state.grid, p, q)
    ev = f(np.array(state.u), np.array(state.theta))
    return _finish(f, ev, 0, q, delta, float("nan"), [])


def read_profile(path, grid: RadialGrid | None = None) -> tuple[RadialGrid, np.ndarray, np.ndarray]:
    """Read (r, u, theta) columns written by the solve command."""
    cols = read_columns(path)
    for name in ("r", "u", "theta"):
        if name not in cols:
            raise ValueError(f"{path}: missing column {name!r}")
    src = grid_from_nodes(cols["r"])
    if grid is None or grid == src:
        return src, cols["u"], cols["theta"]
    return grid, resample(cols["u"], src, grid), resample(cols["theta"], src, grid)
