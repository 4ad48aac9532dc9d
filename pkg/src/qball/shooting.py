"""Shooting for uncharged ground states: u'' + (2/r) u' = W'(u) - omega^2 u.

This is an oracle for the q = 0 reduction of the stationary equations and is
deliberately independent of the finite-volume discretization: it integrates
the radial ODE with classical RK4 and bisects on u(0).
"""

from __future__ import annotations

import numpy as np

from .errors import NoGroundState
from .grid import RadialGrid
from .potential import Potential

_UNDECIDED, _OVER, _UNDER = 0, 1, 2


def _top_of_hill(p: Potential, omega: float, s_max: float = 1e3) -> float:
    """Largest s with W'(s)/s = omega^2 (the effective-potential maximum)."""
    s = np.geomspace(1e-6, s_max, 200001)
    f = p.W_prime_over_s(s) - omega**2
    idx = np.flatnonzero((f[:-1] < 0) & (f[1:] >= 0))
    if len(idx) == 0:
        raise NoGroundState(f"omega = {omega}: effective potential has no maximum")
    i = idx[-1]
    a, b = s[i], s[i + 1]
    for _ in range(200):
        c = 0.5 * (a + b)
        if p.W_prime_over_s(c) - omega**2 < 0:
            a = c
        else:
            b = c
    return float(a)


def _integrate(p: Potential, omega: float, u0: np.ndarray, r_end: float,
               dr: float, record: bool = False):
    """RK4 from r = 0 for a batch of initial amplitudes.

    Returns the status of each trajectory and, if ``record``, the sampled
    (r, u) history. Trajectories are frozen once they overshoot (u < 0) or
    undershoot (u' > 0).
    """
    om2 = omega**2
    u = u0.astype(float).copy()
    v = np.zeros_like(u)
    status = np.full(u.shape, _UNDECIDED)
    n_steps = int(round(r_end / dr))

    def accel(r, uu, vv):
        force = p.W_prime_over_s(np.abs(uu)) * uu - om2 * uu
        if r == 0.0:
            return force / 3.0
        return force - 2.0 * vv / r

    hist = [u.copy()] if record else None
    for k in range(n_steps):
        r = k * dr
        a1 = accel(r, u, v)
        u2, v2 = u + 0.5 * dr * v, v + 0.5 * dr * a1
        a2 = accel(r + 0.5 * dr, u2, v2)
        u3, v3 = u + 0.5 * dr * v2, v + 0.5 * dr * a2
        a3 = accel(r + 0.5 * dr, u3, v3)
        u4, v4 = u + dr * v3, v + dr * a3
        a4 = accel(r + dr, u4, v4)
        un = u + dr / 6.0 * (v + 2 * v2 + 2 * v3 + v4)
        vn = v + dr / 6.0 * (a1 + 2 * a2 + 2 * a3 + a4)
        live = status == _UNDECIDED
        u = np.where(live, un, u)
        v = np.where(live, vn, v)
        status = np.where(live & (u < 0), _OVER, status)
        status = np.where(live & (u >= 0) & (v > 0), _UNDER, status)
        if record:
            hist.append(u.copy())
        elif not np.any(status == _UNDECIDED):
            break
    return status, (np.array(hist) if record else None)


def shoot_amplitude(p: Potential, omega: float, r_end: float, dr: float,
                    fan: int = 64, max_halvings: int = 200) -> tuple[float, float]:
    """Bracket [lo, hi] of the central amplitude: lo undershoots, hi overshoots."""
    if not (0 < omega < p.m):
        raise NoGroundState(f"omega = {omega} outside (0, m): no decaying tail")
    top = _top_of_hill(p, omega)
    lo, hi = 0.0, top
    found_over = False
    halvings = 0.0
    while hi - lo > 4 * np.finfo(float).eps * hi:
        if halvings > max_halvings:
            break
        cand = np.linspace(lo, hi, fan + 2)[1:-1]
        status, _ = _integrate(p, omega, cand, r_end, dr)
        # undecided at r_end counts as undershoot (still decaying, not crossed)
        over = status == _OVER
        if not np.any(over):
            lo = cand[-1]
        else:
            found_over = True
            first = int(np.argmax(over))
            hi = cand[first]
            lo = cand[first - 1] if first > 0 else lo
        halvings += np.log2(fan + 1)
    if not found_over:
        raise NoGroundState(f"omega = {omega}: no overshooting amplitude below the hilltop")
    if lo == 0.0:
        raise NoGroundState(f"omega = {omega}: bracket collapsed onto zero")
    return float(lo), float(hi)


def shooting_oracle_q0(omega: float, p: Potential, grid: RadialGrid,
                       substeps: int = 4) -> np.ndarray:
    """Node-free decaying profile at frequency omega, sampled on ``grid``.

    Beyond the radius where the two bracketing trajectories separate, the
    profile is continued by the linearized tail A exp(-kappa r)/r.
    """
    if not (0 < omega < p.m):
        raise NoGroundState(f"omega = {omega} outside (0, m): no decaying tail")
    dr = grid.h / substeps
    lo, hi = shoot_amplitude(p, omega, grid.r_max, dr)
    _, hist = _integrate(p, omega, np.array([lo, hi]), grid.r_max, dr, record=True)
    ul, uh = hist[::substeps, 0], hist[::substeps, 1]
    r = grid.r
    sep = np.abs(uh - ul) > 1e-6 * np.maximum(np.abs(ul), 1e-300)
    sep |= (ul <= 0) | (uh <= 0)
    # monotone decay must also hold on the kept part
    rising = np.concatenate(([False], np.diff(ul) > 0))
    bad = np.flatnonzero(sep | rising)
    cut = int(bad[0]) - 1 if len(bad) else len(r) - 1
    if cut < 2:
        raise NoGroundState("profile separates immediately")
    u = 0.5 * (ul + uh)
    kappa = np.sqrt(p.m**2 - omega**2)
    tail = u[cut] * r[cut] / r[cut:] * np.exp(-kappa * (r[cut:] - r[cut]))
    u = u.copy()
    u[cut:] = tail
    return u
