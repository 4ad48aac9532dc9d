"""Polynomial self-interaction W(s) = m^2 s^2 / 2 + N(s) and its structural checks."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy import optimize


@dataclass(frozen=True)
class Potential:
    """W(s) = m^2 s^2/2 + sum_k a_k s^k, evaluated on the modulus s >= 0.

    ``coeffs`` holds (exponent, coefficient) pairs with exponent >= 3 so that
    W(0) = W'(0) = 0 and W''(0) = m^2 hold exactly.
    """

    m: float
    coeffs: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        if not self.m > 0:
            raise ValueError(f"mass must be positive, got {self.m}")
        pairs = tuple((float(k), float(a)) for k, a in self.coeffs)
        for k, _ in pairs:
            if k <= 2:
                raise ValueError(f"exponent {k} must exceed 2")
        object.__setattr__(self, "coeffs", tuple(sorted(pairs)))

    @classmethod
    def reference(cls) -> "Potential":
        """m = 1, N(s) = -s^3/3 + s^4/4."""
        return cls(1.0, ((3, -1.0 / 3.0), (4, 0.25)))

    def N(self, s):
        s = _modulus(s)
        out = np.zeros_like(s)
        for k, a in self.coeffs:
            out = out + a * s**k
        return out

    def N_prime(self, s):
        s = _modulus(s)
        out = np.zeros_like(s)
        for k, a in self.coeffs:
            out = out + k * a * s ** (k - 1)
        return out

    def N_over_s(self, s):
        """N'(s)/s, finite at s = 0 because every exponent exceeds 2."""
        s = _modulus(s)
        out = np.zeros_like(s)
        for k, a in self.coeffs:
            out = out + k * a * s ** (k - 2)
        return out

    def W(self, s):
        s = _modulus(s)
        return 0.5 * self.m**2 * s**2 + self.N(s)

    def W_prime(self, s):
        s = _modulus(s)
        return self.m**2 * s + self.N_prime(s)

    def W_prime_over_s(self, s):
        """W'(s)/s, tending to m^2 as s -> 0."""
        return self.m**2 + self.N_over_s(s)

    def ratio(self, s):
        """W(s) / (s^2/2) for s > 0."""
        s = _modulus(s)
        out = np.full_like(s, self.m**2)
        for k, a in self.coeffs:
            out = out + 2.0 * a * s ** (k - 2)
        return out

    def ratio_prime(self, s):
        s = _modulus(s)
        out = np.zeros_like(s)
        for k, a in self.coeffs:
            out = out + 2.0 * (k - 2) * a * s ** (k - 3)
        return out

    def to_dict(self) -> dict:
        return {"mass": self.m, "coeffs": [[k, a] for k, a in self.coeffs]}


def _modulus(s):
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise ValueError("matter amplitude must be non-negative")
    return s


def parse_coefficient(value) -> float:
    """Accept numbers or rational strings such as ``"-1/3"``."""
    if isinstance(value, str):
        return float(Fraction(value.strip()))
    return float(value)


def eval_W(p: Potential, s) -> float | np.ndarray:
    out = p.W(s)
    return float(out) if np.ndim(out) == 0 else out


def eval_W_prime(p: Potential, s) -> float | np.ndarray:
    out = p.W_prime(s)
    return float(out) if np.ndim(out) == 0 else out


@dataclass
class PotentialReport:
    positivity_ok: bool
    nondegeneracy_ok: bool
    hylomorphy_ok: bool
    witness_s0: float | None
    witness_N: float | None
    growth_exponents: tuple[float, float] | None
    growth_ok: bool
    alpha0: float
    s_star: float
    notes: list[str] = field(default_factory=list)

    @property
    def all_ok(self) -> bool:
        return (self.positivity_ok and self.nondegeneracy_ok
                and self.hylomorphy_ok and self.growth_ok)

    def to_dict(self) -> dict:
        return {
            "positivity_ok": self.positivity_ok,
            "nondegeneracy_ok": self.nondegeneracy_ok,
            "hylomorphy_ok": self.hylomorphy_ok,
            "witness_s0": self.witness_s0,
            "witness_N": self.witness_N,
            "growth_exponents": (list(self.growth_exponents)
                                 if self.growth_exponents else None),
            "growth_ok": self.growth_ok,
            "alpha0": self.alpha0,
            "s_star": self.s_star,
            "notes": list(self.notes),
        }


def _refine_root(fun, a: float, b: float) -> float:
    fa, fb = fun(a), fun(b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if np.sign(fa) == np.sign(fb):
        raise ValueError("no sign change")
    return optimize.brentq(fun, a, b, xtol=1e-300, rtol=4 * np.finfo(float).eps,
                           maxiter=500)


def _refine_min(f, fprime, s: np.ndarray, i: int) -> tuple[float, float]:
    """Refine a scan minimum at index i by bisection on the derivative."""
    lo = s[max(i - 1, 0)]
    hi = s[min(i + 1, len(s) - 1)]
    df = lambda x: float(fprime(x))
    try:
        x = _refine_root(df, lo, hi)
    except ValueError:
        x = s[i]
    # the scan point itself can only be beaten, never lost
    if float(f(x)) > float(f(s[i])):
        x = s[i]
    return float(x), float(f(x))


def check_assumptions(p: Potential, scan_max: float = 10.0,
                      n_scan: int = 20000) -> PotentialReport:
    """Scan-based verification of positivity, nondegeneracy, hylomorphy, growth."""
    if not scan_max > 0:
        raise ValueError("scan_max must be positive")
    if n_scan < 1000:
        raise ValueError("n_scan must be at least 1000")
    notes = []
    s = np.linspace(scan_max / n_scan, scan_max, n_scan)

    W = p.W(s)
    positivity_ok = bool(np.all(W >= 0))
    if not positivity_ok:
        bad = s[W < 0]
        notes.append(f"W < 0 on scan, first at s = {bad[0]:.6g}")
    if p.coeffs and p.coeffs[-1][1] < 0:
        positivity_ok = False
        notes.append("leading coefficient negative: W -> -inf as s -> inf")

    # exponents > 2 are enforced at construction
    nondegeneracy_ok = True

    ratio = p.ratio(s)
    i = int(np.argmin(ratio))
    s_star, alpha0 = _refine_min(p.ratio, p.ratio_prime, s, i)

    Nvals = p.N(s)
    j = int(np.argmin(Nvals))
    witness_s0 = witness_N = None
    if Nvals[j] < 0:
        witness_s0, witness_N = _refine_min(p.N, p.N_prime, s, j)
    hylomorphy_ok = witness_s0 is not None and alpha0 < p.m**2
    if not hylomorphy_ok:
        notes.append("N >= 0 on scan: hylomorphy fails")

    if p.coeffs:
        exps = [k for k, _ in p.coeffs]
        growth = (min(exps), max(exps))
        growth_ok = 2 < growth[0] and growth[1] < 6
        if not growth_ok:
            notes.append(f"growth exponents {growth} outside (2, 6)")
    else:
        growth, growth_ok = None, True

    return PotentialReport(positivity_ok, nondegeneracy_ok, bool(hylomorphy_ok),
                           witness_s0, witness_N, growth, growth_ok,
                           float(alpha0), float(s_star), notes)
