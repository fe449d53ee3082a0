"""Fundamental solutions of the radial linearization around a single bubble.

The operator is

    L_n phi = phi'' + phi' / rho - n^2 phi / rho^2 + 2 alpha^2 rho^(alpha-2) (1 + rho^alpha)^-2 phi

and phi_{n,+} = rho^n (alpha + 2n - (alpha - 2n) rho^alpha) / (1 + rho^alpha), phi_{n,-} = phi_{-n,+}.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np

from .errors import ValidationError

FD_REL_STEP = 1e-4
WORK_DPS = 40
EVEN_TOL = 1e-12


def _sign(sign) -> int:
    if sign in (1, "+", "plus"):
        return 1
    if sign in (-1, "-", "minus"):
        return -1
    raise ValidationError(f"sign must be + or -, got {sign!r}")


@dataclass(frozen=True)
class KernelMode:
    """phi_{n,sign} times an angular factor (``"radial"``, ``"cos"`` or ``"sin"``)."""

    n: int
    alpha: float
    sign: int = 1
    angular: str = "radial"

    def __call__(self, rho):
        return phi_fundamental(self.n, self.alpha, self.sign, rho)

    @property
    def effective_n(self):
        return self.sign * self.n


def _check(n, alpha):
    if int(n) != n:
        raise ValidationError("n must be an integer")
    if not alpha > 0:
        raise ValidationError("alpha must be positive")


def phi_fundamental(n: int, alpha: float, sign, rho):
    """phi_{n,sign}(rho); accepts scalars or arrays with rho > 0."""
    _check(n, alpha)
    m = _sign(sign) * int(n)
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0):
        raise ValidationError("rho must be positive")
    # each power is formed separately so a vanishing coefficient never meets an overflow
    cp, cm = alpha + 2 * m, alpha - 2 * m

    def term(c, expo):
        return np.zeros_like(t) if c == 0 else c * np.exp(expo)

    with np.errstate(over="ignore", invalid="ignore"):
        t = np.log(rho)
        q = np.exp(-alpha * np.abs(t))
        big = term(cp, (m - alpha) * t) - term(cm, m * t)
        small = term(cp, m * t) - term(cm, (m + alpha) * t)
        out = np.where(t > 0, big, small) / (1 + q)
    return float(out) if out.ndim == 0 else out


def _phi_mp(m, alpha, rho):
    ra = mpmath.power(rho, alpha)
    return mpmath.power(rho, m) * ((alpha + 2 * m) - (alpha - 2 * m) * ra) / (1 + ra)


def _apply_operator(f, m, alpha, rho, h):
    """Scaled residual rho^2 L_m f at rho, with Richardson-extrapolated central differences."""
    f0 = f(rho)
    fp, fm = f(rho + h), f(rho - h)
    fp2, fm2 = f(rho + h / 2), f(rho - h / 2)
    d1 = (4 * (fp2 - fm2) / h - (fp - fm) / (2 * h)) / 3
    d2 = (4 * (fp2 - 2 * f0 + fm2) / (h * h / 4) - (fp - 2 * f0 + fm) / (h * h)) / 3
    ra = mpmath.power(rho, alpha)
    pot = 2 * alpha ** 2 * ra / (1 + ra) ** 2
    terms = (rho * rho * d2, rho * d1, -m * m * f0, pot * f0)
    scale = sum(abs(x) for x in terms)
    return sum(terms), scale


def ode_residual(n: int, alpha: float, sign, rho_samples, perturbation=None) -> float:
    """Max over the samples of |rho^2 L_n phi| relative to the size of its individual terms.

    Derivatives are central differences with h = 1e-4 rho, Richardson-extrapolated,
    in 40-digit arithmetic. ``perturbation(rho)`` (mpmath-compatible) is added to
    phi, which is useful as a negative control.
    """
    _check(n, alpha)
    m = _sign(sign) * int(n)
    samples = [float(r) for r in np.atleast_1d(rho_samples)]
    if any(not r > 0 for r in samples):
        raise ValidationError("samples must lie in (0, inf)")
    worst = 0.0
    with mpmath.workdps(WORK_DPS):
        a = mpmath.mpf(alpha)

        def f(r):
            v = _phi_mp(m, a, r)
            return v + perturbation(r) if perturbation is not None else v

        for r in samples:
            rho = mpmath.mpf(r)
            res, scale = _apply_operator(f, m, a, rho, FD_REL_STEP * rho)
            rel = abs(res) / scale if scale > 0 else abs(res)
            worst = max(worst, float(rel))
    return worst


def is_bounded(n: int, alpha: float, sign=1, rtol=1e-9) -> bool:
    """Degree count of phi_{n,sign} at 0 and infinity.

    With m = sign*n the function behaves like (alpha + 2m) rho^m at 0 and like
    -(alpha - 2m) rho^m at infinity, so it is bounded iff m = 0 or |m| = alpha/2.
    """
    _check(n, alpha)
    m = _sign(sign) * int(n)
    at_zero = m >= 0 or abs(alpha + 2 * m) <= rtol * alpha
    at_inf = m <= 0 or abs(alpha - 2 * m) <= rtol * alpha
    return at_zero and at_inf


def mode_cutoff(alpha: float) -> float:
    """Modes with |n| >= alpha / sqrt(2) have a nonnegative quadratic form."""
    if not alpha > 0:
        raise ValidationError("alpha must be positive")
    return alpha / math.sqrt(2.0)


def quadratic_coefficient_min(n: int, alpha: float, log_rho=None) -> float:
    """min over a log grid of rho^2 times (n^2 / rho^2 - 2 alpha^2 rho^(alpha-2) / (1 + rho^alpha)^2)."""
    _check(n, alpha)
    t = np.linspace(-20.0, 20.0, 40001) if log_rho is None else np.asarray(log_rho, dtype=float)
    # 2 alpha^2 rho^alpha / (1 + rho^alpha)^2 = alpha^2 / (2 cosh^2(alpha t / 2))
    pot = alpha ** 2 / (2.0 * np.cosh(0.5 * alpha * t) ** 2)
    return float(np.min(n * n - pot))


def _even_natural(x) -> int | None:
    k = round(x)
    if abs(x - k) <= EVEN_TOL * max(1.0, abs(x)) and k > 0 and k % 2 == 0:
        return k
    return None


def bounded_modes(alpha: float, m: int) -> list:
    """Bounded kernel elements invariant under rotation by 2 pi / m.

    The radial mode phi_{0,+} is always present. When alpha is an even integer
    the pair phi_{alpha/2,+} cos(alpha theta / 2), phi_{alpha/2,+} sin(alpha theta / 2)
    is bounded too, and it survives the symmetry filter iff m divides alpha/2.
    """
    if not alpha > 0:
        raise ValidationError("alpha must be positive")
    if int(m) != m or m < 1:
        raise ValidationError("m must be a positive integer")
    modes = [KernelMode(0, float(alpha), 1, "radial")]
    even = _even_natural(alpha)
    if even is not None:
        half = even // 2
        if half % int(m) == 0:
            modes.append(KernelMode(half, float(alpha), 1, "cos"))
            modes.append(KernelMode(half, float(alpha), 1, "sin"))
    return modes


def dirichlet_energy(mode: KernelMode) -> float:
    """Integral over the plane of |grad(phi(rho) Y(theta))|^2, computed in t = log rho."""
    from scipy.integrate import quad

    m, alpha = mode.effective_n, mode.alpha
    ang = 2 * math.pi if mode.angular == "radial" else math.pi

    def integrand(t):
        rho = math.exp(t)
        d = 1e-6 * rho
        dphi = (phi_fundamental(m, alpha, 1, rho + d) - phi_fundamental(m, alpha, 1, rho - d)) / (2 * d)
        phi = phi_fundamental(m, alpha, 1, rho)
        return (rho * rho * dphi * dphi + m * m * phi * phi)

    span = 60.0 / alpha
    val, _ = quad(integrand, -span, span, limit=400, points=[0.0])
    return ang * val
