"""Polynomial layer: P_l, Chebyshev T_l, the exponent sequence beta_l and k_max.

Rational inputs (``int`` / ``Fraction``) are handled exactly; anything else is
evaluated in double precision. Every quantity has two independent evaluation
routes and the routes are cross-checked.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational

import numpy as np

from .errors import ConsistencyError, ValidationError

BINOMIAL_MAX_ELL = 60
BETA_RTOL = 1e-12


def is_exact(x) -> bool:
    return isinstance(x, Rational) and not isinstance(x, bool)


def _as_number(x):
    if is_exact(x):
        return Fraction(x)
    return float(x)


@dataclass(frozen=True)
class SystemParams:
    """Coupling entries ``a``, ``b`` and singularity strengths ``alpha1``, ``alpha2``."""

    a: float | Fraction
    b: float | Fraction
    alpha1: float | Fraction
    alpha2: float | Fraction

    def __post_init__(self):
        for name in ("a", "b", "alpha1", "alpha2"):
            value = _as_number(getattr(self, name))
            if not value > 0 or not math.isfinite(value):
                raise ValidationError(f"{name} must be positive and finite, got {value}")
            object.__setattr__(self, name, value)

    @property
    def exact(self) -> bool:
        return all(isinstance(v, Fraction) for v in (self.a, self.b, self.alpha1, self.alpha2))

    @property
    def ab(self):
        return self.a * self.b

    def swapped(self) -> "SystemParams":
        """Parameters with the roles of the two components exchanged."""
        return SystemParams(self.b, self.a, self.alpha2, self.alpha1)


PRESETS = {
    "a2": SystemParams(1, 1, 2, 2),
    "b2": SystemParams(1, 2, 2, 2),
    "g2": SystemParams(1, 3, 2, 2),
    "sinh": SystemParams(2, 2, 2, 2),
}


@dataclass(frozen=True)
class BetaSequence:
    betas: tuple
    kmax: float | int
    params: SystemParams

    def __len__(self):
        return len(self.betas)

    def __getitem__(self, ell):
        """1-based access: ``seq[1]`` is beta_1."""
        if ell < 1:
            raise IndexError("beta indices start at 1")
        return self.betas[ell - 1]


# -- P_l ---------------------------------------------------------------------

def _P_product(ell: int, t):
    if ell == 0:
        return np.zeros_like(t, dtype=float) if isinstance(t, np.ndarray) else 0.0
    if ell <= 2:
        return np.ones_like(t, dtype=float) if isinstance(t, np.ndarray) else 1.0
    out = 1.0
    for i in range(1, (ell - 1) // 2 + 1):
        out = out * (t - 2.0 - 2.0 * math.cos(2.0 * math.pi * i / ell))
    return out


def _P_recurrence(ell: int, t):
    # P_{2j+1} = t P_{2j} - P_{2j-1},  P_{2j+2} = P_{2j+1} - P_{2j}
    if ell == 0:
        return t * 0
    prev, cur = t * 0, t * 0 + 1
    for n in range(2, ell + 1):
        nxt = t * cur - prev if n % 2 == 1 else cur - prev
        prev, cur = cur, nxt
    return cur


def eval_P(ell: int, t):
    """Evaluate P_ell(t).

    Floating ``t`` (scalar or array) uses the product over the roots
    ``2 + 2 cos(2 pi i / ell)``. Rational ``t`` is evaluated exactly through the
    three-term recurrence and, under ``__debug__``, compared with the product.
    """
    if ell < 0:
        raise ValidationError("ell must be nonnegative")
    if is_exact(t):
        value = _P_recurrence(ell, Fraction(t))
        if __debug__:
            approx = _P_product(ell, float(t))
            scale = max(1.0, abs(float(value)))
            if abs(approx - float(value)) > 1e-9 * scale * max(ell, 1):
                raise ConsistencyError(f"P_{ell}({t}): product {approx} vs exact {value}")
        return value
    if isinstance(t, np.ndarray):
        return _P_product(ell, t.astype(float))
    return float(_P_product(ell, float(t)))


def eval_P_binomial(ell: int, t):
    """Alternating binomial-sum form of P_ell; independent oracle for :func:`eval_P`."""
    if ell < 0:
        raise ValidationError("ell must be nonnegative")
    if ell > BINOMIAL_MAX_ELL:
        raise OverflowError(f"binomial form supported for ell <= {BINOMIAL_MAX_ELL}")
    if ell == 0:
        return t * 0
    if is_exact(t):
        t = Fraction(t)
    if ell % 2 == 1:
        j = (ell - 1) // 2
        coeffs = [(-1) ** (j + i) * math.comb(j + i, 2 * i) for i in range(j + 1)]
    else:
        j = (ell - 2) // 2
        coeffs = [(-1) ** (j + i) * math.comb(j + i + 1, 2 * i + 1) for i in range(j + 1)]
    # Horner, highest power first
    out = t * 0
    for c in reversed(coeffs):
        out = out * t + c
    return out


def eval_T(ell: int, x):
    """Chebyshev polynomial of the first kind by the three-term recurrence."""
    if ell < 0:
        raise ValidationError("ell must be nonnegative")
    prev, cur = x * 0 + 1, x
    if ell == 0:
        return prev
    for _ in range(ell - 1):
        prev, cur = cur, 2 * x * cur - prev
    return cur


# -- beta_l ------------------------------------------------------------------

def beta_recurrence(params: SystemParams, n: int) -> list:
    """First ``n`` terms of the beta recurrence, with no positivity screening."""
    a, b = params.a, params.b
    out = []
    for ell in range(1, n + 1):
        if ell == 1:
            out.append(params.alpha1)
        elif ell == 2:
            out.append(b * params.alpha1 + params.alpha2)
        elif ell % 2 == 1:
            out.append(a * out[-1] - out[-2])
        else:
            out.append(b * out[-1] - out[-2])
    return out


def beta_closed_form(params: SystemParams, ell: int):
    t = params.ab
    if ell % 2 == 1:
        terms = (params.alpha1 * eval_P(ell, t), params.a * params.alpha2 * eval_P(ell - 1, t))
    else:
        terms = (params.b * params.alpha1 * eval_P(ell, t), params.alpha2 * eval_P(ell - 1, t))
    return terms[0] + terms[1], abs(terms[0]) + abs(terms[1])


def compute_betas(params: SystemParams, k: int) -> BetaSequence:
    """beta_1..beta_k by recurrence, checked against the closed form in P_l(ab)."""
    if k < 1:
        raise ValidationError("k must be >= 1")
    rec = beta_recurrence(params, k)
    for ell, value in enumerate(rec, start=1):
        closed, scale = beta_closed_form(params, ell)
        if params.exact:
            ok = closed == value
        else:
            ok = abs(float(closed) - float(value)) <= BETA_RTOL * max(float(scale), 1.0) * ell
        if not ok:
            raise ConsistencyError(f"beta_{ell}: recurrence {value} vs closed form {closed}")
    return BetaSequence(tuple(rec), compute_kmax(params), params)


# -- k_max -------------------------------------------------------------------

def kmax_scan(params: SystemParams):
    """sup{k : beta_l > 0 for l <= k}; ``math.inf`` when ab >= 4."""
    if params.ab >= 4:
        return math.inf
    a, b = params.a, params.b
    prev, cur = params.alpha1, b * params.alpha1 + params.alpha2
    if cur <= 0:
        return 1
    ell = 2
    while True:
        ell += 1
        nxt = a * cur - prev if ell % 2 == 1 else b * cur - prev
        if nxt <= 0:
            return ell - 1
        prev, cur = cur, nxt


_EXACT_ROOT_ORDERS = {Fraction(1): 3, Fraction(2): 4, Fraction(3): 6}


def kmax_formula(params: SystemParams):
    """k_max from the arccos characterization (ab < 4 only)."""
    ab = params.ab
    if ab >= 4:
        return math.inf
    if params.exact:
        if ab in _EXACT_ROOT_ORDERS:
            return _EXACT_ROOT_ORDERS[ab]
        ratio = 2 * math.pi / math.acos(float(ab) / 2 - 1)
    else:
        ratio = 2 * math.pi / math.acos(ab / 2 - 1)
        if abs(ratio - round(ratio)) <= 1e-9 * ratio:
            return int(round(ratio))
    n = math.floor(ratio)
    nxt = beta_recurrence(params, n + 1)[-1]
    # an exact zero fails strict positivity, so it goes with the negative branch
    return n + 1 if nxt > 0 else n


def compute_kmax(params: SystemParams):
    """k_max by direct scan, cross-checked with the arccos formula when ab < 4."""
    scan = kmax_scan(params)
    if params.ab < 4:
        formula = kmax_formula(params)
        if formula != scan:
            warnings.warn(f"k_max scan {scan} disagrees with arccos formula {formula} for {params}")
    return scan
