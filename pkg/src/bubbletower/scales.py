"""Concentration parameters delta_l in log space, their power laws, and admissibility of lambda."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, ValidationError
from .spectrum import BetaSequence, beta_recurrence, eval_P

RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class LambdaPair:
    """(lambda_1, lambda_2) stored as natural logarithms."""

    log_lambda1: float
    log_lambda2: float

    def __post_init__(self):
        for v in (self.log_lambda1, self.log_lambda2):
            if not (math.isfinite(v) and v < 0):
                raise ValidationError("lambda components must lie in (0, 1)")

    @classmethod
    def from_log10(cls, l1, l2=None):
        l2 = l1 if l2 is None else l2
        return cls(l1 * math.log(10), l2 * math.log(10))

    @classmethod
    def from_linear(cls, lam1, lam2=None):
        lam2 = lam1 if lam2 is None else lam2
        if lam1 <= 0 or lam2 <= 0:
            raise ValidationError("lambda components must be positive")
        return cls(math.log(lam1), math.log(lam2))

    @property
    def log_norm(self):
        """log of the max-norm of (lambda_1, lambda_2)."""
        return max(self.log_lambda1, self.log_lambda2)


@dataclass(frozen=True)
class ScaleSet:
    log_deltas: tuple
    lam: LambdaPair
    H00: float = 0.0

    @property
    def k(self):
        return len(self.log_deltas)


def _betas_float(betas, k):
    seq = betas.betas if isinstance(betas, BetaSequence) else tuple(betas)
    if k < 1 or k > len(seq):
        raise ValidationError(f"k={k} outside 1..{len(seq)}")
    out = np.array([float(b) for b in seq[:k]])
    if np.any(out <= 0):
        raise ValidationError("all beta_l, l <= k, must be positive")
    return out


def assemble_system(betas, k: int, params, lam: LambdaPair, H00: float = 0.0):
    """Linear system ``A x = rhs`` in the unknowns x_l = log delta_l.

    Row l is the defining equation of delta_l: odd rows carry log(2 lambda_1),
    even rows log(2 lambda_2), plus the Robin constant term weighted by H00.
    """
    beta = _betas_float(betas, k)
    a, b = float(params.a), float(params.b)
    a1, a2 = float(params.alpha1), float(params.alpha2)
    odd = np.arange(1, k + 1, 2)
    even = np.arange(2, k + 1, 2)
    sum_odd = beta[odd - 1].sum()
    sum_even = beta[even - 1].sum()
    A = np.zeros((k, k))
    rhs = np.zeros(k)
    for ell in range(1, k + 1):
        r = ell - 1
        A[r, r] = -beta[r]
        if ell % 2 == 1:
            for i in odd[odd > ell]:
                A[r, i - 1] = -2.0 * beta[i - 1]
            for i in even[even > ell]:
                A[r, i - 1] = a * beta[i - 1]
            const = 2 * math.pi * (2 * sum_odd - a * sum_even - a1 + 2) * H00 + math.log(2) + lam.log_lambda1
        else:
            for i in even[even > ell]:
                A[r, i - 1] = -2.0 * beta[i - 1]
            for i in odd[odd > ell]:
                A[r, i - 1] = b * beta[i - 1]
            const = 2 * math.pi * (2 * sum_even - b * sum_odd - a2 + 2) * H00 + math.log(2) + lam.log_lambda2
        rhs[r] = math.log(2 * beta[r] ** 2) - const
    return A, rhs


def solve_log_deltas(betas: BetaSequence, k: int, lam: LambdaPair, H00: float = 0.0) -> ScaleSet:
    """Solve the k x k system for log delta_1..log delta_k."""
    A, rhs = assemble_system(betas, k, betas.params, lam, H00)
    try:
        x = np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"singular delta system: {exc}") from exc
    res = np.abs(A @ x - rhs)
    scale = 1.0 + np.abs(A) @ np.abs(x) + np.abs(rhs)
    if np.any(res > RESIDUAL_TOL * scale):
        raise NumericalError(f"delta system residual {res.max():.3e} above tolerance")
    return ScaleSet(tuple(float(v) for v in x), lam, H00)


def equation_residuals(betas: BetaSequence, scales: ScaleSet):
    A, rhs = assemble_system(betas, scales.k, betas.params, scales.lam, scales.H00)
    return A @ np.array(scales.log_deltas) - rhs


def closed_form_exponents(betas: BetaSequence, k: int) -> dict:
    """Exponents of (lambda_1, lambda_2) in delta_l and in delta_l / delta_{l+1}.

    Returns ``{"delta": (k, 2) array, "ratio": (k-1, 2) array}``.
    """
    params = betas.params
    seq = beta_recurrence(params, k + 1)
    beta = [float(v) for v in seq]
    _betas_float(betas, k)
    t = params.ab
    a, b = float(params.a), float(params.b)

    def P(n):
        return float(eval_P(n, t)) if n >= 0 else 0.0

    delta = np.zeros((k, 2))
    for ell in range(1, k + 1):
        bl = beta[ell - 1]
        if ell % 2 == 1:
            j = (ell - 1) // 2
            if k % 2 == 1:
                delta[ell - 1] = (P(k - 2 * j) / bl, a * P(k - 2 * j - 1) / bl)
            else:
                delta[ell - 1] = (P(k - 2 * j - 1) / bl, a * P(k - 2 * j) / bl)
        else:
            j = (ell - 2) // 2
            if k % 2 == 1:
                delta[ell - 1] = (b * P(k - 2 * j - 1) / bl, P(k - 2 * j - 2) / bl)
            else:
                delta[ell - 1] = (b * P(k - 2 * j - 2) / bl, P(k - 2 * j - 1) / bl)
    ratio = np.zeros((max(k - 1, 0), 2))
    bk, bk1 = beta[k - 1], beta[k]
    for ell in range(1, k):
        denom = beta[ell - 1] * beta[ell]
        ratio[ell - 1] = (bk1 / denom, bk / denom) if k % 2 == 1 else (bk / denom, bk1 / denom)
    return {"delta": delta, "ratio": ratio}


def admissible(betas: BetaSequence, k: int, lam: LambdaPair, gamma: float = 1.0,
               lambda_bar: float = 1.0) -> bool:
    """Smallness of lambda plus, at k = k_max, the parity-dependent coupling inequality."""
    if gamma <= 0 or lambda_bar <= 0:
        raise ValidationError("gamma and lambda_bar must be positive")
    kmax = betas.kmax
    if k > kmax:
        raise ValidationError(f"k={k} exceeds k_max={kmax}")
    log_bar = math.log(lambda_bar)
    if not (lam.log_lambda1 < log_bar and lam.log_lambda2 < log_bar):
        return False
    if k < kmax:
        return True
    seq = beta_recurrence(betas.params, k + 1)
    expo = (gamma - float(seq[k])) / float(seq[k - 1])
    if k % 2 == 1:
        return lam.log_lambda2 <= expo * lam.log_lambda1
    return lam.log_lambda1 <= expo * lam.log_lambda2


def admissible_pair(betas: BetaSequence, k: int, log_norm: float, gamma: float = 1.0) -> LambdaPair:
    """Lambda pair of max-norm e^log_norm on the boundary of the k = k_max coupling condition.

    Below k_max both components equal e^log_norm. At k_max the component that
    must be smaller is set to the largest value the inequality allows.
    """
    if not log_norm < 0:
        raise ValidationError("log_norm must be negative")
    if gamma <= 0:
        raise ValidationError("gamma must be positive")
    kmax = betas.kmax
    if k > kmax:
        raise ValidationError(f"k={k} exceeds k_max={kmax}")
    if k < kmax:
        return LambdaPair(log_norm, log_norm)
    seq = beta_recurrence(betas.params, k + 1)
    expo = max(1.0, (gamma - float(seq[k])) / float(seq[k - 1]))
    if k % 2 == 1:
        return LambdaPair(log_norm, expo * log_norm)
    return LambdaPair(expo * log_norm, log_norm)
