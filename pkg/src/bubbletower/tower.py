"""Bubbles, exact projections on the unit disc, the tower W, Theta_l and the residual R.

Everything is parameterized by the log-radius ``s = log r`` and the log-scales
``log delta_l``. Linear-scale deltas are never formed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _backend
from .errors import ValidationError
from .scales import LambdaPair, ScaleSet, solve_log_deltas
from .spectrum import BetaSequence, SystemParams, compute_betas

LOG2 = math.log(2.0)


def stable_log_add(x, y):
    """log(exp(x) + exp(y)) without overflow."""
    return np.logaddexp(x, y)


@dataclass(frozen=True)
class BubbleProfile:
    beta: float
    log_delta: float

    def __post_init__(self):
        if not self.beta > 0:
            raise ValidationError("bubble exponent must be positive")


def eval_w(bubble: BubbleProfile, log_r):
    """log(2 beta^2 delta^beta / (delta^beta + r^beta)^2)."""
    b, ld = bubble.beta, bubble.log_delta
    return math.log(2 * b * b) + b * ld - 2.0 * stable_log_add(b * ld, b * np.asarray(log_r, dtype=float))


def eval_Pw(bubble: BubbleProfile, log_r):
    """Projection of the bubble onto zero Dirichlet data on the unit disc.

    On the disc w - Pw is harmonic with constant trace, so the projection is
    ``-2 log(delta^beta + r^beta) + 2 log(1 + delta^beta)`` exactly.
    """
    log_r = np.asarray(log_r, dtype=float)
    if np.any(log_r > 0):
        raise ValidationError("projection is defined inside the closed unit disc only")
    b, ld = bubble.beta, bubble.log_delta
    return 2.0 * stable_log_add(b * ld, 0.0) - 2.0 * stable_log_add(b * ld, b * log_r)


def log_density(bubble: BubbleProfile, log_r):
    """log(r^(beta-2) e^w), the right-hand side of -Delta w."""
    return (bubble.beta - 2.0) * np.asarray(log_r, dtype=float) + eval_w(bubble, log_r)


@dataclass(frozen=True)
class TowerProfile:
    params: SystemParams
    k: int
    betas: BetaSequence
    scales: ScaleSet

    def __post_init__(self):
        if self.scales.k != self.k:
            raise ValidationError("scale set size does not match k")

    @property
    def beta(self):
        return np.array([float(b) for b in self.betas.betas[: self.k]])

    @property
    def log_deltas(self):
        return np.array(self.scales.log_deltas)

    @property
    def lam(self) -> LambdaPair:
        return self.scales.lam

    def bubble(self, ell: int) -> BubbleProfile:
        return BubbleProfile(float(self.betas[ell]), self.scales.log_deltas[ell - 1])

    def component_of(self, ell: int) -> int:
        return 1 if ell % 2 == 1 else 2

    def coefficients(self, component: int):
        """Weights of Pw_l in W_component."""
        a, b = float(self.params.a), float(self.params.b)
        idx = np.arange(1, self.k + 1)
        if component == 1:
            return np.where(idx % 2 == 1, 1.0, -a / 2.0)
        return np.where(idx % 2 == 0, 1.0, -b / 2.0)

    def annulus_bounds(self, s_min=None):
        """Log-radius bounds of the annuli A_1..A_k, clipped to [s_min, 0]."""
        x = self.log_deltas
        lo = np.concatenate(([-np.inf], 0.5 * (x[:-1] + x[1:])))
        hi = np.concatenate((0.5 * (x[:-1] + x[1:]), [0.0]))
        if s_min is not None:
            lo = np.maximum(lo, s_min)
        hi = np.minimum(hi, 0.0)
        return lo, hi

    def default_s_min(self):
        return float(self.log_deltas[0] - max(15.0, 40.0 / self.beta.min()))


def build_tower(params: SystemParams, k: int, lam: LambdaPair, H00: float = 0.0) -> TowerProfile:
    betas = compute_betas(params, k)
    if k > betas.kmax:
        raise ValidationError(f"k={k} exceeds k_max={betas.kmax}")
    scales = solve_log_deltas(betas, k, lam, H00)
    return TowerProfile(params, k, betas, scales)


def eval_W(tower: TowerProfile, log_r):
    """The two components (W_1, W_2) of the main term."""
    s = np.atleast_1d(np.asarray(log_r, dtype=float))
    if np.any(s > 0):
        raise ValidationError("W is defined inside the closed unit disc only")
    s = np.ascontiguousarray(s)
    beta, ld = tower.beta, tower.log_deltas
    W1 = _backend.projection_sum(s, beta, ld, np.ascontiguousarray(tower.coefficients(1)))
    W2 = _backend.projection_sum(s, beta, ld, np.ascontiguousarray(tower.coefficients(2)))
    if np.ndim(log_r) == 0:
        return float(W1[0]), float(W2[0])
    return W1, W2


def _log_lambda(tower, component):
    return tower.lam.log_lambda1 if component == 1 else tower.lam.log_lambda2


def _alpha(tower, component):
    return float(tower.params.alpha1 if component == 1 else tower.params.alpha2)


def theta_at_s(tower: TowerProfile, ell: int, s, W=None):
    """Theta_ell evaluated at the physical log-radius s."""
    s = np.asarray(s, dtype=float)
    comp = tower.component_of(ell)
    if W is None:
        W = eval_W(tower, s)
    Wc = W[comp - 1]
    bub = tower.bubble(ell)
    return (Wc - eval_w(bub, s) - (bub.beta - _alpha(tower, comp)) * s
            + LOG2 + _log_lambda(tower, comp))


def eval_Theta(tower: TowerProfile, ell: int, log_y):
    """Theta_ell at the scaled point y (``log_y = log r - log delta_ell``)."""
    if not 1 <= ell <= tower.k:
        raise ValidationError(f"ell={ell} outside 1..{tower.k}")
    s = np.asarray(log_y, dtype=float) + tower.scales.log_deltas[ell - 1]
    if np.any(s > 0):
        raise ValidationError("delta_ell * |y| must not exceed 1")
    out = theta_at_s(tower, ell, s)
    return float(out) if np.ndim(log_y) == 0 else out


def theta_sup(tower: TowerProfile, ell: int, n: int = 4001, s_min=None) -> float:
    """sup of |Theta_ell| over the scaled annulus A_ell / delta_ell (sampled)."""
    s_min = tower.default_s_min() if s_min is None else s_min
    lo, hi = tower.annulus_bounds(s_min)
    s = np.linspace(lo[ell - 1], hi[ell - 1], n)
    return float(np.max(np.abs(theta_at_s(tower, ell, s))))


def annulus_index(tower: TowerProfile, s):
    """1-based index of the annulus containing each log-radius."""
    x = tower.log_deltas
    bounds = 0.5 * (x[:-1] + x[1:])
    return np.searchsorted(bounds, np.asarray(s, dtype=float), side="right") + 1


def _log_densities(tower, s):
    return np.array([log_density(tower.bubble(ell), s) for ell in range(1, tower.k + 1)])


def _log_exponential_terms(tower, s, W):
    """log(2 lambda_c r^(alpha_c - 2) e^{W_c}) for c = 1, 2."""
    return [LOG2 + _log_lambda(tower, c) + (_alpha(tower, c) - 2.0) * s + W[c - 1] for c in (1, 2)]


def _combine(tower, D1, D2):
    a, b = float(tower.params.a), float(tower.params.b)
    return D1 - 0.5 * a * D2, D2 - 0.5 * b * D1


def _to_log(values, shift):
    with np.errstate(divide="ignore"):
        mag = np.log(np.abs(values)) + shift
    return mag, np.sign(values)


def eval_residual(tower: TowerProfile, log_r, stabilized: bool = True):
    """R_lambda = -Delta W - (nonlinearity) evaluated analytically.

    Uses -Delta Pw_l = r^(beta_l - 2) e^{w_l} exactly. For each component the
    exponential term is rewritten as t_m exp(Theta_m) with m the dominant bubble
    of that component, and the leading cancellation is done by ``expm1``.

    Returns ``(log|R1|, sign1, log|R2|, sign2)``.
    """
    s = np.atleast_1d(np.asarray(log_r, dtype=float))
    if np.any(s > 0):
        raise ValidationError("residual is defined inside the closed unit disc only")
    if np.any(~np.isfinite(s)):
        raise ValidationError("r = 0 is outside the domain")
    W = eval_W(tower, s)
    logt = _log_densities(tower, s)
    logE = _log_exponential_terms(tower, s, W)
    shift = np.maximum(np.max(logt, axis=0), np.maximum(logE[0], logE[1]))
    t = np.exp(logt - shift)
    D = []
    for comp in (1, 2):
        rows = np.arange(tower.k)[(np.arange(1, tower.k + 1) % 2 == 1) == (comp == 1)]
        E = np.exp(logE[comp - 1] - shift)
        if rows.size == 0:
            D.append(-E)
            continue
        if not stabilized:
            D.append(t[rows].sum(axis=0) - E)
            continue
        dom = rows[np.argmax(logt[rows], axis=0)]
        theta = np.empty_like(s)
        for r in np.unique(dom):
            mask = dom == r
            theta[mask] = theta_at_s(tower, r + 1, s[mask], W=(W[0][mask], W[1][mask]))
        t_dom = t[dom, np.arange(s.size)]
        D.append(t_dom * -np.expm1(theta) + (t[rows].sum(axis=0) - t_dom))
    R1, R2 = _combine(tower, *D)
    l1, s1 = _to_log(R1, shift)
    l2, s2 = _to_log(R2, shift)
    if np.ndim(log_r) == 0:
        return float(l1[0]), float(s1[0]), float(l2[0]), float(s2[0])
    return l1, s1, l2, s2


def laplacian_source(tower: TowerProfile, s):
    """e^{2s} (-Delta W_c) for c = 1, 2, i.e. -d^2 W_c / ds^2."""
    s = np.asarray(s, dtype=float)
    dens = np.exp(_log_densities(tower, s) + 2.0 * s)
    return tower.coefficients(1) @ dens, tower.coefficients(2) @ dens


def profile_rows(tower: TowerProfile, s):
    """Rows of the radial profile dump: s, W1, W2, Theta_active, log|R1|, sign, log|R2|, sign."""
    s = np.asarray(s, dtype=float)
    W1, W2 = eval_W(tower, s)
    idx = annulus_index(tower, s)
    theta = np.empty_like(s)
    for ell in np.unique(idx):
        mask = idx == ell
        theta[mask] = theta_at_s(tower, int(ell), s[mask], W=(W1[mask], W2[mask]))
    l1, g1, l2, g2 = eval_residual(tower, s)
    return np.column_stack([s, W1, W2, theta, l1, g1, l2, g2])
