"""Composite Gauss-Legendre quadrature in the log-radius and the integrals built on it."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import NumericalError, ValidationError
from .masses import local_masses
from .scales import LambdaPair
from .tower import BubbleProfile, TowerProfile, annulus_index, eval_residual, eval_W, log_density

TWO_PI = 2.0 * math.pi
LN10 = math.log(10.0)


@lru_cache(maxsize=None)
def _gauss(n):
    return np.polynomial.legendre.leggauss(n)


@dataclass(frozen=True)
class RadialGrid:
    """Panels of fixed Gauss order covering ``[s_min, s_max]`` in s = log r."""

    s_min: float
    s_max: float
    panels_per_decade: int = 10
    nodes_per_panel: int = 16

    def __post_init__(self):
        if not self.s_min < self.s_max:
            raise ValidationError("s_min must be below s_max")
        if self.panels_per_decade < 1 or self.nodes_per_panel < 1:
            raise ValidationError("panel counts must be positive")

    @classmethod
    def for_tower(cls, tower: TowerProfile, **kw):
        return cls(tower.default_s_min(), 0.0, **kw)

    def refined(self, factor=2):
        return RadialGrid(self.s_min, self.s_max, self.panels_per_decade * factor, self.nodes_per_panel)

    def nodes(self, breaks=()):
        """Nodes, weights and segment id; segments are delimited by ``breaks``."""
        edges = [self.s_min] + sorted(b for b in breaks if self.s_min < b < self.s_max) + [self.s_max]
        x, w = _gauss(self.nodes_per_panel)
        width = LN10 / self.panels_per_decade
        s_all, w_all, seg_all = [], [], []
        for seg, (lo, hi) in enumerate(zip(edges[:-1], edges[1:])):
            n = max(1, math.ceil((hi - lo) / width))
            cuts = np.linspace(lo, hi, n + 1)
            half = 0.5 * np.diff(cuts)
            mid = 0.5 * (cuts[:-1] + cuts[1:])
            s_all.append((mid[:, None] + half[:, None] * x[None, :]).ravel())
            w_all.append((half[:, None] * w[None, :]).ravel())
            seg_all.append(np.full(n * x.size, seg))
        return np.concatenate(s_all), np.concatenate(w_all), np.concatenate(seg_all)


def _node_values(f, s, w):
    logf, sign = f(s)
    logf = np.broadcast_to(np.asarray(logf, dtype=float), s.shape)
    sign = np.broadcast_to(np.asarray(sign, dtype=float), s.shape)
    with np.errstate(over="ignore"):
        vals = w * sign * np.exp(logf + 2.0 * s)
    vals = np.where(sign == 0, 0.0, vals)
    bad = ~np.isfinite(vals)
    if np.any(bad):
        raise NumericalError(f"non-finite integrand at s = {s[bad][0]!r}")
    return TWO_PI * vals


def integrate_radial(f, grid: RadialGrid) -> float:
    """2 pi * integral of f(e^s) e^{2s} ds, with ``f(s) -> (log|f|, sign)``."""
    s, w, _ = grid.nodes()
    return math.fsum(_node_values(f, s, w))


def integrate_radial_segments(f, grid: RadialGrid, breaks):
    """Like :func:`integrate_radial` but split at ``breaks``; returns (total, per-segment list)."""
    s, w, seg = grid.nodes(breaks)
    vals = _node_values(f, s, w)
    parts = [math.fsum(vals[seg == i]) for i in range(seg.max() + 1)]
    return math.fsum(vals), parts


# -- closed-form oracles on the whole plane ---------------------------------

def _whole_plane_grid(beta, log_delta=0.0, panels_per_unit=None):
    half_width = 60.0 / beta
    ppd = max(10, math.ceil(3 * beta))
    return RadialGrid(log_delta - half_width, log_delta + half_width, ppd)


def bubble_mass(beta: float, log_delta: float = 0.0, log_r_max=None) -> float:
    """Integral of |x|^(beta-2) e^w over the plane (or over |x| <= e^log_r_max)."""
    bub = BubbleProfile(beta, log_delta)
    grid = _whole_plane_grid(beta, log_delta)
    if log_r_max is not None:
        grid = RadialGrid(grid.s_min, log_r_max, grid.panels_per_decade)
    return integrate_radial(lambda s: (log_density(bub, s), 1.0), grid)


def bubble_mass_exact(beta, log_delta=0.0, log_r_max=math.inf):
    """4 pi beta delta^b / (delta^b + r^b) antiderivative evaluated between 0 and r_max."""
    if math.isinf(log_r_max):
        return 4 * math.pi * beta
    x = beta * (log_r_max - log_delta)
    return 4 * math.pi * beta / (1.0 + math.exp(-x)) if x > -700 else 0.0


def step4_identities(beta: float):
    """The two whole-plane integrals weighted by log(1+|y|^beta) and log|y|.

    Expected values are -2 pi beta and -4 pi.
    """
    if not beta > 0:
        raise ValidationError("beta must be positive")
    grid = _whole_plane_grid(beta)
    base = math.log(2 * beta * beta)

    def common(s):
        z = beta * s
        with np.errstate(divide="ignore"):
            logmag = base + (beta - 2) * s - 2 * np.logaddexp(0.0, z) + np.log(np.abs(np.tanh(z / 2)))
        return logmag, -np.sign(z)

    def f_log1p(s):
        logmag, sign = common(s)
        return logmag + np.log(np.logaddexp(0.0, beta * s)), sign

    def f_logy(s):
        logmag, sign = common(s)
        with np.errstate(divide="ignore"):
            return logmag + np.log(np.abs(s)), sign * np.sign(s)

    return integrate_radial(f_log1p, grid), integrate_radial(f_logy, grid)


# -- residual norms -----------------------------------------------------------

@dataclass(frozen=True)
class ResidualReport:
    p: float
    norm1: float
    norm2: float
    lam: LambdaPair
    contributions: tuple  # per annulus: (integral |R1|^p, integral |R2|^p)

    @property
    def total(self):
        return self.norm1 + self.norm2


def _sign_changes(g, s, iterations=60):
    """Zeros of a continuous function bracketed by consecutive samples, by bisection on its sign."""
    sg = g(s)
    idx = np.nonzero(sg[:-1] * sg[1:] < 0)[0]
    if idx.size == 0:
        return np.empty(0)
    lo, hi = s[idx].copy(), s[idx + 1].copy()
    g_lo = sg[idx]
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        same = g(mid) == g_lo
        lo = np.where(same, mid, lo)
        hi = np.where(same, hi, mid)
    return 0.5 * (lo + hi)


def lp_residual_norm(tower: TowerProfile, p: float = 1.05, grid: RadialGrid | None = None) -> ResidualReport:
    """||R_i||_p on the unit disc, with the per-annulus split of the p-th powers.

    Panels are broken at the annulus boundaries and at the sign changes of each
    component, where |R|^p is not smooth.
    """
    if not 1.0 < p <= 1.5:
        raise ValidationError("p must lie in (1, 1.5]")
    grid = RadialGrid.for_tower(tower) if grid is None else grid
    lo, hi = tower.annulus_bounds()
    probe, _, _ = grid.nodes(list(hi[:-1]))
    probe = np.concatenate(([grid.s_min], probe, [grid.s_max]))
    totals, parts = [], []
    for comp in (1, 2):
        def f(s, comp=comp):
            res = eval_residual(tower, s)
            return p * res[2 * comp - 2], np.abs(res[2 * comp - 1])

        def sign(s, comp=comp):
            return eval_residual(tower, s)[2 * comp - 1]

        breaks = np.concatenate((hi[:-1], _sign_changes(sign, probe)))
        s, w, _ = grid.nodes(list(breaks))
        vals = _node_values(f, s, w)
        owner = annulus_index(tower, s)
        parts.append([math.fsum(vals[owner == ell]) for ell in range(1, tower.k + 1)])
        totals.append(math.fsum(vals))
    contrib = tuple(zip(parts[0], parts[1]))
    return ResidualReport(p, totals[0] ** (1 / p), totals[1] ** (1 / p), tower.lam, contrib)


def fit_scaling(points):
    """Least-squares slope of log(norm) against log(lambda); returns (slope, rms residual)."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 3:
        raise ValidationError("need at least 3 (log lambda, log norm) points")
    x, y = pts[:, 0], pts[:, 1]
    if np.ptp(x) == 0:
        raise ValidationError("degenerate abscissae")
    A = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    rms = float(np.sqrt(np.mean((A @ coef - y) ** 2)))
    return float(coef[0]), rms


# -- masses and the Green limit -----------------------------------------------

def local_mass_quadrature(tower: TowerProfile, component: int, log_r_cut: float = 0.0,
                          grid: RadialGrid | None = None) -> float:
    """lambda_i times the integral of h_i e^{W_i} over the disc of radius r_cut."""
    if component not in (1, 2):
        raise ValidationError("component must be 1 or 2")
    if log_r_cut > 0:
        raise ValidationError("r_cut must not exceed 1")
    base = RadialGrid.for_tower(tower) if grid is None else grid
    grid = RadialGrid(base.s_min, log_r_cut, base.panels_per_decade, base.nodes_per_panel)
    log_lam = tower.lam.log_lambda1 if component == 1 else tower.lam.log_lambda2
    alpha = float(tower.params.alpha1 if component == 1 else tower.params.alpha2)

    def f(s):
        W = eval_W(tower, s)[component - 1]
        return log_lam + (alpha - 2.0) * s + W, 1.0

    return integrate_radial(f, grid)


def green_limit(tower: TowerProfile, log_r: float):
    """|W_1 - (2 m_1 - a m_2) G| and |W_2 - (2 m_2 - b m_1) G| with G = -log(r) / (2 pi)."""
    if log_r < math.log(0.1) or log_r > 0:
        raise ValidationError("r must lie in [0.1, 1]")
    pair = local_masses(tower.betas, tower.k)
    M1, M2 = float(pair.m1_over_2pi), float(pair.m2_over_2pi)
    a, b = float(tower.params.a), float(tower.params.b)
    # (2 m1 - a m2) G = -(2 M1 - a M2) log r, masses in units of 2 pi
    W1, W2 = eval_W(tower, log_r)
    return abs(W1 + (2 * M1 - a * M2) * log_r), abs(W2 + (2 * M2 - b * M1) * log_r)
