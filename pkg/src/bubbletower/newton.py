"""Radial damped-Newton corrector for the full nonlinear system on the unit disc.

In s = log r the system reads

    u_1'' = -(2 lam_1 e^{alpha_1 s} e^{u_1} - a lam_2 e^{alpha_2 s} e^{u_2})
    u_2'' = -(2 lam_2 e^{alpha_2 s} e^{u_2} - b lam_1 e^{alpha_1 s} e^{u_1})

with u(0) = 0 and u'(s_min) = 0. The unknown is phi = u - W on a uniform grid;
the tower enters through its analytic residual, so the discrete equations are
never formed from large cancelling quantities.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .errors import NumericalError, ValidationError
from .masses import MassPair
from .scales import LambdaPair, admissible
from .spectrum import SystemParams, compute_betas
from .tower import TowerProfile, build_tower, eval_residual, eval_W

log = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class DampingOptions:
    max_iterations: int = 50
    max_halvings: int = 12
    tol: float = RESIDUAL_TOL


@dataclass
class SolutionReport:
    s: np.ndarray
    u1: np.ndarray
    u2: np.ndarray
    W1: np.ndarray
    W2: np.ndarray
    phi_sup: tuple
    final_residual: float
    masses: MassPair
    iterations: int
    converged: bool
    lam: LambdaPair
    k: int
    history: list = field(default_factory=list)

    @property
    def phi1(self):
        return self.u1 - self.W1

    @property
    def phi2(self):
        return self.u2 - self.W2

    @property
    def phi_max(self):
        return max(self.phi_sup)

    def summary(self) -> dict:
        return {
            "converged": self.converged,
            "iterations": self.iterations,
            "final_residual": self.final_residual,
            "m1_over_2pi": self.masses.m1_over_2pi,
            "m2_over_2pi": self.masses.m2_over_2pi,
            "phi_sup": list(self.phi_sup),
            "k": self.k,
            "log10_lambda1": self.lam.log_lambda1 / math.log(10),
            "log10_lambda2": self.lam.log_lambda2 / math.log(10),
            "nodes": int(self.s.size),
        }


def uniform_grid(s_min: float, nodes_per_unit: int = 100) -> np.ndarray:
    """Uniform grid ending at s = 0 whose first node is at or below s_min."""
    n = math.ceil(-s_min * nodes_per_unit)
    return np.linspace(-n / nodes_per_unit, 0.0, n + 1)


class _Problem:
    """Precomputed tower data on the grid and the discrete residual/Jacobian."""

    def __init__(self, tower: TowerProfile, s: np.ndarray):
        self.tower = tower
        self.s = s
        self.h = s[1] - s[0]
        p = tower.params
        self.a, self.b = float(p.a), float(p.b)
        self.W = eval_W(tower, s)
        l1, g1, l2, g2 = eval_residual(tower, s)
        with np.errstate(under="ignore"):
            self.R = (g1 * np.exp(l1 + 2 * s), g2 * np.exp(l2 + 2 * s))
        self.E = (
            np.exp(math.log(2) + tower.lam.log_lambda1 + float(p.alpha1) * s + self.W[0]),
            np.exp(math.log(2) + tower.lam.log_lambda2 + float(p.alpha2) * s + self.W[1]),
        )
        # u'(s_min) = 0  <=>  phi'(s_min) = -W'(s_min)
        beta, ld = tower.beta, tower.log_deltas
        slope = -2 * beta / (1 + np.exp(beta * (ld - s[0])))
        self.dphi0 = (-float(tower.coefficients(1) @ slope), -float(tower.coefficients(2) @ slope))

    def residual(self, phi):
        """Discrete equations at nodes 0..N-1; phi has shape (N, 2), phi at s=0 is 0."""
        h2 = self.h * self.h
        ext = np.vstack([phi, np.zeros((1, 2))])
        lap = np.empty_like(phi)
        lap[1:] = (ext[2:] - 2 * ext[1:-1] + ext[:-2]) / h2
        lap[0] = (2 * ext[1] - 2 * ext[0] - 2 * self.h * np.array(self.dphi0)) / h2
        n = phi.shape[0]
        E1, E2 = self.E[0][:n], self.E[1][:n]
        x1, x2 = np.expm1(phi[:, 0]), np.expm1(phi[:, 1])
        G = np.empty_like(phi)
        G[:, 0] = lap[:, 0] - self.R[0][:n] + E1 * x1 - 0.5 * self.a * E2 * x2
        G[:, 1] = lap[:, 1] - self.R[1][:n] + E2 * x2 - 0.5 * self.b * E1 * x1
        return G

    def jacobian_blocks(self, phi):
        n = phi.shape[0]
        h2 = self.h * self.h
        e1 = self.E[0][:n] * np.exp(phi[:, 0])
        e2 = self.E[1][:n] * np.exp(phi[:, 1])
        diag = np.empty((n, 2, 2))
        diag[:, 0, 0] = -2 / h2 + e1
        diag[:, 0, 1] = -0.5 * self.a * e2
        diag[:, 1, 0] = -0.5 * self.b * e1
        diag[:, 1, 1] = -2 / h2 + e2
        eye = np.eye(2) / h2
        lower = np.broadcast_to(eye, (n, 2, 2)).copy()
        upper = lower.copy()
        upper[0] *= 2.0
        return lower, diag, upper


def _newton(problem: _Problem, phi, opts: DampingOptions):
    G = problem.residual(phi)
    norm = float(np.max(np.abs(G)))
    history = [norm]
    it = 0
    while norm > opts.tol and it < opts.max_iterations:
        it += 1
        lower, diag, upper = problem.jacobian_blocks(phi)
        step, ok = _backend.block_tridiag_solve(lower, diag, upper, np.ascontiguousarray(-G))
        if not ok or not np.all(np.isfinite(step)):
            raise NumericalError("Newton Jacobian singular to working precision")
        t = 1.0
        for _ in range(opts.max_halvings + 1):
            trial = phi + t * step
            G_trial = problem.residual(trial)
            trial_norm = float(np.max(np.abs(G_trial)))
            if np.isfinite(trial_norm) and trial_norm < norm:
                break
            t *= 0.5
        else:
            log.debug("line search failed at iteration %d (residual %.3e)", it, norm)
            break
        phi, G, norm = trial, G_trial, trial_norm
        history.append(norm)
        log.debug("iteration %d: residual %.3e, step %.3g", it, norm, t)
    return phi, norm, it, history


def _recovered_masses(problem: _Problem, phi, k):
    out = []
    full = np.vstack([phi, np.zeros((1, 2))])
    alphas = (float(problem.tower.params.alpha1), float(problem.tower.params.alpha2))
    for c in (0, 1):
        dens = problem.E[c] * np.exp(full[:, c])  # 2 lam e^{alpha s + u}
        # lam * int h e^u dx = pi * int dens ds; the tail below s_min uses u'(s_min) = 0
        body = np.trapezoid(dens, problem.s) if hasattr(np, "trapezoid") else np.trapz(dens, problem.s)
        tail = dens[0] / alphas[c]
        out.append(0.5 * (body + tail))
    return MassPair(out[0], out[1], k)


def _check_inputs(params, k, lam, gamma):
    betas = compute_betas(params, 1)
    if k > betas.kmax:
        raise ValidationError(f"k={k} exceeds k_max={betas.kmax}")
    betas = compute_betas(params, k)
    if gamma is not None and not admissible(betas, k, lam, gamma=gamma):
        raise ValidationError("lambda is not admissible for this k (see scales.admissible)")


def solve(params: SystemParams, k: int, lam: LambdaPair, nodes_per_unit: int = 100,
          s_min: float | None = None, damping: DampingOptions | None = None,
          phi0=None, gamma: float | None = 1.0) -> SolutionReport:
    """Damped Newton for u = W + phi, started from the tower (phi = 0) unless ``phi0`` is given.

    ``phi0`` may be a callable ``s -> (N, 2) array`` used for warm starts.
    """
    opts = damping or DampingOptions()
    _check_inputs(params, k, lam, gamma)
    tower = build_tower(params, k, lam)
    s_min = float(tower.log_deltas[0] - 15.0) if s_min is None else s_min
    s = uniform_grid(s_min, nodes_per_unit)
    problem = _Problem(tower, s)
    n = s.size - 1
    if phi0 is None:
        phi = np.zeros((n, 2))
    else:
        phi = np.array(phi0(s[:-1]), dtype=float).reshape(n, 2)
    phi, norm, it, history = _newton(problem, phi, opts)
    converged = norm <= opts.tol
    full = np.vstack([phi, np.zeros((1, 2))])
    W1, W2 = problem.W
    report = SolutionReport(
        s=s, u1=W1 + full[:, 0], u2=W2 + full[:, 1], W1=W1, W2=W2,
        phi_sup=(float(np.max(np.abs(full[:, 0]))), float(np.max(np.abs(full[:, 1])))),
        final_residual=norm, masses=_recovered_masses(problem, phi, k),
        iterations=it, converged=converged, lam=lam, k=k, history=history,
    )
    if not converged:
        log.warning("Newton did not converge: residual %.3e after %d iterations", norm, it)
    return report


def discrete_residual(report: SolutionReport, params: SystemParams, s_new=None, kind="cubic"):
    """Sup-norm of the discrete equations for the interpolated solution on ``s_new``.

    Defaults to the grid with twice the resolution.
    """
    from scipy.interpolate import CubicSpline

    if s_new is None:
        s_new = np.linspace(report.s[0], 0.0, 2 * (report.s.size - 1) + 1)
    tower = build_tower(params, report.k, report.lam)
    problem = _Problem(tower, s_new)
    phi = np.column_stack([CubicSpline(report.s, report.phi1)(s_new), CubicSpline(report.s, report.phi2)(s_new)])
    return float(np.max(np.abs(problem.residual(phi[:-1]))))


def continuation(params: SystemParams, k: int, lambda_start: LambdaPair, lambda_end: LambdaPair,
                 steps: int, **solve_kw) -> list:
    """Chain of solves along a geometric lambda path, each warm-started from the previous phi."""
    if steps < 2:
        raise ValidationError("continuation needs at least 2 steps")
    kmax = compute_betas(params, 1).kmax
    if k > kmax:
        raise ValidationError(f"k={k} exceeds k_max={kmax}")
    l1 = np.linspace(lambda_start.log_lambda1, lambda_end.log_lambda1, steps)
    l2 = np.linspace(lambda_start.log_lambda2, lambda_end.log_lambda2, steps)
    reports = []
    prev = None
    for x1, x2 in zip(l1, l2):
        warm = None
        if prev is not None:
            warm = _carry_phi(prev)
        rep = solve(params, k, LambdaPair(float(x1), float(x2)), phi0=warm, **solve_kw)
        reports.append(rep)
        if not rep.converged:
            log.warning("continuation aborted at log lambda = (%g, %g)", x1, x2)
            break
        prev = rep
    return reports


def _carry_phi(report: SolutionReport):
    s_old, p1, p2 = report.s, report.phi1, report.phi2

    def phi0(s):
        # constant extension below the old s_min matches the Neumann condition
        return np.column_stack([np.interp(s, s_old, p1), np.interp(s, s_old, p2)])

    return phi0
