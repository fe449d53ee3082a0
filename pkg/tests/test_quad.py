import math

import numpy as np
import pytest

from bubbletower.errors import NumericalError, ValidationError
from bubbletower.quad import (
    RadialGrid, bubble_mass, bubble_mass_exact, fit_scaling, green_limit, integrate_radial,
    integrate_radial_segments, local_mass_quadrature, lp_residual_norm, step4_identities,
)
from bubbletower.scales import LambdaPair
from bubbletower.spectrum import PRESETS
from bubbletower.tower import build_tower


def test_area():
    grid = RadialGrid(-40.0, 0.0)
    assert integrate_radial(lambda s: (np.zeros_like(s), 1.0), grid) == pytest.approx(math.pi, rel=1e-12)


def test_segments_sum_to_total():
    grid = RadialGrid(-10.0, 0.0)
    total, parts = integrate_radial_segments(lambda s: (np.sin(s), np.ones_like(s)), grid, [-7.0, -3.3])
    assert len(parts) == 3
    assert math.fsum(parts) == pytest.approx(total, rel=1e-14)


def test_nonfinite_integrand_reports_s():
    grid = RadialGrid(-1.0, 0.0)
    with pytest.raises(NumericalError, match="s ="):
        integrate_radial(lambda s: (np.where(s > -0.5, np.inf, 0.0), 1.0), grid)


def test_grid_validation():
    with pytest.raises(ValidationError):
        RadialGrid(0.0, -1.0)
    with pytest.raises(ValidationError):
        RadialGrid(-1.0, 0.0, panels_per_decade=0)


@pytest.mark.parametrize("beta", [0.3, 0.5, 2.0, 3.0, 7.0, 10.0])
@pytest.mark.parametrize("log10_delta", [0.0, -20.0, -40.0])
def test_bubble_mass(beta, log10_delta):
    m = bubble_mass(beta, log10_delta * math.log(10))
    assert m == pytest.approx(4 * math.pi * beta, rel=1e-8)


def test_half_mass_radius():
    ld = -5.0
    for beta in (0.5, 2.0, 3.0):
        assert bubble_mass(beta, ld, log_r_max=ld) == pytest.approx(2 * math.pi * beta, rel=1e-8)
        assert bubble_mass_exact(beta, ld, ld) == pytest.approx(2 * math.pi * beta, rel=1e-14)


@pytest.mark.parametrize("beta,expected", [
    (2.0, (-4 * math.pi, -4 * math.pi)),
    (5.0, (-10 * math.pi, -4 * math.pi)),
    (1.0, (-2 * math.pi, -4 * math.pi)),
])
def test_step4_examples(beta, expected):
    got = step4_identities(beta)
    assert got == pytest.approx(expected, rel=1e-8)


def test_step4_validation():
    with pytest.raises(ValidationError):
        step4_identities(0.0)


def test_refinement_stable():
    tw = build_tower(PRESETS["b2"], 2, LambdaPair.from_log10(-6))
    grid = RadialGrid.for_tower(tw)
    a = lp_residual_norm(tw, 1.05, grid)
    b = lp_residual_norm(tw, 1.05, grid.refined())
    assert b.norm1 == pytest.approx(a.norm1, rel=1e-9)
    assert b.norm2 == pytest.approx(a.norm2, rel=1e-9)
    m = local_mass_quadrature(tw, 2, math.log(0.5), grid)
    assert local_mass_quadrature(tw, 2, math.log(0.5), grid.refined()) == pytest.approx(m, rel=1e-9)


def test_residual_report_contributions():
    tw = build_tower(PRESETS["a2"], 2, LambdaPair.from_log10(-7))
    rep = lp_residual_norm(tw, 1.2)
    assert len(rep.contributions) == 2
    tot1 = math.fsum(c[0] for c in rep.contributions)
    assert tot1 ** (1 / 1.2) == pytest.approx(rep.norm1, rel=1e-10)
    assert rep.total == rep.norm1 + rep.norm2
    with pytest.raises(ValidationError):
        lp_residual_norm(tw, 1.0)


def test_k1_first_annulus_dominates():
    tw = build_tower(PRESETS["a2"], 1, LambdaPair.from_log10(-6))
    rep = lp_residual_norm(tw)
    assert len(rep.contributions) == 1


def test_residual_decreases_a2():
    norms = [lp_residual_norm(build_tower(PRESETS["a2"], 2, LambdaPair.from_log10(t))).total for t in (-6, -8)]
    assert norms[1] < norms[0]


@pytest.mark.parametrize("name", ["a2", "b2", "g2", "sinh"])
def test_residual_monotone_presets(name):
    norms = [lp_residual_norm(build_tower(PRESETS[name], 2, LambdaPair.from_log10(t))).total
             for t in (-4, -6, -8)]
    assert all(b <= 1.05 * a for a, b in zip(norms, norms[1:]))


def test_fit_scaling():
    x = np.linspace(-20, -5, 7)
    slope, rms = fit_scaling(np.column_stack([x, 0.37 * x + 1.5]))
    assert slope == pytest.approx(0.37, abs=1e-12)
    assert rms < 1e-12
    with pytest.raises(ValidationError):
        fit_scaling([(1.0, 2.0), (1.0, 3.0), (1.0, 4.0)])
    with pytest.raises(ValidationError):
        fit_scaling([(1.0, 2.0), (2.0, 3.0)])


def test_theta_sup_slope_positive():
    from bubbletower.tower import theta_sup
    pts = []
    for t in (-4, -6, -8, -10):
        tw = build_tower(PRESETS["a2"], 2, LambdaPair.from_log10(t))
        pts.append((t * math.log(10), math.log(theta_sup(tw, 1))))
    slope, _ = fit_scaling(pts)
    assert slope > 0


def test_local_mass_k1_second_component_absent():
    tw = build_tower(PRESETS["a2"], 1, LambdaPair.from_log10(-10))
    m2 = local_mass_quadrature(tw, 2, math.log(0.5))
    assert m2 <= 0.02 * 2 * math.pi * 2
    m1 = local_mass_quadrature(tw, 1, math.log(0.5))
    assert m1 == pytest.approx(4 * math.pi, rel=1e-3)
    with pytest.raises(ValidationError):
        local_mass_quadrature(tw, 3)


def test_green_limit_boundary_and_range():
    tw = build_tower(PRESETS["a2"], 2, LambdaPair.from_log10(-6))
    assert green_limit(tw, 0.0) == (0.0, 0.0)
    with pytest.raises(ValidationError):
        green_limit(tw, math.log(0.05))
