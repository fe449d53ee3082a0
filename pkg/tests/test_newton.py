import math

import numpy as np
import pytest

from bubbletower import newton
from bubbletower.errors import ValidationError
from bubbletower.scales import LambdaPair
from bubbletower.spectrum import PRESETS


@pytest.fixture(scope="module")
def a2_k1():
    return newton.solve(PRESETS["a2"], 1, LambdaPair.from_log10(-6))


def test_k1_converges(a2_k1):
    rep = a2_k1
    assert rep.converged
    assert rep.iterations <= 15
    assert rep.final_residual <= 1e-10
    assert rep.phi_max <= 0.1
    assert rep.masses.m1_over_2pi == pytest.approx(2.0, rel=1e-2)
    assert rep.u1[-1] == 0.0 and rep.u2[-1] == 0.0
    assert rep.phi1[-1] == 0.0 and rep.phi2[-1] == 0.0
    assert rep.s[-1] == 0.0 and rep.s.size == rep.W1.size


def test_grid_spans_default_range(a2_k1):
    from bubbletower.tower import build_tower
    tw = build_tower(PRESETS["a2"], 1, LambdaPair.from_log10(-6))
    assert a2_k1.s[0] <= tw.log_deltas[0] - 15
    assert np.allclose(np.diff(a2_k1.s), 0.01)


def test_phi_sup_decreases_k1():
    sups = [newton.solve(PRESETS["a2"], 1, LambdaPair.from_log10(t)).phi_max for t in (-5, -6, -7, -8)]
    assert all(b < a for a, b in zip(sups, sups[1:]))


@pytest.mark.parametrize("name,k", [("a2", 1), ("a2", 2), ("b2", 1), ("b2", 2)])
def test_masses_converge(name, k):
    from bubbletower.masses import local_masses
    from bubbletower.spectrum import compute_betas
    target = np.array([float(v) for v in local_masses(compute_betas(PRESETS[name], k), k).as_tuple()])
    errs = []
    for t in (-5, -8):
        rep = newton.solve(PRESETS[name], k, LambdaPair.from_log10(t))
        assert rep.converged
        errs.append(np.max(np.abs(np.array(rep.masses.as_tuple(), dtype=float) - target)))
    assert errs[1] < errs[0]


def test_b2_k2_masses():
    rep = newton.solve(PRESETS["b2"], 2, LambdaPair.from_log10(-8))
    assert rep.converged
    assert rep.masses.m1_over_2pi == pytest.approx(2.0, rel=0.02)
    assert rep.masses.m2_over_2pi == pytest.approx(6.0, rel=0.02)


def test_second_order():
    lam = LambdaPair.from_log10(-5)
    sups = [newton.solve(PRESETS["a2"], 1, lam, nodes_per_unit=n, s_min=-25.0).phi_sup[0] for n in (25, 50, 100)]
    ratio = (sups[0] - sups[1]) / (sups[1] - sups[2])
    assert 3.5 <= ratio <= 4.5


def test_interpolated_residual(a2_k1):
    assert newton.discrete_residual(a2_k1, PRESETS["a2"]) <= 1e-6


def test_nonconvergence_reported():
    opts = newton.DampingOptions(max_iterations=0)
    rep = newton.solve(PRESETS["a2"], 2, LambdaPair.from_log10(-4), damping=opts)
    assert not rep.converged
    assert rep.iterations == 0


def test_validation():
    with pytest.raises(ValidationError):
        newton.solve(PRESETS["a2"], 4, LambdaPair.from_log10(-6))
    # lambda_1 = lambda_2 is not admissible at k = k_max
    with pytest.raises(ValidationError):
        newton.solve(PRESETS["a2"], 3, LambdaPair.from_log10(-6))


def test_continuation_chain():
    reps = newton.continuation(PRESETS["a2"], 1, LambdaPair.from_log10(-5), LambdaPair.from_log10(-8), 4)
    assert len(reps) == 4
    assert all(r.converged for r in reps)
    for r in reps:
        assert r.masses.m1_over_2pi == pytest.approx(2.0, rel=5e-3)
    with pytest.raises(ValidationError):
        newton.continuation(PRESETS["a2"], 4, LambdaPair.from_log10(-5), LambdaPair.from_log10(-8), 4)
    with pytest.raises(ValidationError):
        newton.continuation(PRESETS["a2"], 1, LambdaPair.from_log10(-5), LambdaPair.from_log10(-8), 1)


def test_warm_start_matches_cold():
    cold = newton.solve(PRESETS["b2"], 2, LambdaPair.from_log10(-7))
    prev = newton.solve(PRESETS["b2"], 2, LambdaPair.from_log10(-6))
    warm = newton.solve(PRESETS["b2"], 2, LambdaPair.from_log10(-7), phi0=newton._carry_phi(prev))
    assert warm.converged
    assert warm.phi_sup == pytest.approx(cold.phi_sup, rel=1e-6)


def test_summary_fields(a2_k1):
    out = a2_k1.summary()
    for key in ("converged", "iterations", "final_residual", "m1_over_2pi", "m2_over_2pi", "phi_sup"):
        assert key in out
    assert math.isclose(out["log10_lambda1"], -6.0)
