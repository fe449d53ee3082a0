import math

import numpy as np
import pytest

from bubbletower.errors import ValidationError
from bubbletower.scales import LambdaPair
from bubbletower.spectrum import PRESETS
from bubbletower.tower import (
    BubbleProfile, annulus_index, build_tower, eval_Pw, eval_residual, eval_Theta, eval_w, eval_W,
    laplacian_source, profile_rows, theta_at_s, theta_sup,
)


@pytest.fixture(scope="module")
def a2_k3():
    return build_tower(PRESETS["a2"], 3, LambdaPair.from_log10(-6, -9))


def test_eval_w():
    assert eval_w(BubbleProfile(2.0, 0.0), 0.0) == pytest.approx(math.log(2))
    b = BubbleProfile(3.0, -2.0)
    s = np.array([20.0, 21.0])
    assert np.diff(eval_w(b, s))[0] == pytest.approx(-6.0, rel=1e-12)


def test_bubble_validation():
    with pytest.raises(ValidationError):
        BubbleProfile(0.0, 0.0)
    with pytest.raises(ValidationError):
        eval_Pw(BubbleProfile(2.0, -1.0), 0.1)


def test_projection_constant_offset():
    b = BubbleProfile(2.5, -3.0)
    s = np.linspace(-30, 0, 100)
    diff = eval_Pw(b, s) - eval_w(b, s)
    assert np.ptp(diff) <= 1e-13
    assert eval_Pw(b, 0.0) == 0.0
    # Pw - w = 2 log(1 + delta^beta) - log(2 beta^2) - beta log delta
    assert diff[0] == pytest.approx(-math.log(2 * 2.5 ** 2) - 2.5 * -3.0 + 2 * math.log1p(math.exp(-7.5)))


def test_W_boundary_and_k1(a2_k3):
    assert eval_W(a2_k3, 0.0) == (0.0, 0.0)
    tw = build_tower(PRESETS["b2"], 1, LambdaPair.from_log10(-5))
    s = np.linspace(-20, 0, 50)
    W1, W2 = eval_W(tw, s)
    assert np.allclose(W2, -0.5 * float(PRESETS["b2"].b) * W1, atol=1e-14)
    with pytest.raises(ValidationError):
        eval_W(tw, 0.5)


def test_theta_k1_constant():
    tw = build_tower(PRESETS["a2"], 1, LambdaPair.from_log10(-6))
    expected = 2 * math.log1p(math.exp(2 * tw.log_deltas[0]))
    for y in (-3.0, 0.0, 1.0, 5.0):
        assert eval_Theta(tw, 1, y) == pytest.approx(expected, abs=1e-13)
    with pytest.raises(ValidationError):
        eval_Theta(tw, 2, 0.0)


def test_theta_identity(a2_k3):
    # 2 lambda_c r^(alpha_c - 2) e^{W_c} = r^(beta_l - 2) e^{w_l} e^{Theta_l}
    s = np.linspace(a2_k3.log_deltas[0] - 5, -0.1, 40)
    W = eval_W(a2_k3, s)
    for ell in (1, 2, 3):
        c = a2_k3.component_of(ell)
        loglam = a2_k3.lam.log_lambda1 if c == 1 else a2_k3.lam.log_lambda2
        lhs = math.log(2) + loglam + W[c - 1]
        bub = a2_k3.bubble(ell)
        rhs = (bub.beta - 2.0) * s + eval_w(bub, s) + theta_at_s(a2_k3, ell, s, W)
        assert np.allclose(lhs, rhs, atol=1e-12)


def test_theta_small_at_bubble_core(a2_k3):
    for ell in (1, 2, 3):
        assert abs(eval_Theta(a2_k3, ell, 0.0)) < 0.05


def test_residual_paths_agree():
    tw = build_tower(PRESETS["b2"], 2, LambdaPair.from_log10(-3))
    s = np.linspace(tw.log_deltas[0] - 3, -0.05, 60)
    a = eval_residual(tw, s, stabilized=True)
    b = eval_residual(tw, s, stabilized=False)
    for i in (0, 2):
        va = a[i + 1] * np.exp(a[i])
        vb = b[i + 1] * np.exp(b[i])
        assert np.allclose(va, vb, rtol=1e-8, atol=1e-14 * np.max(np.abs(va)))


def test_residual_k1_tail():
    tw = build_tower(PRESETS["a2"], 1, LambdaPair.from_log10(-8))
    l1, _, _, _ = eval_residual(tw, math.log(0.9))
    peak = 2 * 2 ** 2 / 4 * math.exp(-2 * tw.log_deltas[0])  # r^(beta-2) e^w at r = delta
    assert math.exp(l1) <= 1e-6 * peak


def test_residual_domain():
    tw = build_tower(PRESETS["a2"], 1, LambdaPair.from_log10(-8))
    with pytest.raises(ValidationError):
        eval_residual(tw, -np.inf)
    with pytest.raises(ValidationError):
        eval_residual(tw, 0.1)


def test_laplacian_consistency():
    tw = build_tower(PRESETS["g2"], 2, LambdaPair.from_log10(-2))
    s = np.linspace(tw.log_deltas[0] - 2, -0.5, 50)
    h = 2e-3

    def second(c, h):
        W = [eval_W(tw, s + d)[c] for d in (-h, 0.0, h)]
        return (W[2] - 2 * W[1] + W[0]) / h ** 2

    for c in (0, 1):
        d2 = (4 * second(c, h / 2) - second(c, h)) / 3
        src = laplacian_source(tw, s)[c]
        assert np.allclose(-d2, src, rtol=1e-6, atol=1e-6 * np.max(np.abs(src)))


def test_theta_sup_decreasing_a2():
    sups = []
    for t in (-3, -5, -7, -9):
        tw = build_tower(PRESETS["a2"], 2, LambdaPair.from_log10(t))
        sups.append(max(theta_sup(tw, ell) for ell in (1, 2)))
    assert all(b <= 1.1 * a for a, b in zip(sups, sups[1:]))


def test_annulus_index_and_rows(a2_k3):
    x = a2_k3.log_deltas
    assert list(annulus_index(a2_k3, x)) == [1, 2, 3]
    rows = profile_rows(a2_k3, np.linspace(x[0] - 1, 0, 11))
    assert rows.shape == (11, 8)
    lo, hi = a2_k3.annulus_bounds(-100.0)
    assert lo[0] == -100.0 and hi[-1] == 0.0
    assert np.allclose(hi[:-1], lo[1:])


def test_build_tower_rejects_large_k():
    with pytest.raises(ValidationError):
        build_tower(PRESETS["a2"], 4, LambdaPair.from_log10(-6))
