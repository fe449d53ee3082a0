"""Pure-Python/numpy fallback for the compiled kernels in ``_core.pyx``."""
import numpy as np


def block_tridiag_solve(lower, diag, upper, rhs):
    """Solve a block-tridiagonal system with 2x2 blocks.

    Row i reads ``lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i]``.
    Returns ``(x, ok)``; ``ok`` is False when a pivot block is singular.
    """
    n = diag.shape[0]
    L = lower.tolist()
    D = diag.tolist()
    U = upper.tolist()
    R = rhs.tolist()
    cp = [None] * n
    dp = [None] * n
    out = np.empty((n, 2))
    for i in range(n):
        (m00, m01), (m10, m11) = D[i]
        r0, r1 = R[i]
        if i > 0:
            (l00, l01), (l10, l11) = L[i]
            (c00, c01), (c10, c11) = cp[i - 1]
            d0, d1 = dp[i - 1]
            m00 -= l00 * c00 + l01 * c10
            m01 -= l00 * c01 + l01 * c11
            m10 -= l10 * c00 + l11 * c10
            m11 -= l10 * c01 + l11 * c11
            r0 -= l00 * d0 + l01 * d1
            r1 -= l10 * d0 + l11 * d1
        det = m00 * m11 - m01 * m10
        scale = abs(m00 * m11) + abs(m01 * m10)
        if scale == 0.0 or abs(det) <= 1e-14 * scale:
            return out, False
        i00, i01, i10, i11 = m11 / det, -m01 / det, -m10 / det, m00 / det
        if i < n - 1:
            (u00, u01), (u10, u11) = U[i]
            cp[i] = ((i00 * u00 + i01 * u10, i00 * u01 + i01 * u11),
                     (i10 * u00 + i11 * u10, i10 * u01 + i11 * u11))
        dp[i] = (i00 * r0 + i01 * r1, i10 * r0 + i11 * r1)
    x0, x1 = dp[n - 1]
    out[n - 1] = (x0, x1)
    for i in range(n - 2, -1, -1):
        (c00, c01), (c10, c11) = cp[i]
        d0, d1 = dp[i]
        x0, x1 = d0 - (c00 * x0 + c01 * x1), d1 - (c10 * x0 + c11 * x1)
        out[i] = (x0, x1)
    return out, True


def projection_sum(s, betas, log_deltas, coef):
    """sum_l coef[l] * Pw_l(s) for projected bubbles on the unit disc."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    for beta, ld, c in zip(betas, log_deltas, coef):
        if c == 0.0:
            continue
        bl = beta * ld
        out += c * (2.0 * np.logaddexp(bl, 0.0) - 2.0 * np.logaddexp(bl, beta * s))
    return out
