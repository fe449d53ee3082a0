# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: 2x2 block-tridiagonal elimination and projected-bubble sums."""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log1p, fabs

cnp.import_array()


cdef inline double _log_add(double x, double y) nogil:
    if x > y:
        return x + log1p(exp(y - x))
    return y + log1p(exp(x - y))


def block_tridiag_solve(double[:, :, ::1] lower, double[:, :, ::1] diag,
                        double[:, :, ::1] upper, double[:, ::1] rhs):
    """Solve a block-tridiagonal system with 2x2 blocks.

    Row i reads ``lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i]``.
    Returns ``(x, ok)``; ``ok`` is False when a pivot block is singular.
    """
    cdef Py_ssize_t n = diag.shape[0], i
    cdef double[:, :, ::1] cp = np.empty((n, 2, 2))
    cdef double[:, ::1] dp = np.empty((n, 2))
    out = np.empty((n, 2))
    cdef double[:, ::1] x = out
    cdef double m00, m01, m10, m11, det, i00, i01, i10, i11, r0, r1
    cdef double l00, l01, l10, l11, scale
    for i in range(n):
        m00 = diag[i, 0, 0]; m01 = diag[i, 0, 1]; m10 = diag[i, 1, 0]; m11 = diag[i, 1, 1]
        r0 = rhs[i, 0]; r1 = rhs[i, 1]
        if i > 0:
            l00 = lower[i, 0, 0]; l01 = lower[i, 0, 1]; l10 = lower[i, 1, 0]; l11 = lower[i, 1, 1]
            m00 -= l00 * cp[i - 1, 0, 0] + l01 * cp[i - 1, 1, 0]
            m01 -= l00 * cp[i - 1, 0, 1] + l01 * cp[i - 1, 1, 1]
            m10 -= l10 * cp[i - 1, 0, 0] + l11 * cp[i - 1, 1, 0]
            m11 -= l10 * cp[i - 1, 0, 1] + l11 * cp[i - 1, 1, 1]
            r0 -= l00 * dp[i - 1, 0] + l01 * dp[i - 1, 1]
            r1 -= l10 * dp[i - 1, 0] + l11 * dp[i - 1, 1]
        det = m00 * m11 - m01 * m10
        scale = fabs(m00 * m11) + fabs(m01 * m10)
        if scale == 0.0 or fabs(det) <= 1e-14 * scale:
            return out, False
        i00 = m11 / det; i01 = -m01 / det; i10 = -m10 / det; i11 = m00 / det
        if i < n - 1:
            cp[i, 0, 0] = i00 * upper[i, 0, 0] + i01 * upper[i, 1, 0]
            cp[i, 0, 1] = i00 * upper[i, 0, 1] + i01 * upper[i, 1, 1]
            cp[i, 1, 0] = i10 * upper[i, 0, 0] + i11 * upper[i, 1, 0]
            cp[i, 1, 1] = i10 * upper[i, 0, 1] + i11 * upper[i, 1, 1]
        dp[i, 0] = i00 * r0 + i01 * r1
        dp[i, 1] = i10 * r0 + i11 * r1
    x[n - 1, 0] = dp[n - 1, 0]
    x[n - 1, 1] = dp[n - 1, 1]
    for i in range(n - 2, -1, -1):
        x[i, 0] = dp[i, 0] - (cp[i, 0, 0] * x[i + 1, 0] + cp[i, 0, 1] * x[i + 1, 1])
        x[i, 1] = dp[i, 1] - (cp[i, 1, 0] * x[i + 1, 0] + cp[i, 1, 1] * x[i + 1, 1])
    return out, True


def projection_sum(double[::1] s, double[::1] betas, double[::1] log_deltas, double[::1] coef):
    """sum_l coef[l] * Pw_l(s) for projected bubbles on the unit disc."""
    cdef Py_ssize_t n = s.shape[0], m = betas.shape[0], i, l
    out = np.zeros(n)
    cdef double[::1] o = out
    cdef double bl, c, shift
    for l in range(m):
        bl = betas[l] * log_deltas[l]
        c = coef[l]
        if c == 0.0:
            continue
        shift = 2.0 * _log_add(bl, 0.0)
        for i in range(n):
            o[i] += c * (shift - 2.0 * _log_add(bl, betas[l] * s[i]))
    return out
