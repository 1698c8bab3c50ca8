"""Compiled pair sweeps for the double-integral functionals.

All sweeps work on the cell grid of a piecewise-linear path with ``n`` cells.
For an off-diagonal cell pair ``i < j`` the interval minimum over ``[s, t]``
is the smallest of ``f(s)``, the grid values ``v[i+1..j]`` and ``f(t)``; the
sweeps pick the candidate whose kernel-weighted integral over the square is
smallest. Diagonal cells (``s < t`` inside one cell) are integrated in closed
form. The interval minima over growing ``j`` are kept as a running minimum,
so each query costs O(1).
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit


def kernel_weights(n: int, power: float) -> np.ndarray:
    """Exact integrals of ``(t - s)**power`` over the off-diagonal cell squares.

    Entry ``k`` (``1 <= k < n``) is the integral over one square whose cells
    are ``k`` apart. Requires ``power > -2``; entry 0 is unused.
    """
    q = power + 2.0
    h = 1.0 / n
    k = np.arange(2, n, dtype=float)
    # k^q [(1+1/k)^q - 2 + (1-1/k)^q], written to avoid cancellation at large k
    second_diff = k**q * (np.expm1(q * np.log1p(1 / k)) + np.expm1(q * np.log1p(-1 / k)))
    w = np.zeros(n)
    if n > 1:
        w[1] = 2.0**q - 2.0
    w[2:] = second_diff
    w *= h**q / ((power + 1.0) * q)
    return w


def kernel_moments(n: int, power: float) -> np.ndarray:
    """First moments ``iint (t - s)**power * (t - t_mid)`` over the cell squares.

    With ``u = t - s`` this is ``(iint u**(power+1) - k h iint u**power) / 2``.
    The matching moment in ``s`` about ``s_mid`` is the negative of this.
    """
    k = np.arange(n, dtype=float)
    mu = 0.5 * (kernel_weights(n, power + 1.0) - k / n * kernel_weights(n, power))
    mu[0] = 0.0
    return mu


def diagonal_coefficients(n: int, power: float) -> tuple[float, float, float]:
    """Closed-form diagonal-cell coefficients for kernel ``(t - s)**power``.

    Returns ``(c_min, c_jump, c_bracket)``: over one cell with end values
    ``a, b``, the kernel-weighted integral of the interval minimum is
    ``c_min * min(a, b) + c_jump * |b - a|`` and that of
    ``f(s) + f(t) - 2 m`` is ``c_bracket * |b - a|``. ``c_min`` and ``c_jump``
    are NaN when ``power <= -1`` (the minimum alone is not integrable there).
    """
    h = 1.0 / n
    q = power + 2.0
    c_bracket = h**q / (q * (q + 1.0))
    if power > -1.0:
        c_min = h**q / ((power + 1.0) * q)
        c_jump = h**q / ((power + 1.0) * q * (q + 1.0))
    else:
        c_min = c_jump = math.nan
    return c_min, c_jump, c_bracket


@njit(cache=True)
def pair_sweep(v, w, mu, c_min, c_jump, c_bracket, bracket, grad):
    """Kernel-weighted integral of interval minima (or brackets) over ``s < t``.

    Each off-diagonal square contributes the smallest of three candidates,
    each integrated exactly against the kernel: ``f(s)`` (linear on the left
    cell), the interior grid minimum, and ``f(t)`` (linear on the right cell).
    This is exact whenever one candidate is the minimum on the whole square.
    With ``bracket`` set, ``f(s) + f(t) - 2 m`` is integrated instead.
    ``grad`` (length ``n + 1``) receives the derivative with respect to ``v``
    when its length is nonzero; ties pick the candidate at the smallest grid
    position.
    """
    n = v.shape[0] - 1
    want = grad.shape[0] > 0
    if want:
        grad[:] = 0.0
    total = 0.0
    for i in range(n):
        a = 0.5 * (v[i] + v[i + 1])
        slope_i = n * (v[i + 1] - v[i])
        # diagonal cell
        d = v[i + 1] - v[i]
        if bracket:
            total += c_bracket * abs(d)
            if want:
                sg = 1.0 if d > 0 else (-1.0 if d < 0 else 0.0)
                grad[i + 1] += c_bracket * sg
                grad[i] -= c_bracket * sg
        else:
            if v[i] <= v[i + 1]:
                lo_idx = i
            else:
                lo_idx = i + 1
            total += c_min * v[lo_idx] + c_jump * abs(d)
            if want:
                grad[lo_idx] += c_min
                sg = 1.0 if d > 0 else (-1.0 if d < 0 else 0.0)
                grad[i + 1] += c_jump * sg
                grad[i] -= c_jump * sg
        run = np.inf
        run_idx = -1
        for j in range(i + 1, n):
            if v[j] < run:
                run = v[j]
                run_idx = j
            wk = w[j - i]
            mk = mu[j - i]
            # integrated candidates: 0 is f(s), 1 the interior minimum, 2 is f(t)
            cand_s = wk * a - mk * slope_i
            cand_t = wk * 0.5 * (v[j] + v[j + 1]) + mk * n * (v[j + 1] - v[j])
            m = cand_s
            which = 0
            if wk * run < m:
                m = wk * run
                which = 1
            if cand_t < m:
                m = cand_t
                which = 2
            if bracket:
                total += cand_s + cand_t - 2.0 * m
            else:
                total += m
            if want:
                # d cand_s / d(v_i, v_{i+1}) and d cand_t / d(v_j, v_{j+1})
                ds0 = 0.5 * wk + mk * n
                ds1 = 0.5 * wk - mk * n
                dt0 = 0.5 * wk - mk * n
                dt1 = 0.5 * wk + mk * n
                if bracket:
                    grad[i] += ds0
                    grad[i + 1] += ds1
                    grad[j] += dt0
                    grad[j + 1] += dt1
                    gm = -2.0
                else:
                    gm = 1.0
                if which == 0:
                    grad[i] += gm * ds0
                    grad[i + 1] += gm * ds1
                elif which == 1:
                    grad[run_idx] += gm * wk
                else:
                    grad[j] += gm * dt0
                    grad[j + 1] += gm * dt1
    return total


@njit(cache=True)
def pair_min_sum_stack(v):
    """Unweighted ``sum_{i<j} m_ij`` over off-diagonal cell pairs in O(n).

    Interleaves grid values and cell midpoints into ``z`` (``z[2i] = v[i]``,
    ``z[2i+1]`` the midpoint of cell ``i``), so ``m_ij`` is the minimum of
    ``z[2i+1 .. 2j+1]``; each element's share is counted with a monotonic
    stack over odd range endpoints.
    """
    n = v.shape[0] - 1
    size = 2 * n + 1
    z = np.empty(size)
    for i in range(n):
        z[2 * i] = v[i]
        z[2 * i + 1] = 0.5 * (v[i] + v[i + 1])
    z[2 * n] = v[n]

    prev_less = np.empty(size, dtype=np.int64)
    next_leq = np.empty(size, dtype=np.int64)
    stack = np.empty(size, dtype=np.int64)
    top = 0
    for k in range(size):
        while top > 0 and z[stack[top - 1]] >= z[k]:
            top -= 1
        prev_less[k] = stack[top - 1] if top > 0 else -1
        stack[top] = k
        top += 1
    top = 0
    for k in range(size - 1, -1, -1):
        while top > 0 and z[stack[top - 1]] > z[k]:
            top -= 1
        next_leq[k] = stack[top - 1] if top > 0 else size
        stack[top] = k
        top += 1

    total = 0.0
    for k in range(size):
        # odd l in (prev_less, k], odd r in [k, next_leq)
        left = (k + 1) // 2 - (prev_less[k] + 1) // 2
        right = next_leq[k] // 2 - k // 2
        count = left * right
        if k % 2 == 1:
            count -= 1
        total += count * z[k]
    return total


@njit(cache=True)
def batch_pair_min_sum_stack(V, out):
    for r in range(V.shape[0]):
        out[r] = pair_min_sum_stack(V[r])


@njit(cache=True)
def batch_pair_sweep(V, w, mu, c_min, c_jump, c_bracket, bracket, out):
    empty = np.empty(0)
    for r in range(V.shape[0]):
        out[r] = pair_sweep(V[r], w, mu, c_min, c_jump, c_bracket, bracket, empty)
