"""Distribution of the maximum of a standard Brownian excursion.

``P(max B_ex <= x) = 1 + 2 sum_{k>=1} (1 - 4 k^2 x^2) exp(-2 k^2 x^2)``.

The complement ``2 sum (4 k^2 x^2 - 1) exp(-2 k^2 x^2)`` has only positive
terms once ``x >= 1/2`` and is summed directly, so deep tails keep full
relative accuracy; :func:`log_tail_max` goes through log space and never
underflows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy import integrate, optimize

__all__ = [
    "SeriesEval",
    "TailUnderflowError",
    "cdf_max",
    "tail_max",
    "log_tail_max",
    "quantile_max",
    "moment_max",
    "log_mgf_max",
    "remainder_bound",
    "UNDERFLOW_X",
]

# exp(-2 x^2) falls below the smallest subnormal double past this x
UNDERFLOW_X = math.sqrt(-math.log(5e-324) / 2)


class TailUnderflowError(ArithmeticError):
    def __init__(self, x: float):
        super().__init__(
            f"tail probability at x={x} underflows double precision "
            f"(x > {UNDERFLOW_X:.3f}); use log_tail_max"
        )
        self.x = x
        self.limit = UNDERFLOW_X


@dataclass(frozen=True)
class SeriesEval:
    x: float
    cdf: float
    tail: float
    terms_used: int
    trunc_bound: float

    def to_json(self) -> dict:
        return {"x": self.x, "cdf": self.cdf, "tail": self.tail,
                "terms_used": self.terms_used, "trunc_bound": self.trunc_bound}


def remainder_bound(x: float, k: int) -> float:
    """Bound on ``sum_{j > k} 2 |1 - 4 j^2 x^2| exp(-2 j^2 x^2)``.

    Each term is at most ``g(j) = 2 (1 + 4 j^2 x^2) exp(-2 j^2 x^2)``, which
    decreases in ``j`` once ``2 j x > 1``; then the tail sum is at most
    ``g(k+1) + int_{k+1}^inf g``, and that integral has a closed form in
    ``erfc``. Returns ``inf`` while ``g`` may still be increasing.
    """
    y = k + 1
    if 2 * y * x <= 1:
        return math.inf
    u = 2 * x * x * y * y
    g = 2 * (1 + 2 * u) * math.exp(-u)
    i0 = math.sqrt(math.pi) / (2 * math.sqrt(2) * x) * math.erfc(math.sqrt(2) * x * y)
    return g + 2 * (2 * i0 + y * math.exp(-u))


def _terms(x: float, tol: float):
    """Complement-series terms ``2 (4 k^2 x^2 - 1) exp(-2 k^2 x^2)`` until the bound is met."""
    terms = []
    k = 0
    while True:
        k += 1
        u = 2 * k * k * x * x
        terms.append(2 * (2 * u - 1) * math.exp(-u))
        bound = remainder_bound(x, k)
        if bound < tol:
            return terms, bound
        if k > 10_000_000:
            raise RuntimeError(f"series did not reach tol={tol} at x={x}")


def cdf_max(x: float, tol: float = 1e-15) -> SeriesEval:
    if not x > 0:
        raise ValueError(f"series needs x > 0, got {x}")
    if not tol > 0:
        raise ValueError("tol must be positive")
    terms, bound = _terms(x, tol)
    tail = math.fsum(terms)
    cdf = math.fsum([1.0] + [-t for t in terms])
    return SeriesEval(
        x=x,
        cdf=min(max(cdf, 0.0), 1.0),
        tail=min(max(tail, 0.0), 1.0),
        terms_used=len(terms),
        trunc_bound=bound,
    )


def log_tail_max(x: float, tol: float = 1e-15) -> float:
    """``ln P(max B_ex > x)``, computed relative to the leading term for ``x >= 1``."""
    if not x > 0:
        raise ValueError(f"series needs x > 0, got {x}")
    if x < 1:
        return math.log(cdf_max(x, tol).tail)
    # factor out the k = 1 term: tail = 2 (4x^2 - 1) e^{-2x^2} (1 + sum_{k>=2} r_k)
    lead = math.log(2 * (4 * x * x - 1)) - 2 * x * x
    rel = []
    k = 1
    while True:
        k += 1
        r = (4 * k * k * x * x - 1) / (4 * x * x - 1) * math.exp(-2 * (k * k - 1) * x * x)
        rel.append(r)
        if r < tol * 1e-3 or r == 0.0:
            break
    return lead + math.log1p(math.fsum(rel))


def tail_max(x: float, tol: float = 1e-15) -> float:
    """``P(max B_ex > x)`` summed as its own series (never as ``1 - cdf``)."""
    if x > UNDERFLOW_X:
        raise TailUnderflowError(x)
    if x >= 1:
        return math.exp(log_tail_max(x, tol))
    return cdf_max(x, tol).tail


def quantile_max(p: float, tol: float = 1e-12) -> float:
    """``x`` with ``|cdf_max(x) - p| <= tol``, by bracketing root search."""
    if not 0 < p < 1:
        raise ValueError(f"p must lie in (0, 1), got {p}")
    lo, hi = 0.05, 1.0
    while cdf_max(hi).cdf < p:
        hi *= 2
    while cdf_max(lo).cdf > p:
        lo /= 2
    x = optimize.brentq(lambda z: cdf_max(z).cdf - p, lo, hi, xtol=1e-15, maxiter=500)
    err = abs(cdf_max(x).cdf - p)
    if err > tol:
        raise RuntimeError(f"quantile search stalled at |cdf - p| = {err:.3g} > {tol}")
    return x


def _log_integral(log_integrand, peak: float, lo: float = 0.0) -> float:
    """``ln int_lo^inf exp(log_integrand(x)) dx`` for a unimodal integrand."""
    shift = log_integrand(peak)
    # integrand is negligible (below e^-60 of the peak) beyond these points
    right = peak
    step = max(1.0, 0.5 * peak)
    while log_integrand(right) - shift > -60:
        right += step
    left = peak
    while left > lo and log_integrand(left) - shift > -60:
        left = max(lo, left - step)
    f = lambda x: math.exp(log_integrand(x) - shift) if x > 0 else 0.0
    pieces = [(left, peak), (peak, right)]
    if left > lo:
        pieces.insert(0, (lo, left))
    total = 0.0
    for a, b in pieces:
        if b <= a:
            continue
        val, err = integrate.quad(f, a, b, epsabs=0.0, epsrel=1e-12, limit=500)
        if not math.isfinite(val) or err > 1e-8 * max(abs(val), 1e-300):
            raise RuntimeError(f"quadrature did not converge on [{a}, {b}]: {val} +- {err}")
        total += val
    return shift + math.log(total)


# below this x the cdf is under 1e-80, so the tail is 1 in double precision
_TAIL_IS_ONE_X = 0.15


def _safe_log_tail(x: float) -> float:
    if x <= _TAIL_IS_ONE_X:
        return 0.0
    return log_tail_max(x)


def moment_max(r: float, tol: float = 1e-12) -> float:
    """``(E max^r)^{1/r}`` from ``E X^r = int_0^inf r x^{r-1} P(X > x) dx``."""
    if not r > 0:
        raise ValueError(f"moment order must be positive, got {r}")

    def log_integrand(x):
        return math.log(r) + (r - 1) * math.log(x) + _safe_log_tail(x)

    # the k = 1 envelope x^{r+1} e^{-2x^2} peaks near sqrt((r+1)/4)
    peak = max(0.5, math.sqrt((r + 1) / 4))
    peak = optimize.minimize_scalar(lambda x: -log_integrand(x), bounds=(0.05, 2 * peak + 2),
                                    method="bounded").x
    return math.exp(_log_integral(log_integrand, peak) / r)


def log_mgf_max(t: float) -> float:
    """``ln E exp(t max B_ex) = ln(1 + int_0^inf t e^{tx} P(X > x) dx)`` for ``t >= 0``."""
    if t < 0:
        raise ValueError("only t >= 0 is supported")
    if t == 0:
        return 0.0

    def log_integrand(x):
        return math.log(t) + t * x + _safe_log_tail(x)

    peak = optimize.minimize_scalar(lambda x: -log_integrand(x), bounds=(0.01, t / 2 + 3),
                                    method="bounded").x
    log_int = _log_integral(log_integrand, peak)
    # ln(1 + e^{log_int})
    return log_int + math.log1p(math.exp(-log_int)) if log_int > 0 else math.log1p(math.exp(log_int))
