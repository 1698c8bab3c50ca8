"""Positively homogeneous functionals of excursion paths.

Every functional is evaluated on the piecewise-linear interpolant of a
:class:`~excursion_tails.grid_path.GridPath`:

* ``max``    -- ``max f``
* ``area``   -- ``int f``
* ``xi``     -- ``2 int f``
* ``eta``    -- ``4 iint_{s<t} m(f; s, t)``
* ``zeta``   -- ``2 iint_{s<t} (f(s) + f(t) - 2 m(f; s, t))``
* ``walpha`` -- subtree-size power functional with parameter ``alpha > 1/2``

Single integrals are exact. Double integrals are summed over cell squares,
integrating each candidate for the interval minimum exactly against the
kernel, with closed forms on the diagonal cells (see
:mod:`excursion_tails._kernels`).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from numpy.polynomial import Polynomial

from . import _kernels
from .grid_path import GridPath

__all__ = [
    "FunctionalId",
    "FunctionalSpec",
    "Lemma2Profile",
    "functional",
    "CATALOG",
    "evaluate",
    "gradient",
    "evaluate_batch",
    "min_on_interval",
    "lemma2_profile",
    "verify_sofie",
    "is_symmetric_unimodal",
]


class FunctionalId(str, enum.Enum):
    MAX = "max"
    AREA = "area"
    XI = "xi"
    ETA = "eta"
    ZETA = "zeta"
    WALPHA = "walpha"


# (symmetric, monotone, concave)
_FLAGS = {
    FunctionalId.MAX: (True, True, False),
    FunctionalId.AREA: (True, True, True),
    FunctionalId.XI: (True, True, True),
    FunctionalId.ETA: (True, True, True),
    FunctionalId.ZETA: (True, False, False),
}


@dataclass(frozen=True)
class FunctionalSpec:
    id: FunctionalId
    alpha: float | None = None
    symmetric: bool = field(init=False)
    monotone: bool = field(init=False)
    concave: bool = field(init=False)

    def __post_init__(self):
        fid = FunctionalId(self.id)
        object.__setattr__(self, "id", fid)
        if fid is FunctionalId.WALPHA:
            if self.alpha is None:
                raise ValueError("walpha needs a parameter alpha")
            alpha = float(self.alpha)
            if not alpha > 0.5:
                raise ValueError(f"walpha needs alpha > 1/2, got {alpha}")
            object.__setattr__(self, "alpha", alpha)
            # alpha >= 1 is concave and monotone; below 1 it is convex
            flags = (True, alpha >= 1, alpha >= 1)
        else:
            if self.alpha is not None:
                raise ValueError(f"{fid.value} takes no alpha")
            flags = _FLAGS[fid]
        for name, flag in zip(("symmetric", "monotone", "concave"), flags):
            object.__setattr__(self, name, flag)

    @property
    def name(self) -> str:
        if self.id is FunctionalId.WALPHA:
            return f"walpha(alpha={self.alpha:g})"
        return self.id.value

    def to_json(self) -> dict:
        return {"id": self.id.value, "alpha": self.alpha}


def functional(name: str, alpha: float | None = None) -> FunctionalSpec:
    try:
        fid = FunctionalId(name.lower())
    except ValueError:
        choices = ", ".join(f.value for f in FunctionalId)
        raise ValueError(f"unknown functional {name!r}; expected one of {choices}") from None
    return FunctionalSpec(fid, alpha)


CATALOG = tuple(functional(f.value) for f in FunctionalId if f is not FunctionalId.WALPHA)


# -- quadrature building blocks ----------------------------------------------


@lru_cache(maxsize=64)
def _trapezoid_weights(n: int) -> np.ndarray:
    w = np.full(n + 1, 1.0 / n)
    w[0] = w[-1] = 0.5 / n
    w.setflags(write=False)
    return w


@lru_cache(maxsize=64)
def _pair_setup(n: int, power: float):
    w = _kernels.kernel_weights(n, power)
    mu = _kernels.kernel_moments(n, power)
    w.setflags(write=False)
    mu.setflags(write=False)
    return w, mu, _kernels.diagonal_coefficients(n, power)


@lru_cache(maxsize=64)
def _endpoint_weights(n: int, alpha: float) -> np.ndarray:
    """Weights ``c`` with ``c @ v = int (t^(a-1) + (1-t)^(a-1)) f(t) dt`` exactly."""
    q = alpha - 1.0
    t = np.arange(n + 1) / n
    t0, t1 = t[:-1], t[1:]
    m_q = (t1 ** (q + 1) - t0 ** (q + 1)) / (q + 1)
    m_q1 = (t1 ** (q + 2) - t0 ** (q + 2)) / (q + 2)
    c = np.zeros(n + 1)
    # f(t) = v_i (t1 - t) / h + v_{i+1} (t - t0) / h on cell i
    c[:-1] += n * (t1 * m_q - m_q1)
    c[1:] += n * (m_q1 - t0 * m_q)
    c = c + c[::-1]
    c.setflags(write=False)
    return c


def _pair_term(v: np.ndarray, power: float, bracket: bool, grad: np.ndarray | None):
    n = v.shape[0] - 1
    w, mu, (c_min, c_jump, c_bracket) = _pair_setup(n, power)
    out = grad if grad is not None else np.empty(0)
    return _kernels.pair_sweep(v, w, mu, c_min, c_jump, c_bracket, bracket, out)


def _eval_values(spec: FunctionalSpec, v: np.ndarray, grad: np.ndarray | None = None) -> float:
    """Evaluate on raw grid values; fills ``grad`` (length n+1) if given."""
    n = v.shape[0] - 1
    fid = spec.id
    if fid is FunctionalId.MAX:
        k = int(np.argmax(v))
        if grad is not None:
            grad[:] = 0.0
            grad[k] = 1.0
        return float(v[k])
    if fid in (FunctionalId.AREA, FunctionalId.XI):
        c = 1.0 if fid is FunctionalId.AREA else 2.0
        w = _trapezoid_weights(n)
        if grad is not None:
            grad[:] = c * w
        return c * float(w @ v)
    if fid is FunctionalId.ETA:
        val = 4.0 * _pair_term(v, 0.0, False, grad)
        if grad is not None:
            grad *= 4.0
        return val
    if fid is FunctionalId.ZETA:
        val = 2.0 * _pair_term(v, 0.0, True, grad)
        if grad is not None:
            grad *= 2.0
        return val
    # walpha
    a = spec.alpha
    if a > 1:
        coef = 2.0 * a * (a - 1.0)
        val = coef * _pair_term(v, a - 2.0, False, grad)
        if grad is not None:
            grad *= coef
        return val
    c = _endpoint_weights(n, a)
    first = a * float(c @ v)
    coef = a * (a - 1.0)
    if coef == 0.0:
        if grad is not None:
            grad[:] = a * c
        return first
    second = _pair_term(v, a - 2.0, True, grad)
    if grad is not None:
        grad *= -coef
        grad += a * c
    return first - coef * second


def evaluate(spec: FunctionalSpec, p: GridPath) -> float:
    """``Phi(f)`` for the interpolant of ``p``."""
    return _eval_values(spec, np.ascontiguousarray(p.values))


def gradient(spec: FunctionalSpec, p: GridPath) -> tuple[float, np.ndarray]:
    """Value and (sub)gradient with respect to the grid values.

    The quadrature is piecewise linear in the values, so this is its exact
    derivative wherever it exists; at ties the smallest grid position wins.
    """
    g = np.zeros(p.n + 1)
    val = _eval_values(spec, np.ascontiguousarray(p.values), g)
    return val, g


def evaluate_batch(spec: FunctionalSpec, values: np.ndarray) -> np.ndarray:
    """Evaluate on many paths at once; ``values`` has shape ``(N, n + 1)``."""
    V = np.ascontiguousarray(values, dtype=float)
    N, n1 = V.shape
    n = n1 - 1
    fid = spec.id
    if fid is FunctionalId.MAX:
        return V.max(axis=1)
    if fid in (FunctionalId.AREA, FunctionalId.XI):
        c = 1.0 if fid is FunctionalId.AREA else 2.0
        return c * (V @ _trapezoid_weights(n))
    out = np.empty(N)
    if fid in (FunctionalId.ETA, FunctionalId.ZETA) or spec.alpha == 2.0:
        # constant kernel: O(n) stack sum off the diagonal, closed form on it
        _kernels.batch_pair_min_sum_stack(V, out)
        h = 1.0 / n
        d = np.diff(V, axis=1)
        lo = np.minimum(V[:, :-1], V[:, 1:])
        diag_min = h * h * (lo.sum(axis=1) / 2 + np.abs(d).sum(axis=1) / 6)
        eta = 4.0 * (h * h * out + diag_min)
        if fid is FunctionalId.ZETA:
            return 2.0 * (V @ _trapezoid_weights(n)) - eta
        return eta
    w, mu, (c_min, c_jump, c_bracket) = _pair_setup(n, spec.alpha - 2.0)
    a = spec.alpha
    if a > 1:
        _kernels.batch_pair_sweep(V, w, mu, c_min, c_jump, c_bracket, False, out)
        return 2.0 * a * (a - 1.0) * out
    first = a * (V @ _endpoint_weights(n, a))
    if a == 1.0:
        return first
    _kernels.batch_pair_sweep(V, w, mu, c_min, c_jump, c_bracket, True, out)
    return first - a * (a - 1.0) * out


def min_on_interval(p: GridPath, s: float, t: float) -> float:
    """Exact ``inf {f(u): s <= u <= t}`` of the interpolant."""
    if s > t:
        raise ValueError(f"need s <= t, got s={s}, t={t}")
    if s < 0 or t > 1:
        raise ValueError("interval must lie in [0, 1]")
    lo = math.floor(s * p.n) + 1
    hi = math.ceil(t * p.n) - 1
    best = min(float(p(s)), float(p(t)))
    if lo <= hi:
        best = min(best, float(p.values[lo : hi + 1].min()))
    return best


# -- symmetric unimodal representation ----------------------------------------


@dataclass(frozen=True)
class Lemma2Profile:
    """Weight ``h`` on [0, 1/2] with ``Phi(f) = int_0^{1/2} f'(t) h(t) dt``.

    ``antiderivative`` is ``H(t) = int_0^t h``; ``l2_sq`` is
    ``int_0^{1/2} h(t)^2 dt`` computed in closed form.
    """

    applicable: bool
    h: Callable | None = None
    antiderivative: Callable | None = None
    l2_sq: float = math.nan
    label: str = ""

    def sampled(self, n: int) -> np.ndarray:
        if not self.applicable:
            raise ValueError("no profile for this functional")
        return self.h(np.linspace(0.0, 0.5, n + 1))


def _power_profile(c: float, beta: float, label: str) -> Lemma2Profile:
    """``h(t) = c (1 - 2t)^beta``."""
    return Lemma2Profile(
        applicable=True,
        h=lambda t: c * (1 - 2 * np.asarray(t, dtype=float)) ** beta,
        antiderivative=lambda t: c
        * (1 - (1 - 2 * np.asarray(t, dtype=float)) ** (beta + 1))
        / (2 * (beta + 1)),
        l2_sq=c * c / (2 * (2 * beta + 1)),
        label=label,
    )


def _poly_profile(poly: Polynomial, label: str) -> Lemma2Profile:
    sq = (poly**2).integ()
    return Lemma2Profile(
        applicable=True,
        h=poly,
        antiderivative=poly.integ(),
        l2_sq=float(sq(0.5) - sq(0.0)),
        label=label,
    )


def lemma2_profile(spec: FunctionalSpec) -> Lemma2Profile:
    fid = spec.id
    if fid is FunctionalId.MAX:
        return Lemma2Profile(applicable=False, label="none")
    if fid is FunctionalId.AREA:
        return _power_profile(1.0, 1.0, "1-2t")
    if fid is FunctionalId.XI:
        return _power_profile(2.0, 1.0, "2(1-2t)")
    if fid is FunctionalId.ETA:
        return _power_profile(2.0, 2.0, "2(1-2t)^2")
    if fid is FunctionalId.ZETA:
        return _poly_profile(Polynomial([0.0, 4.0, -8.0]), "4t(1-2t)")
    return _power_profile(2.0, spec.alpha, f"2(1-2t)^{spec.alpha:g}")


def is_symmetric_unimodal(p: GridPath, tol: float = 1e-9) -> bool:
    v = p.values
    scale = max(1.0, float(np.max(np.abs(v))))
    if np.max(np.abs(v - v[::-1])) > tol * scale:
        return False
    d = np.diff(v)
    half = p.n // 2
    return bool(np.all(d[:half] >= -tol * scale) and np.all(d[p.n - half :] <= tol * scale))


def verify_sofie(spec: FunctionalSpec, p: GridPath) -> float:
    """``|Phi(f) - int_0^{1/2} f'(t) h(t) dt|`` for a symmetric unimodal ``p``."""
    prof = lemma2_profile(spec)
    if not prof.applicable:
        raise ValueError(f"{spec.name} has no symmetric-unimodal profile")
    if not is_symmetric_unimodal(p):
        raise ValueError("path must be symmetric and unimodal")
    H = prof.antiderivative
    t = p.grid
    t0, t1 = t[:-1], np.minimum(t[1:], 0.5)
    keep = t0 < 0.5
    rep = float(np.sum(p.slopes[keep] * (H(t1[keep]) - H(t0[keep]))))
    return abs(evaluate(spec, p) - rep)
