"""The tail constant ``gamma = max {Phi(f) : f in K_ex}``.

Three routes:

* :func:`gamma_closed_form` -- the symmetric-unimodal profile formula
  ``gamma = (1/2 int_0^{1/2} h^2)^{1/2}``, exact for functionals that are
  symmetric, concave and monotone;
* :func:`gamma_numeric` -- multi-start projected ascent over the discretized
  unit ball;
* :func:`gamma_bounds` -- the analytic brackets known for ``zeta`` and for
  ``walpha`` with ``alpha < 1``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Polynomial
from scipy.linalg import solveh_banded

from .functionals import (
    FunctionalId,
    FunctionalSpec,
    gradient,
    lemma2_profile,
)
from .grid_path import GridPath, make_path, random_kex_path, symmetrize, unimodal_rearrange

__all__ = [
    "GammaResult",
    "SolverConfig",
    "gamma_closed_form",
    "gamma_max_direct",
    "gamma_numeric",
    "gamma_bounds",
    "gamma_upper_bound_zeta",
    "gamma_upper_bound_walpha",
    "walpha_bound_psi",
    "lemma1_reduce",
    "UnlicensedStepError",
]

log = logging.getLogger(__name__)


class UnlicensedStepError(ValueError):
    """A rearrangement step was requested for a functional lacking the property it needs."""


@dataclass(frozen=True)
class GammaResult:
    spec: FunctionalSpec
    method: str  # closed_form | numeric | bounds
    gamma: float | None = None
    lo: float | None = None
    hi: float | None = None
    maximizer: GridPath | None = None
    iterations: int = 0
    converged: bool = True
    note: str = ""
    restart_values: tuple[float, ...] = ()

    def __post_init__(self):
        if self.method == "bounds":
            if self.gamma is not None:
                raise ValueError("bound results carry an interval, not a value")
            if self.lo is None or self.hi is None or self.lo > self.hi:
                raise ValueError(f"invalid bound interval [{self.lo}, {self.hi}]")
        elif self.gamma is None:
            raise ValueError(f"{self.method} result needs a value")

    @property
    def value(self) -> float:
        return self.gamma if self.gamma is not None else self.lo

    def to_json(self, include_path: bool = False) -> dict:
        out = {
            "functional": self.spec.to_json(),
            "method": self.method,
            "gamma": self.gamma,
            "lo": self.lo,
            "hi": self.hi,
            "iterations": self.iterations,
            "converged": self.converged,
            "note": self.note,
        }
        if self.restart_values:
            out["restart_values"] = list(self.restart_values)
        if include_path and self.maximizer is not None:
            out["maximizer"] = self.maximizer.to_json()
        return out


@dataclass(frozen=True)
class SolverConfig:
    n: int = 256
    step0: float = 0.5
    max_iters: int = 20000
    restarts: int = 5
    seed: int = 0
    tol_grad: float = 1e-7
    # stop when the relative gain over ``stall_window`` iterations is below this
    stall_tol: float = 1e-8
    stall_window: int = 100

    def __post_init__(self):
        if self.n < 8:
            raise ValueError(f"solver grid needs n >= 8, got {self.n}")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.max_iters < 1 or self.step0 <= 0 or self.tol_grad <= 0:
            raise ValueError("max_iters, step0 and tol_grad must be positive")


# -- closed forms ---------------------------------------------------------------


def gamma_closed_form(spec: FunctionalSpec, n: int = 512) -> GammaResult:
    """``(1/2 int_0^{1/2} h^2)^{1/2}`` with the maximizer ``f' = h / (2 gamma)``.

    For functionals without concavity and monotonicity this is only the
    maximum over symmetric unimodal paths, which the ``note`` records.
    """
    prof = lemma2_profile(spec)
    if not prof.applicable:
        raise ValueError(f"{spec.name}: no symmetric-unimodal profile, closed form unavailable")
    gamma = math.sqrt(0.5 * prof.l2_sq)
    t = np.arange(n + 1) / n
    half = prof.antiderivative(np.minimum(t, 1 - t)) / (2 * gamma)
    half[0] = half[-1] = 0.0
    exact = spec.symmetric and spec.concave and spec.monotone
    return GammaResult(
        spec=spec,
        method="closed_form",
        gamma=gamma,
        maximizer=GridPath(n, half),
        note="" if exact else "K_su value only",
    )


def gamma_max_direct(n: int = 512) -> GammaResult:
    """``max f <= 1/2`` on the unit ball, attained by the tent."""
    from .functionals import functional

    return GammaResult(
        spec=functional("max"),
        method="closed_form",
        gamma=0.5,
        maximizer=make_path("tent", n),
        note="direct Cauchy-Schwarz bound",
    )


def gamma_upper_bound_zeta() -> float:
    """``2 ||f'||_2 (int_0^1 u^2 (1-u)^2 du)^{1/2}`` at unit energy."""
    weight = (Polynomial([0, 0, 1]) * Polynomial([1, -1]) ** 2).integ()
    return 2 * math.sqrt(weight(1.0) - weight(0.0))


def walpha_bound_psi(alpha: float) -> float:
    """``int_0^1 h(u)^2 du`` for the envelope ``h(u) = 2 max(u, 1-u)^alpha - 1``."""
    a = alpha
    return (
        8 / (2 * a + 1) * (1 - 2 ** (-2 * a - 1))
        - 8 / (a + 1) * (1 - 2 ** (-a - 1))
        + 1
    )


def gamma_upper_bound_walpha(alpha: float) -> float:
    if not 0.5 < alpha <= 1:
        raise ValueError(f"walpha upper bound needs 1/2 < alpha <= 1, got {alpha}")
    return math.sqrt(walpha_bound_psi(alpha))


def gamma_bounds(spec: FunctionalSpec) -> GammaResult:
    """Analytic bracket ``[lo, hi]`` for functionals whose gamma is open."""
    if spec.id is FunctionalId.ZETA:
        lo = gamma_closed_form(spec, n=8).gamma
        return GammaResult(spec, "bounds", lo=lo, hi=gamma_upper_bound_zeta(),
                           note="lower: symmetric unimodal maximum; upper: Cauchy-Schwarz")
    if spec.id is FunctionalId.WALPHA and spec.alpha < 1:
        lo = 1 / math.sqrt(2 * spec.alpha + 1)
        return GammaResult(spec, "bounds", lo=lo, hi=gamma_upper_bound_walpha(spec.alpha),
                           note="lower: symmetric unimodal maximum; upper: envelope h")
    raise ValueError(f"{spec.name}: gamma is known exactly, no bound bracket")


# -- rearrangement ----------------------------------------------------------------


def lemma1_reduce(spec: FunctionalSpec, p: GridPath) -> GridPath:
    """Symmetrize (needs symmetric + concave), then rearrange (needs monotone).

    Each step runs only when the functional's flags guarantee it does not
    lower ``Phi``.
    """
    can_sym = spec.symmetric and spec.concave
    can_rearrange = spec.monotone
    if not (can_sym or can_rearrange):
        raise UnlicensedStepError(
            f"{spec.name}: symmetrization needs symmetric+concave and unimodal "
            "rearrangement needs monotone; neither step is licensed"
        )
    out = symmetrize(p) if can_sym else p
    if can_rearrange:
        out = unimodal_rearrange(out)
    return out


# -- numeric ascent ---------------------------------------------------------------


class _Sphere:
    """Unit-energy sphere of interior grid values with the H^1_0 metric.

    The energy is ``x^T L x`` with ``L = n * tridiag(-1, 2, -1)``; Sobolev
    gradients are ``L^{-1} g``, restricted to the coordinates not pinned at 0.
    """

    def __init__(self, n: int):
        self.n = n

    def energy(self, x: np.ndarray) -> float:
        d = np.diff(np.concatenate(([0.0], x, [0.0])))
        return self.n * float(d @ d)

    def normalize(self, x: np.ndarray) -> np.ndarray | None:
        e = self.energy(x)
        if e <= 0:
            return None
        return x / math.sqrt(e)

    def riesz(self, g: np.ndarray, free: np.ndarray) -> np.ndarray:
        """Solve ``L_FF d_F = g_F`` with ``d = 0`` off the free set ``F``."""
        idx = np.flatnonzero(free)
        d = np.zeros_like(g)
        if idx.size == 0:
            return d
        banded = np.empty((2, idx.size))
        banded[1, :] = 2 * self.n
        banded[0, 0] = 0.0
        banded[0, 1:] = np.where(np.diff(idx) == 1, -self.n, 0.0)
        d[idx] = solveh_banded(banded, g[idx])
        return d

    def path(self, x: np.ndarray) -> GridPath:
        return GridPath(self.n, np.concatenate(([0.0], x, [0.0])))


def _direction(sphere: _Sphere, x: np.ndarray, g: np.ndarray):
    """Tangent ascent direction and its H^1 norm, with active zeros held fixed."""
    free = np.ones(x.shape, dtype=bool)
    for _ in range(x.size):
        d = sphere.riesz(g, free)
        radial = float(g @ x)
        tangent = d - radial * x
        blocked = free & (x <= 0.0) & (tangent < 0.0)
        if not blocked.any():
            break
        free &= ~blocked
    gnorm = math.sqrt(max(float(d @ g) - radial * radial, 0.0))
    return tangent, gnorm


def _ascend(spec: FunctionalSpec, start: GridPath, cfg: SolverConfig, sphere: _Sphere):
    x = sphere.normalize(np.clip(start.values[1:-1], 0.0, None))
    fx, g = gradient(spec, sphere.path(x))
    step = cfg.step0
    converged = False
    history = [fx]
    it = 0
    for it in range(1, cfg.max_iters + 1):
        if it > cfg.stall_window:
            old = history[-cfg.stall_window - 1]
            if fx - old <= cfg.stall_tol * abs(fx):
                converged = True
                break
        tangent, gnorm = _direction(sphere, x, g[1:-1])
        if gnorm < cfg.tol_grad:
            converged = True
            break
        while True:
            y = sphere.normalize(np.clip(x + (step / gnorm) * tangent, 0.0, None))
            if y is not None:
                fy, gy = gradient(spec, sphere.path(y))
                if fy > fx:
                    break
            step *= 0.5
            if step < 1e-13:
                break
        if step < 1e-13:
            # no ascent along the selected (sub)gradient at machine resolution
            converged = True
            break
        x, fx, g = y, fy, gy
        history.append(fx)
        step = min(2.0 * step, 1.0)
    return fx, sphere.path(x), it, converged


def _starts(cfg: SolverConfig):
    rng = np.random.default_rng(cfg.seed)
    yield make_path("tent", cfg.n)
    if cfg.restarts > 1:
        yield make_path("parabola", cfg.n)
    for _ in range(cfg.restarts - 2):
        yield random_kex_path(cfg.n, rng)


def gamma_numeric(spec: FunctionalSpec, cfg: SolverConfig | None = None) -> GammaResult:
    """Best value of projected Sobolev-gradient ascent over several starts.

    Each step moves along the H^1_0 Riesz representative of the gradient,
    projected onto the tangent space of the unit-energy sphere, then clips
    negative values and rescales to unit energy. Step lengths adapt by
    doubling on success and halving on failure. Starts: tent, parabola, then
    seeded random unit-energy paths.
    """
    cfg = cfg or SolverConfig()
    sphere = _Sphere(cfg.n)
    best = None
    values = []
    total_iters = 0
    all_converged = True
    for k, start in enumerate(_starts(cfg)):
        val, path, iters, conv = _ascend(spec, start, cfg, sphere)
        log.debug("%s restart %d: %.9f after %d iterations", spec.name, k, val, iters)
        values.append(val)
        total_iters += iters
        all_converged &= conv
        if best is None or val > best[0]:
            best = (val, path)
    return GammaResult(
        spec=spec,
        method="numeric",
        gamma=best[0],
        maximizer=best[1],
        iterations=total_iters,
        converged=all_converged,
        restart_values=tuple(values),
    )
