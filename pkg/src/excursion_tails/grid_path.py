"""Piecewise-linear excursion candidates on a uniform grid.

A :class:`GridPath` stores ``f(i/n)`` for ``i = 0..n``; between grid points the
path is the linear interpolant, so its derivative is constant on each cell and
the Dirichlet energy ``int |f'|^2`` is computed exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "GridPath",
    "ConstraintReport",
    "h_norm_sq",
    "check_kex",
    "holder_seminorm",
    "symmetrize",
    "unimodal_rearrange",
    "make_path",
    "random_kex_path",
    "PATH_KINDS",
]

PATH_KINDS = ("tent", "parabola", "eta_max", "walpha_max", "custom")


@dataclass(frozen=True, eq=False)
class GridPath:
    """Values of a candidate function at the grid points ``i/n``."""

    n: int
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if self.n < 1:
            raise ValueError(f"grid resolution must be >= 1, got {self.n}")
        if values.shape != (self.n + 1,):
            raise ValueError(
                f"expected {self.n + 1} values for n={self.n}, got shape {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("path values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_values(cls, values: Sequence[float]) -> GridPath:
        values = np.asarray(values, dtype=float)
        return cls(len(values) - 1, values)

    @property
    def grid(self) -> np.ndarray:
        return np.arange(self.n + 1) / self.n

    @property
    def slopes(self) -> np.ndarray:
        """Derivative of the interpolant on each of the ``n`` cells."""
        return self.n * np.diff(self.values)

    def scaled(self, c: float) -> GridPath:
        return GridPath(self.n, c * self.values)

    def reversed(self) -> GridPath:
        return GridPath(self.n, self.values[::-1])

    def __call__(self, t):
        """Evaluate the piecewise-linear interpolant at ``t`` in [0, 1]."""
        return np.interp(t, self.grid, self.values)

    def __eq__(self, other):
        if not isinstance(other, GridPath):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.values, other.values)

    def __hash__(self):
        return hash((self.n, self.values.tobytes()))

    def to_json(self) -> dict:
        return {"n": self.n, "values": self.values.tolist()}

    @classmethod
    def from_json(cls, data: dict) -> GridPath:
        return cls(int(data["n"]), np.asarray(data["values"], dtype=float))


@dataclass(frozen=True)
class ConstraintReport:
    h_norm_sq: float
    is_nonneg: bool
    boundary_ok: bool
    in_kex: bool


def h_norm_sq(p: GridPath) -> float:
    """Exact ``int_0^1 |f'(t)|^2 dt`` of the interpolant: ``n * sum(diff^2)``."""
    d = np.diff(p.values)
    return float(p.n * np.dot(d, d))


def check_kex(p: GridPath, tol: float = 1e-9) -> ConstraintReport:
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    energy = h_norm_sq(p)
    is_nonneg = bool(np.all(p.values >= -tol))
    boundary_ok = abs(p.values[0]) <= tol and abs(p.values[-1]) <= tol
    return ConstraintReport(
        h_norm_sq=energy,
        is_nonneg=is_nonneg,
        boundary_ok=bool(boundary_ok),
        in_kex=bool(energy <= 1 + tol and is_nonneg and boundary_ok),
    )


def holder_seminorm(p: GridPath, beta: float) -> float:
    """Largest ``|f(x) - f(y)| / |x - y|**beta`` over pairs of grid points.

    For the piecewise-linear interpolant the supremum over all pairs is
    attained at grid points when ``beta == 1``; for ``beta < 1`` this is the
    grid restriction.
    """
    if not 0 < beta <= 1:
        raise ValueError(f"beta must lie in (0, 1], got {beta}")
    v = p.values
    best = 0.0
    for k in range(1, p.n + 1):
        gap = np.max(np.abs(v[k:] - v[:-k]))
        best = max(best, gap / (k / p.n) ** beta)
    return float(best)


def symmetrize(p: GridPath) -> GridPath:
    """``g(x) = (f(x) + f(1 - x)) / 2``."""
    return GridPath(p.n, 0.5 * (p.values + p.values[::-1]))


def unimodal_rearrange(p: GridPath) -> GridPath:
    """Single-peaked path with the same energy that dominates ``p``.

    Rises with the absolute cell increments of ``p`` up to the first cell
    boundary where their cumulative mass reaches half the total, then falls
    with the remaining ones. When that half-mass point falls strictly inside a
    cell, the crossing cell is given the slope that closes the path at 1
    (which can only lower the energy) and the whole path is scaled back up to
    the input energy; scaling by a factor >= 1 keeps the domination.
    """
    inc = np.abs(np.diff(p.values))
    total = inc.sum()
    if total == 0.0:
        return GridPath(p.n, np.zeros(p.n + 1))

    cum = np.concatenate(([0.0], np.cumsum(inc)))
    half = 0.5 * total
    # first boundary whose left mass reaches half (relative slack for rounding)
    k = int(np.argmax(cum >= half * (1 - 1e-12)))

    rise = cum[: k + 1]
    right_mass = np.concatenate((np.cumsum(inc[::-1])[::-1], [0.0]))
    if math.isclose(cum[k], half, rel_tol=1e-12):
        values = np.concatenate((rise, right_mass[k + 1 :]))
    else:
        # crossing cell is k - 1: left of it rises, right of it falls
        values = np.concatenate((cum[:k], right_mass[k:]))
    values[0] = 0.0
    values[-1] = 0.0

    g = GridPath(p.n, values)
    e_in, e_out = h_norm_sq(p), h_norm_sq(g)
    if e_out > 0 and e_out < e_in:
        g = g.scaled(math.sqrt(e_in / e_out))
    return g


def _walpha_profile(alpha: float):
    if not alpha > 0.5:
        raise ValueError(f"walpha_max needs alpha > 1/2, got {alpha}")
    c = math.sqrt(2 * alpha + 1) / (2 * (alpha + 1))
    return lambda t: c * (1 - np.abs(1 - 2 * t) ** (alpha + 1))


def make_path(kind: str, n: int, alpha: float | None = None, values=None) -> GridPath:
    """Sample one of the named extremal profiles at the grid points.

    ``kind`` is one of ``tent``, ``parabola``, ``eta_max``, ``walpha_max``
    (needs ``alpha``) or ``custom`` (needs ``values``).
    """
    if kind == "custom":
        if values is None:
            raise ValueError("custom path needs values")
        p = GridPath.from_values(values)
        if p.n != n:
            raise ValueError(f"custom values imply n={p.n}, expected {n}")
        return p
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    i = np.arange(n + 1)
    # built from mirror-invariant integer expressions so the samples are exactly symmetric
    t = np.minimum(i, n - i) / n
    if kind == "tent":
        f = t
    elif kind == "parabola":
        f = math.sqrt(3) * (i * (n - i)) / n**2
    elif kind == "eta_max":
        f = math.sqrt(5) / 6 * (1 - (np.abs(n - 2 * i) / n) ** 3)
    elif kind == "walpha_max":
        if alpha is None:
            raise ValueError("walpha_max needs alpha")
        f = _walpha_profile(alpha)(t)
    else:
        raise ValueError(f"unknown path kind {kind!r}; expected one of {PATH_KINDS}")
    f[0] = f[-1] = 0.0
    return GridPath(n, f)


def random_kex_path(n: int, rng: np.random.Generator, bumps: int | None = None) -> GridPath:
    """Random nonnegative path rescaled to unit energy.

    Built from a few random nonnegative knots interpolated onto the grid, so
    the draws range from single bumps to ragged multi-modal shapes.
    """
    if bumps is None:
        bumps = int(rng.integers(1, max(2, n // 2) + 1))
    bumps = max(1, min(bumps, n - 1))
    knots_t = np.concatenate(([0.0], np.sort(rng.uniform(0, 1, bumps)), [1.0]))
    knots_v = np.concatenate(([0.0], rng.exponential(1.0, bumps), [0.0]))
    t = np.arange(n + 1) / n
    v = np.interp(t, knots_t, knots_v)
    v[0] = v[-1] = 0.0
    if not np.any(v > 0):
        v[n // 2] = 1.0
    p = GridPath(n, v)
    return p.scaled(1 / math.sqrt(h_norm_sq(p)))
