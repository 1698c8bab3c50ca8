"""Monte Carlo for functionals of Brownian excursion on a grid.

Two samplers produce excursion paths with ``n`` cells:

* ``bessel_bridge_norm`` -- Euclidean norm of a 3-dimensional Brownian bridge;
* ``vervaat`` -- a 1-dimensional bridge cut at its minimum and rotated so the
  minimum sits at time 0, then shifted up by that minimum.

Randomness comes from counter-based Philox streams, one per block of
``BLOCK`` consecutive samples, keyed by ``(seed, block index)``. A sample's
path therefore depends only on the seed and its index, never on how blocks
are spread over workers.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import special, stats

from .functionals import FunctionalSpec, evaluate_batch
from .grid_path import GridPath

__all__ = [
    "McConfig",
    "TailEstimate",
    "Estimate",
    "SAMPLERS",
    "BLOCK",
    "block_rng",
    "sample_bridge",
    "sample_excursion",
    "excursion_block",
    "functional_samples",
    "functional_samples_multi",
    "estimate_tail",
    "estimate_mgf",
    "estimate_moment",
    "tail_from_samples",
    "mgf_from_samples",
    "moment_from_samples",
]

log = logging.getLogger(__name__)

SAMPLERS = ("bessel_bridge_norm", "vervaat")
BLOCK = 1024
# fewer exceedances than this and the tail estimate is flagged unreliable
MIN_HITS = 10


@dataclass(frozen=True)
class McConfig:
    n: int = 1024
    samples: int = 100_000
    seed: int = 0
    sampler: str = "bessel_bridge_norm"
    workers: int = 1

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.samples < 1:
            raise ValueError("samples must be >= 1")
        if self.sampler not in SAMPLERS:
            raise ValueError(f"unknown sampler {self.sampler!r}; expected one of {SAMPLERS}")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    def to_json(self) -> dict:
        return {"n": self.n, "samples": self.samples, "seed": self.seed, "sampler": self.sampler}


def block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(block,))))


def _bridges(rng: np.random.Generator, m: int, d: int, n: int) -> np.ndarray:
    """``m`` independent ``d``-dimensional bridges, shape ``(m, d, n + 1)``."""
    steps = rng.standard_normal((m, d, n)) * math.sqrt(1.0 / n)
    walk = np.zeros((m, d, n + 1))
    np.cumsum(steps, axis=2, out=walk[:, :, 1:])
    t = np.arange(n + 1) / n
    walk -= t * walk[:, :, -1:]
    walk[:, :, -1] = 0.0
    return walk


def sample_bridge(n: int, d: int, rng: np.random.Generator) -> tuple[GridPath, ...]:
    """One ``d``-dimensional Brownian bridge, returned per component."""
    if n < 1 or d < 1:
        raise ValueError("need n >= 1 and d >= 1")
    w = _bridges(rng, 1, d, n)[0]
    return tuple(GridPath(n, w[c]) for c in range(d))


def _vervaat(bridge: np.ndarray) -> np.ndarray:
    """Rotate each bridge (rows of shape ``(n + 1,)``) to start at its minimum."""
    m, n1 = bridge.shape
    n = n1 - 1
    k = np.argmin(bridge[:, :n], axis=1)
    idx = (k[:, None] + np.arange(n1)[None, :]) % n
    out = np.take_along_axis(bridge, idx, axis=1) - bridge[np.arange(m), k][:, None]
    out[:, 0] = 0.0
    out[:, -1] = 0.0
    return np.maximum(out, 0.0)


def excursion_block(seed: int, block: int, m: int, n: int, sampler: str) -> np.ndarray:
    """Excursion paths for samples ``block * BLOCK ... block * BLOCK + m - 1``."""
    rng = block_rng(seed, block)
    if sampler == "bessel_bridge_norm":
        w = _bridges(rng, m, 3, n)
        paths = np.sqrt(np.einsum("mdi,mdi->mi", w, w))
        paths[:, 0] = 0.0
        paths[:, -1] = 0.0
        return paths
    if sampler == "vervaat":
        return _vervaat(_bridges(rng, m, 1, n)[:, 0, :])
    raise ValueError(f"unknown sampler {sampler!r}")


def sample_excursion(cfg: McConfig, index: int = 0) -> GridPath:
    """The ``index``-th excursion path of the stream defined by ``cfg``."""
    block, offset = divmod(index, BLOCK)
    m = min(BLOCK, cfg.samples - block * BLOCK) if index < cfg.samples else offset + 1
    paths = excursion_block(cfg.seed, block, m, cfg.n, cfg.sampler)
    return GridPath(cfg.n, paths[offset])


def _block_values(args):
    spec, seed, block, m, n, sampler = args
    return evaluate_batch(spec, excursion_block(seed, block, m, n, sampler))


def functional_samples(spec: FunctionalSpec, cfg: McConfig) -> np.ndarray:
    """``Phi`` evaluated on each of ``cfg.samples`` excursion paths, in sample order."""
    nblocks = -(-cfg.samples // BLOCK)
    jobs = [
        (spec, cfg.seed, b, min(BLOCK, cfg.samples - b * BLOCK), cfg.n, cfg.sampler)
        for b in range(nblocks)
    ]
    if cfg.workers == 1:
        parts = [_block_values(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            parts = list(pool.map(_block_values, jobs))
    return np.concatenate(parts)


def _block_values_multi(args):
    specs, seed, block, m, n, sampler = args
    paths = excursion_block(seed, block, m, n, sampler)
    return [evaluate_batch(spec, paths) for spec in specs]


def functional_samples_multi(specs, cfg: McConfig) -> dict:
    """Several functionals on one shared set of paths, keyed by ``spec.name``."""
    specs = tuple(specs)
    nblocks = -(-cfg.samples // BLOCK)
    jobs = [
        (specs, cfg.seed, b, min(BLOCK, cfg.samples - b * BLOCK), cfg.n, cfg.sampler)
        for b in range(nblocks)
    ]
    if cfg.workers == 1:
        parts = [_block_values_multi(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            parts = list(pool.map(_block_values_multi, jobs))
    return {s.name: np.concatenate([p[k] for p in parts]) for k, s in enumerate(specs)}


# -- estimates -------------------------------------------------------------------


@dataclass(frozen=True)
class TailEstimate:
    x: float
    p_hat: float
    stderr: float
    n_samples: int
    ci_lo: float
    ci_hi: float
    log_tail_ratio: float | None = None
    below_resolution: bool = False
    reliable: bool = True

    def to_json(self) -> dict:
        return dict(self.__dict__)


@dataclass(frozen=True)
class Estimate:
    """A Monte Carlo mean-type estimate (MGF value or moment root)."""

    kind: str  # mgf | moment
    param: float
    value: float
    stderr: float
    n_samples: int
    reliable: bool = True
    log_value: float | None = None

    def to_json(self) -> dict:
        return dict(self.__dict__)


def tail_from_samples(values: np.ndarray, x: float, gamma: float | None = None) -> TailEstimate:
    n = values.size
    hits = int(np.count_nonzero(values > x))
    p_hat = hits / n
    stderr = math.sqrt(p_hat * (1 - p_hat) / n)
    ci = stats.binomtest(hits, n).proportion_ci(confidence_level=0.95, method="wilson")
    ratio = None
    if gamma is not None and hits > 0 and x > 0:
        ratio = -math.log(p_hat) / (x * x / (2 * gamma * gamma))
    return TailEstimate(
        x=float(x),
        p_hat=p_hat,
        stderr=stderr,
        n_samples=n,
        ci_lo=float(ci.low),
        ci_hi=float(ci.high),
        log_tail_ratio=ratio,
        below_resolution=hits == 0,
        reliable=hits >= MIN_HITS,
    )


def estimate_tail(spec: FunctionalSpec, x: float, cfg: McConfig,
                  gamma: float | None = None) -> TailEstimate:
    """``P(Phi(B_ex) > x)`` as a sample fraction with its binomial standard error."""
    if x < 0:
        raise ValueError("threshold must be nonnegative")
    return tail_from_samples(functional_samples(spec, cfg), x, gamma)


def mgf_from_samples(values: np.ndarray, t: float, gamma: float | None = None) -> Estimate:
    n = values.size
    z = t * values
    log_mean = float(special.logsumexp(z) - math.log(n))
    # stderr of the mean of exp(z), computed relative to exp(max z)
    top = float(z.max())
    w = np.exp(z - top)
    rel_sd = float(w.std(ddof=1)) / math.sqrt(n) if n > 1 else math.inf
    log_stderr = top + math.log(rel_sd) if rel_sd > 0 else -math.inf
    ess = float(w.sum() ** 2 / np.dot(w, w))
    reliable = ess >= 100 and (gamma is None or abs(t) <= 3 / gamma)
    return Estimate(
        kind="mgf",
        param=float(t),
        value=math.exp(log_mean) if log_mean < 700 else math.inf,
        stderr=math.exp(log_stderr) if log_stderr < 700 else math.inf,
        n_samples=n,
        reliable=reliable,
        log_value=log_mean,
    )


def estimate_mgf(spec: FunctionalSpec, t: float, cfg: McConfig,
                 gamma: float | None = None) -> Estimate:
    """Sample mean of ``exp(t Phi)``, accumulated in log space.

    Flagged unreliable when the effective sample size of the exponential
    weights drops below 100, or when ``gamma`` is given and ``|t| > 3 / gamma``.
    """
    if t == 0:
        return Estimate("mgf", 0.0, 1.0, 0.0, cfg.samples, True, 0.0)
    return mgf_from_samples(functional_samples(spec, cfg), t, gamma)


def moment_from_samples(values: np.ndarray, r: int) -> Estimate:
    n = values.size
    scale = float(values.max())
    if scale == 0:
        return Estimate("moment", float(r), 0.0, 0.0, n)
    y = (values / scale) ** r
    mean = float(y.mean())
    se_mean = float(y.std(ddof=1)) / math.sqrt(n) if n > 1 else math.inf
    root = scale * mean ** (1 / r)
    # delta method: d(m^{1/r}) = m^{1/r - 1} dm / r
    stderr = root * se_mean / (r * mean)
    return Estimate("moment", float(r), root, stderr, n, reliable=r <= 20)


def estimate_moment(spec: FunctionalSpec, r: int, cfg: McConfig) -> Estimate:
    """``(mean Phi^r)^{1/r}`` with a delta-method standard error; unreliable past r = 20."""
    if r < 1:
        raise ValueError("moment order must be >= 1")
    return moment_from_samples(functional_samples(spec, cfg), r)
