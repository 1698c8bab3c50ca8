import numpy as np
import pytest

from excursion_tails.grid_path import GridPath, random_kex_path

N_CASES = 1000


def random_paths(count: int, seed: int, n_lo: int = 8, n_hi: int = 48):
    """Seeded unit-energy random paths with varying grid sizes."""
    rng = np.random.default_rng(seed)
    for _ in range(count):
        n = int(rng.integers(n_lo, n_hi + 1))
        yield random_kex_path(n, rng)


def random_pairs(count: int, seed: int, n: int = 24):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        yield random_kex_path(n, rng), random_kex_path(n, rng)


def ordered_pairs(count: int, seed: int, n: int = 24):
    """Pairs ``p <= q`` pointwise: ``q`` adds a nonnegative bump to ``p``."""
    rng = np.random.default_rng(seed)
    for _ in range(count):
        p = random_kex_path(n, rng)
        bump = random_kex_path(n, rng).values * rng.uniform(0, 1)
        yield p, GridPath(n, p.values + bump)


@pytest.fixture(autouse=True)
def _reproducible_manifest(monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "1700000000")
