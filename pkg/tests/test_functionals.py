import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import N_CASES, ordered_pairs, random_pairs, random_paths
from excursion_tails.functionals import (
    CATALOG,
    FunctionalId,
    evaluate,
    evaluate_batch,
    functional,
    gradient,
    lemma2_profile,
    min_on_interval,
    verify_sofie,
)
from excursion_tails.grid_path import GridPath, make_path, symmetrize, unimodal_rearrange

ALL = (*CATALOG, functional("walpha", 0.75), functional("walpha", 1.5), functional("walpha", 3.0))
CONCAVE = [s for s in ALL if s.concave]
MONOTONE = [s for s in ALL if s.monotone]


def test_flags():
    assert [(s.symmetric, s.monotone, s.concave) for s in CATALOG] == [
        (True, True, False),  # max
        (True, True, True),
        (True, True, True),
        (True, True, True),
        (True, False, False),  # zeta
    ]
    assert functional("walpha", 3).concave and functional("walpha", 3).monotone
    w = functional("walpha", 0.75)
    assert not w.concave and not w.monotone
    with pytest.raises(ValueError):
        functional("walpha", 0.5)
    with pytest.raises(ValueError):
        functional("walpha")
    with pytest.raises(ValueError):
        functional("area", 2.0)
    with pytest.raises(ValueError):
        functional("volume")


@pytest.mark.parametrize("spec", ALL, ids=lambda s: s.name)
def test_zero_path(spec):
    assert evaluate(spec, GridPath(16, np.zeros(17))) == 0.0


def test_known_values():
    assert evaluate(functional("area"), make_path("parabola", 512)) == pytest.approx(
        1 / math.sqrt(12), abs=1e-4)
    assert evaluate(functional("eta"), make_path("eta_max", 512)) == pytest.approx(
        1 / math.sqrt(5), abs=5e-3)
    assert evaluate(functional("max"), make_path("tent", 2)) == 0.5


@pytest.mark.parametrize("alpha", [0.75, 1.5, 3.0])
def test_walpha_converges_at_second_order(alpha):
    spec = functional("walpha", alpha)
    target = 1 / math.sqrt(2 * alpha + 1)
    errs = [abs(evaluate(spec, make_path("walpha_max", n, alpha=alpha)) - target) for n in (64, 128, 256)]
    assert errs[2] < errs[1] < errs[0]
    assert errs[0] / errs[2] > 8  # roughly n^-2


def test_identities():
    xi, eta, zeta = functional("xi"), functional("eta"), functional("zeta")
    w2, w1 = functional("walpha", 2.0), functional("walpha", 1.0)
    for p in random_paths(N_CASES, seed=21):
        e, x = evaluate(eta, p), evaluate(xi, p)
        assert evaluate(zeta, p) == pytest.approx(x - e, abs=1e-9)
        assert evaluate(w2, p) == pytest.approx(e, abs=1e-9)
        assert evaluate(w1, p) == pytest.approx(x, abs=1e-6)


@pytest.mark.parametrize("spec", ALL, ids=lambda s: s.name)
def test_homogeneity_and_symmetry(spec):
    for p in random_paths(N_CASES, seed=22):
        v = evaluate(spec, p)
        assert v >= -1e-12
        for c in (0.0, 0.5, 2.0, 10.0):
            assert evaluate(spec, p.scaled(c)) == pytest.approx(c * v, rel=1e-9, abs=1e-14)
        assert evaluate(spec, p.reversed()) == pytest.approx(v, rel=1e-9, abs=1e-14)


@pytest.mark.parametrize("spec", MONOTONE, ids=lambda s: s.name)
def test_monotone(spec):
    for p, q in ordered_pairs(N_CASES, seed=23):
        assert evaluate(spec, p) <= evaluate(spec, q) + 1e-12


@pytest.mark.parametrize("spec", CONCAVE, ids=lambda s: s.name)
def test_concave(spec):
    for p, q in random_pairs(N_CASES, seed=24):
        mid = GridPath(p.n, 0.5 * (p.values + q.values))
        assert evaluate(spec, mid) >= 0.5 * (evaluate(spec, p) + evaluate(spec, q)) - 1e-9


@pytest.mark.parametrize("spec", [functional("zeta"), functional("walpha", 0.75)], ids=lambda s: s.name)
def test_convex(spec):
    for p, q in random_pairs(N_CASES, seed=25):
        mid = GridPath(p.n, 0.5 * (p.values + q.values))
        assert evaluate(spec, mid) <= 0.5 * (evaluate(spec, p) + evaluate(spec, q)) + 1e-9


@pytest.mark.parametrize("spec", [s for s in CONCAVE if s.monotone], ids=lambda s: s.name)
def test_rearrangement_does_not_lower(spec):
    for p in random_paths(N_CASES, seed=26):
        assert evaluate(spec, unimodal_rearrange(symmetrize(p))) >= evaluate(spec, p) - 1e-9


def test_max_rearrangement_does_not_lower():
    spec = functional("max")
    for p in random_paths(N_CASES, seed=27):
        assert evaluate(spec, unimodal_rearrange(p)) >= evaluate(spec, p) - 1e-12


@pytest.mark.parametrize("spec", ALL, ids=lambda s: s.name)
def test_gradient_matches_finite_differences(spec):
    rng = np.random.default_rng(28)
    for p in random_paths(10, seed=29, n_lo=12, n_hi=20):
        # jitter so no ties sit on a kink
        v = p.values + np.concatenate(([0], rng.uniform(0, 1e-3, p.n - 1), [0]))
        p = GridPath(p.n, v)
        val, g = gradient(spec, p)
        assert val == pytest.approx(evaluate(spec, p), rel=1e-13, abs=1e-15)
        h = 1e-7
        for k in range(1, p.n):
            up = v.copy(); up[k] += h
            dn = v.copy(); dn[k] -= h
            fd = (evaluate(spec, GridPath(p.n, up)) - evaluate(spec, GridPath(p.n, dn))) / (2 * h)
            assert g[k] == pytest.approx(fd, abs=1e-6)


@pytest.mark.parametrize("spec", ALL, ids=lambda s: s.name)
def test_batch_matches_single(spec):
    paths = list(random_paths(20, seed=30, n_lo=32, n_hi=32))
    V = np.stack([p.values for p in paths])
    np.testing.assert_allclose(evaluate_batch(spec, V), [evaluate(spec, p) for p in paths],
                               rtol=1e-12, atol=1e-14)


def test_min_on_interval():
    tent = make_path("tent", 8)
    assert min_on_interval(tent, 0.3, 0.3) == pytest.approx(0.3)
    assert min_on_interval(tent, 0.25, 0.75) == pytest.approx(0.25)
    par = make_path("parabola", 80)
    assert min_on_interval(par, 0.1, 0.9) == pytest.approx(math.sqrt(3) * 0.09, abs=1e-12)
    with pytest.raises(ValueError):
        min_on_interval(tent, 0.6, 0.4)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(0, 3, allow_nan=False), min_size=3, max_size=20),
       st.floats(0, 1), st.floats(0, 1))
def test_min_on_interval_against_dense_sampling(interior, a, b):
    p = GridPath.from_values([0.0, *interior, 0.0])
    s, t = min(a, b), max(a, b)
    dense = p(np.linspace(s, t, 2001))
    assert min_on_interval(p, s, t) <= dense.min() + 1e-12
    assert min_on_interval(p, s, t) >= min(p(s), p(t), *p.values[(p.grid >= s) & (p.grid <= t)]) - 1e-12


def test_lemma2_profiles():
    area = lemma2_profile(functional("area"))
    assert area.h(0.0) == 1.0 and area.h(0.5) == 0.0
    assert area.h(0.25) == pytest.approx(0.5)
    zeta = lemma2_profile(functional("zeta"))
    assert zeta.h(0.25) == pytest.approx(0.5)
    assert not lemma2_profile(functional("max")).applicable
    for spec in ALL[1:]:
        h = lemma2_profile(spec).sampled(200)
        assert np.all(h >= -1e-15)


def test_sofie():
    assert verify_sofie(functional("area"), make_path("tent", 2)) == pytest.approx(0.0, abs=1e-15)
    assert evaluate(functional("area"), make_path("tent", 2)) == pytest.approx(0.25)
    assert verify_sofie(functional("eta"), make_path("eta_max", 512)) <= 5e-3
    assert verify_sofie(functional("zeta"), make_path("parabola", 512)) <= 5e-3
    d = [verify_sofie(functional("eta"), make_path("eta_max", n)) for n in (64, 128, 256)]
    assert d[2] < d[1] < d[0]
    with pytest.raises(ValueError):
        verify_sofie(functional("area"), GridPath.from_values([0, 0.3, 0.1, 0.2, 0]))
    with pytest.raises(ValueError):
        verify_sofie(functional("max"), make_path("tent", 8))
