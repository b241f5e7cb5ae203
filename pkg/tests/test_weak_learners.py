import math

import numpy as np
import pytest

from properboost.booster import solve_alpha_arrays
from properboost.datasets import Dataset, LsDatasetSpec, make_noisy
from properboost.losses import make_loss, weight
from properboost.models import AXIS_DIRECTION, CONSTANT, STUMP_HALF, KnnState, WeakHypothesis, knn_build_index
from properboost.weak_learners import (
    ZeroWeightError,
    best_axis_hypothesis,
    best_region_hypothesis,
    best_stump_half,
    choose_region_by_J,
    companion_hypothesis,
    knn_best_leverage_point,
    normalized_edge,
    rank_regions_by_j,
    region_j,
)


def _half(n, v=0.5):
    return np.full(n, v)


@pytest.mark.parametrize("n_copies", [2, 3, 9])
@pytest.mark.parametrize("gamma", [0.01, 0.02, 0.1])
def test_first_axis_edge_closed_form(n_copies, gamma):
    d = make_noisy(LsDatasetSpec(gamma, n_copies=n_copies))
    e = normalized_edge(_half(len(d)), d.y, d.x[:, 0], d.multiplicity)
    assert e == pytest.approx((1 + 3 * gamma) / 4 * (n_copies - 1) / (n_copies + 1), abs=1e-12)


def test_first_axis_edge_numeric():
    d = make_noisy(LsDatasetSpec(0.02, n_copies=3))
    assert normalized_edge(_half(len(d)), d.y, d.x[:, 0], d.multiplicity) == pytest.approx(0.1325, abs=1e-12)


def test_zero_hypothesis_rejected():
    d = make_noisy(LsDatasetSpec(0.02))
    with pytest.raises(ValueError):
        normalized_edge(_half(len(d)), d.y, np.zeros(len(d)), d.multiplicity)
    with pytest.raises(ZeroWeightError):
        normalized_edge(np.zeros(len(d)), d.y, d.x[:, 0], d.multiplicity)


@pytest.mark.parametrize("gamma", [0.001, 0.01, 0.1, 0.4])
def test_x1_wins_first_iteration(gamma):
    rep = best_axis_hypothesis(_half(6), make_noisy(LsDatasetSpec(gamma, n_copies=3)))
    assert rep.hypothesis.kind == AXIS_DIRECTION and rep.hypothesis.axis == 0


def test_quarter_turn_makes_x2_win():
    rep = best_axis_hypothesis(_half(6), make_noisy(LsDatasetSpec(0.05, n_copies=3, theta=math.pi / 2)))
    assert rep.hypothesis.axis == 1


def test_exhausted_when_weight_vanishes():
    sq = make_loss("square")
    d = Dataset([[1.0, 2.0]], [1], [1])
    w = weight(sq, d.y, np.array([1e6]))
    assert best_axis_hypothesis(w, d, 1e-3) is None


def test_pure_region_half_has_unit_edge():
    d = Dataset([[0.0], [1.0], [2.0]], [1, 1, 1], [1, 1, 1])
    rep = best_stump_half(_half(3), d)
    assert abs(rep.edge) <= 1.0
    # the constant reaches edge 1 on a pure region
    assert best_region_hypothesis(_half(3), d, np.ones(3, bool)).abs_edge == pytest.approx(1.0)
    d2 = Dataset([[0.0], [1.0]], [1, 1], [1, 1])
    h = WeakHypothesis(STUMP_HALF, axis=0, threshold=0.5, polarity=1)
    assert normalized_edge(_half(2), d2.y, h(d2.x), d2.multiplicity, mask=d2.x[:, 0] >= 0.5) == 1.0


def test_root_of_noisy_sample_exhausts_after_bayes_constant():
    sq = make_loss("square")
    d = make_noisy(LsDatasetSpec(0.1, n_copies=3))
    w = weight(sq, d.y, np.full(len(d), sq.fwd_link(0.75)))
    assert best_region_hypothesis(w, d, np.ones(len(d), bool), 1e-3) is None


def _brute_stump(w, d, mask):
    """Best |edge| over thresholds x polarities of c * 1[x_j >= a], on the expanded sample."""
    idx = np.repeat(np.flatnonzero(mask), d.multiplicity[mask])
    x, ys, ww = d.x[idx], d.y_signed[idx], np.asarray(w)[idx]
    best = 0.0
    for j in range(x.shape[1]):
        vals = np.unique(x[:, j])
        for a in (vals[:-1] + vals[1:]) / 2:
            for c in (1.0, -1.0):
                e = np.sum(ww * ys * c * (x[:, j] >= a)) / np.sum(ww)
                best = max(best, e)
    return best


def test_stump_example_two_points():
    d = Dataset([[0.0], [1.0]], [1, 0], [1, 1])
    w = np.array([0.6, 0.4])
    rep = best_stump_half(w, d, gamma_wl=0.0)
    assert rep.hypothesis.threshold == 0.5
    assert rep.abs_edge == pytest.approx(_brute_stump(w, d, np.ones(2, bool)))
    assert rep.abs_edge == pytest.approx(0.4)


def test_stump_matches_brute_force(rng):
    for _ in range(40):
        n = int(rng.integers(2, 8))
        d = Dataset(rng.integers(0, 4, size=(n, 2)).astype(float), rng.integers(0, 2, n), rng.integers(1, 4, n))
        w = rng.uniform(0.05, 1, n)
        mask = rng.random(n) < 0.8
        if mask.sum() == 0:
            continue
        rep = best_stump_half(w, d, mask, gamma_wl=0.0)
        brute = _brute_stump(w, d, mask)
        if rep is None:
            assert brute == 0.0
        else:
            assert rep.abs_edge == pytest.approx(brute, abs=1e-12)


def test_companion():
    h = WeakHypothesis(STUMP_HALF, axis=0, threshold=0.5, polarity=1, value=1.0)
    c = companion_hypothesis(h)
    assert (c.axis, c.threshold, c.polarity, c.value) == (0, 0.5, -1, -1.0)
    assert companion_hypothesis(c) == h
    with pytest.raises(ValueError):
        companion_hypothesis(WeakHypothesis(CONSTANT))


def test_companion_edge_identity(loss, rng):
    """On a balanced region, the companion's weighted correlation after leveraging h equals h's before."""
    for _ in range(200):
        n = int(rng.integers(3, 9))
        x = rng.uniform(0, 1, size=(n, 1))
        y = rng.integers(0, 2, n)
        if y.min() == y.max():
            y[0] = 1 - y[0]
        m = rng.integers(1, 4, n).astype(float)
        s0 = rng.uniform(-1, 1, n)
        # balance the region first with a constant
        a0 = solve_alpha_arrays(loss, s0, np.ones(n), y, m).alpha
        s = s0 + a0
        a = float(np.median(x))
        h = WeakHypothesis(STUMP_HALF, axis=0, threshold=a, polarity=1, value=1.0)
        hv = h(x)
        if hv.min() == hv.max():
            continue
        ys = 2 * y - 1
        w = weight(loss, y, s)
        before = np.sum(m * w * ys * hv)
        try:
            alpha = solve_alpha_arrays(loss, s, hv, y, m).alpha
        except ArithmeticError:
            continue
        w2 = weight(loss, y, s + alpha * hv)
        after = np.sum(m * w2 * ys * companion_hypothesis(h)(x))
        assert after == pytest.approx(before, abs=1e-9)


def test_region_choice():
    w = np.array([0.5, 0.5, 0.0, 0.0])
    m = np.array([1, 1, 5, 5])
    masks = [np.array([1, 1, 0, 0], bool), np.array([0, 0, 1, 1], bool)]
    assert choose_region_by_J(w, m, masks) == 0
    assert choose_region_by_J(w, m, [np.ones(4, bool)]) == 0
    assert region_j(w, m, masks[1]) == 0.0
    assert rank_regions_by_j(np.ones(4), m, masks) == [1, 0]
    with pytest.raises(ValueError):
        choose_region_by_J(w, m, [])


def _brute_knn(w, d, k):
    """Enumerate rows x signs: edge of +-1 on {r : row i among K-NN of r}."""
    n = len(d)
    xs = np.repeat(np.arange(n), d.multiplicity)
    nb = []
    for r in range(n):
        dist = np.linalg.norm(d.x[xs] - d.x[r], axis=1)
        kth = np.sort(dist)[min(k, len(dist)) - 1]
        nb.append(set(xs[dist <= kth + 1e-12]))
    best = 0.0
    for i in range(n):
        rec = np.array([i in nb[r] for r in range(n)])
        tot = np.sum(d.multiplicity[rec] * w[rec])
        for c in (1, -1):
            best = max(best, c * np.sum(d.multiplicity[rec] * w[rec] * d.y_signed[rec]) / tot)
    return best


def test_knn_leverage_point_brute_force(rng):
    for _ in range(20):
        d = Dataset(rng.normal(size=(5, 2)), rng.integers(0, 2, 5), rng.integers(1, 3, 5))
        w = rng.uniform(0.1, 1, 5)
        rep = knn_best_leverage_point(w, d, knn_build_index(d, 2), gamma_wl=0.0)
        assert rep.abs_edge == pytest.approx(_brute_knn(w, d, 2), abs=1e-12)


def test_knn_single_example():
    d = Dataset([[0.0, 0.0]], [0], [1])
    rep = knn_best_leverage_point(np.array([0.5]), d, knn_build_index(d, 1))
    assert rep.edge == -1.0 and rep.region_index == 0
