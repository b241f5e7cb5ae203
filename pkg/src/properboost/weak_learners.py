"""Weak learners: normalised edges, hypothesis searches and region choice.

All sums are multiplicity weighted.  A search returns an ``EdgeReport`` when
its best candidate reaches ``gamma_wl`` in absolute edge and ``None`` when the
learner is exhausted.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .datasets import Dataset
from .models import (
    AXIS_DIRECTION,
    CONSTANT,
    STUMP_HALF,
    HalfSpace,
    KnnState,
    WeakHypothesis,
)

DEFAULT_GAMMA_WL = 1e-3
_TIE = 1e-12
# mean weight below which a region counts as empty (pure and already saturated)
WEIGHT_FLOOR = 1e-9


class ZeroWeightError(ValueError):
    """The region carries no weight: nothing is left to boost there."""


@dataclass(frozen=True)
class EdgeReport:
    hypothesis: WeakHypothesis
    edge: float
    region_index: Optional[int] = None

    @property
    def abs_edge(self) -> float:
        return abs(self.edge)


def normalized_edge(weights, labels, h_values, multiplicity=None, mask=None) -> float:
    """``sum_i (w_i / sum w) y*_i h(x_i) / max|h|`` over the region.

    ``labels`` are in {0, 1}.  Raises ``ZeroWeightError`` when the region
    weight vanishes and ``ValueError`` when ``h`` is identically zero.
    """
    w = np.asarray(weights, dtype=float)
    ys = 2.0 * np.asarray(labels, dtype=float) - 1.0
    h = np.asarray(h_values, dtype=float)
    m = np.ones_like(w) if multiplicity is None else np.asarray(multiplicity, dtype=float)
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        w, ys, h, m = w[mask], ys[mask], h[mask], m[mask]
    if h.size == 0:
        raise ValueError("empty region")
    hmax = np.max(np.abs(h))
    if hmax == 0:
        raise ValueError("hypothesis vanishes on the region")
    total = np.sum(m * w)
    if total <= WEIGHT_FLOOR * np.sum(m):
        raise ZeroWeightError("all weights are zero on the region")
    return float(np.sum(m * w * ys * h) / (total * hmax))


def best_axis_hypothesis(weights, data: Dataset, gamma_wl: float = DEFAULT_GAMMA_WL) -> Optional[EdgeReport]:
    """Coordinate direction ``h(x) = x_j`` with the largest absolute edge."""
    best = None
    for j in range(data.n_features):
        col = data.x[:, j]
        if not np.any(col):
            continue
        try:
            e = normalized_edge(weights, data.y, col, data.multiplicity)
        except ZeroWeightError:
            return None
        if best is None or abs(e) > abs(best.edge) + _TIE:
            h = WeakHypothesis(AXIS_DIRECTION, axis=j, max_abs=float(np.max(np.abs(col))))
            best = EdgeReport(h, e)
    if best is None or best.abs_edge < gamma_wl:
        return None
    return best


def constant_hypothesis(weights, data: Dataset, mask) -> Optional[EdgeReport]:
    """Constant +1 on the region; its edge is the weighted label balance."""
    try:
        e = normalized_edge(weights, data.y, np.ones(len(data)), data.multiplicity, mask)
    except ZeroWeightError:
        return None
    return EdgeReport(WeakHypothesis(CONSTANT, value=1.0, max_abs=1.0), e)


def _stump_candidates(weights, data: Dataset, mask, allowed: Optional[Callable] = None):
    """Yield (axis, threshold, edge) for ``1[x_j >= a]`` half-splits in the region."""
    mask = np.asarray(mask, dtype=bool)
    w = np.asarray(weights, dtype=float)[mask]
    m = data.multiplicity[mask].astype(float)
    ys = data.y_signed[mask].astype(float)
    x = data.x[mask]
    total = np.sum(m * w)
    if total <= WEIGHT_FLOOR * np.sum(m):
        raise ZeroWeightError("all weights are zero on the region")
    signed = m * w * ys
    for j in range(x.shape[1]):
        vals = np.unique(x[:, j])
        if len(vals) < 2:
            continue
        thresholds = 0.5 * (vals[:-1] + vals[1:])
        for a in thresholds:
            if allowed is not None and not allowed(j, a):
                continue
            upper = x[:, j] >= a
            yield j, float(a), float(signed[upper].sum() / total)


def best_stump_half(
    weights,
    data: Dataset,
    mask=None,
    gamma_wl: float = DEFAULT_GAMMA_WL,
    allowed: Optional[Callable] = None,
) -> Optional[EdgeReport]:
    """Best half-split ``1[x_j >= a]`` over midpoints of consecutive distinct values.

    Ties go to the lowest axis, then the lowest threshold.  The value is +1
    and the sign of the edge is kept; the leveraging coefficient orients it.
    """
    if mask is None:
        mask = np.ones(len(data), dtype=bool)
    best = None
    try:
        for j, a, e in _stump_candidates(weights, data, mask, allowed):
            if best is None or abs(e) > abs(best[2]) + _TIE:
                best = (j, a, e)
    except ZeroWeightError:
        return None
    if best is None or abs(best[2]) < gamma_wl:
        return None
    j, a, e = best
    return EdgeReport(WeakHypothesis(STUMP_HALF, axis=j, threshold=a, polarity=1, value=1.0), e)


def companion_hypothesis(h: WeakHypothesis) -> WeakHypothesis:
    """``1[x_j >= a] c`` -> ``1[x_j < a] (-c)``; an involution."""
    if h.kind != STUMP_HALF:
        raise ValueError("companion only defined for half-split stumps")
    return WeakHypothesis(
        STUMP_HALF, axis=h.axis, threshold=h.threshold, polarity=-h.polarity,
        value=-h.value, max_abs=h.max_abs,
    )


def region_j(weights, multiplicity, mask) -> float:
    """``Card(W) * (E_{i~W} w_i)^2`` with multiplicities."""
    mask = np.asarray(mask, dtype=bool)
    m = np.asarray(multiplicity, dtype=float)[mask]
    if m.sum() == 0:
        return 0.0
    s = np.sum(m * np.asarray(weights, dtype=float)[mask])
    return float(s * s / m.sum())


def rank_regions_by_j(weights, multiplicity, masks: Sequence) -> list[int]:
    """Region indices by decreasing J; ties keep the lower index first."""
    js = [region_j(weights, multiplicity, mk) for mk in masks]
    return sorted(range(len(masks)), key=lambda k: (-js[k], k))


def choose_region_by_J(weights, multiplicity, partition: Sequence) -> int:
    if len(partition) == 0:
        raise ValueError("empty partition")
    return rank_regions_by_j(weights, multiplicity, partition)[0]


def best_region_hypothesis(weights, data: Dataset, mask, gamma_wl: float = DEFAULT_GAMMA_WL) -> Optional[EdgeReport]:
    """Constant or half-split on one region, whichever has the larger |edge|."""
    const = constant_hypothesis(weights, data, mask)
    stump = best_stump_half(weights, data, mask, gamma_wl=0.0)
    cands = [c for c in (const, stump) if c is not None]
    if not cands:
        return None
    best = cands[0]
    for c in cands[1:]:
        if c.abs_edge > best.abs_edge + _TIE:
            best = c
    return best if best.abs_edge >= gamma_wl else None


def knn_best_leverage_point(weights, data: Dataset, state: KnnState, gamma_wl: float = DEFAULT_GAMMA_WL) -> Optional[EdgeReport]:
    """Training row whose reciprocal neighbourhood has the largest |edge| for a constant."""
    best = None
    for i, rec in enumerate(state.reciprocal):
        mask = np.zeros(len(data), dtype=bool)
        mask[rec] = True
        rep = constant_hypothesis(weights, data, mask)
        if rep is None:
            continue
        if best is None or rep.abs_edge > best.abs_edge + _TIE:
            best = EdgeReport(rep.hypothesis, rep.edge, region_index=i)
    if best is None or best.abs_edge < gamma_wl:
        return None
    return best


def cut_splits_all(data: Dataset, masks: Sequence) -> Callable:
    """Filter for stump thresholds that leave rows on both sides of every region."""

    def allowed(j, a):
        for mk in masks:
            col = data.x[np.asarray(mk, dtype=bool), j]
            if not (np.any(col >= a) and np.any(col < a)):
                return False
        return True

    return allowed


def best_shared_split(weights, data: Dataset, masks: Sequence, gamma_wl: float = DEFAULT_GAMMA_WL) -> Optional[EdgeReport]:
    """Half-split over the union of regions that cuts each of them in two."""
    union = np.zeros(len(data), dtype=bool)
    for mk in masks:
        union |= np.asarray(mk, dtype=bool)
    return best_stump_half(weights, data, union, gamma_wl, allowed=cut_splits_all(data, masks))


def as_cut(h: WeakHypothesis) -> HalfSpace:
    return HalfSpace(h.axis, h.threshold, h.polarity > 0)
