"""Partition-linear models and their five concrete architectures.

A partition-linear model is a list of steps ``(alpha_t, h_t, X_t)`` scored as

    H(x) = sum_t 1[x in X_t] * alpha_t * h_t(x)

Regions are small predicate objects evaluated row-wise on observation arrays.
Each architecture keeps its own structure (leaves, prediction nodes,
neighbourhoods, DAG nodes) next to the flat step list so that both views can
be cross-checked.
"""
from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .datasets import Dataset
from .losses import ProperLoss


def _as_2d(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return x[None, :] if x.ndim == 1 else x


# ---------------------------------------------------------------------------
# Regions


class Region:
    def contains(self, x) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True)
class Everywhere(Region):
    def contains(self, x):
        return np.ones(len(_as_2d(x)), dtype=bool)

    def __str__(self):
        return "X"


@dataclass(frozen=True)
class HalfSpace(Region):
    """``x[axis] >= threshold`` when ``upper`` else ``x[axis] < threshold``."""

    axis: int
    threshold: float
    upper: bool = True

    def contains(self, x):
        col = _as_2d(x)[:, self.axis]
        return col >= self.threshold if self.upper else col < self.threshold

    def __str__(self):
        return f"x{self.axis} {'>=' if self.upper else '<'} {self.threshold:g}"


@dataclass(frozen=True)
class Conjunction(Region):
    parts: tuple

    def contains(self, x):
        x = _as_2d(x)
        out = np.ones(len(x), dtype=bool)
        for p in self.parts:
            out &= p.contains(x)
        return out

    def __str__(self):
        return " & ".join(str(p) for p in self.parts) or "X"


@dataclass(frozen=True)
class Union(Region):
    parts: tuple

    def contains(self, x):
        x = _as_2d(x)
        out = np.zeros(len(x), dtype=bool)
        for p in self.parts:
            out |= p.contains(x)
        return out

    def __str__(self):
        return " | ".join(f"({p})" for p in self.parts)


def refine(region: Region, cut: HalfSpace) -> Region:
    if isinstance(region, Everywhere):
        return Conjunction((cut,))
    if isinstance(region, Conjunction):
        return Conjunction(region.parts + (cut,))
    return Conjunction((region, cut))


# ---------------------------------------------------------------------------
# Weak hypotheses

AXIS_DIRECTION = "axis_direction"
STUMP_HALF = "stump_half"
CONSTANT = "constant_at_region"


@dataclass(frozen=True)
class WeakHypothesis:
    """Base predictor returned by a weak learner.

    ``axis_direction``: h(x) = x[axis].
    ``stump_half``: h(x) = value * 1[x[axis] >= threshold] for polarity +1,
    value * 1[x[axis] < threshold] for polarity -1.
    ``constant_at_region``: h(x) = value.
    """

    kind: str
    axis: int = 0
    threshold: float = 0.0
    polarity: int = 1
    value: float = 1.0
    max_abs: float = 1.0

    def __call__(self, x) -> np.ndarray:
        x = _as_2d(x)
        if self.kind == AXIS_DIRECTION:
            return x[:, self.axis].astype(float)
        if self.kind == STUMP_HALF:
            col = x[:, self.axis]
            side = col >= self.threshold if self.polarity > 0 else col < self.threshold
            return np.where(side, float(self.value), 0.0)
        if self.kind == CONSTANT:
            return np.full(len(x), float(self.value))
        raise ValueError(f"unknown hypothesis kind {self.kind!r}")

    def cut(self) -> HalfSpace:
        return HalfSpace(self.axis, self.threshold, self.polarity > 0)


@dataclass(frozen=True)
class PlmStep:
    alpha: float
    hypothesis: WeakHypothesis
    region: Region

    def __post_init__(self):
        if not math.isfinite(self.alpha):
            raise ValueError("leveraging coefficient must be finite")

    def contribution(self, x) -> np.ndarray:
        x = _as_2d(x)
        return np.where(self.region.contains(x), self.alpha * self.hypothesis(x), 0.0)


class PartitionLinearModel:
    """Ordered list of leveraged steps; the empty model scores 0 everywhere."""

    kind = "plm"

    def __init__(self):
        self.steps: list[PlmStep] = []

    def add_step(self, step: PlmStep):
        self.steps.append(step)

    def step_scores(self, x) -> np.ndarray:
        x = _as_2d(x)
        out = np.zeros(len(x))
        for s in self.steps:
            out += s.contribution(x)
        return out

    def score(self, x) -> np.ndarray:
        return self.step_scores(x)

    def __len__(self):
        return len(self.steps)


def score(model: PartitionLinearModel, x):
    """Real-valued prediction; a scalar for a single observation."""
    res = model.score(x)
    return float(res[0]) if np.ndim(x) == 1 else res


def predict_label(model: PartitionLinearModel, x):
    """Class 1 iff score >= 0 (an exact zero score goes to class 1)."""
    s = np.asarray(model.score(x))
    lab = (s >= 0).astype(int)
    return int(lab[0]) if np.ndim(x) == 1 else lab


# ---------------------------------------------------------------------------
# Linear separators


class LinearSeparator(PartitionLinearModel):
    kind = "ls"

    def __init__(self, n_features: int = 2):
        super().__init__()
        self.coef = np.zeros(n_features)

    def add_step(self, step: PlmStep):
        h = step.hypothesis
        if h.kind != AXIS_DIRECTION or not isinstance(step.region, Everywhere):
            raise ValueError("linear separators only take axis directions on the whole domain")
        super().add_step(step)
        self.coef[h.axis] += step.alpha

    def score(self, x):
        return _as_2d(x) @ self.coef


# ---------------------------------------------------------------------------
# Decision trees


@dataclass
class DtLeaf:
    region: Region
    value: float = 0.0
    depth: int = 0


@dataclass
class DtSplit:
    leaf_region: Region
    cut: HalfSpace


class DecisionTree(PartitionLinearModel):
    """Tree whose leaves carry the cumulative score of their root path."""

    kind = "dt"

    def __init__(self):
        super().__init__()
        self.leaves: list[DtLeaf] = [DtLeaf(Everywhere())]
        self.splits: list[DtSplit] = []

    def leaf_index(self, x) -> np.ndarray:
        x = _as_2d(x)
        idx = np.full(len(x), -1)
        for k, leaf in enumerate(self.leaves):
            idx[leaf.region.contains(x)] = k
        return idx

    def score(self, x):
        idx = self.leaf_index(x)
        values = np.array([leaf.value for leaf in self.leaves])
        return values[idx]

    def split_leaf(self, k: int, cut: HalfSpace) -> tuple[int, int]:
        """Replace leaf ``k`` by its two children; returns (upper, lower) indices."""
        leaf = self.leaves[k]
        lo = HalfSpace(cut.axis, cut.threshold, upper=False)
        hi = HalfSpace(cut.axis, cut.threshold, upper=True)
        self.splits.append(DtSplit(leaf.region, hi))
        upper = DtLeaf(refine(leaf.region, hi), leaf.value, leaf.depth + 1)
        lower = DtLeaf(refine(leaf.region, lo), leaf.value, leaf.depth + 1)
        self.leaves[k] = upper
        self.leaves.append(lower)
        return k, len(self.leaves) - 1


@dataclass
class LeafStats:
    m_leaf: int
    m_pos: int
    score: float

    @property
    def p_plus(self) -> float:
        return self.m_pos / self.m_leaf


def dt_leaf_stats(tree: DecisionTree, data: Dataset) -> list[LeafStats]:
    idx = tree.leaf_index(data.x)
    out = []
    for k, leaf in enumerate(tree.leaves):
        sel = idx == k
        m = int(data.multiplicity[sel].sum())
        mp = int(data.multiplicity[sel & (data.y == 1)].sum())
        out.append(LeafStats(m, mp, leaf.value))
    return out


def dt_leaf_closed_form(loss: ProperLoss, p_plus: float, eps: float = 1e-12) -> float:
    """Leaf score after full leveraging, ``(-bayes_risk)'(p_plus)``.

    Pure leaves of unbounded links map to the loss' finite saturation score.
    """
    if not 0.0 <= p_plus <= 1.0:
        raise ValueError("p_plus must lie in [0, 1]")
    p = min(max(p_plus, eps), 1.0 - eps)
    return float(loss.fwd_link(p))


def dt_population_surrogate_identity(loss: ProperLoss, tree: DecisionTree, data: Dataset) -> float:
    """Leaf-weighted Bayes risk ``sum_l (m_l/m) Lbar(p+_l)`` over non-empty leaves."""
    stats = [s for s in dt_leaf_stats(tree, data) if s.m_leaf > 0]
    m = sum(s.m_leaf for s in stats)
    return float(sum(s.m_leaf / m * loss.bayes_risk(s.p_plus) for s in stats))


# ---------------------------------------------------------------------------
# Alternating decision trees


@dataclass
class PredictionNode:
    region: Region
    value: float = 0.0
    n_stumps: int = 0
    parent: Optional[int] = None


class AlternatingDecisionTree(PartitionLinearModel):
    """Root prediction plus stumps hanging off prediction nodes.

    ``outdegree`` bounds the number of stumps under any prediction node,
    the root included.  With ``outdegree=1`` the model is a decision tree.
    """

    kind = "adt"

    def __init__(self, outdegree: int = 2):
        super().__init__()
        if outdegree < 1:
            raise ValueError("outdegree must be >= 1")
        self.outdegree = outdegree
        self.nodes: list[PredictionNode] = [PredictionNode(Everywhere())]

    def open_nodes(self) -> list[int]:
        return [k for k, n in enumerate(self.nodes) if n.n_stumps < self.outdegree]

    def add_stump(self, k: int, cut: HalfSpace) -> tuple[int, int]:
        node = self.nodes[k]
        if node.n_stumps >= self.outdegree:
            raise ValueError(f"prediction node {k} has no outdegree budget left")
        node.n_stumps += 1
        hi = HalfSpace(cut.axis, cut.threshold, True)
        lo = HalfSpace(cut.axis, cut.threshold, False)
        self.nodes.append(PredictionNode(refine(node.region, hi), parent=k))
        self.nodes.append(PredictionNode(refine(node.region, lo), parent=k))
        return len(self.nodes) - 2, len(self.nodes) - 1

    def score(self, x):
        x = _as_2d(x)
        out = np.zeros(len(x))
        for n in self.nodes:
            out += np.where(n.region.contains(x), n.value, 0.0)
        return out


# ---------------------------------------------------------------------------
# Leveraged nearest neighbours


@dataclass
class KnnState:
    """Neighbour structure over the distinct rows of a training set."""

    data: Dataset
    k: int
    neighbors: list  # neighbors[r] = array of training rows in N_K(row r)
    reciprocal: list  # reciprocal[i] = array of rows r with i in N_K(r)
    k_rec: int

    def neighbor_mask(self, x) -> np.ndarray:
        """Boolean (len(x), n_rows) matrix: row j is among the K-NN of query q."""
        x = _as_2d(x)
        d = np.sqrt(((x[:, None, :] - self.data.x[None, :, :]) ** 2).sum(-1))
        mult = self.data.multiplicity
        out = np.zeros(d.shape, dtype=bool)
        for q in range(len(x)):
            order = np.argsort(d[q], kind="stable")
            cum = np.cumsum(mult[order])
            kth = d[q, order[np.searchsorted(cum, min(self.k, cum[-1]))]]
            # all ties at the K-th distance vote
            out[q] = d[q] <= kth + 1e-12 * max(1.0, kth)
        return out


def knn_build_index(data: Dataset, k: int) -> KnnState:
    """K-NN lists (Euclidean, ties included, copies counted) and reciprocal neighbourhoods."""
    if k < 1:
        raise ValueError("K must be >= 1")
    if len(data) == 0:
        raise ValueError("empty dataset")
    state = KnnState(data, k, [], [], 0)
    mask = state.neighbor_mask(data.x)
    state.neighbors = [np.flatnonzero(mask[r]) for r in range(len(data))]
    state.reciprocal = [np.flatnonzero(mask[:, i]) for i in range(len(data))]
    state.k_rec = int(min(data.multiplicity[rec].sum() for rec in state.reciprocal))
    return state


@dataclass(frozen=True)
class KnnRegion(Region):
    """Observations having training row ``center`` among their K nearest neighbours."""

    state: KnnState = field(compare=False, repr=False)
    center: int = 0

    def contains(self, x):
        return self.state.neighbor_mask(x)[:, self.center]

    def __str__(self):
        return f"rec({self.center})"


class LeveragedNearestNeighbors(PartitionLinearModel):
    kind = "knn"

    def __init__(self, state: KnnState):
        super().__init__()
        self.state = state
        self.leverage = np.zeros(len(state.data))  # accumulated constant per training row

    def add_step(self, step: PlmStep):
        if not isinstance(step.region, KnnRegion):
            raise ValueError("nearest-neighbour steps live on reciprocal neighbourhoods")
        super().add_step(step)
        self.leverage[step.region.center] += step.alpha * step.hypothesis.value

    def score(self, x):
        return self.state.neighbor_mask(x).astype(float) @ self.leverage


# ---------------------------------------------------------------------------
# Labeled branching programs


@dataclass
class LbpNode:
    region: Region
    value: float = 0.0
    children: tuple = ()  # (upper, lower) node ids once split
    cut: Optional[HalfSpace] = None

    @property
    def is_leaf(self) -> bool:
        return not self.children


class LabeledBranchingProgram(PartitionLinearModel):
    """DAG of valued nodes; an observation sums the values along its root path."""

    kind = "lbp"

    def __init__(self, beta: float = 0.5):
        super().__init__()
        self.beta = beta
        self.nodes: list[LbpNode] = [LbpNode(Everywhere())]

    def leaves(self) -> list[int]:
        return [k for k, n in enumerate(self.nodes) if n.is_leaf]

    def path_score(self, x) -> np.ndarray:
        """Walk the DAG from the root (independent of the step list)."""
        x = _as_2d(x)
        out = np.zeros(len(x))
        for q in range(len(x)):
            k = 0
            total = self.nodes[0].value
            while not self.nodes[k].is_leaf:
                node = self.nodes[k]
                up, lo = node.children
                k = up if node.cut.contains(x[q : q + 1])[0] else lo
                total += self.nodes[k].value
            out[q] = total
        return out

    def score(self, x):
        return self.path_score(x)

    def region_of(self, leaf_ids: Sequence[int]) -> Region:
        if len(leaf_ids) == 1:
            return self.nodes[leaf_ids[0]].region
        return Union(tuple(self.nodes[k].region for k in leaf_ids))


def cuts_every_leaf(state: LabeledBranchingProgram, leaf_ids, cut: HalfSpace, data: Dataset) -> bool:
    for k in leaf_ids:
        inside = state.nodes[k].region.contains(data.x)
        side = cut.contains(data.x)
        if not (np.any(inside & side) and np.any(inside & ~side)):
            return False
    return True


def lbp_split_merge(
    state: LabeledBranchingProgram,
    leaf_ids: Sequence[int],
    cut: HalfSpace,
    data: Dataset,
) -> tuple[LabeledBranchingProgram, int, int]:
    """Split every listed leaf on ``cut`` and merge the stump leaves by outcome.

    Returns a new program together with the ids of the merged upper and
    lower leaves.  The split must separate the training rows of every
    participating leaf, otherwise a ``ValueError`` is raised.
    """
    leaf_ids = list(leaf_ids)
    if not leaf_ids:
        raise ValueError("split-merge needs at least one leaf")
    for k in leaf_ids:
        if not state.nodes[k].is_leaf:
            raise ValueError(f"node {k} is not a leaf")
    if not cuts_every_leaf(state, leaf_ids, cut, data):
        raise ValueError(f"split {cut} does not cut every leaf of {leaf_ids} in two")
    new = copy.deepcopy(state)
    hi = HalfSpace(cut.axis, cut.threshold, True)
    lo = HalfSpace(cut.axis, cut.threshold, False)
    up_region = _merge([refine(new.nodes[k].region, hi) for k in leaf_ids])
    lo_region = _merge([refine(new.nodes[k].region, lo) for k in leaf_ids])
    new.nodes.append(LbpNode(up_region))
    new.nodes.append(LbpNode(lo_region))
    up_id, lo_id = len(new.nodes) - 2, len(new.nodes) - 1
    for k in leaf_ids:
        new.nodes[k].children = (up_id, lo_id)
        new.nodes[k].cut = hi
    return new, up_id, lo_id


def _merge(regions) -> Region:
    return regions[0] if len(regions) == 1 else Union(tuple(regions))


MODEL_NAMES = ("ls", "dt", "adt", "knn", "lbp")
