"""Top-down boosting of partition-linear models with a strictly proper loss."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import weak_learners as wl
from .datasets import Dataset
from .losses import ConfigError, ProperLoss, population_surrogate, weight
from .models import (
    CONSTANT,
    AlternatingDecisionTree,
    DecisionTree,
    Everywhere,
    KnnRegion,
    LabeledBranchingProgram,
    LeveragedNearestNeighbors,
    LinearSeparator,
    MODEL_NAMES,
    PartitionLinearModel,
    PlmStep,
    Region,
    WeakHypothesis,
    knn_build_index,
    lbp_split_merge,
)

log = logging.getLogger(__name__)

TOL_ALPHA = 1e-12
TOL_RESID = 1e-10
ALPHA_CAP = 1e6


class LeveragingError(ArithmeticError):
    """The leveraging equation has no finite root."""


class PerfectHypothesisError(LeveragingError):
    """``h`` (or ``-h``) classifies its whole region perfectly."""

    def __init__(self, msg, direction):
        super().__init__(msg)
        self.direction = direction


class SaturationError(LeveragingError):
    pass


@dataclass
class LeveragingSolve:
    alpha: float
    residual: float
    bracket: tuple
    iterations: int


def leveraging_residual(loss: ProperLoss, scores, h, labels, multiplicity, alpha):
    """``sum_i m_i w(x_i, H + alpha h) y*_i h(x_i)`` over the given rows."""
    p = loss.inv_link(np.asarray(scores) + alpha * np.asarray(h))
    return float(np.sum(multiplicity * (labels - p) * h))


def solve_alpha_arrays(
    loss: ProperLoss,
    scores,
    h,
    labels,
    multiplicity,
    tol_alpha: float = TOL_ALPHA,
    tol_resid: float = TOL_RESID,
) -> LeveragingSolve:
    """Root of the leveraging equation by bracketing bisection.

    The residual is non-increasing in alpha; the bracket starts at [-1, 1]
    and doubles until it changes sign, up to ``ALPHA_CAP``.
    """
    scores = np.asarray(scores, dtype=float)
    h = np.asarray(h, dtype=float)
    y = np.asarray(labels, dtype=float)
    m = np.asarray(multiplicity, dtype=float)
    keep = h != 0
    scores, h, y, m = scores[keep], h[keep], y[keep], m[keep]
    if h.size == 0:
        raise LeveragingError("hypothesis vanishes on the region")
    target = np.sum(m * y * h)
    j_plus = np.sum(m * np.clip(h, 0, None))
    j_minus = np.sum(m * np.clip(h, None, 0))
    scale = np.sum(m * np.abs(h))
    if target >= j_plus - 1e-15 * scale:
        raise PerfectHypothesisError("h classifies the region perfectly", +1)
    if target <= j_minus + 1e-15 * scale:
        raise PerfectHypothesisError("-h classifies the region perfectly", -1)

    def f(a):
        return float(np.sum(m * (y - loss.inv_link(scores + a * h)) * h))

    lo, hi = -1.0, 1.0
    flo, fhi = f(lo), f(hi)
    while fhi > 0:
        lo, flo = hi, fhi
        hi *= 2.0
        if hi > ALPHA_CAP:
            raise SaturationError(f"no sign change of the residual below alpha={ALPHA_CAP:g}")
        fhi = f(hi)
    while flo < 0:
        hi, fhi = lo, flo
        lo *= 2.0
        if lo < -ALPHA_CAP:
            raise SaturationError(f"no sign change of the residual above alpha={-ALPHA_CAP:g}")
        flo = f(lo)
    bracket = (lo, hi)
    it = 0
    mid, fmid = lo, flo
    if flo == 0:
        mid, fmid = lo, flo
    elif fhi == 0:
        mid, fmid = hi, fhi
    else:
        while it < 400:
            it += 1
            mid = 0.5 * (lo + hi)
            if mid <= lo or mid >= hi:
                break
            fmid = f(mid)
            if fmid == 0:
                break
            if fmid > 0:
                lo = mid
            else:
                hi = mid
            if hi - lo <= tol_alpha * max(1.0, abs(mid)) and abs(fmid) <= tol_resid:
                break
        cands = [(abs(f(x)), x) for x in (lo, mid, hi)]
        _, mid = min(cands)
        fmid = f(mid)
    return LeveragingSolve(float(mid), fmid, bracket, it)


def saturating_alpha(loss: ProperLoss, scores, h, labels, direction: int) -> float:
    """Smallest |alpha| pushing every row with ``h != 0`` to the saturation score."""
    scores = np.asarray(scores, dtype=float)
    h = np.asarray(h, dtype=float)
    ys = 2.0 * np.asarray(labels, dtype=float) - 1.0
    keep = h != 0
    zsat = np.where(ys[keep] > 0, loss.saturation_score(), float(loss.fwd_link(1e-12)))
    need = (zsat - scores[keep]) / h[keep]
    return float(np.max(need) if direction > 0 else np.min(need))


def solve_alpha(loss: ProperLoss, model: PartitionLinearModel, hypothesis: WeakHypothesis,
                region: Region, dataset: Dataset) -> LeveragingSolve:
    """Leveraging coefficient for ``hypothesis`` on ``region`` given the current model."""
    mask = region.contains(dataset.x)
    return solve_alpha_arrays(
        loss, model.score(dataset.x)[mask], hypothesis(dataset.x)[mask],
        dataset.y[mask], dataset.multiplicity[mask],
    )


@dataclass
class StepRecord:
    t: int
    weak_call: int
    kind: str
    region: np.ndarray
    alpha: float
    residual: float
    edge: float
    p_t: float
    mean_weight: float
    surrogate_before: float
    surrogate_after: float
    saturated: bool = False


@dataclass
class BoostState:
    loss: ProperLoss
    data: Dataset
    model: PartitionLinearModel
    weights: np.ndarray
    scores: np.ndarray
    gamma_wl: float
    iteration: int = 0
    weak_calls: int = 0
    surrogate_history: list = field(default_factory=list)
    steps: list = field(default_factory=list)
    stop_reason: Optional[str] = None

    @property
    def final_surrogate(self) -> float:
        return self.surrogate_history[-1]


def init_weights(loss: ProperLoss, dataset: Dataset) -> np.ndarray:
    return np.asarray(weight(loss, dataset.y, np.zeros(len(dataset))), dtype=float)


def make_model(model: str, data: Dataset, adt_outdegree: int = 2, knn_k: int = 1, lbp_beta: float = 0.5):
    if model == "ls":
        return LinearSeparator(data.n_features)
    if model == "dt":
        return DecisionTree()
    if model == "adt":
        return AlternatingDecisionTree(adt_outdegree)
    if model == "knn":
        return LeveragedNearestNeighbors(knn_build_index(data, knn_k))
    if model == "lbp":
        return LabeledBranchingProgram(lbp_beta)
    raise ConfigError(f"unknown model {model!r}; expected one of {MODEL_NAMES}")


class _Runner:
    def __init__(self, state: BoostState, max_iters: int, tol_alpha: float, tol_resid: float):
        self.s = state
        self.max_iters = max_iters
        self.tol_alpha = tol_alpha
        self.tol_resid = tol_resid

    # one leveraging step on rows ``mask``; returns alpha * h on all rows
    def leverage(self, h: WeakHypothesis, region: Region, mask, edge: float, kind: str) -> float:
        s = self.s
        data = s.data
        hv = np.where(mask, h(data.x), 0.0)
        saturated = False
        try:
            sol = solve_alpha_arrays(
                s.loss, s.scores[mask], hv[mask], data.y[mask], data.multiplicity[mask],
                self.tol_alpha, self.tol_resid,
            )
            alpha = sol.alpha
        except PerfectHypothesisError as err:
            alpha = saturating_alpha(s.loss, s.scores[mask], hv[mask], data.y[mask], err.direction)
            saturated = True
        before = s.surrogate_history[-1]
        m = data.multiplicity.astype(float)
        p_t = float(m[mask].sum() / m.sum())
        mean_w = float(np.sum(m[mask] * s.weights[mask]) / m[mask].sum())
        s.model.add_step(PlmStep(alpha, h, region))
        s.scores = s.scores + alpha * hv
        s.weights = np.asarray(weight(s.loss, data.y, s.scores), dtype=float)
        after = population_surrogate(s.loss, s.scores, data.y, data.multiplicity)
        s.surrogate_history.append(after)
        resid = leveraging_residual(s.loss, s.scores[mask], hv[mask], data.y[mask], m[mask], 0.0)
        s.iteration += 1
        s.steps.append(StepRecord(
            s.iteration, s.weak_calls, kind, mask.copy(), alpha, resid, edge, p_t, mean_w,
            before, after, saturated,
        ))
        return alpha

    def done(self) -> bool:
        return self.s.iteration >= self.max_iters

    def run(self):
        kind = self.s.model.kind
        step = getattr(self, f"_step_{kind}")
        while not self.done():
            if not step():
                self.s.stop_reason = "exhausted"
                return self.s
        self.s.stop_reason = "max_iters"
        return self.s

    def _mask(self, region: Region):
        return region.contains(self.s.data.x)

    def _step_ls(self) -> bool:
        s = self.s
        rep = wl.best_axis_hypothesis(s.weights, s.data, s.gamma_wl)
        if rep is None:
            return False
        s.weak_calls += 1
        region = Everywhere()
        self.leverage(rep.hypothesis, region, self._mask(region), rep.edge, "axis")
        return True

    def _split_pair(self, h: WeakHypothesis, region: Region, mask, edge: float):
        """Leverage a half-split then its companion on the same region."""
        a1 = self.leverage(h, region, mask, edge, "half")
        comp = wl.companion_hypothesis(h)
        try:
            e2 = wl.normalized_edge(self.s.weights, self.s.data.y, comp(self.s.data.x),
                                    self.s.data.multiplicity, mask)
        except wl.ZeroWeightError:
            e2 = 0.0
        a2 = self.leverage(comp, region, mask, e2, "companion")
        return a1, a2

    def _step_dt(self) -> bool:
        s = self.s
        tree: DecisionTree = s.model
        masks = [self._mask(leaf.region) for leaf in tree.leaves]
        for k in wl.rank_regions_by_j(s.weights, s.data.multiplicity, masks):
            rep = wl.best_region_hypothesis(s.weights, s.data, masks[k], s.gamma_wl)
            if rep is None:
                continue
            s.weak_calls += 1
            leaf = tree.leaves[k]
            if rep.hypothesis.kind == CONSTANT:
                a = self.leverage(rep.hypothesis, leaf.region, masks[k], rep.edge, "constant")
                leaf.value += a * rep.hypothesis.value
            else:
                region = leaf.region
                a1, a2 = self._split_pair(rep.hypothesis, region, masks[k], rep.edge)
                up, lo = tree.split_leaf(k, rep.hypothesis.cut())
                tree.leaves[up].value += a1 * rep.hypothesis.value
                tree.leaves[lo].value -= a2 * rep.hypothesis.value
            return True
        return False

    def _step_adt(self) -> bool:
        s = self.s
        adt: AlternatingDecisionTree = s.model
        open_ids = adt.open_nodes()
        masks = [self._mask(adt.nodes[k].region) for k in open_ids]
        for r in wl.rank_regions_by_j(s.weights, s.data.multiplicity, masks):
            k = open_ids[r]
            node = adt.nodes[k]
            rep = wl.best_region_hypothesis(s.weights, s.data, masks[r], s.gamma_wl)
            if rep is None:
                continue
            s.weak_calls += 1
            if rep.hypothesis.kind == CONSTANT:
                a = self.leverage(rep.hypothesis, node.region, masks[r], rep.edge, "constant")
                node.value += a * rep.hypothesis.value
            else:
                a1, a2 = self._split_pair(rep.hypothesis, node.region, masks[r], rep.edge)
                up, lo = adt.add_stump(k, rep.hypothesis.cut())
                adt.nodes[up].value = a1 * rep.hypothesis.value
                adt.nodes[lo].value = -a2 * rep.hypothesis.value
            return True
        return False

    def _step_knn(self) -> bool:
        s = self.s
        knn: LeveragedNearestNeighbors = s.model
        rep = wl.knn_best_leverage_point(s.weights, s.data, knn.state, s.gamma_wl)
        if rep is None:
            return False
        s.weak_calls += 1
        region = KnnRegion(knn.state, rep.region_index)
        mask = np.zeros(len(s.data), dtype=bool)
        mask[knn.state.reciprocal[rep.region_index]] = True
        self.leverage(rep.hypothesis, region, mask, rep.edge, "neighbor")
        return True

    def _merge_sets(self, leaves, masks):
        """Candidate leaf sets, largest first: a J-ranked prefix reaching u_t >= beta, then shorter ones."""
        s = self.s
        m = s.data.multiplicity
        order = wl.rank_regions_by_j(s.weights, m, masks)
        j_all = wl.region_j(s.weights, m, np.ones(len(s.data), dtype=bool))
        best_k, best_j = 1, -1.0
        union = np.zeros(len(s.data), dtype=bool)
        for k in range(1, len(order) + 1):
            union |= masks[order[k - 1]]
            ju = wl.region_j(s.weights, m, union)
            if ju > best_j + 1e-15:
                best_k, best_j = k, ju
            if j_all > 0 and ju >= s.model.beta * j_all:
                best_k = k
                break
        sets = [order[:k] for k in range(best_k, 1, -1)]
        sets += [[r] for r in order]
        return sets

    def _step_lbp(self) -> bool:
        s = self.s
        lbp: LabeledBranchingProgram = s.model
        leaves = lbp.leaves()
        masks = [self._mask(lbp.nodes[k].region) for k in leaves]
        for pos in self._merge_sets(leaves, masks):
            ids = [leaves[r] for r in pos]
            sub_masks = [masks[r] for r in pos]
            if len(ids) == 1:
                rep = wl.best_region_hypothesis(s.weights, s.data, sub_masks[0], s.gamma_wl)
            else:
                rep = wl.best_shared_split(s.weights, s.data, sub_masks, s.gamma_wl)
            if rep is None:
                continue
            if rep.hypothesis.kind != CONSTANT and not _cuts_all(s.data, sub_masks, rep.hypothesis):
                continue
            s.weak_calls += 1
            region = lbp.region_of(ids)
            union = np.logical_or.reduce(sub_masks)
            if rep.hypothesis.kind == CONSTANT:
                a = self.leverage(rep.hypothesis, region, union, rep.edge, "constant")
                lbp.nodes[ids[0]].value += a * rep.hypothesis.value
            else:
                a1, a2 = self._split_pair(rep.hypothesis, region, union, rep.edge)
                new, up, lo = lbp_split_merge(lbp, ids, rep.hypothesis.cut(), s.data)
                new.steps = lbp.steps
                new.nodes[up].value = a1 * rep.hypothesis.value
                new.nodes[lo].value = -a2 * rep.hypothesis.value
                s.model = new
            return True
        return False


def _cuts_all(data: Dataset, masks, h: WeakHypothesis) -> bool:
    return wl.cut_splits_all(data, masks)(h.axis, h.threshold)


def run(
    loss: ProperLoss,
    model_class: str,
    dataset: Dataset,
    max_iters: int = 64,
    gamma_wl: float = wl.DEFAULT_GAMMA_WL,
    tol_alpha: float = TOL_ALPHA,
    tol_resid: float = TOL_RESID,
    **model_kw,
) -> BoostState:
    """Boost for at most ``max_iters`` leveraging steps.

    A decision-tree split leverages the half-split and its companion as two
    steps (one weak-learner call); the pair is always completed, so a run may
    end one step past ``max_iters``.  ``weak_calls`` counts weak-learner calls
    that returned a hypothesis.
    """
    if max_iters < 1:
        raise ConfigError("max_iters must be >= 1")
    model = make_model(model_class, dataset, **model_kw)
    w0 = init_weights(loss, dataset)
    h0 = np.zeros(len(dataset))
    state = BoostState(loss, dataset, model, w0, h0, gamma_wl)
    state.surrogate_history.append(population_surrogate(loss, h0, dataset.y, dataset.multiplicity))
    _Runner(state, max_iters, tol_alpha, tol_resid).run()
    log.debug("run %s/%s: %d steps, %d weak calls, stop=%s", loss.name, model_class,
              state.iteration, state.weak_calls, state.stop_reason)
    return state


@dataclass
class DecreaseReport:
    monotone: bool
    worst_increase: float
    bound_holds: bool
    worst_slack: float
    violations: list

    @property
    def passed(self) -> bool:
        return self.monotone and self.bound_holds


def surrogate_decrease_check(state: BoostState, tol: float = 1e-12, use_measured_edge: bool = False) -> DecreaseReport:
    """Surrogate is non-increasing and each step drops by at least ``p_t kappa wbar^2 gamma^2 / 2``.

    ``gamma`` is ``gamma_wl`` or, with ``use_measured_edge``, the step's own edge.
    Steps whose edge is below ``gamma_wl`` (companions can be) or that
    saturate a perfect hypothesis are only checked for monotonicity.
    """
    hist = np.asarray(state.surrogate_history)
    incr = np.diff(hist) if len(hist) > 1 else np.zeros(0)
    worst = float(incr.max()) if incr.size else 0.0
    violations = [int(t) + 1 for t in np.flatnonzero(incr > tol)]
    kappa = state.loss.kappa
    slack_min = np.inf
    bound_ok = True
    for rec in state.steps:
        if rec.saturated or abs(rec.edge) < state.gamma_wl:
            continue
        g = abs(rec.edge) if use_measured_edge else state.gamma_wl
        need = 0.5 * rec.p_t * kappa * rec.mean_weight**2 * g**2
        slack = (rec.surrogate_before - rec.surrogate_after) - need
        slack_min = min(slack_min, slack)
        if slack < -tol:
            bound_ok = False
            violations.append(rec.t)
    return DecreaseReport(not any(incr > tol), worst, bound_ok, float(slack_min), sorted(set(violations)))


def margin_distribution(state: BoostState, theta: float, data: Optional[Dataset] = None) -> float:
    """``Pr_i[y*_i H(x_i) <= theta]`` with multiplicities (training sample by default)."""
    data = state.data if data is None else data
    margins = data.y_signed * np.asarray(state.model.score(data.x))
    m = data.multiplicity
    return float(m[margins <= theta].sum() / m.sum())
