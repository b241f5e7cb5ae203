"""Sweeps over the noisy four-point domain, the ideal linear minimiser and rate bounds."""
from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, fields
from typing import Iterable, Optional, Sequence

import numpy as np

from . import booster
from .datasets import Dataset, LsDatasetSpec, bayes_posterior, make_clean, make_noisy
from .losses import ConfigError, ProperLoss, make_loss, population_surrogate

DEFAULT_GAMMAS = tuple(np.geomspace(1e-3, 0.5, 40))
DEFAULT_ETAS = (0.1, 0.2, 0.25, 1.0 / 3.0)

CSV_HEADER = (
    "loss", "model", "gamma", "eta", "theta", "accuracy_clean", "expected_posterior",
    "bayes_posterior", "weak_calls", "final_surrogate", "stop_reason",
)


class NumericFailure(ArithmeticError):
    pass


@dataclass(frozen=True)
class SweepRecord:
    loss: str
    model: str
    gamma: float
    eta: float
    theta: float
    accuracy_clean: float
    expected_posterior: float
    bayes_posterior: float
    weak_calls: int
    final_surrogate: float
    stop_reason: str


@dataclass
class SweepConfig:
    max_iters: int = 64
    gamma_wl: float = 1e-3
    big_k: float = 5.0
    adt_outdegree: int = 2
    knn_k: int = 1
    lbp_beta: float = 0.5
    tol_alpha: float = booster.TOL_ALPHA
    tol_resid: float = booster.TOL_RESID

    def model_kw(self, model: str) -> dict:
        return {
            "adt": {"adt_outdegree": self.adt_outdegree},
            "knn": {"knn_k": self.knn_k},
            "lbp": {"lbp_beta": self.lbp_beta},
        }.get(model, {})


def clean_accuracy(scores, data: Dataset) -> float:
    """Weighted 0/1 accuracy, score 0 predicting class 1."""
    pred = (np.asarray(scores) >= 0).astype(int)
    return float(data.multiplicity[pred == data.y].sum() / data.total)


def expected_posterior(loss: ProperLoss, scores, data: Dataset) -> float:
    p = loss.inv_link(np.asarray(scores, dtype=float))
    return float(np.sum(data.multiplicity * p) / data.total)


def run_cell(loss_name: str, model: str, spec: LsDatasetSpec, config: SweepConfig = SweepConfig()):
    loss = make_loss(loss_name)
    noisy, clean = make_noisy(spec), make_clean(spec)
    state = booster.run(loss, model, noisy, max_iters=config.max_iters, gamma_wl=config.gamma_wl,
                        tol_alpha=config.tol_alpha, tol_resid=config.tol_resid, **config.model_kw(model))
    s = state.model.score(clean.x)
    rec = SweepRecord(
        loss=loss_name, model=model, gamma=float(spec.gamma), eta=spec.eta, theta=float(spec.theta),
        accuracy_clean=clean_accuracy(s, clean),
        expected_posterior=expected_posterior(loss, s, clean),
        bayes_posterior=bayes_posterior(spec),
        weak_calls=state.weak_calls,
        final_surrogate=state.final_surrogate,
        stop_reason=state.stop_reason,
    )
    return rec, state


def run_sweep(
    losses: Sequence[str],
    models: Sequence[str],
    gammas: Sequence[float],
    etas: Sequence[float],
    theta: float = 0.0,
    config: Optional[SweepConfig] = None,
) -> list[SweepRecord]:
    """One record per (loss, model, gamma, eta), sorted by (loss, model, eta, gamma)."""
    if not (losses and models and len(gammas) and len(etas)):
        raise ConfigError("sweep grids must be non-empty")
    config = config or SweepConfig()
    records = []
    for ln in losses:
        for mdl in models:
            for eta in etas:
                for g in gammas:
                    spec = LsDatasetSpec.from_eta(float(g), float(eta), big_k=config.big_k, theta=theta)
                    records.append(run_cell(ln, mdl, spec, config)[0])
    records.sort(key=lambda r: (r.loss, r.model, r.eta, r.gamma))
    return records


# ---------------------------------------------------------------------------
# Ideal linear separator


@dataclass
class IdealResult:
    alpha: np.ndarray
    clean_accuracy: float
    risk: float
    grad_norm: float
    iterations: int


def _risk_and_grad(loss: ProperLoss, coef, data: Dataset):
    h = data.x @ coef
    m = data.multiplicity.astype(float)
    risk = population_surrogate(loss, h, data.y, m)
    g = ((loss.inv_link(h) - data.y) * m) @ data.x / m.sum()
    return risk, g


def _link_slope(loss: ProperLoss, h):
    step = 1e-6 * np.maximum(1.0, np.abs(h))
    return (loss.inv_link(h + step) - loss.inv_link(h - step)) / (2 * step)


def ideal_linear_minimizer(
    loss: ProperLoss,
    noisy: Dataset,
    clean: Optional[Dataset] = None,
    tol: float = 1e-10,
    max_steps: int = 1_000_000,
) -> IdealResult:
    """Minimise the population surrogate over linear scores ``h(x) = <alpha, x>``.

    Damped Newton from 0: the direction solves ``H d = -g`` with the Hessian
    ``E[inv_link'(h) x x^T]`` (steepest descent when that fails), and the step
    halves from 1 until the risk decreases sufficiently.  Once the risk is flat
    to rounding, a step is accepted if it shrinks the gradient instead.
    """
    coef = np.zeros(noisy.n_features)
    m = noisy.multiplicity.astype(float)
    risk, g = _risk_and_grad(loss, coef, noisy)
    it = 0
    while np.linalg.norm(g) >= tol:
        if it >= max_steps:
            raise NumericFailure(f"no convergence after {max_steps} steps (|grad|={np.linalg.norm(g):.3g})")
        it += 1
        h = noisy.x @ coef
        hess = (noisy.x * (m * _link_slope(loss, h))[:, None]).T @ noisy.x / m.sum()
        try:
            d = -np.linalg.solve(hess, g)
            if not np.all(np.isfinite(d)) or d @ g >= 0:
                raise np.linalg.LinAlgError
        except np.linalg.LinAlgError:
            d = -g
        t, accepted = 1.0, False
        while t > 1e-30:
            cand = coef + t * d
            r_new, g_new = _risk_and_grad(loss, cand, noisy)
            if r_new <= risk + 1e-4 * t * float(d @ g):
                accepted = True
                break
            if abs(r_new - risk) <= 1e-14 * max(1.0, abs(risk)) and np.linalg.norm(g_new) < np.linalg.norm(g):
                accepted = True
                break
            t *= 0.5
        if not accepted:
            raise NumericFailure(f"line search failed at |grad|={np.linalg.norm(g):.3g}")
        coef, risk, g = cand, r_new, g_new
    clean = clean if clean is not None else noisy
    acc = clean_accuracy(clean.x @ coef, clean)
    return IdealResult(coef, acc, risk, float(np.linalg.norm(g)), it)


# ---------------------------------------------------------------------------
# Boosting rates


def min_weight(loss: ProperLoss, theta: float) -> float:
    return float(min(1.0 - loss.inv_link(theta), loss.inv_link(-theta)))


def b_ls(loss: ProperLoss, epsilon: float, theta: float, gamma_wl: float) -> float:
    """Iterations for linear separators: ``2 (phi-risk(H_0) - C) / (kappa eps^2 w(theta)^2 gamma^2)``."""
    if not (0 < epsilon <= 1 and 0 < gamma_wl <= 1):
        raise ValueError("epsilon and gamma_wl must lie in (0, 1]")
    if theta < 0:
        raise ValueError("theta must be >= 0")
    w = min_weight(loss, theta)
    if w <= 0:
        raise ValueError(f"w(theta) vanishes at theta={theta}: outside the link's range")
    risk0 = float(loss.surrogate(0.0))
    return 2.0 * (risk0 - loss.floor_c) / (loss.kappa * epsilon**2 * w**2 * gamma_wl**2)


def _exp(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


def compute_rate_bound(
    model_class: str,
    loss: ProperLoss,
    epsilon: float,
    theta: float,
    gamma_wl: float,
    adt_outdegree: int = 2,
    m: int = 1,
    k_rec: int = 1,
    c: float = 0.5,
) -> float:
    """Number of iterations guaranteeing ``Pr[y* H <= theta] < epsilon``.

    Informational only; the value easily overflows to ``inf``.
    """
    b = b_ls(loss, epsilon, theta, gamma_wl)
    if model_class == "ls":
        return b
    if model_class == "dt":
        return _exp(b)
    if model_class == "adt":
        return adt_outdegree * _exp(b / adt_outdegree)
    if model_class == "knn":
        return m * b / k_rec
    if model_class == "lbp":
        if not 0 < c < 1:
            raise ValueError("c must lie in (0, 1)")
        return b ** (1.0 / (1.0 - c))
    raise ConfigError(f"unknown model {model_class!r}")


# ---------------------------------------------------------------------------
# Output


def emit_csv(records: Sequence[SweepRecord], path) -> None:
    if not records:
        raise ValueError("no records to write")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_HEADER)
        for r in records:
            w.writerow([_fmt(getattr(r, k)) for k in CSV_HEADER])


def _fmt(v):
    return repr(float(v)) if isinstance(v, float) else v


def read_csv(path) -> list[SweepRecord]:
    types = {f.name: f.type for f in fields(SweepRecord)}
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            kw = {}
            for k, v in row.items():
                t = types[k]
                kw[k] = float(v) if t in (float, "float") else int(v) if t in (int, "int") else v
            out.append(SweepRecord(**kw))
    return out


SVG_PANELS = {"accuracy": "accuracy_clean", "posterior": "expected_posterior", "calls": "weak_calls"}
_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def emit_svg(records: Sequence[SweepRecord], path, panel: str = "accuracy") -> None:
    """One panel: ``panel`` vs gamma (log axis), one polyline per eta."""
    if not records:
        raise ValueError("no records to plot")
    if panel not in SVG_PANELS:
        raise ConfigError(f"panel must be one of {sorted(SVG_PANELS)}")
    key = SVG_PANELS[panel]
    W, H, L, R, T, B = 640, 480, 70, 20, 30, 50
    gam = np.array([r.gamma for r in records])
    val = np.array([float(getattr(r, key)) for r in records])
    lg = np.log10(gam)
    x0, x1 = lg.min(), lg.max() if lg.max() > lg.min() else lg.min() + 1
    if panel == "calls":
        y0, y1 = 0.0, max(1.0, val.max())
    else:
        y0, y1 = 0.0, 1.0

    def px(g):
        return L + (np.log10(g) - x0) / (x1 - x0) * (W - L - R)

    def py(v):
        return H - B - (v - y0) / (y1 - y0) * (H - T - B)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {W} {H}" width="{W}" height="{H}">',
        f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
        f'<line class="axis" x1="{L}" y1="{H - B}" x2="{W - R}" y2="{H - B}" stroke="black"/>',
        f'<line class="axis" x1="{L}" y1="{T}" x2="{L}" y2="{H - B}" stroke="black"/>',
        f'<text x="{(W + L) / 2:.1f}" y="{H - 12}" text-anchor="middle" font-size="14">gamma (log scale)</text>',
        f'<text x="16" y="{(H - B + T) / 2:.1f}" font-size="14" transform="rotate(-90 16 {(H - B + T) / 2:.1f})" '
        f'text-anchor="middle">{key}</text>',
    ]
    for e in range(int(math.floor(x0)), int(math.ceil(x1)) + 1):
        if x0 - 1e-9 <= e <= x1 + 1e-9:
            X = px(10.0**e)
            parts.append(f'<text x="{X:.1f}" y="{H - B + 18}" text-anchor="middle" font-size="11">1e{e}</text>')
    for k in range(5):
        v = y0 + k * (y1 - y0) / 4
        parts.append(f'<text x="{L - 6}" y="{py(v) + 4:.1f}" text-anchor="end" font-size="11">{v:g}</text>')
    groups = {}
    for r in records:
        groups.setdefault((r.loss, r.model, r.eta), []).append(r)
    for n, ((ln, mdl, eta), rs) in enumerate(sorted(groups.items())):
        rs = sorted(rs, key=lambda r: r.gamma)
        pts = " ".join(f"{px(r.gamma):.2f},{py(float(getattr(r, key))):.2f}" for r in rs)
        color = _PALETTE[n % len(_PALETTE)]
        parts.append(
            f'<polyline class="series" data-eta="{eta:.6g}" data-loss="{ln}" data-model="{mdl}" '
            f'points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>'
        )
        parts.append(f'<text x="{W - R - 4}" y="{T + 14 * (n + 1)}" text-anchor="end" font-size="11" '
                     f'fill="{color}">{ln}/{mdl} eta={eta:.3g}</text>')
        if panel == "posterior":
            b = rs[0].bayes_posterior
            parts.append(
                f'<rect class="bayes" data-eta="{eta:.6g}" x="{L + 2}" y="{py(b) - 3:.2f}" width="10" height="6" '
                f'fill="none" stroke="green"/>'
            )
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts) + "\n")


def records_as_dicts(records: Iterable[SweepRecord]) -> list[dict]:
    return [asdict(r) for r in records]
