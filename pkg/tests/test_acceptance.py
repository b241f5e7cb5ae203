"""Acceptance criteria 1-10, one test each; verdict lines are printed in the terminal summary."""
import math
from functools import lru_cache

import numpy as np
import pytest

from oracles import (
    grid_scan_alpha,
    claimed_first_alpha,
    first_axis_edge,
    claimed_edge_ratio,
    random_region,
)
from properboost import booster
from properboost.datasets import LsDatasetSpec, make_clean, make_noisy
from properboost.experiments import b_ls, clean_accuracy, compute_rate_bound, expected_posterior, ideal_linear_minimizer
from properboost.losses import LOSS_NAMES, check_surrogate_shape, make_loss, pointwise_risk, weight
from properboost.models import dt_leaf_stats, dt_population_surrogate_identity

VERDICTS: dict = {}

ETAS = (1 / 3, 1 / 4, 1 / 10)
GAMMAS = (0.01, 0.1, 0.4)
LS_GRID = np.geomspace(1e-3, 0.5, 40)
NEGATIVE_CONTROL = dict(n_copies=2, big_k=5.0, gamma=0.01)


def _verdict(num, ok, detail):
    VERDICTS[num] = f"criterion {num:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(VERDICTS[num])
    return ok


@lru_cache(maxsize=None)
def _run(loss_name, model, gamma, eta, max_iters=64, knn_k=1):
    spec = LsDatasetSpec.from_eta(gamma, eta)
    kw = {"knn_k": knn_k} if model == "knn" else {}
    st = booster.run(make_loss(loss_name), model, make_noisy(spec), max_iters=max_iters, **kw)
    return spec, st


def _criterion1_runs():
    return [(ln, g, e) for ln in LOSS_NAMES for e in ETAS for g in GAMMAS]


def _two_step_runs():
    return [(n, g) for n in (2, 3) for g in (0.01, 0.02, 0.04)]


def _two_step_state(n, g):
    return _run("square", "ls", g, 1 / (n + 1))


def _all_runs():
    """Every boosting run used by criteria 1-4."""
    out = []
    for ln, g, e in _criterion1_runs():
        out.append(_run(ln, "dt", g, e)[1])
        out.append(_run(ln, "knn", g, e)[1])
    for n, g in _two_step_runs():
        out.append(_two_step_state(n, g)[1])
    for ln in LOSS_NAMES:
        for g in LS_GRID:
            out.append(_run(ln, "ls", float(g), 0.25)[1])
    return out


def _bayes_check(model, calls):
    bad = []
    worst = 0.0
    for ln, g, e in _criterion1_runs():
        spec, st = _run(ln, model, g, e)
        clean = make_clean(spec)
        s = st.model.score(clean.x)
        err = abs(expected_posterior(st.loss, s, clean) - (1 - spec.eta))
        worst = max(worst, err)
        if st.weak_calls != calls or clean_accuracy(s, clean) != 1.0 or err > 1e-8:
            bad.append((ln, g, round(e, 4), st.weak_calls))
    return bad, worst


def test_criterion_01_dt_bayes_in_one_call():
    bad, worst = _bayes_check("dt", 1)
    ok = _verdict(1, not bad, f"DT: 36 cells, 1 weak call, accuracy 1, max |posterior - (1-eta)| = {worst:.2e}; failures {bad}")
    assert ok


def test_criterion_02_knn_bayes_in_three_calls():
    bad, worst = _bayes_check("knn", 3)
    ok = _verdict(2, not bad, f"1-NN: 36 cells, 3 weak calls, max |posterior - (1-eta)| = {worst:.2e}; failures {bad}")
    assert ok


def test_criterion_03_first_two_ls_steps():
    rows, fails = [], []
    for n, g in _two_step_runs():
        spec, st = _two_step_state(n, g)
        s1, s2 = st.steps[0], st.steps[1]
        a_err = abs(s1.alpha - claimed_first_alpha(n, g))
        e_err = abs(s1.edge - first_axis_edge(n, g))
        ratio = s2.edge / s1.edge
        r_err = abs(abs(ratio) - claimed_edge_ratio(g))
        # accuracy of the model after at most two steps
        two = booster.run(make_loss("square"), "ls", make_noisy(spec), max_iters=2)
        clean = make_clean(spec)
        acc = clean_accuracy(two.model.score(clean.x), clean)
        checks = {"alpha1": a_err <= 1e-6, "edge1": e_err <= 1e-9, "acc": acc == 0.5, "ratio": r_err <= 1e-6}
        fails += [f"{k}(N={n},g={g})" for k, v in checks.items() if not v]
        rows.append(f"N={n} g={g}: alpha1 {s1.alpha:.6f} vs {claimed_first_alpha(n, g):.6f}, "
                    f"ratio {abs(ratio):.6f} vs {claimed_edge_ratio(g):.6f}")
    failed_kinds = sorted({f.split("(")[0] for f in fails})
    ok = _verdict(3, not fails, f"first two LS steps on N in {{2,3}} x 3 gammas; failing sub-checks: {failed_kinds or 'none'}; "
                  f"e.g. {rows[3]}")
    assert ok, "\n".join(rows)


def test_criterion_04_ls_phase_transition():
    bad = []
    crossings = {}
    for ln in LOSS_NAMES:
        acc = np.array([clean_accuracy(st.model.score(make_clean(sp).x), make_clean(sp))
                        for sp, st in (_run(ln, "ls", float(g), 0.25) for g in LS_GRID)])
        changes = int(np.sum(acc[1:] != acc[:-1]))
        crossings[ln] = int(np.argmax(acc == 1.0))
        if acc[0] != 0.5 or acc[-1] != 1.0 or changes != 1 or not set(acc) <= {0.5, 1.0}:
            bad.append(ln)
    frozen = {"matusita": 27, "log": 28, "square": 28, "asym1": 28}
    ok = _verdict(4, not bad and crossings == frozen,
                  f"LS at eta=1/4 on 40 gammas: single 0.5 -> 1.0 crossing at index {crossings}; failures {bad}")
    assert ok


def test_criterion_05_surrogate_monotone():
    runs = _all_runs()
    worst = max(float(np.max(np.diff(st.surrogate_history), initial=-np.inf)) for st in runs)
    ok = _verdict(5, worst <= 1e-12, f"{len(runs)} runs, largest step-to-step change {worst:.3e}")
    assert ok


def test_criterion_06_leveraging():
    runs = _all_runs()
    worst_resid = max((abs(r.residual) for st in runs for r in st.steps), default=0.0)
    rng = np.random.default_rng(2024)
    worst_gap = 0.0
    for i in range(20):
        loss = make_loss(LOSS_NAMES[i % 4])
        s, h, y, m = random_region(rng, loss)
        sol = booster.solve_alpha_arrays(loss, s, h, y, m)
        lo, hi, _ = grid_scan_alpha(loss, s, h, y, m, lo=-20.0, hi=20.0, n=10_000_000)
        gap = 0.0 if lo <= sol.alpha <= hi else min(abs(sol.alpha - lo), abs(sol.alpha - hi))
        worst_gap = max(worst_gap, gap)
    ok = _verdict(6, worst_resid <= 1e-9 and worst_gap <= 1e-5,
                  f"max |residual| {worst_resid:.2e} over all steps; bisection vs 1e7-point scan on 20 regions: {worst_gap:.2e}")
    assert ok


def test_criterion_07_leaf_identity():
    worst_risk = worst_leaf = 0.0
    for ln, g, e in _criterion1_runs():
        spec, st = _run(ln, "dt", g, e)
        d = make_noisy(spec)
        worst_risk = max(worst_risk, abs(st.final_surrogate - dt_population_surrogate_identity(st.loss, st.model, d)))
        for ls in dt_leaf_stats(st.model, d):
            if ls.m_leaf:
                worst_leaf = max(worst_leaf, abs(ls.score - st.loss.fwd_link(ls.p_plus)))
    ok = _verdict(7, worst_risk <= 1e-8 and worst_leaf <= 1e-8,
                  f"36 DT runs: surrogate vs leaf Bayes risk {worst_risk:.2e}, leaf score vs link {worst_leaf:.2e}")
    assert ok


def test_criterion_08_loss_properties():
    bad = []
    u = np.linspace(0.0005, 0.9995, 1999)
    s = np.linspace(-50, 50, 2001)
    for ln in LOSS_NAMES:
        L = make_loss(ln)
        if not check_surrogate_shape(L, 1000).passed:
            bad.append(f"{ln}:shape")
        for v in np.linspace(0.05, 0.95, 19):
            if abs(u[np.argmin(pointwise_risk(L, u, v))] - v) > 1e-3:
                bad.append(f"{ln}:proper@{v:.2f}")
        for y in (0, 1):
            w = weight(L, np.full_like(s, y), s)
            if not np.all((w >= 0) & (w <= 1)):
                bad.append(f"{ln}:weight")
        q = np.linspace(0.01, 0.99, 99)
        if np.max(np.abs(L.inv_link(L.fwd_link(q)) - q)) > 1e-12:
            bad.append(f"{ln}:roundtrip")
    ok = _verdict(8, not bad, f"convexity, monotonicity, phi'(0)<0, properness, weight range, link round trip; failures {bad}")
    assert ok


def test_criterion_09_ideal_minimiser_controls():
    spec = LsDatasetSpec(0.1, n_copies=10**6 - 1)
    pos = ideal_linear_minimizer(make_loss("square"), make_noisy(spec), make_clean(spec)).clean_accuracy
    neg_spec = LsDatasetSpec(NEGATIVE_CONTROL["gamma"], big_k=NEGATIVE_CONTROL["big_k"], n_copies=NEGATIVE_CONTROL["n_copies"])
    neg = {ln: ideal_linear_minimizer(make_loss(ln), make_noisy(neg_spec), make_clean(neg_spec)).clean_accuracy
           for ln in LOSS_NAMES if make_loss(ln).symmetric}
    ok = _verdict(9, pos == 1.0 and all(a <= 0.5 for a in neg.values()),
                  f"positive control accuracy {pos}; negative control (N=2, K=5, gamma=0.01) accuracy {neg}")
    assert ok


def test_criterion_10_rate_relations():
    rng = np.random.default_rng(99)
    bad = 0
    for _ in range(10):
        L = make_loss(LOSS_NAMES[int(rng.integers(4))])
        eps, gwl, theta = rng.uniform(0.5, 1), rng.uniform(0.6, 1), rng.uniform(0, 0.2)
        m, k, c = int(rng.integers(10, 1000)), int(rng.integers(1, 10)), rng.uniform(0.1, 0.9)
        b = b_ls(L, eps, theta, gwl)
        bad += compute_rate_bound("dt", L, eps, theta, gwl) != math.exp(b)
        bad += compute_rate_bound("knn", L, eps, theta, gwl, m=m, k_rec=k) != m * b / k
        bad += compute_rate_bound("lbp", L, eps, theta, gwl, c=c) != b ** (1 / (1 - c))
    ok = _verdict(10, bad == 0, f"b_DT, b_NN, b_LBP as compositions of b_LS at 10 random points; mismatches {bad}")
    assert ok


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q"]))
