"""Command line entry point: ``properboost sweep|ideal|bound``.

Exit codes: 0 on success, 2 on a configuration error, 3 on a numeric failure.
"""
from __future__ import annotations

import argparse
import sys

import numpy as np

from .booster import LeveragingError
from .datasets import LsDatasetSpec, make_clean, make_noisy
from .experiments import (
    SVG_PANELS,
    NumericFailure,
    SweepConfig,
    compute_rate_bound,
    emit_csv,
    emit_svg,
    ideal_linear_minimizer,
    run_sweep,
)
from .losses import LOSS_NAMES, ConfigError, make_loss
from .models import MODEL_NAMES

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


def _names(text: str, allowed) -> list[str]:
    out = [t.strip() for t in text.split(",") if t.strip()]
    bad = [t for t in out if t not in allowed]
    if not out or bad:
        raise ConfigError(f"expected a comma list from {list(allowed)}, got {text!r}")
    return out


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise ConfigError(f"bad number list {text!r}") from None


def parse_gamma_grid(text: str) -> np.ndarray:
    """``lo:hi:n`` -> n log-spaced values from lo to hi."""
    try:
        lo, hi, n = text.split(":")
        lo, hi, n = float(lo), float(hi), int(n)
    except ValueError:
        raise ConfigError(f"--gamma-grid expects lo:hi:n, got {text!r}") from None
    if not (0 < lo <= hi) or n < 1:
        raise ConfigError("--gamma-grid needs 0 < lo <= hi and n >= 1")
    return np.geomspace(lo, hi, n)


def _add_boost_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--iters", type=int, default=64)
    p.add_argument("--gamma-wl", type=float, default=1e-3)
    p.add_argument("--tol-alpha", type=float, default=None)
    p.add_argument("--tol-resid", type=float, default=None)
    p.add_argument("--adt-outdegree", type=int, default=2)
    p.add_argument("--knn-k", type=int, default=1)
    p.add_argument("--lbp-beta", type=float, default=0.5)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="properboost", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    sw = sub.add_parser("sweep", help="boost on noisy Long-Servedio samples over a gamma grid")
    sw.add_argument("--loss", default=",".join(LOSS_NAMES), help="comma list of losses")
    sw.add_argument("--model", default="ls", help="comma list of model classes")
    sw.add_argument("--gamma-grid", default="0.001:0.5:40")
    noise = sw.add_mutually_exclusive_group()
    noise.add_argument("--eta", default=None, help="comma list of noise rates")
    noise.add_argument("--N", default=None, help="comma list of clean copies")
    sw.add_argument("--K", type=float, default=5.0)
    sw.add_argument("--theta", type=float, default=0.0)
    sw.add_argument("--out", required=True)
    sw.add_argument("--svg", action="append", default=[], metavar="PANEL:PATH")
    _add_boost_flags(sw)

    idl = sub.add_parser("ideal", help="linear minimiser of the population surrogate")
    idl.add_argument("--loss", required=True, choices=LOSS_NAMES)
    idl.add_argument("--gamma", type=float, required=True)
    noise = idl.add_mutually_exclusive_group()
    noise.add_argument("--eta", type=float, default=None)
    noise.add_argument("--N", type=int, default=None)
    idl.add_argument("--K", type=float, default=5.0)
    idl.add_argument("--theta", type=float, default=0.0)

    bd = sub.add_parser("bound", help="iteration bound for a model class")
    bd.add_argument("--model", required=True, choices=MODEL_NAMES)
    bd.add_argument("--loss", required=True, choices=LOSS_NAMES)
    bd.add_argument("--epsilon", type=float, required=True)
    bd.add_argument("--theta", type=float, default=0.0)
    bd.add_argument("--gamma-wl", type=float, default=1e-3)
    bd.add_argument("--adt-outdegree", type=int, default=2)
    bd.add_argument("--m", type=int, default=1, help="sample size (knn)")
    bd.add_argument("--k-rec", type=int, default=1, help="reciprocal neighbourhood size (knn)")
    bd.add_argument("--c", type=float, default=0.5, help="merge exponent (lbp)")
    return parser


def _cmd_sweep(args) -> int:
    losses = _names(args.loss, LOSS_NAMES)
    models = _names(args.model, MODEL_NAMES)
    gammas = parse_gamma_grid(args.gamma_grid)
    if args.N is not None:
        etas = [1.0 / (n + 1) for n in _floats(args.N)]
    else:
        etas = _floats(args.eta) if args.eta is not None else [0.25]
    panels = []
    for item in args.svg:
        panel, sep, path = item.partition(":")
        if not sep or panel not in SVG_PANELS or not path:
            raise ConfigError(f"--svg expects panel:path with panel in {sorted(SVG_PANELS)}")
        panels.append((panel, path))
    config = SweepConfig(
        max_iters=args.iters, gamma_wl=args.gamma_wl, big_k=args.K,
        adt_outdegree=args.adt_outdegree, knn_k=args.knn_k, lbp_beta=args.lbp_beta,
    )
    if args.tol_alpha is not None:
        config.tol_alpha = args.tol_alpha
    if args.tol_resid is not None:
        config.tol_resid = args.tol_resid
    records = run_sweep(losses, models, gammas, etas, theta=args.theta, config=config)
    emit_csv(records, args.out)
    for panel, path in panels:
        emit_svg(records, path, panel)
    print(f"wrote {len(records)} rows to {args.out}")
    return EXIT_OK


def _cmd_ideal(args) -> int:
    if args.eta is not None:
        spec = LsDatasetSpec.from_eta(args.gamma, args.eta, big_k=args.K, theta=args.theta)
    else:
        spec = LsDatasetSpec(args.gamma, big_k=args.K, n_copies=args.N if args.N is not None else 3, theta=args.theta)
    res = ideal_linear_minimizer(make_loss(args.loss), make_noisy(spec), make_clean(spec))
    a1, a2 = (float(a) for a in res.alpha)
    print(f"alpha1={a1!r} alpha2={a2!r} clean_accuracy={res.clean_accuracy!r} iterations={res.iterations}")
    return EXIT_OK


def _cmd_bound(args) -> int:
    try:
        b = compute_rate_bound(
            args.model, make_loss(args.loss), args.epsilon, args.theta, args.gamma_wl,
            adt_outdegree=args.adt_outdegree, m=args.m, k_rec=args.k_rec, c=args.c,
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None
    print(repr(b))
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"sweep": _cmd_sweep, "ideal": _cmd_ideal, "bound": _cmd_bound}[args.command]
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericFailure, LeveragingError, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
