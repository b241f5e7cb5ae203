"""Strictly proper losses for class probability estimation.

Every loss bundles its partial losses, pointwise Bayes risk, canonical link
and the convex surrogate ``phi(z) = (-bayes_risk)^*(-z)``.  All callables are
vectorised over numpy arrays.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

LOSS_NAMES = ("matusita", "log", "square", "asym1")


class ConfigError(ValueError):
    """Raised on invalid user configuration (unknown loss, bad dataset spec...)."""


@dataclass(frozen=True)
class ProperLoss:
    name: str
    partial_pos: Callable
    partial_neg: Callable
    bayes_risk: Callable
    inv_link: Callable
    fwd_link: Callable
    surrogate: Callable
    kappa: float
    floor_c: float
    symmetric: bool

    def __repr__(self):
        return f"ProperLoss({self.name!r})"

    @property
    def p_star(self) -> float:
        """Posterior predicted by the zero score."""
        return float(self.inv_link(0.0))

    def saturation_score(self, eps: float = 1e-12) -> float:
        """Finite score standing in for a pure (+inf) leaf: weight drops below ``eps``."""
        return float(self.fwd_link(1.0 - eps))


@dataclass(frozen=True)
class Asym1Constants:
    a_const: float
    b_const: float
    c_const: float


def asym1_constants() -> Asym1Constants:
    a = math.log(4.0) - 4.0 * math.atan(2.0) + math.atan(0.5)
    b = math.pi / 2.0 + math.log(4.0)
    c = 2.0 * math.pi - math.log(4.0)
    return Asym1Constants(a, b, c)


def _arr(x):
    return np.asarray(x, dtype=float)


def _out(x, res):
    return float(res) if np.ndim(x) == 0 else res


# Matusita. The partial losses are scaled by 1/2 so that they are consistent
# with the tabulated link 0.5 * (1 + z / sqrt(1 + z^2)) and surrogate.

def _matusita_pos(u):
    u = _arr(u)
    with np.errstate(divide="ignore", invalid="ignore"):
        res = 0.5 * np.sqrt((1.0 - u) / u)
    return _out(u, np.where(u <= 0.0, np.inf, res))


def _matusita_neg(u):
    return _matusita_pos(1.0 - _arr(u))


def _matusita_bayes(u):
    u = _arr(u)
    return _out(u, np.sqrt(np.clip(u * (1.0 - u), 0.0, None)))


def _matusita_inv(z):
    z = _arr(z)
    return _out(z, 0.5 * (1.0 + z / np.sqrt(1.0 + z * z)))


def _matusita_fwd(u):
    u = _arr(u)
    with np.errstate(divide="ignore", invalid="ignore"):
        res = (2.0 * u - 1.0) / (2.0 * np.sqrt(u * (1.0 - u)))
    return _out(u, res)


def _matusita_phi(z):
    z = _arr(z)
    # (-z + sqrt(1+z^2))/2 without cancellation for large positive z
    res = np.where(z > 0, 0.5 / (z + np.sqrt(1.0 + z * z)), 0.5 * (-z + np.sqrt(1.0 + z * z)))
    return _out(z, res)


# Log loss.

def _log_pos(u):
    u = _arr(u)
    with np.errstate(divide="ignore"):
        return _out(u, -np.log(u))


def _log_neg(u):
    return _log_pos(1.0 - _arr(u))


def _xlogx(u):
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(u > 0.0, u * np.log(np.where(u > 0.0, u, 1.0)), 0.0)


def _log_bayes(u):
    u = _arr(u)
    return _out(u, -_xlogx(u) - _xlogx(1.0 - u))


def _log_inv(z):
    z = _arr(z)
    # logistic sigmoid, overflow-free on both tails
    ez = np.exp(-np.abs(z))
    return _out(z, np.where(z >= 0, 1.0 / (1.0 + ez), ez / (1.0 + ez)))


def _log_fwd(u):
    u = _arr(u)
    with np.errstate(divide="ignore"):
        return _out(u, np.log(u) - np.log1p(-u))


def _log_phi(z):
    z = _arr(z)
    return _out(z, np.logaddexp(0.0, -z))


# Square loss, unnormalised (L = 1).

def _square_pos(u):
    u = _arr(u)
    return _out(u, (1.0 - u) ** 2)


def _square_neg(u):
    u = _arr(u)
    return _out(u, u**2)


def _square_bayes(u):
    u = _arr(u)
    return _out(u, u * (1.0 - u))


def _square_inv(z):
    z = _arr(z)
    return _out(z, np.clip(0.5 * (1.0 + z), 0.0, 1.0))


def _square_fwd(u):
    u = _arr(u)
    return _out(u, 2.0 * u - 1.0)


def _square_phi(z):
    z = _arr(z)
    res = np.where(z < -1.0, -z, np.where(z > 1.0, 0.0, 0.25 * (1.0 - z) ** 2))
    return _out(z, res)


# Asymmetric loss 1.

_K = asym1_constants()
_A, _B, _C = _K.a_const, _K.b_const, _K.c_const
_ATAN2 = math.atan(2.0)
_ATAN_HALF = math.atan(0.5)


def _asym1_quad(u):
    return 5.0 * u * u - 8.0 * u + 4.0


def _asym1_pos(u):
    u = _arr(u)
    return _out(u, np.log(_asym1_quad(u)) + _ATAN_HALF - np.arctan((5.0 * u - 4.0) / 2.0))


def _asym1_neg(u):
    u = _arr(u)
    return _out(u, np.log(_asym1_quad(u) / 4.0) + 4.0 * _ATAN2 - 4.0 * np.arctan((4.0 - 5.0 * u) / 2.0))


def _asym1_bayes(u):
    u = _arr(u)
    res = (
        np.log(_asym1_quad(u))
        + _A * u
        + 4.0 * _ATAN2
        - math.log(4.0)
        + (4.0 - 5.0 * u) * np.arctan((5.0 * u - 4.0) / 2.0)
    )
    return _out(u, res)


def _asym1_inv(z):
    z = _arr(z)
    zc = np.clip(z, -_B, _C)
    res = 0.4 * (2.0 - np.tan(-(zc + _A) / 5.0))
    res = np.where(z < -_B, 0.0, np.where(z > _C, 1.0, res))
    return _out(z, np.clip(res, 0.0, 1.0))


def _asym1_fwd(u):
    u = _arr(u)
    return _out(u, -_A - 5.0 * np.arctan(2.0 - 2.5 * u))


def _asym1_phi(z):
    z = _arr(z)
    zc = np.clip(z, -_C, _B)
    inner = 2.0 * np.log(np.cos((_A - _B) / 5.0) / np.cos((_A - zc) / 5.0)) + 4.0 * (_B - zc) / 5.0
    # linear branch below -C and flat branch above B keep phi C^1 and convex
    res = np.where(z < -_C, -z, np.where(z > _B, 0.0, inner))
    return _out(z, res)


_REGISTRY = {
    "matusita": dict(
        partial_pos=_matusita_pos, partial_neg=_matusita_neg, bayes_risk=_matusita_bayes,
        inv_link=_matusita_inv, fwd_link=_matusita_fwd, surrogate=_matusita_phi,
        kappa=2.0, floor_c=0.0, symmetric=True,
    ),
    "log": dict(
        partial_pos=_log_pos, partial_neg=_log_neg, bayes_risk=_log_bayes,
        inv_link=_log_inv, fwd_link=_log_fwd, surrogate=_log_phi,
        kappa=4.0, floor_c=0.0, symmetric=True,
    ),
    "square": dict(
        partial_pos=_square_pos, partial_neg=_square_neg, bayes_risk=_square_bayes,
        inv_link=_square_inv, fwd_link=_square_fwd, surrogate=_square_phi,
        kappa=2.0, floor_c=0.0, symmetric=True,
    ),
    "asym1": dict(
        partial_pos=_asym1_pos, partial_neg=_asym1_neg, bayes_risk=_asym1_bayes,
        inv_link=_asym1_inv, fwd_link=_asym1_fwd, surrogate=_asym1_phi,
        kappa=2.5, floor_c=0.0, symmetric=False,
    ),
}


def make_loss(name: str) -> ProperLoss:
    """Build one of ``matusita``, ``log``, ``square``, ``asym1``."""
    try:
        fields = _REGISTRY[name]
    except KeyError:
        raise ConfigError(f"unknown loss {name!r}; expected one of {LOSS_NAMES}") from None
    return ProperLoss(name=name, **fields)


def weight(loss: ProperLoss, label, score):
    """Boosting weight ``y - y* . inv_link(score)``, always in [0, 1]."""
    y = np.asarray(label, dtype=float)
    p = loss.inv_link(score)
    res = np.where(y > 0.5, 1.0 - np.asarray(p), np.asarray(p))
    return float(res) if res.ndim == 0 else res


def pointwise_risk(loss: ProperLoss, guess, truth):
    """Conditional risk ``v l1(u) + (1-v) l-1(u)``; ``+inf`` where a partial loss diverges.

    Terms with zero coefficient are dropped, so ``0 * inf`` counts as 0.
    """
    u = _arr(guess)
    v = _arr(truth)
    lp = np.asarray(loss.partial_pos(u), dtype=float)
    ln = np.asarray(loss.partial_neg(u), dtype=float)
    with np.errstate(invalid="ignore"):
        a = np.where(v > 0, v * lp, 0.0)
        b = np.where(v < 1, (1.0 - v) * ln, 0.0)
    res = a + b
    return float(res) if res.ndim == 0 else res


def example_losses(loss: ProperLoss, scores, labels):
    """Model-dependent part of the loss, ``phi(-H) - y H``, per example."""
    h = _arr(scores)
    y = _arr(labels)
    if loss.symmetric:
        # margin form phi(y* H); identical value, no cancellation at large |H|
        return loss.surrogate((2.0 * y - 1.0) * h)
    return loss.surrogate(-h) - y * h


def population_surrogate(loss: ProperLoss, scores, labels, multiplicity=None) -> float:
    """Multiplicity-weighted mean of ``phi(-H(x)) - y H(x)``."""
    h = _arr(scores).ravel()
    if h.size == 0:
        raise ValueError("population surrogate of an empty sample")
    m = np.ones_like(h) if multiplicity is None else _arr(multiplicity).ravel()
    vals = example_losses(loss, h, _arr(labels).ravel())
    return float(np.sum(m * vals) / np.sum(m))


@dataclass
class SurrogateShapeReport:
    loss: str
    convex: bool
    non_increasing: bool
    negative_slope_at_zero: bool
    slope_at_zero: float
    min_second_difference: float
    max_first_difference: float

    @property
    def passed(self) -> bool:
        return self.convex and self.non_increasing and self.negative_slope_at_zero


def check_surrogate_shape(loss: ProperLoss, grid_size: int = 1000) -> SurrogateShapeReport:
    """Finite-difference check that the surrogate is convex, non-increasing, with phi'(0) < 0."""
    if grid_size < 100:
        raise ValueError("grid_size must be at least 100")
    z = np.linspace(-20.0, 20.0, grid_size + 1)
    phi = loss.surrogate(z)
    d1 = np.diff(phi)
    d2 = phi[2:] - 2.0 * phi[1:-1] + phi[:-2]
    h = 1e-6
    slope = float((loss.surrogate(h) - loss.surrogate(-h)) / (2.0 * h))
    return SurrogateShapeReport(
        loss=loss.name,
        convex=bool(d2.min() >= -1e-7),
        non_increasing=bool(d1.max() <= 1e-12),
        negative_slope_at_zero=slope < 0.0,
        slope_at_zero=slope,
        min_second_difference=float(d2.min()),
        max_first_difference=float(d1.max()),
    )
