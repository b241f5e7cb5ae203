"""Long & Servedio's four-point domain, its noisy bag and rotations.

Datasets are stored as distinct rows with integer multiplicities; every
expectation over the sample is multiplicity weighted.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .losses import ConfigError


@dataclass(frozen=True)
class Dataset:
    """Multiset of labelled observations.

    ``x`` has shape (n, d), ``y`` holds labels in {0, 1} and ``multiplicity``
    positive integer counts.  Instances are immutable: arrays are read-only.
    """

    x: np.ndarray
    y: np.ndarray
    multiplicity: np.ndarray

    def __post_init__(self):
        x = np.array(self.x, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        y = np.array(self.y, dtype=int).ravel()
        m = np.array(self.multiplicity, dtype=np.int64).ravel()
        if not (len(x) == len(y) == len(m)):
            raise ValueError("x, y and multiplicity must have the same length")
        if np.any(m < 1):
            raise ValueError("multiplicities must be >= 1")
        if np.any((y != 0) & (y != 1)):
            raise ValueError("labels must be in {0, 1}")
        for arr in (x, y, m):
            arr.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "multiplicity", m)

    def __len__(self):
        return len(self.y)

    @property
    def total(self) -> int:
        """Number of examples counted with multiplicity (``m``)."""
        return int(self.multiplicity.sum())

    @property
    def y_signed(self) -> np.ndarray:
        return 2 * self.y - 1

    @property
    def n_features(self) -> int:
        return self.x.shape[1]

    def subset(self, mask) -> "Dataset":
        mask = np.asarray(mask, dtype=bool)
        return Dataset(self.x[mask], self.y[mask], self.multiplicity[mask])

    def expand(self) -> tuple[np.ndarray, np.ndarray]:
        """Replicated rows, one per example (for oracles and brute force)."""
        idx = np.repeat(np.arange(len(self)), self.multiplicity)
        return self.x[idx], self.y[idx]


@dataclass(frozen=True)
class LsDatasetSpec:
    gamma: float
    big_k: float = 5.0
    n_copies: int = 3
    theta: float = 0.0

    def __post_init__(self):
        if not self.gamma > 0:
            raise ConfigError(f"gamma must be > 0, got {self.gamma}")
        if int(self.n_copies) != self.n_copies or self.n_copies < 2:
            raise ConfigError(f"N must be an integer >= 2, got {self.n_copies}")

    @property
    def eta(self) -> float:
        return 1.0 / (self.n_copies + 1)

    @classmethod
    def from_eta(cls, gamma: float, eta: float, **kw) -> "LsDatasetSpec":
        """Map a noise rate to ``N = round(1/eta) - 1`` copies."""
        if not 0 < eta < 0.5:
            raise ConfigError(f"eta must lie in (0, 1/2), got {eta}")
        n = int(round(1.0 / eta)) - 1
        return cls(gamma=gamma, n_copies=n, **kw)


def rotation_matrix(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def _clean_rows(spec: LsDatasetSpec):
    g, k = spec.gamma, spec.big_k
    x = np.array([[1.0, 0.0], [g, -g], [g, k * g]])
    counts = np.array([1, 2, 1])
    if spec.theta:
        x = x @ rotation_matrix(spec.theta).T
    return x, counts


def make_clean(spec: LsDatasetSpec) -> Dataset:
    x, counts = _clean_rows(spec)
    return Dataset(x, np.ones(3, dtype=int), counts)


def make_noisy(spec: LsDatasetSpec) -> Dataset:
    """``N`` copies of the clean sample plus one copy with flipped labels.

    Rows alternate (positive, negative) per distinct observation.
    """
    x, counts = _clean_rows(spec)
    n = int(spec.n_copies)
    xs = np.repeat(x, 2, axis=0)
    ys = np.tile([1, 0], 3)
    ms = np.ravel(np.column_stack([n * counts, counts]))
    return Dataset(xs, ys, ms)


def bayes_posterior(spec: LsDatasetSpec) -> float:
    return 1.0 - spec.eta
