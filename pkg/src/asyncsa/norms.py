"""Norms used for error bounds, projection regions and residual reports.

Weighted max norms take positive per-component weights w and measure
max_i |x_i| / w_i; weighted p-norms measure (sum_i |w_i x_i|^p)^(1/p).
Both are absolutely homogeneous, which the radial projection in
asyncsa.core relies on.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

__all__ = [
    "EuclideanNorm",
    "WeightedMaxNorm",
    "WeightedPNorm",
    "weighted_norm",
    "norm_from_config",
]


@dataclass(frozen=True)
class EuclideanNorm:
    kind: str = field(default="euclidean", init=False)

    def __call__(self, x: np.ndarray) -> float:
        return float(np.linalg.norm(x))

    def to_config(self) -> dict:
        return {"kind": "euclidean"}


@dataclass(frozen=True, eq=False)
class WeightedMaxNorm:
    weights: np.ndarray
    kind: str = field(default="weighted-max", init=False)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or w.size == 0 or not np.all(w > 0):
            raise ConfigError("weighted-max norm needs a 1-d positive weight vector")
        object.__setattr__(self, "weights", w)

    def __call__(self, x: np.ndarray) -> float:
        return float(np.max(np.abs(x) / self.weights))

    def to_config(self) -> dict:
        return {"kind": "weighted-max", "weights": [float(w) for w in self.weights]}


@dataclass(frozen=True, eq=False)
class WeightedPNorm:
    weights: np.ndarray
    p: float = 2.0
    kind: str = field(default="weighted-p", init=False)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or w.size == 0 or not np.all(w > 0):
            raise ConfigError("weighted-p norm needs a 1-d positive weight vector")
        if not self.p >= 1.0:
            raise ConfigError("weighted-p norm needs p >= 1")
        object.__setattr__(self, "weights", w)

    def __call__(self, x: np.ndarray) -> float:
        return float(np.sum(np.abs(self.weights * x) ** self.p) ** (1.0 / self.p))

    def to_config(self) -> dict:
        return {
            "kind": "weighted-p",
            "weights": [float(w) for w in self.weights],
            "p": float(self.p),
        }


Norm = EuclideanNorm | WeightedMaxNorm | WeightedPNorm


def weighted_norm(x: np.ndarray, norm: Norm) -> float:
    """Evaluate ``norm`` at ``x``; thin dispatch kept for API symmetry."""
    return norm(np.asarray(x, dtype=float))


def unit_max_norm(d: int) -> WeightedMaxNorm:
    """Max norm as the weighted-max norm with unit weights."""
    return WeightedMaxNorm(np.ones(int(d)))


def norm_from_config(spec: dict | None, d: int) -> Norm:
    """Build a norm from its config mapping; None means Euclidean."""
    if spec is None:
        return EuclideanNorm()
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError("norm config must be a mapping with a 'kind' key")
    spec = dict(spec)
    kind = spec.pop("kind")
    if kind == "euclidean":
        extra = set(spec)
    elif kind == "weighted-max":
        weights = np.asarray(spec.pop("weights", np.ones(d)), dtype=float)
        if weights.shape != (d,):
            raise ConfigError(f"norm weights must have length {d}")
        extra = set(spec)
        if not extra:
            return WeightedMaxNorm(weights)
    elif kind == "weighted-p":
        weights = np.asarray(spec.pop("weights", np.ones(d)), dtype=float)
        if weights.shape != (d,):
            raise ConfigError(f"norm weights must have length {d}")
        p = float(spec.pop("p", 2.0))
        extra = set(spec)
        if not extra:
            return WeightedPNorm(weights, p)
    else:
        raise ConfigError(f"unknown norm kind {kind!r}")
    if extra:
        raise ConfigError(f"unknown norm keys: {sorted(extra)}")
    return EuclideanNorm()
