"""Distance measures and kernel functions for comparing sensor vectors.

All measures operate on real-valued vectors (normalized channel readings),
never on raw ADC integers. Scalar pair functions define the contract; the
``pairwise`` helper evaluates the same measure over batches of vectors and
is what the regression code uses.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import ConfigError, DegenerateInputError, DimensionError

MEASURE_KINDS = ("minkowski", "rbf", "cosine", "manhattan", "canberra")


@dataclass(frozen=True)
class MeasureSpec:
    """Configuration for one distance measure.

    ``m`` and ``weights`` apply to minkowski only; ``sigma`` and
    ``rbf_squared`` apply to rbf only. ``rbf_squared`` switches from the
    plain-norm exponent (the default) to the textbook squared-norm Gaussian.
    """

    kind: str = "minkowski"
    m: float = 2.0
    weights: tuple[float, ...] | None = None
    sigma: float = 1.0
    rbf_squared: bool = False

    def __post_init__(self):
        if self.kind not in MEASURE_KINDS:
            raise ConfigError(f"unknown measure kind {self.kind!r}")
        if self.m < 1:
            raise ConfigError("minkowski norm degree m must be >= 1")
        if self.sigma <= 0:
            raise ConfigError("rbf sigma must be positive")
        if self.weights is not None:
            if any(w < 0 for w in self.weights):
                raise ConfigError("minkowski weights must be non-negative")

    def distance(self, a, b) -> float:
        """Evaluate this measure on one pair of vectors."""
        if self.kind == "minkowski":
            return minkowski(a, b, self.m, self.weights)
        if self.kind == "rbf":
            return rbf(a, b, self.sigma, squared=self.rbf_squared)
        if self.kind == "cosine":
            return cosine(a, b)
        if self.kind == "manhattan":
            return manhattan(a, b)
        return canberra(a, b)

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.kind == "minkowski":
            d["m"] = self.m
            if self.weights is not None:
                d["weights"] = list(self.weights)
        if self.kind == "rbf":
            d["sigma"] = self.sigma
            d["rbf_squared"] = self.rbf_squared
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "MeasureSpec":
        w = d.get("weights")
        return cls(
            kind=d.get("kind", "minkowski"),
            m=float(d.get("m", 2.0)),
            weights=tuple(float(x) for x in w) if w is not None else None,
            sigma=float(d.get("sigma", 1.0)),
            rbf_squared=bool(d.get("rbf_squared", False)),
        )


def _pair(a, b) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise DimensionError(f"vectors must be 1-d and equal length, got {a.shape} vs {b.shape}")
    return a, b


def minkowski(a, b, m: float = 2.0, w: Sequence[float] | None = None) -> float:
    """Weighted l_m norm of the coordinate differences."""
    a, b = _pair(a, b)
    if m < 1:
        raise ConfigError("norm degree m must be >= 1")
    if w is None:
        w = np.ones_like(a)
    else:
        w = np.asarray(w, dtype=float)
        if w.shape != a.shape:
            raise DimensionError("weights must match vector length")
    return float(np.sum(w * np.abs(a - b) ** m) ** (1.0 / m))


def rbf(a, b, sigma: float, squared: bool = False) -> float:
    """Radial-basis similarity exp(-||a-b|| / (2 sigma^2)), in (0, 1].

    ``squared=True`` uses the squared Euclidean norm in the exponent instead
    of the plain norm.
    """
    a, b = _pair(a, b)
    if sigma <= 0:
        raise ConfigError("sigma must be positive")
    d = float(np.linalg.norm(a - b))
    if squared:
        d = d * d
    return float(np.exp(-d / (2.0 * sigma * sigma)))


def cosine(a, b) -> float:
    """Cosine distance 1 - a.b / (|a||b|); requires non-zero vectors."""
    a, b = _pair(a, b)
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise DegenerateInputError("cosine distance is undefined for zero vectors")
    return float(1.0 - np.dot(a, b) / (na * nb))


def manhattan(a, b) -> float:
    """Sum of absolute coordinate differences."""
    a, b = _pair(a, b)
    return float(np.sum(np.abs(a - b)))


def canberra(a, b) -> float:
    """Sum of |a_i - b_i| / (|a_i| + |b_i|); 0/0 terms contribute 0."""
    a, b = _pair(a, b)
    num = np.abs(a - b)
    den = np.abs(a) + np.abs(b)
    terms = np.divide(num, den, out=np.zeros_like(num), where=den != 0)
    return float(np.sum(terms))


def pairwise(spec: MeasureSpec, A, B) -> np.ndarray:
    """Measure evaluated between every row of A (n, M) and of B (P, M).

    Returns an (n, P) array; row i column p is spec.distance(A[i], B[p]).
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if A.shape[1] != B.shape[1]:
        raise DimensionError(
            f"channel counts differ: {A.shape[1]} vs {B.shape[1]}"
        )
    diff = np.abs(A[:, None, :] - B[None, :, :])
    if spec.kind == "minkowski":
        w = np.ones(A.shape[1]) if spec.weights is None else np.asarray(spec.weights, dtype=float)
        if w.shape[0] != A.shape[1]:
            raise DimensionError("weights must match channel count")
        return np.sum(w * diff**spec.m, axis=2) ** (1.0 / spec.m)
    if spec.kind == "rbf":
        d = np.sqrt(np.sum(diff * diff, axis=2))
        if spec.rbf_squared:
            d = d * d
        return np.exp(-d / (2.0 * spec.sigma * spec.sigma))
    if spec.kind == "cosine":
        na = np.linalg.norm(A, axis=1)
        nb = np.linalg.norm(B, axis=1)
        if np.any(na == 0) or np.any(nb == 0):
            raise DegenerateInputError("cosine distance is undefined for zero vectors")
        return 1.0 - (A @ B.T) / np.outer(na, nb)
    if spec.kind == "manhattan":
        return np.sum(diff, axis=2)
    den = np.abs(A)[:, None, :] + np.abs(B)[None, :, :]
    terms = np.divide(diff, den, out=np.zeros_like(diff), where=den != 0)
    return np.sum(terms, axis=2)
