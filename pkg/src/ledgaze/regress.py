"""Gaze estimation by kernel regression over a calibration matrix.

Two estimators share the same similarity-vector machinery:

  - GPR: solve (C + eps*I) z = k and return e = z . U, where C holds the
    pairwise measure values between stored calibration vectors and k holds
    the measure values between the incoming frame and each stored vector.
    C built from a distance measure is generally not positive definite, so
    a small diagonal jitter keeps the solve honest; it escalates tenfold on
    failure up to a hard cap before giving up.
  - SVR: e = k . U with RBF similarities, optionally normalized by sum(k)
    so the output is a convex combination of stored targets.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .core import (
    CalibrationSet,
    ConfigError,
    DimensionError,
    EstimationError,
    GazeEstimate,
    ScreenPoint,
)
from .kernels import MeasureSpec, pairwise

JITTER_CAP = 1e-2
_SUM_EPS = 1e-300  # below this, normalized SVR weights are considered vanished


def similarity_vector(frame_vector, calibration: CalibrationSet, measure: MeasureSpec) -> np.ndarray:
    """Measure values between one frame vector and every calibration entry."""
    vec = np.asarray(frame_vector, dtype=float).reshape(-1)
    if vec.shape[0] != calibration.channel_count:
        raise DimensionError(
            f"frame has {vec.shape[0]} channels, calibration has {calibration.channel_count}"
        )
    return pairwise(measure, vec[None, :], calibration.means)[0]


def augment(calibration: CalibrationSet, frame_vector, true_target: ScreenPoint) -> CalibrationSet:
    """Calibration set with one appended (measurement, target) entry.

    Model objects caching a factorization of C must be rebuilt from the
    returned set.
    """
    return calibration.append(frame_vector, true_target)


class GprModel:
    """Gaussian-process-style regressor over a calibration set.

    The factorization of (C + eps*I) is computed once at construction and
    cached; build a new model after augmenting the calibration set.
    """

    def __init__(self, calibration: CalibrationSet, measure: MeasureSpec, jitter: float = 1e-8):
        if jitter <= 0:
            raise ConfigError("jitter must be positive")
        self.calibration = calibration
        self.measure = measure
        self.jitter = jitter
        self.name = f"gpr-{measure.kind}"
        C = pairwise(measure, calibration.means, calibration.means)
        # Jitter scales with the magnitude of C so normalized and raw-unit
        # calibrations behave alike; an all-zero C falls back to absolute.
        base = float(np.mean(np.abs(C)))
        self._jitter_base = base if base > 0 else 1.0
        self._factorize(C)

    def _factorize(self, C: np.ndarray) -> None:
        n = C.shape[0]
        scale = self.jitter
        while True:
            eps = scale * self._jitter_base
            try:
                lu = lu_factor(C + eps * np.eye(n), check_finite=False)
                ok = np.all(np.isfinite(lu[0]))
            except (ValueError, np.linalg.LinAlgError):
                ok = False
            if ok:
                probe = lu_solve(lu, np.ones(n), check_finite=False)
                ok = bool(np.all(np.isfinite(probe)))
            if ok:
                self._lu = lu
                self.effective_jitter = eps
                return
            scale *= 10.0
            if scale > JITTER_CAP:
                raise EstimationError(
                    "covariance solve failed even at maximum diagonal jitter"
                )

    def estimate_batch(self, X) -> np.ndarray:
        """Estimated screen positions, one row per row of X (n, M)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        K = pairwise(self.measure, X, self.calibration.means)  # (n, P)
        Z = lu_solve(self._lu, K.T, check_finite=False)  # (P, n)
        E = Z.T @ self.calibration.targets  # (n, 2)
        if not np.all(np.isfinite(E)):
            raise EstimationError("gaze estimate is not finite")
        return E

    def estimate(self, frame_vector, timestamp_us: int = 0) -> GazeEstimate:
        e = self.estimate_batch(np.asarray(frame_vector, dtype=float)[None, :])[0]
        return GazeEstimate(timestamp_us, ScreenPoint(float(e[0]), float(e[1])), self.name)

    def augmented(self, frame_vector, true_target: ScreenPoint) -> "GprModel":
        """New model over the augmented calibration set (refactorized)."""
        return GprModel(augment(self.calibration, frame_vector, true_target),
                        self.measure, self.jitter)


class SvrModel:
    """Kernel-weighted-sum regressor with RBF similarities.

    ``normalize=True`` (the default) divides by the weight sum, making the
    estimate a convex combination of stored targets; ``normalize=False``
    reproduces the bare weighted sum.
    """

    def __init__(self, calibration: CalibrationSet, sigma: float,
                 normalize: bool = True, rbf_squared: bool = False):
        if sigma <= 0:
            raise ConfigError("sigma must be positive")
        self.calibration = calibration
        self.sigma = sigma
        self.normalize = normalize
        self.measure = MeasureSpec(kind="rbf", sigma=sigma, rbf_squared=rbf_squared)
        self.name = "svr-rbf"

    def estimate_batch(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        K = pairwise(self.measure, X, self.calibration.means)  # (n, P)
        E = K @ self.calibration.targets
        if self.normalize:
            s = K.sum(axis=1)
            if np.any(s <= _SUM_EPS):
                raise EstimationError(
                    "all similarity weights vanished; sigma too small for this frame"
                )
            E = E / s[:, None]
        return E

    def estimate(self, frame_vector, timestamp_us: int = 0) -> GazeEstimate:
        e = self.estimate_batch(np.asarray(frame_vector, dtype=float)[None, :])[0]
        return GazeEstimate(timestamp_us, ScreenPoint(float(e[0]), float(e[1])), self.name)

    def augmented(self, frame_vector, true_target: ScreenPoint) -> "SvrModel":
        return SvrModel(augment(self.calibration, frame_vector, true_target),
                        self.sigma, self.normalize, self.measure.rbf_squared)


def grid_search_sigma(calibration: CalibrationSet, validation, grid,
                      normalize: bool = True, rbf_squared: bool = False) -> float:
    """Grid sigma minimizing mean SVR error over a validation set.

    ``validation`` is a sequence of (frame_vector, target ScreenPoint) pairs
    or an (X, targets-array) tuple. Ties break toward the smaller sigma.
    The pixel-space mean error is minimized; the fixed degrees-per-pixel
    scale cannot change the argmin.
    """
    grid = [float(s) for s in grid]
    if not grid:
        raise ConfigError("sigma grid must be non-empty")
    if any(s <= 0 for s in grid):
        raise ConfigError("all sigma candidates must be positive")
    if isinstance(validation, tuple) and len(validation) == 2:
        X = np.atleast_2d(np.asarray(validation[0], dtype=float))
        T = np.atleast_2d(np.asarray(validation[1], dtype=float))
    else:
        pairs = list(validation)
        if not pairs:
            raise ConfigError("validation set must be non-empty")
        X = np.vstack([np.asarray(v, dtype=float) for v, _ in pairs])
        T = np.asarray([[p.x, p.y] for _, p in pairs], dtype=float)
    if X.shape[0] == 0:
        raise ConfigError("validation set must be non-empty")

    best_sigma = None
    best_err = None
    for s in grid:
        model = SvrModel(calibration, s, normalize=normalize, rbf_squared=rbf_squared)
        try:
            E = model.estimate_batch(X)
        except EstimationError:
            continue
        err = float(np.mean(np.hypot(E[:, 0] - T[:, 0], E[:, 1] - T[:, 1])))
        if best_err is None or err < best_err or (err == best_err and s < best_sigma):
            best_err = err
            best_sigma = s
    if best_sigma is None:
        raise EstimationError("no sigma candidate produced finite estimates")
    return best_sigma
