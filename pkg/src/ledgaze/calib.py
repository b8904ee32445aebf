"""Calibration-matrix construction from dwell sessions.

Targets are highlighted in seeded-random order; while the subject dwells on
one, sampled vectors are aggregated to a per-channel mean, with the whole
location rejected when any channel's spread exceeds the variance gate.
Rejected locations are re-queued once at the end of the schedule and then
dropped with a warning.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np

from .core import (
    CalibrationError,
    CalibrationSet,
    ConfigError,
    DisplayGeometry,
    InsufficientDataError,
    ScreenPoint,
    SensorFrame,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CalibrationGridSpec:
    """Evenly spaced rows x cols grid inset from the display edges."""

    rows: int
    cols: int
    margin: int = 100

    def __post_init__(self):
        if not (2 <= self.rows <= 8 and 2 <= self.cols <= 8):
            raise ConfigError("grid rows and cols must be in [2, 8]")
        if self.margin < 1:
            raise ConfigError("margin must be at least 1 pixel")

    @property
    def point_count(self) -> int:
        return self.rows * self.cols

    def to_dict(self) -> dict:
        return {"rows": self.rows, "cols": self.cols, "margin": self.margin}


@dataclass(frozen=True)
class DwellConfig:
    """Per-target dwell timing and the variance acceptance gate."""

    fix_duration_ms: float = 1500.0
    sample_interval_ms: float = 10.0
    variance_threshold: float = 0.05  # max per-channel std, normalized units

    def __post_init__(self):
        if self.fix_duration_ms < 2 * self.sample_interval_ms:
            raise ConfigError("dwell must cover at least two samples")
        if self.variance_threshold <= 0:
            raise ConfigError("variance threshold must be positive")

    def to_dict(self) -> dict:
        return {
            "fix_duration_ms": self.fix_duration_ms,
            "sample_interval_ms": self.sample_interval_ms,
            "variance_threshold": self.variance_threshold,
        }


def schedule_targets(grid: CalibrationGridSpec, geom: DisplayGeometry,
                     seed: int) -> list[ScreenPoint]:
    """All grid points exactly once, in a seeded-random order."""
    if 2 * grid.margin >= geom.width or 2 * grid.margin >= geom.height:
        raise ConfigError("grid margin leaves no room inside the display")
    xs = grid.margin + np.arange(grid.cols) * (geom.width - 2 * grid.margin) / (grid.cols - 1)
    ys = grid.margin + np.arange(grid.rows) * (geom.height - 2 * grid.margin) / (grid.rows - 1)
    points = [ScreenPoint(float(x), float(y)) for y in ys for x in xs]
    if any(not geom.contains(p) for p in points):
        raise ConfigError("grid does not fit inside the display")
    order = np.random.default_rng(np.random.SeedSequence([int(seed), 11])).permutation(len(points))
    return [points[i] for i in order]


@dataclass(frozen=True)
class DwellAggregate:
    """Outcome of aggregating one dwell: a mean vector or a rejection."""

    accepted: bool
    mean: np.ndarray | None
    stds: np.ndarray
    bad_channels: tuple[int, ...] = ()


def _as_matrix(frames) -> np.ndarray:
    if len(frames) and isinstance(frames[0], SensorFrame):
        return np.vstack([f.normalized() for f in frames])
    return np.atleast_2d(np.asarray(frames, dtype=float))


def aggregate_point(frames: Sequence, config: DwellConfig) -> DwellAggregate:
    """Per-channel mean of the dwell samples, gated on per-channel spread.

    Accepts raw SensorFrames (normalized internally) or already-processed
    real vectors. Spread is the sample standard deviation (n-1 denominator).
    """
    X = _as_matrix(frames)
    if X.shape[0] < 2:
        raise InsufficientDataError("need at least two samples per dwell")
    stds = np.std(X, axis=0, ddof=1)
    bad = tuple(int(i) for i in np.nonzero(stds > config.variance_threshold)[0])
    if bad:
        return DwellAggregate(False, None, stds, bad)
    return DwellAggregate(True, X.mean(axis=0), stds)


class DwellSource(Protocol):
    """Delivers the sampled vectors for one highlighted target."""

    def acquire(self, target: ScreenPoint) -> np.ndarray:
        """Sampled (n, M) vectors collected while dwelling on the target."""
        ...


def run_calibration(source: DwellSource, grid: CalibrationGridSpec,
                    geom: DisplayGeometry, config: DwellConfig,
                    seed: int) -> CalibrationSet:
    """Build a calibration set by dwelling on every scheduled target.

    Targets failing the variance gate are re-queued once at the end of the
    schedule; a second failure drops them with a logged warning.
    """
    queue = [(t, 0) for t in schedule_targets(grid, geom, seed)]
    retry: list[tuple[ScreenPoint, int]] = []
    entries: list[tuple[np.ndarray, ScreenPoint]] = []
    while queue or retry:
        if not queue:
            queue, retry = retry, []
        target, attempt = queue.pop(0)
        agg = aggregate_point(source.acquire(target), config)
        if agg.accepted:
            entries.append((agg.mean, target))
        elif attempt == 0:
            retry.append((target, 1))
        else:
            log.warning(
                "calibration target (%.0f, %.0f) rejected twice "
                "(channels %s over threshold); dropping it",
                target.x, target.y, list(agg.bad_channels),
            )
    if not entries:
        raise CalibrationError("every calibration target was rejected")
    return CalibrationSet.from_entries(entries)
