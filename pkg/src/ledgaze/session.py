"""Session configuration, simulated session phases, and log serialization.

A full benchmark session mirrors the experimental procedure: a dwell
calibration over a grid, an online-augmentation phase that visits extra
targets during "gameplay", and a scripted evaluation run with saccades and
blinks. Each phase runs on its own engine with a seed derived from the
session seed, so every artifact is replayable bit for bit.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .calib import CalibrationGridSpec, DwellConfig, run_calibration
from .core import CalibrationSet, ConfigError, DisplayGeometry, ScreenPoint
from .eyesim import (
    EyeSimulator,
    GazeScript,
    HeadsetShift,
    LedLayout,
    OpticsModel,
    SessionLog,
    SimConfig,
    SubjectProfile,
    apply_shift,
)
from .kernels import MeasureSpec
from .regress import GprModel, SvrModel, augment

CONFIG_VERSION = 1
LOG_VERSION = 1

DEFAULT_SIGMA_GRID = (0.05, 0.1, 0.2, 0.3, 0.5, 0.8, 1.2, 2.0)


def derive_seed(*parts: int) -> int:
    """Stable child seed for a subsystem, derived from integer labels."""
    ss = np.random.SeedSequence([int(p) for p in parts])
    return int(ss.generate_state(1, np.uint64)[0])


def iir_settle_frames(alpha: float, attenuation: float) -> int:
    """Frames until a first-order IIR step transient decays to the given fraction."""
    if alpha >= 1.0:
        return 0
    return int(math.ceil(math.log(attenuation) / math.log(1.0 - alpha)))


@dataclass(frozen=True)
class SessionConfig:
    """Everything needed to reproduce a session, flat and JSON-friendly."""

    seed: int = 0
    # display
    display_width: int = 800
    display_height: int = 600
    degrees_per_pixel: float = 0.12
    # LED layout
    layout_mode: str = "prototype1"
    ring_radius_mm: float = 16.0
    eye_relief_mm: float = 27.0
    eyes: int = 2
    # synthetic subject
    subject_seed: int = 1
    noise_std: float = 0.01
    # capture timing and signal chain
    step_us: int = 1666
    iir_alpha: float = 0.3
    exposure_init_us: float = 0.0  # 0 selects the per-mode default
    exposure_min_us: float = 25.0
    exposure_max_us: float = 1600.0
    # simulator optics
    lobe_sharpness: float = 1.5
    signal_scale: float = 0.65
    eyelid_level: float = 0.85
    # calibration grid and dwell
    grid_rows: int = 4
    grid_cols: int = 4
    grid_margin: int = 100
    fix_duration_ms: float = 1500.0
    sample_interval_ms: float = 10.0
    variance_threshold: float = 0.05
    # online augmentation phase
    augment_points: int = 66
    augment_dwell_ms: float = 600.0
    # evaluation script
    eval_fixations: int = 40
    eval_fixation_min_ms: float = 800.0
    eval_fixation_max_ms: float = 1400.0
    # estimator
    estimator: str = "gpr"  # "gpr" | "svr"
    measure_kind: str = "minkowski"
    minkowski_m: float = 2.0
    rbf_sigma: float = 0.3
    rbf_squared: bool = False
    svr_normalize: bool = True
    jitter: float = 1e-8
    sigma_grid: tuple[float, ...] = DEFAULT_SIGMA_GRID
    # selection tasks
    task_count: int = 50
    task_dwell_ms: float = 3000.0
    task_candidates_min: int = 3
    task_candidates_max: int = 8
    target_radius_deg: float = 1.5
    task_window_threshold: float = 0.95
    # scenario machinery
    remount_shift_std_mm: float = 0.7

    def __post_init__(self):
        if self.estimator not in ("gpr", "svr"):
            raise ConfigError("estimator must be 'gpr' or 'svr'")
        if self.layout_mode not in ("prototype1", "prototype2"):
            raise ConfigError("layout_mode must be 'prototype1' or 'prototype2'")
        if not (3 <= self.task_candidates_min <= self.task_candidates_max <= 8):
            raise ConfigError("task candidate counts must lie in [3, 8]")

    # -- constructors for the domain objects --------------------------------

    def geometry(self) -> DisplayGeometry:
        return DisplayGeometry(self.display_width, self.display_height,
                               self.degrees_per_pixel)

    def layout(self) -> LedLayout:
        maker = LedLayout.prototype1 if self.layout_mode == "prototype1" else LedLayout.prototype2
        return maker(eyes=self.eyes, ring_radius_mm=self.ring_radius_mm,
                     eye_relief_mm=self.eye_relief_mm)

    def subject(self, seed: int | None = None) -> SubjectProfile:
        return SubjectProfile.generate(
            self.subject_seed if seed is None else seed,
            channels=self.layout().total_channels,
            noise_std=self.noise_std,
        )

    def optics(self) -> OpticsModel:
        return OpticsModel(lobe_sharpness=self.lobe_sharpness,
                           signal_scale=self.signal_scale,
                           eyelid_level=self.eyelid_level)

    def sim_config(self) -> SimConfig:
        exposure = self.exposure_init_us
        if exposure <= 0:
            # prototype2 sums several illuminators per capture, so it needs a
            # shorter integration window to stay off the ADC ceiling
            exposure = 400.0 if self.layout_mode == "prototype1" else 100.0
        return SimConfig(
            geom=self.geometry(),
            step_us=self.step_us,
            iir_alpha=self.iir_alpha,
            exposure_init_us=exposure,
            exposure_min_us=self.exposure_min_us,
            exposure_max_us=self.exposure_max_us,
            optics=self.optics(),
        )

    def grid(self) -> CalibrationGridSpec:
        return CalibrationGridSpec(self.grid_rows, self.grid_cols, self.grid_margin)

    def dwell(self) -> DwellConfig:
        return DwellConfig(self.fix_duration_ms, self.sample_interval_ms,
                           self.variance_threshold)

    def measure(self) -> MeasureSpec:
        return MeasureSpec(kind=self.measure_kind, m=self.minkowski_m,
                           sigma=self.rbf_sigma, rbf_squared=self.rbf_squared)

    def target_radius_px(self) -> float:
        return self.target_radius_deg / self.degrees_per_pixel

    def build_estimator(self, calibration: CalibrationSet):
        if self.estimator == "gpr":
            return GprModel(calibration, self.measure(), jitter=self.jitter)
        return SvrModel(calibration, self.rbf_sigma, normalize=self.svr_normalize,
                        rbf_squared=self.rbf_squared)

    # -- serialization -------------------------------------------------------

    def to_dict(self) -> dict:
        d = {"config_version": CONFIG_VERSION}
        for f in fields(self):
            v = getattr(self, f.name)
            d[f.name] = list(v) if isinstance(v, tuple) else v
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SessionConfig":
        known = {f.name for f in fields(cls)}
        kwargs = {k: v for k, v in d.items() if k in known}
        if "sigma_grid" in kwargs:
            kwargs["sigma_grid"] = tuple(float(s) for s in kwargs["sigma_grid"])
        return cls(**kwargs)

    @classmethod
    def load(cls, path) -> "SessionConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

    def replace(self, **kw) -> "SessionConfig":
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d.update(kw)
        return SessionConfig(**d)


@dataclass
class SimulatorDwellSource:
    """Adapter feeding dwell samples from a live engine to the calibrator.

    After the stimulus moves, the source waits out the subject's reaction
    time plus the low-pass transient before sampling, mirroring how a real
    operator would only record once the gaze indicator steadies.
    """

    engine: EyeSimulator
    dwell_ms: float
    settle_attenuation: float = 1e-3

    def settle_us(self) -> int:
        subj = self.engine.subject
        cycle = self.engine.cycle_us
        frames = iir_settle_frames(self.engine.config.iir_alpha, self.settle_attenuation)
        return int((subj.srt_mean_ms + 4 * subj.srt_std_ms) * 1000.0
                   + frames * cycle + 2 * cycle)

    def acquire(self, target: ScreenPoint) -> np.ndarray:
        self.engine.move_target(target)
        self.engine.run(self.settle_us())
        self.engine.take_frames()  # settle-in frames are not sampled
        self.engine.run(int(self.dwell_ms * 1000.0))
        _, _, proc, _, _ = self.engine.take_frames()
        return proc


def calibration_phase(config: SessionConfig, subject: SubjectProfile,
                      layout: LedLayout, seed: int) -> CalibrationSet:
    """Dwell over the scheduled grid and build the calibration matrix."""
    engine = EyeSimulator(layout, subject, config.sim_config(), derive_seed(seed, 21))
    source = SimulatorDwellSource(engine, config.fix_duration_ms)
    return run_calibration(source, config.grid(), config.geometry(),
                           config.dwell(), seed=derive_seed(seed, 22))


def augmentation_phase(config: SessionConfig, subject: SubjectProfile,
                       layout: LedLayout, calibration: CalibrationSet,
                       seed: int) -> CalibrationSet:
    """Visit random gameplay targets, appending each dwell mean as training."""
    engine = EyeSimulator(layout, subject, config.sim_config(), derive_seed(seed, 31))
    source = SimulatorDwellSource(engine, config.augment_dwell_ms)
    rng = np.random.default_rng(np.random.SeedSequence([derive_seed(seed, 32)]))
    geom = config.geometry()
    m = config.grid_margin
    for _ in range(config.augment_points):
        target = ScreenPoint(float(rng.uniform(m, geom.width - m)),
                             float(rng.uniform(m, geom.height - m)))
        samples = source.acquire(target)
        calibration = augment(calibration, samples.mean(axis=0), target)
    return calibration


def evaluation_phase(config: SessionConfig, subject: SubjectProfile,
                     layout: LedLayout, seed: int) -> SessionLog:
    """Scripted run with random fixations, saccade lags, and blinks."""
    geom = config.geometry()
    rng = np.random.default_rng(np.random.SeedSequence([derive_seed(seed, 41)]))
    script = GazeScript.random(
        rng, geom, config.grid_margin, config.eval_fixations,
        (int(config.eval_fixation_min_ms * 1000), int(config.eval_fixation_max_ms * 1000)),
        subject.blink_rate_per_min,
    )
    sim_cfg = config.sim_config()
    if script.duration_us < sim_cfg.cycle_us(layout):
        raise ConfigError("evaluation script shorter than one capture cycle")
    first = next(ev.target for ev in script.events if ev.target is not None)
    engine = EyeSimulator(layout, subject, sim_cfg, derive_seed(seed, 42), start_target=first)
    for ev in script.events:
        engine.run_event(ev)
    return engine.snapshot(extra_meta={"phase": "evaluation", "config": config.to_dict()})


def run_benchmark_session(config: SessionConfig,
                          subject: SubjectProfile | None = None,
                          shift: HeadsetShift | None = None):
    """Calibrate, augment online, then record the scripted evaluation run.

    Returns (session log, augmented calibration set).
    """
    layout = config.layout()
    if shift is not None:
        layout = apply_shift(layout, shift)
    if subject is None:
        subject = config.subject()
    cal = calibration_phase(config, subject, layout, config.seed)
    cal = augmentation_phase(config, subject, layout, cal, config.seed)
    log = evaluation_phase(config, subject, layout, config.seed)
    return log, cal


# -- session log serialization (line-delimited JSON) --------------------------


def write_session_log(log: SessionLog, path, calibration: CalibrationSet | None = None) -> None:
    """One JSON record per line: meta, calibration, events, then frames."""
    with open(path, "w") as fh:
        meta = {"type": "meta", "log_version": LOG_VERSION}
        meta.update(_plain(log.meta))
        fh.write(json.dumps(meta, sort_keys=True) + "\n")
        if calibration is not None:
            fh.write(json.dumps({"type": "calibration", **calibration.to_dict()},
                                sort_keys=True) + "\n")
        for ev in log.events:
            fh.write(json.dumps({"type": "event", **_plain(ev)}, sort_keys=True) + "\n")
        for i in range(log.n_frames):
            rec = {
                "type": "frame",
                "t_us": int(log.t_us[i]),
                "raw": [int(v) for v in log.raw[i]],
                "proc": [float(v) for v in log.proc[i]],
                "gaze": [float(log.gaze[i, 0]), float(log.gaze[i, 1])],
                "target": [float(log.target[i, 0]), float(log.target[i, 1])],
            }
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def read_session_log(path):
    """Inverse of write_session_log; returns (log, calibration-or-None)."""
    meta: dict = {}
    events: list[dict] = []
    cal = None
    t, raw, proc, gaze, target = [], [], [], [], []
    with open(path) as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            kind = rec.pop("type")
            if kind == "meta":
                rec.pop("log_version", None)
                meta = rec
            elif kind == "calibration":
                cal = CalibrationSet.from_dict(rec)
            elif kind == "event":
                events.append(rec)
            elif kind == "frame":
                t.append(rec["t_us"])
                raw.append(rec["raw"])
                proc.append(rec["proc"])
                gaze.append(rec["gaze"])
                target.append(rec["target"])
    if not t:
        raise ConfigError(f"no frames found in session log {path}")
    log = SessionLog(
        np.asarray(t, dtype=np.int64), np.asarray(raw, dtype=np.int64),
        np.asarray(proc, dtype=float), np.asarray(gaze, dtype=float),
        np.asarray(target, dtype=float), events, meta,
    )
    return log, cal


def _plain(obj):
    """Recursively convert numpy scalars/arrays for JSON output."""
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    return obj
