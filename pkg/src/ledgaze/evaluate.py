"""Accuracy evaluation, estimator comparison, sweeps, and task scenarios.

Angular errors are computed against the stimulus target over frames outside
the excluded regions: blink intervals and target-move windows (stimulus step
until the gaze lands on the new target), each padded by the low-pass
filter's settling tail so transients never leak into the statistics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    CalibrationSet,
    ConfigError,
    DisplayGeometry,
    InsufficientDataError,
    ScreenPoint,
)
from .eyesim import EyeSimulator, HeadsetShift, SessionLog, SubjectProfile, apply_shift
from .kernels import MeasureSpec
from .regress import GprModel, SvrModel, grid_search_sigma
from .session import (
    SessionConfig,
    calibration_phase,
    evaluation_phase,
    derive_seed,
    iir_settle_frames,
    run_benchmark_session,
)

HIST_BIN_DEG = 0.25
PAD_ATTENUATION = 0.01  # exclusion windows end once transients decay to 1%


def default_pad_us(log: SessionLog) -> int:
    alpha = float(log.meta.get("iir_alpha", 1.0))
    cycle = int(log.meta.get("cycle_us", 0))
    return iir_settle_frames(alpha, PAD_ATTENUATION) * cycle


def exclusion_intervals(log: SessionLog, pad_us: int | None = None,
                        kind: str | None = None) -> list[tuple[int, int]]:
    """Closed time intervals whose frames are dropped from statistics."""
    pad = default_pad_us(log) if pad_us is None else int(pad_us)
    end_us = int(log.t_us[-1]) if log.n_frames else 0
    out = []
    for ev in log.events:
        if ev.get("kind") == "blink" and kind in (None, "blink"):
            out.append((int(ev["t0_us"]), int(ev["t1_us"]) + pad))
        elif ev.get("kind") == "target_move" and kind in (None, "target_move"):
            settle = ev.get("t_settle_us")
            hi = end_us if settle is None else int(settle)
            out.append((int(ev["t_move_us"]), hi + pad))
    return out


def _mask_from_intervals(log: SessionLog, intervals) -> np.ndarray:
    mask = np.zeros(log.n_frames, dtype=bool)
    for lo, hi in intervals:
        mask |= (log.t_us >= lo) & (log.t_us <= hi)
    return mask


def excluded_mask(log: SessionLog, pad_us: int | None = None) -> np.ndarray:
    return _mask_from_intervals(log, exclusion_intervals(log, pad_us))


@dataclass
class AccuracyReport:
    """Angular-error statistics over the non-excluded frames of one run."""

    method: str
    mean_deg: float
    median_deg: float
    std_deg: float
    n_frames: int
    n_excluded: int
    n_excluded_blink: int
    n_excluded_move: int
    n_used: int
    hist_edges_deg: list[float]
    hist_mass: list[float]
    per_target: list[dict]

    def to_dict(self, config: SessionConfig | None = None, seed: int | None = None) -> dict:
        d = {
            "method": self.method,
            "mean_deg": self.mean_deg,
            "median_deg": self.median_deg,
            "std_deg": self.std_deg,
            "n_frames": self.n_frames,
            "n_excluded": self.n_excluded,
            "n_excluded_blink": self.n_excluded_blink,
            "n_excluded_move": self.n_excluded_move,
            "n_used": self.n_used,
            "hist_edges_deg": self.hist_edges_deg,
            "hist_mass": self.hist_mass,
            "per_target": self.per_target,
        }
        if config is not None:
            d["config"] = config.to_dict()
        if seed is not None:
            d["seed"] = seed
        return d


def _error_histogram(err: np.ndarray) -> tuple[list[float], list[float]]:
    top = max(HIST_BIN_DEG, math.ceil(float(err.max()) / HIST_BIN_DEG) * HIST_BIN_DEG)
    edges = np.arange(0.0, top + HIST_BIN_DEG / 2, HIST_BIN_DEG)
    counts, edges = np.histogram(err, bins=edges)
    mass = counts / err.size
    return [float(e) for e in edges], [float(m) for m in mass]


def evaluate_accuracy(log: SessionLog, estimator, geom: DisplayGeometry,
                      pad_us: int | None = None) -> AccuracyReport:
    """Run the estimator over all non-excluded frames and summarize errors."""
    blink_mask = _mask_from_intervals(log, exclusion_intervals(log, pad_us, "blink"))
    move_mask = _mask_from_intervals(log, exclusion_intervals(log, pad_us, "target_move"))
    mask = ~(blink_mask | move_mask)
    n_used = int(mask.sum())
    if n_used == 0:
        raise InsufficientDataError("every frame fell inside an excluded interval")
    X = log.proc[mask]
    targets = log.target[mask]
    est = np.asarray(estimator.estimate_batch(X), dtype=float)
    err = geom.degrees_per_pixel * np.hypot(est[:, 0] - targets[:, 0],
                                            est[:, 1] - targets[:, 1])
    edges, hist_mass = _error_histogram(err)
    per_target = []
    uniq, inverse = np.unique(targets, axis=0, return_inverse=True)
    for i, tgt in enumerate(uniq):
        sel = inverse == i
        per_target.append({
            "target": [float(tgt[0]), float(tgt[1])],
            "n": int(sel.sum()),
            "mean_deg": float(err[sel].mean()),
            "median_deg": float(np.median(err[sel])),
        })
    return AccuracyReport(
        method=getattr(estimator, "name", estimator.__class__.__name__),
        mean_deg=float(err.mean()),
        median_deg=float(np.median(err)),
        std_deg=float(err.std()),
        n_frames=log.n_frames,
        n_excluded=log.n_frames - n_used,
        n_excluded_blink=int(blink_mask.sum()),
        n_excluded_move=int(move_mask.sum()),
        n_used=n_used,
        hist_edges_deg=edges,
        hist_mass=hist_mass,
        per_target=per_target,
    )


def trace_rows(log: SessionLog, estimator, pad_us: int | None = None):
    """Per-frame plot-ready rows: time, target, truth, estimate, excluded."""
    est = np.asarray(estimator.estimate_batch(log.proc), dtype=float)
    excl = excluded_mask(log, pad_us)
    for i in range(log.n_frames):
        yield {
            "t_us": int(log.t_us[i]),
            "target_x": float(log.target[i, 0]),
            "target_y": float(log.target[i, 1]),
            "gaze_x": float(log.gaze[i, 0]),
            "gaze_y": float(log.gaze[i, 1]),
            "estimate_x": float(est[i, 0]),
            "estimate_y": float(est[i, 1]),
            "excluded": int(excl[i]),
        }


# -- estimator comparison ------------------------------------------------------


def _sigma_by_holdout(calibration: CalibrationSet, grid, seed: int,
                      normalize: bool, holdout_fraction: float = 0.25) -> float:
    """Grid-search sigma against a seeded held-out slice of the calibration."""
    P = calibration.point_count
    n_val = max(1, int(round(P * holdout_fraction)))
    if P - n_val < 1:
        raise ConfigError("calibration too small to hold out a validation slice")
    order = np.random.default_rng(np.random.SeedSequence([int(seed), 51])).permutation(P)
    val_idx = np.sort(order[:n_val])
    fit_idx = np.sort(order[n_val:])
    fit = CalibrationSet(calibration.means[fit_idx], calibration.targets[fit_idx])
    validation = (calibration.means[val_idx], calibration.targets[val_idx])
    return grid_search_sigma(fit, validation, grid, normalize=normalize)


def compare_estimators(log: SessionLog, calibration: CalibrationSet,
                       config: SessionConfig,
                       all_measures: bool = False) -> dict:
    """Paired accuracy of GPR and sigma-tuned SVR on identical frames."""
    geom = config.geometry()
    gpr = GprModel(calibration, MeasureSpec(kind="minkowski", m=config.minkowski_m),
                   jitter=config.jitter)
    sigma = _sigma_by_holdout(calibration, config.sigma_grid, config.seed,
                              config.svr_normalize)
    svr = SvrModel(calibration, sigma, normalize=config.svr_normalize,
                   rbf_squared=config.rbf_squared)
    reports = [
        evaluate_accuracy(log, gpr, geom),
        evaluate_accuracy(log, svr, geom),
    ]
    if all_measures:
        for kind in ("cosine", "manhattan", "canberra"):
            model = GprModel(calibration, MeasureSpec(kind=kind), jitter=config.jitter)
            reports.append(evaluate_accuracy(log, model, geom))
    return {
        "svr_sigma": sigma,
        "sigma_selection": {"method": "holdout", "fraction": 0.25,
                            "grid": list(config.sigma_grid)},
        "reports": [r.to_dict() for r in reports],
        "mean_diff_deg": reports[0].mean_deg - reports[1].mean_deg,
        "gpr_beats_svr": reports[0].mean_deg < reports[1].mean_deg,
    }


# -- parameter sweeps ----------------------------------------------------------


def rank_channels_by_variance(calibration: CalibrationSet) -> list[int]:
    """Channel indices ordered by signal variation across stored targets."""
    var = np.var(calibration.means, axis=0)
    return [int(i) for i in np.argsort(-var, kind="stable")]


def sweep(config: SessionConfig, axis: str, values) -> dict:
    """Angular error as one design variable changes, everything else fixed."""
    values = list(values)
    if not values:
        raise ConfigError("sweep needs at least one value")
    geom = config.geometry()
    layout = config.layout()
    subject = config.subject()
    measure = config.measure()
    rows = []
    if axis == "led_count":
        if min(values) < 4:
            raise ConfigError("led_count sweep starts at 4 channels")
        if max(values) > layout.total_channels:
            raise ConfigError("more channels requested than the layout provides")
        log, cal = run_benchmark_session(config)
        ranked = rank_channels_by_variance(cal)
        for v in values:
            idx = sorted(ranked[:int(v)])
            model = GprModel(cal.select_channels(idx), measure, jitter=config.jitter)
            sliced = SessionLog(log.t_us, log.raw[:, idx], log.proc[:, idx],
                                log.gaze, log.target, log.events, log.meta)
            rep = evaluate_accuracy(sliced, model, geom)
            rows.append({"value": int(v), "channels": idx, **_sweep_stats(rep)})
    elif axis == "calibration_points":
        log = evaluation_phase(config, subject, layout, config.seed)
        for v in values:
            side = math.isqrt(int(v))
            if side * side != int(v):
                raise ConfigError(f"calibration_points value {v} is not a square grid")
            cfg_v = config.replace(grid_rows=side, grid_cols=side)
            cal = calibration_phase(cfg_v, subject, layout, config.seed)
            model = GprModel(cal, measure, jitter=config.jitter)
            rep = evaluate_accuracy(log, model, geom)
            rows.append({"value": int(v), **_sweep_stats(rep)})
    else:
        raise ConfigError(f"unknown sweep axis {axis!r}")
    return {"axis": axis, "rows": rows, "config": config.to_dict(), "seed": config.seed}


def _sweep_stats(rep: AccuracyReport) -> dict:
    return {"mean_deg": rep.mean_deg, "median_deg": rep.median_deg,
            "std_deg": rep.std_deg, "n_used": rep.n_used}


# -- selection-task scenarios ---------------------------------------------------


@dataclass(frozen=True)
class TaskSpec:
    """Dwell-to-select task parameters for one session."""

    candidates_min: int = 3
    candidates_max: int = 8
    dwell_to_select_ms: float = 3000.0
    tasks_per_session: int = 50
    target_radius_px: float = 12.5
    window_threshold: float = 0.95

    @classmethod
    def from_config(cls, config: SessionConfig) -> "TaskSpec":
        return cls(config.task_candidates_min, config.task_candidates_max,
                   config.task_dwell_ms, config.task_count,
                   config.target_radius_px(), config.task_window_threshold)


@dataclass
class TaskSessionResult:
    successes: list[bool]
    tasks: list[dict]
    final_points: int

    @property
    def success_ratio(self) -> float:
        return float(np.mean(self.successes))

    def half_rates(self) -> tuple[float, float]:
        half = len(self.successes) // 2
        return (float(np.mean(self.successes[:half])),
                float(np.mean(self.successes[half:])))


def run_task_session(config: SessionConfig, calibration: CalibrationSet | None,
                     subject: SubjectProfile, seed: int,
                     shift: HeadsetShift | None = None) -> TaskSessionResult:
    """One session of dwell-to-select tasks with online augmentation.

    A task succeeds when at least ``window_threshold`` of the dwell-window
    estimates stay inside the target's disc; a failure feeds the measured
    dwell mean plus the true target back into the calibration.
    """
    if calibration is None:
        raise ConfigError("task sessions need a starting calibration set")
    spec = TaskSpec.from_config(config)
    geom = config.geometry()
    layout = config.layout()
    if shift is not None:
        layout = apply_shift(layout, shift)
    engine = EyeSimulator(layout, subject, config.sim_config(), derive_seed(seed, 61))
    task_rng = np.random.default_rng(np.random.SeedSequence([derive_seed(seed, 62)]))
    model = config.build_estimator(calibration)
    settle_us = (int((subject.srt_mean_ms + 4 * subject.srt_std_ms) * 1000.0)
                 + iir_settle_frames(config.iir_alpha, 1e-3) * engine.cycle_us
                 + 2 * engine.cycle_us)
    m = config.grid_margin
    successes: list[bool] = []
    tasks: list[dict] = []
    for i in range(spec.tasks_per_session):
        n_cand = int(task_rng.integers(spec.candidates_min, spec.candidates_max + 1))
        cand = np.column_stack([
            task_rng.uniform(m, geom.width - m, n_cand),
            task_rng.uniform(m, geom.height - m, n_cand),
        ])
        target = ScreenPoint(float(cand[0, 0]), float(cand[0, 1]))
        engine.move_target(target)
        engine.run(settle_us)
        engine.take_frames()  # reaction + transient, not judged
        engine.run(int(spec.dwell_to_select_ms * 1000.0))
        _, _, proc, _, _ = engine.take_frames()
        est = np.asarray(model.estimate_batch(proc), dtype=float)
        dist = np.hypot(est[:, 0] - target.x, est[:, 1] - target.y)
        inside = float(np.mean(dist <= spec.target_radius_px))
        success = inside >= spec.window_threshold
        if not success:
            # The subject keeps gazing and presses the feedback button; the
            # dwell mean becomes online training data.
            model = model.augmented(proc.mean(axis=0), target)
        successes.append(success)
        tasks.append({
            "index": i,
            "target": [target.x, target.y],
            "candidates": n_cand,
            "inside_fraction": inside,
            "success": bool(success),
        })
    return TaskSessionResult(successes, tasks, model.calibration.point_count)


SCENARIOS = ("calibrated", "same_user_prior", "cross_user_prior")


def _remount_shift(seed: int, std_mm: float) -> HeadsetShift:
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 71]))
    return HeadsetShift(tuple(rng.normal(0.0, std_mm, 2)))


def run_scenario_session(config: SessionConfig, scenario: str, seed: int,
                         prior_calibration: CalibrationSet | None = None) -> dict:
    """One subject-session under the given calibration-provenance scenario."""
    if scenario not in SCENARIOS:
        raise ConfigError(f"unknown scenario {scenario!r}")
    subject = config.subject(config.subject_seed + seed)
    mount = _remount_shift(derive_seed(config.seed, seed, 81), config.remount_shift_std_mm)
    if prior_calibration is not None:
        cal = prior_calibration
    elif scenario == "calibrated":
        # Calibration happens on the same mount the tasks run on.
        layout = apply_shift(config.layout(), mount)
        cal = calibration_phase(config, subject, layout,
                                derive_seed(config.seed, seed, 82))
    elif scenario == "same_user_prior":
        # Same subject, but the headset was re-worn since that calibration.
        prior_mount = _remount_shift(derive_seed(config.seed, seed, 83),
                                     config.remount_shift_std_mm)
        layout = apply_shift(config.layout(), prior_mount)
        cal = calibration_phase(config, subject, layout,
                                derive_seed(config.seed, seed, 84))
    else:
        # Calibration recorded from an entirely different subject.
        other = config.subject(config.subject_seed + seed + 10_000)
        prior_mount = _remount_shift(derive_seed(config.seed, seed, 85),
                                     config.remount_shift_std_mm)
        layout = apply_shift(config.layout(), prior_mount)
        cal = calibration_phase(config, other, layout,
                                derive_seed(config.seed, seed, 86))
    result = run_task_session(config, cal, subject,
                              derive_seed(config.seed, seed, 87), shift=mount)
    first, second = result.half_rates()
    return {
        "scenario": scenario,
        "seed": seed,
        "success_ratio": result.success_ratio,
        "first_half": first,
        "second_half": second,
        "final_points": result.final_points,
    }


def run_scenarios(config: SessionConfig, scenarios=SCENARIOS,
                  n_seeds: int = 20) -> dict:
    """Success-ratio distributions over seeded sessions per scenario."""
    if n_seeds < 1:
        raise ConfigError("need at least one seed")
    rows = []
    for scenario in scenarios:
        if scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {scenario!r}")
        for s in range(n_seeds):
            rows.append(run_scenario_session(config, scenario, s))
    summary = {}
    for scenario in scenarios:
        ratios = [r["success_ratio"] for r in rows if r["scenario"] == scenario]
        firsts = [r["first_half"] for r in rows if r["scenario"] == scenario]
        seconds = [r["second_half"] for r in rows if r["scenario"] == scenario]
        summary[scenario] = {
            "median": float(np.median(ratios)),
            "mean": float(np.mean(ratios)),
            "q1": float(np.percentile(ratios, 25)),
            "q3": float(np.percentile(ratios, 75)),
            "first_half_mean": float(np.mean(firsts)),
            "second_half_mean": float(np.mean(seconds)),
        }
    return {"rows": rows, "summary": summary,
            "config": config.to_dict(), "seed": config.seed}
