"""Deterministic synthetic eye/LED-ring stand-in for the tracker hardware.

Generates per-LED readings from ground-truth gaze using a cosine-lobe
specular reflectance proxy: the eye is a sphere whose front pole (the
"cornea") mirrors light from each illuminating LED toward each sensing LED,
with the lobe falling off smoothly as the reflected ray misses the sensor.
This is not glint physics; it only has to be a smooth, subject-dependent,
gaze-dependent channel response so the estimation pipeline has something
honest to regress against. All magnitudes are simulator parameters, recorded
in output metadata, not claims about hardware.

Also provides gaze-behavior scripting (fixations, saccades with reaction-time
lag, blinks), headset-shift injection, and the session loop that feeds the
signal-processing chain and logs everything needed for evaluation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .core import ADC_MAX, ConfigError, DisplayGeometry, ScreenPoint, SensorFrame
from .sigproc import SATURATION_HIGH, SATURATION_LOW, CaptureSchedule, ExposureState, IirFilter

# Seed-stream discriminators so subsystems never share a generator.
_STREAM_NOISE = 101
_STREAM_SRT = 102


@dataclass(frozen=True)
class OpticsModel:
    """Simulator optics constants (artifact parameters, not hardware claims)."""

    lobe_sharpness: float = 1.5       # cosine-lobe exponent; higher = peakier
    signal_scale: float = 0.65        # maps summed lobe response to ADC fraction
    eyelid_level: float = 0.85        # normalized signal of a closed eyelid
    reference_exposure_us: float = 400.0
    blink_ramp_ms: float = 50.0       # eyelid close/open ramp duration

    def as_dict(self) -> dict:
        return {
            "lobe_sharpness": self.lobe_sharpness,
            "signal_scale": self.signal_scale,
            "eyelid_level": self.eyelid_level,
            "reference_exposure_us": self.reference_exposure_us,
            "blink_ramp_ms": self.blink_ramp_ms,
        }


@dataclass(frozen=True)
class LedLayout:
    """Ring of LEDs around each magnifier lens.

    prototype1 rings hold sense/sense/illuminate triplets (6 sensing and 3
    illuminating LEDs per eye); prototype2 rings hold 6 dual-role LEDs.
    ``shift_mm`` is a rigid headset translation applied to every LED.
    """

    mode: str
    ring_angles_deg: tuple[float, ...]
    roles: tuple[str, ...]
    ring_radius_mm: float = 16.0
    eye_relief_mm: float = 27.0
    eyes: int = 2
    shift_mm: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if len(self.ring_angles_deg) != len(self.roles):
            raise ConfigError("one role per ring position required")
        if len(set(self.ring_angles_deg)) != len(self.ring_angles_deg):
            raise ConfigError("ring positions must be distinct")
        if self.eyes not in (1, 2):
            raise ConfigError("eyes must be 1 or 2")
        for r in self.roles:
            if r not in ("sense", "illuminate", "both"):
                raise ConfigError(f"unknown LED role {r!r}")
        if self.ring_radius_mm <= 0 or self.eye_relief_mm <= 0:
            raise ConfigError("ring radius and eye relief must be positive")

    @classmethod
    def prototype1(cls, eyes: int = 2, **kw) -> "LedLayout":
        angles = tuple(i * 40.0 for i in range(9))
        roles = ("sense", "sense", "illuminate") * 3
        return cls("prototype1", angles, roles, eyes=eyes, **kw)

    @classmethod
    def prototype2(cls, eyes: int = 2, **kw) -> "LedLayout":
        angles = tuple(i * 60.0 for i in range(6))
        roles = ("both",) * 6
        return cls("prototype2", angles, roles, eyes=eyes, **kw)

    @property
    def sensing_indices(self) -> tuple[int, ...]:
        return tuple(i for i, r in enumerate(self.roles) if r != "illuminate")

    @property
    def channels_per_eye(self) -> int:
        return len(self.sensing_indices)

    @property
    def total_channels(self) -> int:
        return self.eyes * self.channels_per_eye

    def schedule(self) -> CaptureSchedule:
        if self.mode == "prototype1":
            return CaptureSchedule.prototype1(groups=len(self.roles) // 3)
        return CaptureSchedule.prototype2(led_count=len(self.roles))

    def led_positions(self, eye: int) -> np.ndarray:
        """(L, 3) LED coordinates in the given eye's local frame, mm.

        The second eye's frame is the first mirrored in x, so the shared
        headset shift flips its x component there.
        """
        mx = 1.0 if eye == 0 else -1.0
        ang = np.radians(np.asarray(self.ring_angles_deg, dtype=float))
        x = mx * (self.ring_radius_mm * np.cos(ang) + self.shift_mm[0])
        y = self.ring_radius_mm * np.sin(ang) + self.shift_mm[1]
        z = np.full_like(x, self.eye_relief_mm)
        return np.stack([x, y, z], axis=1)

    def as_dict(self) -> dict:
        return {
            "mode": self.mode,
            "ring_radius_mm": self.ring_radius_mm,
            "eye_relief_mm": self.eye_relief_mm,
            "eyes": self.eyes,
            "shift_mm": list(self.shift_mm),
        }


@dataclass(frozen=True)
class HeadsetShift:
    """Rigid translation of the whole LED assembly relative to the face."""

    translation_mm: tuple[float, float]
    onset_us: int = 0


def apply_shift(layout: LedLayout, shift: HeadsetShift) -> LedLayout:
    """Layout with the shift's translation added to the current one."""
    dx, dy = shift.translation_mm
    return replace(layout, shift_mm=(layout.shift_mm[0] + dx, layout.shift_mm[1] + dy))


@dataclass(frozen=True)
class SubjectProfile:
    """Synthetic-subject parameters driving the reflectance model."""

    eye_center_offset_mm: tuple[float, float] = (0.0, 0.0)
    second_eye_asym_mm: tuple[float, float] = (0.0, 0.0)
    eye_radius_mm: float = 12.0
    corneal_gain: tuple[float, ...] = (1.0,) * 12
    noise_std: float = 0.01
    srt_mean_ms: float = 200.0
    srt_std_ms: float = 20.0
    blink_rate_per_min: float = 12.0
    seed: int = 0

    def __post_init__(self):
        if any(g <= 0 for g in self.corneal_gain):
            raise ConfigError("corneal gains must be positive")
        if self.noise_std < 0:
            raise ConfigError("noise_std must be non-negative")
        if self.srt_mean_ms <= 0:
            raise ConfigError("srt_mean_ms must be positive")
        if self.eye_radius_mm <= 0:
            raise ConfigError("eye radius must be positive")

    @classmethod
    def generate(cls, seed: int, channels: int = 12, noise_std: float = 0.01) -> "SubjectProfile":
        """Draw a plausible subject; deterministic for a fixed seed."""
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), 7]))
        offset = tuple(np.clip(rng.normal(0.0, 2.5, 2), -5.0, 5.0))
        asym = tuple(rng.normal(0.0, 0.8, 2))
        radius = float(np.clip(rng.normal(12.0, 1.0), 9.5, 14.5))
        gains = tuple(rng.uniform(0.6, 1.4, channels))
        srt_mean = float(np.clip(rng.normal(200.0, 30.0), 120.0, 320.0))
        blink_rate = float(np.clip(rng.normal(12.0, 4.0), 4.0, 28.0))
        return cls(
            eye_center_offset_mm=(float(offset[0]), float(offset[1])),
            second_eye_asym_mm=(float(asym[0]), float(asym[1])),
            eye_radius_mm=radius,
            corneal_gain=tuple(float(g) for g in gains),
            noise_std=float(noise_std),
            srt_mean_ms=srt_mean,
            srt_std_ms=20.0,
            blink_rate_per_min=blink_rate,
            seed=int(seed),
        )

    def eye_center(self, eye: int) -> tuple[float, float]:
        ox, oy = self.eye_center_offset_mm
        if eye == 0:
            return ox, oy
        ax, ay = self.second_eye_asym_mm
        return -ox + ax, oy + ay

    def as_dict(self) -> dict:
        return {
            "eye_center_offset_mm": list(self.eye_center_offset_mm),
            "second_eye_asym_mm": list(self.second_eye_asym_mm),
            "eye_radius_mm": self.eye_radius_mm,
            "corneal_gain": list(self.corneal_gain),
            "noise_std": self.noise_std,
            "srt_mean_ms": self.srt_mean_ms,
            "srt_std_ms": self.srt_std_ms,
            "blink_rate_per_min": self.blink_rate_per_min,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class ScriptEvent:
    kind: str  # "fixation" | "saccade" | "blink"
    duration_us: int = 0
    target: ScreenPoint | None = None


@dataclass(frozen=True)
class GazeScript:
    """Timeline of non-overlapping gaze-behavior events."""

    events: tuple[ScriptEvent, ...]

    def __post_init__(self):
        if not self.events:
            raise ConfigError("script must contain at least one event")
        for ev in self.events:
            if ev.kind == "fixation":
                if ev.target is None or ev.duration_us <= 0:
                    raise ConfigError("fixation needs a target and positive duration")
            elif ev.kind == "saccade":
                if ev.target is None or ev.duration_us != 0:
                    raise ConfigError("saccade is a zero-duration target change")
            elif ev.kind == "blink":
                if ev.duration_us <= 0:
                    raise ConfigError("blink needs a positive duration")
            else:
                raise ConfigError(f"unknown script event {ev.kind!r}")

    @property
    def duration_us(self) -> int:
        return sum(ev.duration_us for ev in self.events)

    @staticmethod
    def fixations(points, each_us: int) -> "GazeScript":
        return GazeScript(tuple(ScriptEvent("fixation", int(each_us), p) for p in points))

    @staticmethod
    def random(rng: np.random.Generator, geom: DisplayGeometry, margin: int,
               n_fixations: int, fixation_us: tuple[int, int],
               blink_rate_per_min: float, blink_us: int = 150_000) -> "GazeScript":
        """Random fixation sequence with rate-matched blinks in between."""
        events: list[ScriptEvent] = []
        lo, hi = fixation_us
        mean_fix_s = (lo + hi) / 2e6
        p_blink = min(0.9, blink_rate_per_min * mean_fix_s / 60.0)
        for i in range(n_fixations):
            x = rng.uniform(margin, geom.width - margin)
            y = rng.uniform(margin, geom.height - margin)
            dur = int(rng.integers(lo, hi + 1))
            events.append(ScriptEvent("fixation", dur, ScreenPoint(float(x), float(y))))
            if i < n_fixations - 1 and rng.random() < p_blink:
                events.append(ScriptEvent("blink", int(blink_us)))
        return GazeScript(tuple(events))


@dataclass(frozen=True)
class SimConfig:
    """Session-level simulator and signal-chain configuration."""

    geom: DisplayGeometry
    step_us: int = 1666
    iir_alpha: float = 0.3
    exposure_init_us: float = 400.0
    exposure_min_us: float = 25.0
    exposure_max_us: float = 1600.0
    optics: OpticsModel = OpticsModel()
    adapt_block_frames: int = 256  # exposure adaptation granularity

    def __post_init__(self):
        if self.step_us <= 0:
            raise ConfigError("step_us must be positive")

    def cycle_us(self, layout: LedLayout) -> int:
        # Both eyes' chains run in parallel, one microcontroller each.
        return self.step_us * layout.channels_per_eye


@dataclass
class SessionLog:
    """Complete record of one simulated run, column-oriented for speed."""

    t_us: np.ndarray        # (N,) int64 frame timestamps
    raw: np.ndarray         # (N, M) int ADC counts
    proc: np.ndarray        # (N, M) float regression-ready vectors
    gaze: np.ndarray        # (N, 2) ground-truth gaze, px
    target: np.ndarray      # (N, 2) stimulus target, px
    events: list[dict]
    meta: dict

    @property
    def n_frames(self) -> int:
        return self.t_us.shape[0]

    @property
    def channel_count(self) -> int:
        return self.raw.shape[1]

    def sensor_frames(self):
        for t, row in zip(self.t_us, self.raw):
            yield SensorFrame(int(t), tuple(int(v) for v in row))

    def subset(self, mask: np.ndarray) -> "SessionLog":
        """Log restricted to the masked frames (events kept verbatim)."""
        return SessionLog(
            self.t_us[mask], self.raw[mask], self.proc[mask],
            self.gaze[mask], self.target[mask],
            [dict(e) for e in self.events], dict(self.meta),
        )


class EyeSimulator:
    """Stateful session engine: stimulus control, optics, signal chain, log.

    One instance is single-threaded; parallel sweeps use one instance per
    worker with distinct seeds. All randomness comes from generators derived
    from the constructor seed, so identical inputs replay bit-identically.
    """

    def __init__(self, layout: LedLayout, subject: SubjectProfile, config: SimConfig,
                 seed: int, start_target: ScreenPoint | None = None):
        if len(subject.corneal_gain) != layout.total_channels:
            raise ConfigError(
                f"subject has {len(subject.corneal_gain)} channel gains, "
                f"layout needs {layout.total_channels}"
            )
        self.layout = layout
        self.subject = subject
        self.config = config
        self.seed = int(seed)
        self.geom = config.geom
        self.schedule = layout.schedule()
        self.cycle_us = config.cycle_us(layout)
        self._noise_rng = np.random.default_rng(np.random.SeedSequence([self.seed, _STREAM_NOISE]))
        self._srt_rng = np.random.default_rng(np.random.SeedSequence([self.seed, _STREAM_SRT]))
        self.exposure = ExposureState.uniform(
            layout.total_channels, config.exposure_init_us,
            config.exposure_min_us, config.exposure_max_us,
        )
        self.iir = IirFilter(config.iir_alpha)
        start = start_target if start_target is not None else self.geom.center
        self.stim_target = start
        self.gaze_target = start
        self._pending_move: dict | None = None  # {"switch_us", "event"}
        self.frame_index = 0
        self._blocks: list[tuple] = []
        self.events: list[dict] = []

    # -- stimulus control ---------------------------------------------------

    @property
    def t_us(self) -> int:
        return self.frame_index * self.cycle_us

    def move_target(self, target: ScreenPoint) -> None:
        """Step the stimulus; the eye follows after a reaction-time lag."""
        if target == self.stim_target:
            return
        if self._pending_move is not None:
            # Superseded before the eye settled; close its exclusion window
            # where the new one begins.
            self._pending_move["event"]["t_settle_us"] = self.t_us
            self._pending_move = None
        srt_us = max(0.0, self._srt_rng.normal(self.subject.srt_mean_ms * 1000.0,
                                               self.subject.srt_std_ms * 1000.0))
        event = {
            "kind": "target_move",
            "t_move_us": self.t_us,
            "t_settle_us": None,
            "from": [self.stim_target.x, self.stim_target.y],
            "to": [target.x, target.y],
        }
        self.events.append(event)
        self._pending_move = {"switch_us": self.t_us + srt_us, "event": event,
                              "to": target}
        self.stim_target = target

    def apply_shift(self, shift: HeadsetShift) -> None:
        """Rigidly shift the LED assembly from now on (headset slip)."""
        self.layout = apply_shift(self.layout, shift)
        self.events.append({
            "kind": "shift",
            "t_us": self.t_us,
            "translation_mm": list(shift.translation_mm),
        })

    # -- optics core --------------------------------------------------------

    def _clean_signal(self, gaze_xy: np.ndarray) -> np.ndarray:
        return clean_signal(self.layout, self.subject, self.geom,
                            self.config.optics, self.schedule, gaze_xy)

    def _sense_block(self, gaze_xy: np.ndarray, blink_blend: np.ndarray):
        """Quantized ADC readings plus per-frame exposure scales, (n, M).

        Exposure adapts after every capture, exactly as the one-channel
        adapt_exposure rule. Blocks whose readings stay clear of both
        adaptation thresholds take a vectorized shortcut; anything near the
        thresholds replays the same signal and noise frame by frame so the
        exposure recurrence is honored.
        """
        optics = self.config.optics
        n = gaze_xy.shape[0]
        clean = self._clean_signal(gaze_xy)
        if self.subject.noise_std > 0:
            noise = self._noise_rng.normal(0.0, self.subject.noise_std, clean.shape)
        else:
            noise = np.zeros_like(clean)
        exp = self.exposure.as_array()
        emin, emax = self.exposure.exp_min_us, self.exposure.exp_max_us
        ref = optics.reference_exposure_us

        def mix(pre_rows, scale, b):
            if np.any(b > 0):
                eyelid = optics.eyelid_level * scale
                pre_rows = (1.0 - b) * pre_rows + b * eyelid
            return pre_rows

        # Shortcut: with the current exposure held, would any reading touch
        # an adaptation threshold it could act on?
        scale0 = exp / ref
        pre = mix(clean * scale0[None, :], scale0[None, :], blink_blend[:, None])
        raw = np.rint(np.clip(pre + noise, 0.0, 1.0) * ADC_MAX).astype(np.int64)
        high = (raw >= SATURATION_HIGH) & (exp > emin)[None, :]
        low = (raw <= SATURATION_LOW) & (exp < emax)[None, :]
        if not (high.any() or low.any()):
            return raw, np.broadcast_to(scale0, raw.shape).copy()

        raws = np.empty_like(raw)
        scales = np.empty_like(clean)
        exp = exp.copy()
        for i in range(n):
            scale = exp / ref
            pre_i = mix(clean[i] * scale, scale, blink_blend[i])
            r = np.rint(np.clip(pre_i + noise[i], 0.0, 1.0) * ADC_MAX).astype(np.int64)
            raws[i] = r
            scales[i] = scale
            hi = r >= SATURATION_HIGH
            lo = r <= SATURATION_LOW
            if hi.any() or lo.any():
                exp = np.where(hi, exp / 2.0, np.where(lo, exp * 2.0, exp))
                np.clip(exp, emin, emax, out=exp)
        self.exposure = ExposureState(tuple(float(e) for e in exp), emin, emax)
        return raws, scales

    # -- session loop -------------------------------------------------------

    def run(self, duration_us: int, blink: bool = False) -> None:
        """Advance the session by a span of frames at the current stimulus."""
        n_total = int(round(duration_us / self.cycle_us))
        if n_total <= 0:
            return
        t_block_start = self.t_us
        if blink:
            self.events.append({
                "kind": "blink",
                "t0_us": t_block_start,
                "t1_us": t_block_start + n_total * self.cycle_us,
            })
        done = 0
        while done < n_total:
            n = min(n_total - done, self.config.adapt_block_frames)
            t = (self.frame_index + np.arange(n, dtype=np.int64)) * self.cycle_us
            gaze_xy = np.empty((n, 2))
            # Resolve the reaction-time lag: frames before the switch keep
            # looking wherever the eye currently rests.
            if self._pending_move is not None:
                switch = self._pending_move["switch_us"]
                to = self._pending_move["to"]
                before = t < switch
                gaze_xy[before] = [self.gaze_target.x, self.gaze_target.y]
                gaze_xy[~before] = [to.x, to.y]
                if np.any(~before):
                    settle = int(t[~before][0])
                    self._pending_move["event"]["t_settle_us"] = settle
                    self._pending_move = None
                    self.gaze_target = to
            else:
                gaze_xy[:] = [self.gaze_target.x, self.gaze_target.y]
            if blink:
                ramp_us = self.config.optics.blink_ramp_ms * 1000.0
                t0 = t_block_start
                t1 = t_block_start + n_total * self.cycle_us
                blend = np.minimum((t - t0) / ramp_us, (t1 - t) / ramp_us)
                blend = np.clip(blend, 0.0, 1.0)
            else:
                blend = np.zeros(n)
            raw, scales = self._sense_block(gaze_xy, blend)
            comp = raw / ADC_MAX / scales  # undo each frame's exposure scaling
            proc = self.iir.filter_block(comp)
            tgt = np.tile([self.stim_target.x, self.stim_target.y], (n, 1))
            self._blocks.append((t, raw, proc, gaze_xy, tgt))
            self.frame_index += n
            done += n

    def run_event(self, ev: ScriptEvent) -> None:
        if ev.kind == "saccade":
            self.move_target(ev.target)
        elif ev.kind == "fixation":
            self.move_target(ev.target)
            self.run(ev.duration_us)
        else:
            self.run(ev.duration_us, blink=True)

    def take_frames(self) -> tuple[np.ndarray, ...]:
        """Drain and return frames logged since the last call."""
        if not self._blocks:
            m = self.layout.total_channels
            return (np.empty(0, dtype=np.int64), np.empty((0, m), dtype=np.int64),
                    np.empty((0, m)), np.empty((0, 2)), np.empty((0, 2)))
        cols = tuple(np.concatenate([b[i] for b in self._blocks]) for i in range(5))
        self._blocks = []
        return cols

    def snapshot(self, extra_meta: dict | None = None) -> SessionLog:
        """Session log of everything simulated so far."""
        t, raw, proc, gaze, tgt = self.take_frames()
        self._blocks = [(t, raw, proc, gaze, tgt)]  # keep for later snapshots
        meta = {
            "seed": self.seed,
            "cycle_us": self.cycle_us,
            "adc_max": ADC_MAX,
            "normalization": "exposure-compensated counts / adc_max",
            "layout": self.layout.as_dict(),
            "subject": self.subject.as_dict(),
            "optics": self.config.optics.as_dict(),
            "iir_alpha": self.config.iir_alpha,
            "display": {
                "width": self.geom.width,
                "height": self.geom.height,
                "degrees_per_pixel": self.geom.degrees_per_pixel,
            },
        }
        if extra_meta:
            meta.update(extra_meta)
        return SessionLog(t, raw, proc, gaze, tgt, [dict(e) for e in self.events], meta)


def gaze_directions(geom: DisplayGeometry, gaze_xy: np.ndarray, eye: int) -> np.ndarray:
    """Unit gaze direction vectors in the given eye's local frame, (n, 3).

    The second eye's frame is the first mirrored in x.
    """
    mx = 1.0 if eye == 0 else -1.0
    dpp = math.radians(geom.degrees_per_pixel)
    tx = np.tan((gaze_xy[:, 0] - geom.width / 2.0) * dpp) * mx
    ty = np.tan((gaze_xy[:, 1] - geom.height / 2.0) * dpp)
    d = np.stack([tx, ty, np.ones_like(tx)], axis=1)
    return d / np.linalg.norm(d, axis=1, keepdims=True)


def _eye_frame(layout: LedLayout, subject: SubjectProfile, geom: DisplayGeometry,
               gaze_xy: np.ndarray, eye: int):
    """Shared per-eye geometry: gaze normals and cornea->LED unit vectors."""
    leds = layout.led_positions(eye)
    cx, cy = subject.eye_center(eye)
    dirs = gaze_directions(geom, gaze_xy, eye)
    cornea = dirs * subject.eye_radius_mm
    cornea[:, 0] += cx
    cornea[:, 1] += cy
    v = leds[None, :, :] - cornea[:, None, :]  # cornea -> LED, (n, L, 3)
    v /= np.linalg.norm(v, axis=2, keepdims=True)
    vdotn = np.einsum("nlk,nk->nl", v, dirs)
    return dirs, v, vdotn


def _lobe_sum(dirs, v, vdotn, sensing_led: int, illuminators, q: float) -> np.ndarray:
    """Summed cosine-lobe response at one sensing LED, (n,) pre-gain."""
    acc = np.zeros(dirs.shape[0])
    v_ch = v[:, sensing_led, :]
    for j in sorted(illuminators):
        # Mirror-reflect the ray arriving from LED j about the corneal
        # normal, then score alignment with the sensing LED direction.
        r = 2.0 * vdotn[:, j, None] * dirs - v[:, j, :]
        cos_beta = np.clip(np.einsum("nk,nk->n", r, v_ch), -1.0, 1.0)
        acc += ((1.0 + cos_beta) / 2.0) ** q
    return acc


def clean_signal(layout: LedLayout, subject: SubjectProfile, geom: DisplayGeometry,
                 optics: OpticsModel, schedule: CaptureSchedule,
                 gaze_xy: np.ndarray) -> np.ndarray:
    """Noise-free pre-exposure channel response for each frame, (n, M)."""
    out = np.empty((gaze_xy.shape[0], layout.total_channels), dtype=float)
    for eye in range(layout.eyes):
        dirs, v, vdotn = _eye_frame(layout, subject, geom, gaze_xy, eye)
        for step_idx, (ch_led, illum) in enumerate(schedule.steps):
            ch = eye * layout.channels_per_eye + step_idx
            acc = _lobe_sum(dirs, v, vdotn, ch_led, illum, optics.lobe_sharpness)
            out[:, ch] = optics.signal_scale * subject.corneal_gain[ch] * acc
    return out


def sense(layout: LedLayout, subject: SubjectProfile, geom: DisplayGeometry,
          gaze: ScreenPoint, sensing_channel: int, illuminators_on,
          exposure_us: float, rng: np.random.Generator | None = None,
          optics: OpticsModel = OpticsModel()) -> int:
    """One ADC reading for a single channel and illuminator set.

    Contract-level entry point mirroring one step of the engine's block
    path: cosine-lobe response summed over illuminators, exposure-scaled,
    noise-added, clamped, and quantized to 10 bits.
    """
    if not geom.contains(gaze):
        raise ConfigError("gaze must lie within the display")
    eye, step_idx = divmod(sensing_channel, layout.channels_per_eye)
    if eye >= layout.eyes:
        raise ConfigError(f"channel {sensing_channel} out of range")
    ch_led = layout.sensing_indices[step_idx]
    gaze_xy = np.array([[gaze.x, gaze.y]], dtype=float)
    dirs, v, vdotn = _eye_frame(layout, subject, geom, gaze_xy, eye)
    acc = _lobe_sum(dirs, v, vdotn, ch_led, illuminators_on, optics.lobe_sharpness)[0]
    pre = optics.signal_scale * subject.corneal_gain[sensing_channel] * acc
    pre *= exposure_us / optics.reference_exposure_us
    if rng is not None and subject.noise_std > 0:
        pre += rng.normal(0.0, subject.noise_std)
    pre = min(max(pre, 0.0), 1.0)
    return int(np.rint(pre * ADC_MAX))


def run_script(layout: LedLayout, subject: SubjectProfile, script: GazeScript,
               config: SimConfig, seed: int,
               shift: HeadsetShift | None = None) -> SessionLog:
    """Simulate a full scripted session and return its log.

    An optional headset shift is applied when the session clock passes its
    onset (between script events).
    """
    if script.duration_us < config.cycle_us(layout):
        raise ConfigError("script shorter than one capture cycle")
    first = next(ev.target for ev in script.events if ev.target is not None)
    sim = EyeSimulator(layout, subject, config, seed, start_target=first)
    shifted = False
    for ev in script.events:
        if shift is not None and not shifted and sim.t_us >= shift.onset_us:
            sim.apply_shift(shift)
            shifted = True
        sim.run_event(ev)
    if shift is not None and not shifted:
        sim.apply_shift(shift)
    return sim.snapshot()
