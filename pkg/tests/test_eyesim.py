import math
from dataclasses import replace

import numpy as np
import pytest

from ledgaze.core import ConfigError, DisplayGeometry, ScreenPoint
from ledgaze.eyesim import (
    EyeSimulator,
    GazeScript,
    HeadsetShift,
    LedLayout,
    OpticsModel,
    ScriptEvent,
    SimConfig,
    SubjectProfile,
    apply_shift,
    clean_signal,
    run_script,
    sense,
)
from ledgaze.kernels import MeasureSpec
from ledgaze.regress import GprModel

GEOM = DisplayGeometry(800, 600)
OPTICS = OpticsModel()


def quiet_subject(seed=1, noise=0.0, layout=None):
    layout = layout or LedLayout.prototype1()
    return SubjectProfile.generate(seed, channels=layout.total_channels, noise_std=noise)


# -- layout ------------------------------------------------------------------


def test_prototype1_roles_and_counts():
    lay = LedLayout.prototype1()
    assert lay.roles.count("sense") == 6
    assert lay.roles.count("illuminate") == 3
    assert lay.channels_per_eye == 6
    assert lay.total_channels == 12
    assert lay.sensing_indices == (0, 1, 3, 4, 6, 7)


def test_prototype2_roles_and_counts():
    lay = LedLayout.prototype2()
    assert lay.roles == ("both",) * 6
    assert lay.total_channels == 12
    assert lay.schedule().mode == "prototype2"


def test_layout_one_eye():
    lay = LedLayout.prototype1(eyes=1)
    assert lay.total_channels == 6


def test_layout_validation():
    with pytest.raises(ConfigError):
        LedLayout("prototype1", (0.0, 0.0), ("sense", "sense"))
    with pytest.raises(ConfigError):
        LedLayout.prototype1(eyes=3)


def test_led_positions_second_eye_mirrors_x():
    lay = LedLayout.prototype2()
    p0 = lay.led_positions(0)
    p1 = lay.led_positions(1)
    assert np.allclose(p1[:, 0], -p0[:, 0])
    assert np.allclose(p1[:, 1:], p0[:, 1:])


# -- headset shift ------------------------------------------------------------


def test_apply_zero_shift_is_identity():
    lay = LedLayout.prototype1()
    assert apply_shift(lay, HeadsetShift((0.0, 0.0))) == lay


def test_shift_then_inverse_restores_layout():
    lay = LedLayout.prototype1()
    out = apply_shift(apply_shift(lay, HeadsetShift((2.0, -1.5))),
                      HeadsetShift((-2.0, 1.5)))
    assert np.allclose(out.shift_mm, lay.shift_mm, atol=1e-12)
    assert np.allclose(out.led_positions(0), lay.led_positions(0), atol=1e-12)


def test_shift_translates_all_leds_rigidly():
    lay = LedLayout.prototype1()
    shifted = apply_shift(lay, HeadsetShift((1.0, 2.0)))
    delta = shifted.led_positions(0) - lay.led_positions(0)
    assert np.allclose(delta[:, 0], 1.0)
    assert np.allclose(delta[:, 1], 2.0)
    assert np.allclose(delta[:, 2], 0.0)


def test_midsession_shift_degrades_prior_calibration():
    # calibrate on the unshifted mount, then compare the same script with and
    # without a 2 mm slip; the slipped run must be strictly worse
    from ledgaze.session import SessionConfig, calibration_phase, evaluation_phase
    from ledgaze.evaluate import evaluate_accuracy
    cfg = SessionConfig(seed=77)
    subj = cfg.subject()
    lay = cfg.layout()
    cal = calibration_phase(cfg, subj, lay, cfg.seed)
    model = GprModel(cal, MeasureSpec("minkowski"))
    log_same = evaluation_phase(cfg, subj, lay, cfg.seed)
    log_shifted = evaluation_phase(cfg, subj, apply_shift(lay, HeadsetShift((2.0, 1.0))), cfg.seed)
    err_same = evaluate_accuracy(log_same, model, cfg.geometry()).mean_deg
    err_shifted = evaluate_accuracy(log_shifted, model, cfg.geometry()).mean_deg
    assert err_shifted > err_same


# -- subject profiles -----------------------------------------------------------


def test_subject_generation_deterministic():
    assert SubjectProfile.generate(5) == SubjectProfile.generate(5)
    assert SubjectProfile.generate(5) != SubjectProfile.generate(6)


def test_subject_validation():
    with pytest.raises(ConfigError):
        SubjectProfile(corneal_gain=(1.0, -1.0))
    with pytest.raises(ConfigError):
        SubjectProfile(noise_std=-0.1, corneal_gain=(1.0,) * 12)
    with pytest.raises(ConfigError):
        SubjectProfile(srt_mean_ms=0.0, corneal_gain=(1.0,) * 12)


def test_subjects_with_different_eye_offsets_have_distinct_signals():
    lay = LedLayout.prototype1()
    a = quiet_subject(1)
    b = replace(a, eye_center_offset_mm=(a.eye_center_offset_mm[0] + 1.0,
                                         a.eye_center_offset_mm[1]))
    pts = np.array([[200.0, 300.0], [600.0, 200.0], [400.0, 450.0]])
    sa = clean_signal(lay, a, GEOM, OPTICS, lay.schedule(), pts)
    sb = clean_signal(lay, b, GEOM, OPTICS, lay.schedule(), pts)
    assert np.all(np.linalg.norm(sa - sb, axis=1) > 0)


# -- sense() contract -------------------------------------------------------------


def test_sense_deterministic_without_noise():
    lay = LedLayout.prototype1()
    subj = quiet_subject()
    g = ScreenPoint(300, 200)
    r1 = sense(lay, subj, GEOM, g, 0, {2}, 400.0)
    r2 = sense(lay, subj, GEOM, g, 0, {2}, 400.0)
    assert r1 == r2


def test_sense_toward_led_reads_higher_than_away():
    lay = LedLayout.prototype1()
    subj = quiet_subject()
    sched = lay.schedule()
    for step_idx, (led, illum) in enumerate(sched.steps):
        ang = math.radians(lay.ring_angles_deg[led])
        dx, dy = math.cos(ang), math.sin(ang)
        toward = ScreenPoint(400 + 250 * dx, 300 + 200 * dy)
        away = ScreenPoint(400 - 250 * dx, 300 - 200 * dy)
        r_toward = sense(lay, subj, GEOM, toward, step_idx, illum, 400.0)
        r_away = sense(lay, subj, GEOM, away, step_idx, illum, 400.0)
        assert r_toward > r_away


def test_sense_halved_exposure_halves_midrange_reading():
    lay = LedLayout.prototype1()
    subj = quiet_subject()
    g = ScreenPoint(500, 300)
    full = sense(lay, subj, GEOM, g, 0, {2}, 400.0)
    half = sense(lay, subj, GEOM, g, 0, {2}, 200.0)
    assert 100 < full < 900  # mid-range, clamp not in play
    assert abs(half - full / 2) <= 1.0


def test_sense_more_illuminators_never_decrease_reading():
    lay = LedLayout.prototype2()
    subj = quiet_subject(layout=lay)
    g = ScreenPoint(350, 250)
    r_one = sense(lay, subj, GEOM, g, 0, {1}, 400.0)
    r_two = sense(lay, subj, GEOM, g, 0, {1, 3}, 400.0)
    r_all = sense(lay, subj, GEOM, g, 0, {1, 2, 3, 4, 5}, 400.0)
    assert r_one <= r_two <= r_all


def test_sense_gain_affects_only_its_channel():
    lay = LedLayout.prototype1()
    a = quiet_subject()
    gains = list(a.corneal_gain)
    gains[4] = 1e-9  # effectively dark channel, still positive
    b = replace(a, corneal_gain=tuple(gains))
    pts = np.array([[250.0, 350.0], [550.0, 150.0]])
    sa = clean_signal(lay, a, GEOM, OPTICS, lay.schedule(), pts)
    sb = clean_signal(lay, b, GEOM, OPTICS, lay.schedule(), pts)
    diff = np.abs(sa - sb)
    assert np.all(diff[:, 4] > 0)
    untouched = [c for c in range(12) if c != 4]
    assert np.all(diff[:, untouched] == 0)


def test_sense_requires_gaze_on_display():
    lay = LedLayout.prototype1()
    with pytest.raises(ConfigError):
        sense(lay, quiet_subject(), GEOM, ScreenPoint(900, 300), 0, {2}, 400.0)


# -- scripts ----------------------------------------------------------------------


def test_script_validation():
    with pytest.raises(ConfigError):
        GazeScript(())
    with pytest.raises(ConfigError):
        GazeScript((ScriptEvent("fixation", 0, ScreenPoint(1, 1)),))
    with pytest.raises(ConfigError):
        GazeScript((ScriptEvent("saccade", 10, ScreenPoint(1, 1)),))
    with pytest.raises(ConfigError):
        GazeScript((ScriptEvent("blink", 0),))
    with pytest.raises(ConfigError):
        GazeScript((ScriptEvent("wink", 100),))


def test_script_duration_and_fixation_builder():
    s = GazeScript.fixations([ScreenPoint(1, 2), ScreenPoint(3, 4)], 500_000)
    assert s.duration_us == 1_000_000


def test_random_script_targets_stay_inside_margin():
    rng = np.random.default_rng(70)
    s = GazeScript.random(rng, GEOM, 100, 20, (200_000, 400_000), 15.0)
    for ev in s.events:
        if ev.kind == "fixation":
            assert 100 <= ev.target.x <= 700
            assert 100 <= ev.target.y <= 500


# -- run_script / engine ------------------------------------------------------------


def cfg():
    return SimConfig(geom=GEOM)


def test_run_script_too_short_raises():
    script = GazeScript((ScriptEvent("fixation", 1000, ScreenPoint(100, 100)),))
    with pytest.raises(ConfigError):
        run_script(LedLayout.prototype1(), quiet_subject(), script, cfg(), seed=0)


def test_single_fixation_no_noise_all_frames_identical():
    script = GazeScript.fixations([ScreenPoint(333, 222)], 400_000)
    log = run_script(LedLayout.prototype1(), quiet_subject(), script, cfg(), seed=0)
    assert log.n_frames == 40
    assert np.all(log.raw == log.raw[0])
    assert np.all(log.gaze == log.gaze[0])


def test_full_determinism_bit_identical_logs():
    lay = LedLayout.prototype1()
    subj = quiet_subject(noise=0.01)
    script = GazeScript((
        ScriptEvent("fixation", 400_000, ScreenPoint(200, 200)),
        ScriptEvent("blink", 150_000),
        ScriptEvent("fixation", 400_000, ScreenPoint(600, 400)),
    ))
    a = run_script(lay, subj, script, cfg(), seed=42)
    b = run_script(lay, subj, script, cfg(), seed=42)
    assert np.array_equal(a.raw, b.raw)
    assert np.array_equal(a.proc, b.proc)
    assert np.array_equal(a.t_us, b.t_us)
    assert a.events == b.events
    c = run_script(lay, subj, script, cfg(), seed=43)
    assert not np.array_equal(a.raw, c.raw)


def test_blink_is_annotated_and_frames_differ_from_flanks():
    script = GazeScript((
        ScriptEvent("fixation", 500_000, ScreenPoint(400, 300)),
        ScriptEvent("blink", 200_000),
        ScriptEvent("fixation", 500_000, ScreenPoint(400, 300)),
    ))
    log = run_script(LedLayout.prototype1(), quiet_subject(), script, cfg(), seed=1)
    blinks = [e for e in log.events if e["kind"] == "blink"]
    assert len(blinks) == 1
    t0, t1 = blinks[0]["t0_us"], blinks[0]["t1_us"]
    inside = (log.t_us >= t0) & (log.t_us < t1)
    mid_blink = log.raw[inside][len(log.raw[inside]) // 2]
    before = log.raw[~inside][10]
    assert not np.array_equal(mid_blink, before)


def test_srt_delay_deterministic_gaze_switch():
    lay = LedLayout.prototype1()
    subj = replace(quiet_subject(), srt_mean_ms=200.0, srt_std_ms=0.0)
    script = GazeScript((
        ScriptEvent("fixation", 500_000, ScreenPoint(150, 150)),
        ScriptEvent("fixation", 600_000, ScreenPoint(650, 450)),
    ))
    log = run_script(lay, subj, script, cfg(), seed=3)
    moves = [e for e in log.events if e["kind"] == "target_move"]
    assert len(moves) == 1
    mv = moves[0]
    cycle = log.meta["cycle_us"]
    # the gaze lands on the new target at the first frame after the reaction time
    assert mv["t_settle_us"] >= mv["t_move_us"] + 200_000
    assert mv["t_settle_us"] - (mv["t_move_us"] + 200_000) < cycle
    switched = log.gaze[:, 0] == 650
    assert np.array_equal(log.t_us[switched] >= mv["t_settle_us"],
                          np.ones(switched.sum(), dtype=bool))
    # stimulus target stepped immediately at the move
    at_move = log.t_us >= mv["t_move_us"]
    assert np.all(log.target[at_move, 0] == 650)


def test_saccade_event_is_zero_duration_target_change():
    script = GazeScript((
        ScriptEvent("fixation", 300_000, ScreenPoint(100, 100)),
        ScriptEvent("saccade", 0, ScreenPoint(700, 500)),
        ScriptEvent("fixation", 300_000, ScreenPoint(700, 500)),
    ))
    log = run_script(LedLayout.prototype1(), quiet_subject(), script, cfg(), seed=4)
    moves = [e for e in log.events if e["kind"] == "target_move"]
    assert len(moves) == 1  # the fixation at the same target adds no second move


def test_exposure_adaptation_recovers_saturated_channel():
    # bright optics saturate at the reference exposure; adaptation must bring
    # readings back under the ceiling within a few frames
    bright = OpticsModel(signal_scale=3.0)
    config = SimConfig(geom=GEOM, optics=bright)
    lay = LedLayout.prototype1()
    script = GazeScript.fixations([ScreenPoint(400, 300)], 600_000)
    log = run_script(lay, quiet_subject(), script, config, seed=5)
    assert log.raw[:3].max() >= 1000  # clipped at first
    assert log.raw[-1].max() < 1000  # settled after adaptation


def test_exposure_compensation_keeps_processed_scale():
    # the same gaze with bright optics and adapted-down exposure should land
    # near (clean signal / reference scaling), not at the clipped value
    bright = OpticsModel(signal_scale=1.3)
    config = SimConfig(geom=GEOM, optics=bright)
    lay = LedLayout.prototype1()
    subj = quiet_subject()
    script = GazeScript.fixations([ScreenPoint(150, 300)], 2_000_000)
    log = run_script(lay, subj, script, config, seed=6)
    expected = clean_signal(lay, subj, GEOM, bright, lay.schedule(),
                            np.array([[150.0, 300.0]]))[0]
    assert expected.max() > 1.0  # would clip without adaptation
    assert np.allclose(log.proc[-1], expected, atol=0.01)


def test_engine_rejects_gain_count_mismatch():
    lay = LedLayout.prototype1(eyes=1)
    subj = SubjectProfile.generate(1, channels=12)
    with pytest.raises(ConfigError):
        EyeSimulator(lay, subj, cfg(), seed=0)
