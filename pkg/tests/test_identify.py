import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tiadcsim import (
    estimate_all,
    estimate_gain,
    estimate_offset,
    estimate_timing,
    reference_capture,
    resimulated_references,
    simulate,
)
from tiadcsim.errors import DegenerateSignalError, DivergenceError, InputError
from util import coherent_tone, make_config


def run_capture(cfg, k_frames=16384, amplitude=0.9, phase=0.0):
    signal = coherent_tone(amplitude=amplitude, phase=phase)
    return simulate(cfg, signal, k_frames), signal


class TestEstimateOffset:
    def test_identical_streams(self):
        y = np.linspace(-0.5, 0.5, 64)
        assert estimate_offset(y, y) == 0.0

    def test_constant_shift(self):
        y = np.linspace(-0.5, 0.5, 64)
        assert estimate_offset(y + 0.1, y) == pytest.approx(0.1, abs=1e-12)

    def test_injected_offset_recovered(self):
        cfg = make_config(bits=12, offsets=[0.0, 0.05, 0.0, 0.0], reference_aligned_to=1)
        out, _ = run_capture(cfg, k_frames=4096)
        est = estimate_offset(out.per_channel[1], out.reference)
        assert est == pytest.approx(0.05, abs=2 * cfg.quantizer.lsb)

    def test_nonzero_dc_input(self):
        cfg = make_config(bits=14, offsets=[0.02, 0.0, 0.0, 0.0])
        signal = coherent_tone(amplitude=0.5)
        signal = type(signal)(tones=signal.tones, dc=0.2)
        out = simulate(cfg, signal, 4096)
        est = estimate_offset(out.per_channel[0], out.reference)
        assert est == pytest.approx(0.02, abs=2 * cfg.quantizer.lsb)

    def test_length_mismatch(self):
        with pytest.raises(InputError):
            estimate_offset(np.zeros(4), np.zeros(5))


class TestEstimateGain:
    def test_identical_streams(self):
        y = np.linspace(-1.0, 1.0, 32)
        assert estimate_gain(y, y) == 1.0

    def test_double_amplitude(self):
        y = np.linspace(-1.0, 1.0, 32)
        assert estimate_gain(2.0 * y, y) == pytest.approx(2.0, rel=1e-14)

    @given(c=st.floats(0.01, 100.0))
    @settings(max_examples=50, deadline=None)
    def test_scaling_consistency(self, c):
        y = np.sin(np.linspace(0.0, 20.0, 257))
        assert estimate_gain(c * y, y) == pytest.approx(c, rel=1e-13)

    def test_injected_gain_recovered(self):
        cfg = make_config(bits=14, gains=[1.0, 1.02, 1.0, 1.0], reference_aligned_to=1)
        out, _ = run_capture(cfg)
        ch = out.per_channel[1] - out.per_channel[1].mean()
        ref = out.reference - out.reference.mean()
        est = estimate_gain(ch, ref)
        assert abs(est - 1.02) / 1.02 < 1e-3

    def test_zero_reference_power(self):
        with pytest.raises(DegenerateSignalError):
            estimate_gain(np.ones(8), np.zeros(8))


class TestEstimateTiming:
    def _streams(self, rel_skew, bits=14, k=16384, phase=0.0):
        t_s = 1.0
        cfg = make_config(bits=bits, skews=[0.0, rel_skew * t_s, 0.0, 0.0], reference_aligned_to=1)
        out, _ = run_capture(cfg, k_frames=k, phase=phase)
        return out.per_channel[1], out.per_channel[0], out.reference

    def test_zero_skew_floor(self):
        y_m, y_prev, y_ref = self._streams(0.0)
        assert abs(estimate_timing(y_m, y_prev, y_ref)) <= 1e-3

    def test_small_positive_skew(self):
        y_m, y_prev, y_ref = self._streams(0.01)
        r = estimate_timing(y_m, y_prev, y_ref)
        assert r == pytest.approx(0.01, abs=0.002)

    def test_sign_convention_negative(self):
        y_m, y_prev, y_ref = self._streams(-0.01)
        assert estimate_timing(y_m, y_prev, y_ref) == pytest.approx(-0.01, abs=0.002)

    def test_monotone_in_skew(self):
        grid = [-0.02, -0.01, -0.005, -0.001, 0.001, 0.005, 0.01, 0.02]
        estimates = [estimate_timing(*self._streams(r, k=8192)) for r in grid]
        assert all(b > a for a, b in zip(estimates, estimates[1:]))

    def test_constant_input_degenerate(self):
        y = np.full(64, 0.25)
        with pytest.raises(DegenerateSignalError):
            estimate_timing(y, y, y)

    def test_divergent_estimate_rejected(self):
        y_prev = np.sin(np.linspace(0.0, 30.0, 256))
        with pytest.raises(DivergenceError):
            estimate_timing(y_prev, y_prev, y_prev + np.sin(np.linspace(0.0, 40.0, 256)) + 1e-3)

    def test_signed_mode_exists(self):
        y_m, y_prev, y_ref = self._streams(0.0, k=1024)
        r = estimate_timing(y_m, y_prev, y_ref, mode="signed")
        assert isinstance(r, float)

    def test_bad_mode(self):
        y = np.sin(np.linspace(0.0, 10.0, 64))
        with pytest.raises(InputError):
            estimate_timing(y, y, y, mode="rms")

    def test_gain_unaffected_by_pure_timing_mismatch(self):
        cfg = make_config(bits=14, skews=[0.0, 0.01, 0.0, 0.0], reference_aligned_to=1)
        out, _ = run_capture(cfg)
        ch = out.per_channel[1] - out.per_channel[1].mean()
        ref = out.reference - out.reference.mean()
        assert abs(estimate_gain(ch, ref) - 1.0) <= 1e-3


class TestEstimateAll:
    def test_ideal_capture(self):
        cfg = make_config(bits=14)
        signal = coherent_tone()
        out = simulate(cfg, signal, 4096)
        est = estimate_all(out, cfg, resimulated_references(cfg, signal, 4096))
        assert np.all(np.abs(est.offsets_v) <= 2 * cfg.quantizer.lsb)
        assert np.all(np.abs(est.gains - 1.0) <= 1e-3)
        assert np.all(np.abs(est.rel_timing) <= 1e-3)
        assert est.k_used == 4096

    def test_combined_mismatches_within_5x_single_tolerances(self):
        rng = np.random.default_rng(12)
        t_s = 1.0
        offsets = rng.normal(0.0, 0.01, 4)
        gains = 1.0 + rng.normal(0.0, 0.01, 4)
        skews = rng.normal(0.0, 0.005 * t_s, 4)
        cfg = make_config(
            bits=14, offsets=offsets.tolist(), gains=gains.tolist(), skews=skews.tolist()
        )
        signal = coherent_tone()
        out = simulate(cfg, signal, 16384)
        est = estimate_all(out, cfg, resimulated_references(cfg, signal, 16384))
        assert np.all(np.abs(est.offsets_v - offsets) <= 5 * 2 * cfg.quantizer.lsb)
        assert np.all(np.abs(est.gains - gains) / gains <= 5e-3)
        assert np.all(np.abs(est.rel_timing - skews / t_s) <= 5 * 0.002)

    def test_eight_channel_configuration(self):
        cfg = make_config(m_channels=8, bits=12, skews=[0.0, 0.002, 0.0, -0.003, 0.0, 0.0, 0.001, 0.0])
        signal = coherent_tone()
        out = simulate(cfg, signal, 2048)
        est = estimate_all(out, cfg, resimulated_references(cfg, signal, 2048))
        assert est.m_channels == 8
        assert np.all(np.abs(est.rel_timing) < 0.05)

    def test_convergence_with_growing_k(self):
        cfg = make_config(bits=14, offsets=[0.03, 0.0, 0.0, 0.0], gains=[1.01, 1.0, 1.0, 1.0])
        offset_errs, gain_errs = [], []
        for k in (1024, 4096, 16384):
            trial_off, trial_gain = [], []
            for trial in range(20):
                phase = float(np.random.default_rng(trial).uniform(-np.pi, np.pi))
                signal = coherent_tone(phase=phase)
                out = simulate(cfg, signal, k)
                est = estimate_all(out, cfg, resimulated_references(cfg, signal, k))
                trial_off.append(abs(est.offsets_v[0] - 0.03))
                trial_gain.append(abs(est.gains[0] - 1.01))
            offset_errs.append(np.median(trial_off))
            gain_errs.append(np.median(trial_gain))
        assert offset_errs[0] >= offset_errs[1] >= offset_errs[2]
        assert gain_errs[0] >= gain_errs[1] >= gain_errs[2]

    def test_failures_tagged_with_channel(self):
        cfg = make_config(bits=12)
        signal = coherent_tone(amplitude=0.0)  # zero power everywhere
        out = simulate(cfg, signal, 64)
        with pytest.raises(DegenerateSignalError, match="channel 0"):
            estimate_all(out, cfg, resimulated_references(cfg, signal, 64))

    def test_wrong_reference_length_rejected(self):
        cfg = make_config(bits=12)
        signal = coherent_tone()
        out = simulate(cfg, signal, 64)
        with pytest.raises(InputError):
            estimate_all(out, cfg, lambda m: reference_capture(cfg, signal, 32, aligned_to=m))
