import numpy as np
import pytest

from tiadcsim import (
    OFFSET_SPUR,
    SIGNAL_IMAGE_SPUR,
    SignalSpec,
    SpurPrediction,
    Tone,
    analyze,
    interleave,
    label_spurs,
    power_spectrum,
    predict_spurs,
    simulate,
)
from tiadcsim.errors import DegenerateSignalError, DomainError, SizeError
from util import F0, coherent_tone, make_config


class TestPowerSpectrum:
    def test_coherent_tone_occupies_one_bin(self):
        n, j = 1024, 101
        x = np.sin(2 * np.pi * j * np.arange(n) / n)
        _, p = power_spectrum(x)
        assert p[j] == pytest.approx(0.5, rel=1e-12)
        others = np.delete(p, j)
        # everything else sits at the float64 FFT rounding floor
        assert others.max() <= p[j] * 10 ** (-280 / 10)

    def test_constant_goes_to_dc(self):
        _, p = power_spectrum(np.full(256, 0.3))
        assert p[0] == pytest.approx(0.09, rel=1e-12)
        assert p[1:].max() < 1e-30

    def test_parseval_on_white_input(self):
        x = np.random.default_rng(0).standard_normal(4096)
        _, p = power_spectrum(x)
        assert p.sum() == pytest.approx(np.mean(x**2), rel=1e-9)

    def test_bin_freqs_scale_with_sample_rate(self):
        f, _ = power_spectrum(np.zeros(8) + 1.0, sample_rate=80.0)
        assert f.tolist() == [0.0, 10.0, 20.0, 30.0, 40.0]

    @pytest.mark.parametrize("n", [1000, 3, 1])
    def test_non_power_of_two_rejected(self, n):
        with pytest.raises(SizeError):
            power_spectrum(np.ones(n))

    def test_unknown_window_rejected(self):
        with pytest.raises(Exception):
            power_spectrum(np.ones(16), window="kaiser")


class TestAnalyze:
    def test_ideal_10bit_floor(self):
        cfg = make_config(bits=10)
        out = simulate(cfg, coherent_tone(amplitude=1.0), 1024)
        report = analyze(interleave(out)[:1024], 1.0)
        assert report.noise_floor_dbc == pytest.approx(-89.0, abs=2.0)

    def test_sinad_law_b10(self):
        cfg = make_config(bits=10)
        out = simulate(cfg, coherent_tone(amplitude=1.0), 1024)
        report = analyze(interleave(out), 1.0)
        assert report.sinad_db == pytest.approx(6.02 * 10 + 1.76, abs=0.5)

    def test_pure_tone_reaches_float_floor(self):
        n = np.arange(4096)
        x = np.sin(2 * np.pi * 405 * n / 4096)
        report = analyze(x, 1.0)
        assert report.sinad_db > 250.0

    def test_carrier_normalization_and_identities(self):
        cfg = make_config(bits=10)
        out = simulate(cfg, coherent_tone(), 1024)
        report = analyze(interleave(out), 1.0)
        assert report.power_dbc[report.carrier_bin] == 0.0
        assert report.enob_bits == (report.sinad_db - 1.76) / 6.02
        mask = np.ones(len(report.power_dbc), dtype=bool)
        mask[0] = mask[report.carrier_bin] = False
        assert report.sfdr_db == -report.power_dbc[mask].max()
        assert report.sfdr_db >= 0.0

    def test_carrier_hint_selects_weak_tone(self):
        n = np.arange(2048)
        x = np.sin(2 * np.pi * 301 * n / 2048) + 0.1 * np.sin(2 * np.pi * 513 * n / 2048)
        report = analyze(x, 1.0, carrier_hint=513 / 2048)
        assert report.carrier_bin == 513

    def test_all_zero_rejected(self):
        with pytest.raises(DegenerateSignalError):
            analyze(np.zeros(256), 1.0)

    def test_dc_only_rejected(self):
        with pytest.raises(DegenerateSignalError):
            analyze(np.full(256, 0.5), 1.0)

    def test_hann_non_coherent_close_to_rect_coherent(self):
        n = np.arange(4096)
        q = make_config(bits=10).quantizer

        def quant(v):
            code = np.clip(np.floor((v - q.v_min) / q.lsb), 0, q.n_codes - 1)
            return q.v_min + (code + 0.5) * q.lsb

        rect = analyze(quant(np.sin(2 * np.pi * 405 * n / 4096)), 1.0)
        hann = analyze(quant(np.sin(2 * np.pi * 405.37 * n / 4096)), 1.0, window="hann")
        assert hann.sinad_db == pytest.approx(rect.sinad_db, abs=1.0)


class TestPredictSpurs:
    def test_four_channel_example(self):
        pred = predict_spurs(4, 0.11, 1.0)
        assert pred.offset_freqs == pytest.approx((0.25, 0.5), abs=1e-12)
        assert pred.image_freqs == pytest.approx((0.14, 0.36, 0.39), abs=1e-12)

    def test_two_channel_example(self):
        pred = predict_spurs(2, 0.2, 1.0)
        assert pred.offset_freqs == pytest.approx((0.5,), abs=1e-12)
        assert pred.image_freqs == pytest.approx((0.3,), abs=1e-12)

    def test_single_channel_is_empty(self):
        pred = predict_spurs(1, 0.2, 1.0)
        assert pred.offset_freqs == () and pred.image_freqs == ()

    def test_matches_enumeration_oracle(self):
        # independent brute force: enumerate +/-f0 + k*fs/M over a wide k
        # range and alias by searching the nearest representative
        m, f0, fs = 5, 0.13, 1.0
        expected_offset, expected_image = set(), set()
        for k in range(-3 * m, 3 * m + 1):
            line = k * fs / m
            if k % m:
                expected_offset.add(round(min(abs(line) % fs, fs - abs(line) % fs), 12))
            for s in (+1, -1):
                img = s * f0 + k * fs / m
                folded = round(min(abs(img) % fs, fs - abs(img) % fs), 12)
                if abs(folded - f0) > 1e-9:
                    expected_image.add(folded)
        pred = predict_spurs(m, f0, fs)
        assert set(round(f, 12) for f in pred.offset_freqs) == expected_offset
        assert set(round(f, 12) for f in pred.image_freqs) == expected_image

    @pytest.mark.parametrize("f0", [0.0, 0.5, 0.7, -0.1])
    def test_out_of_band_carrier_rejected(self, f0):
        with pytest.raises(DomainError):
            predict_spurs(4, f0, 1.0)


def _labels(report):
    return {s.bin: s.label for s in report.spurs}


class TestLabelSpurs:
    def test_offset_only_run_labels_offset_spurs(self):
        rng = np.random.default_rng(7)
        cfg = make_config(bits=12, offsets=rng.normal(0.0, 0.01, 4).tolist())
        out = simulate(cfg, coherent_tone(), 1024)
        report = analyze(interleave(out), 1.0)
        labeled = label_spurs(report, predict_spurs(4, report.carrier_freq, 1.0))
        assert labeled.spurs, "expected offset spurs above the floor"
        assert all(s.label == OFFSET_SPUR for s in labeled.spurs)

    def test_gain_only_run_labels_image_spurs(self):
        rng = np.random.default_rng(7)
        cfg = make_config(bits=12, gains=(1.0 + rng.normal(0.0, 0.01, 4)).tolist())
        out = simulate(cfg, coherent_tone(), 1024)
        report = analyze(interleave(out), 1.0)
        labeled = label_spurs(report, predict_spurs(4, report.carrier_freq, 1.0))
        assert labeled.spurs, "expected image spurs above the floor"
        assert all(s.label == SIGNAL_IMAGE_SPUR for s in labeled.spurs)

    def test_mismatch_free_run_has_no_spurs_above_floor_plus_6db(self):
        cfg = make_config(bits=10, jitter_std=5e-3, rng_seed=0)
        out = simulate(cfg, coherent_tone(), 1024)
        report = analyze(interleave(out), 1.0)
        assert all(s.power_dbc < report.noise_floor_dbc + 6.0 for s in report.spurs)

    def test_tolerance_bins(self):
        rng = np.random.default_rng(7)
        cfg = make_config(bits=12, offsets=rng.normal(0.0, 0.01, 4).tolist())
        out = simulate(cfg, coherent_tone(), 1024)
        report = analyze(interleave(out), 1.0)
        n = report.n_fft
        shifted = SpurPrediction(
            offset_freqs=tuple(f + 1.0 / n for f in (0.25, 0.5)), image_freqs=()
        )
        labeled = label_spurs(report, shifted, tolerance_bins=1)
        assert all(s.label == OFFSET_SPUR for s in labeled.spurs)
        strict = label_spurs(report, shifted, tolerance_bins=0)
        assert all(s.label == "UNCLASSIFIED" for s in strict.spurs)
