"""Config-driven experiment runner: spectra, identification/calibration
round-trips, mismatch-sigma sweeps and the bandwidth-mismatch demo.

Runs are a pure function of (config, master_seed): artifacts are rendered to
strings here and written by the caller (CLI or library user), trial seeds are
derived by a stable hash of (master_seed, trial_index), and per-trial results
are sorted before aggregation so execution order can never leak into the
output bytes.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .adc import (
    ChannelOutputs,
    ChannelParams,
    QuantizerSpec,
    TiAdcConfig,
    derive_seed,
    draw_channel_params,
    interleave,
    simulate,
)
from .calibration import compensate_gain, compensate_offset, compensate_timing
from .errors import DegenerateSignalError, DivergenceError, DomainError, TiAdcError
from .identify import MismatchEstimate, estimate_all, resimulated_references
from .signals import FilterSpec, SignalSpec, Tone
from .spectrum import SpectrumReport, analyze, label_spurs, predict_spurs

__all__ = [
    "ExperimentConfig",
    "ConfigSchemaError",
    "RunResult",
    "validate_config",
    "serialize_config",
    "run",
    "run_sweep",
    "run_and_write",
    "write_artifacts",
]

COHERENT_BIN = 101
COHERENT_DENOM = 1024
DEFAULT_AMPLITUDE_V = 0.9
BANDWIDTH_DEMO_CUTOFF_MULTIPLE = 5.0
BANDWIDTH_DEMO_CUTOFF_REL_STD = 0.1

SCENARIOS = ("SPECTRUM", "SWEEP", "IDENTIFY", "CALIBRATE", "BANDWIDTH_DEMO")


class ConfigSchemaError(TiAdcError):
    """Config rejected; `errors` lists (path, message) pairs."""

    def __init__(self, errors: list[tuple[str, str]]):
        self.errors = list(errors)
        super().__init__("; ".join(f"{path}: {msg}" for path, msg in self.errors))


def seed64(*parts) -> int:
    """Stable 64-bit hash used for trial seeds."""
    return derive_seed(*parts) & ((1 << 64) - 1)


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid", validate_assignment=True)


class ToneConfig(_Model):
    amplitude_v: float = Field(DEFAULT_AMPLITUDE_V, ge=0)
    frequency_hz: float = Field(..., ge=0)
    phase_rad: float = 0.0


class SignalConfig(_Model):
    tones: list[ToneConfig] | None = None
    dc_v: float = 0.0


class QuantizerConfig(_Model):
    bits: int = Field(8, ge=1, le=30)
    v_min: float = -1.0
    v_max: float = 1.0


class ChannelConfig(_Model):
    offset_v: float = 0.0
    gain: float = Field(1.0, gt=0)
    timing_skew_s: float = 0.0
    cutoff_hz: float | None = Field(None, gt=0)


class TiadcSection(_Model):
    m_channels: int = Field(4, ge=2)
    sample_rate_hz: float = Field(1.0, gt=0)
    jitter_std_s: float = Field(0.0, ge=0)
    quantizer: QuantizerConfig = Field(default_factory=QuantizerConfig)
    channels: list[ChannelConfig] | None = None
    reference: ChannelConfig = Field(default_factory=ChannelConfig)
    reference_aligned_to: int = Field(0, ge=0)


class MismatchStdConfig(_Model):
    """Mismatch draw sigmas for runs without an explicit channel list.

    `timing_rel` and `cutoff_rel` are relative sigmas (fractions of T_s and
    of the nominal cutoff respectively).
    """

    offset_v: float = Field(0.0, ge=0)
    gain: float = Field(0.0, ge=0)
    timing_rel: float = Field(0.0, ge=0)
    cutoff_rel: float = Field(0.0, ge=0)
    nominal_cutoff_hz: float | None = Field(None, gt=0)


class SweepConfig(_Model):
    parameter: Literal["OFFSET_STD", "GAIN_STD", "TIMING_STD"]
    values: list[float]
    trials: int = Field(50, ge=1)
    aggregate: Literal["WORST", "AVERAGE"] = "WORST"
    compensate: list[Literal["offset", "gain", "timing"]] = Field(
        default_factory=lambda: ["offset", "gain", "timing"]
    )

    @field_validator("values")
    @classmethod
    def _sorted_positive(cls, values: list[float]) -> list[float]:
        if not values:
            raise ValueError("sweep requires at least one value")
        if any(v <= 0 for v in values):
            raise ValueError("sweep values must be strictly positive")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ValueError("sweep values must be strictly ascending")
        return values

    @field_validator("compensate")
    @classmethod
    def _unique(cls, stages: list[str]) -> list[str]:
        if len(set(stages)) != len(stages):
            raise ValueError("compensate stages must be unique")
        return stages


class ExperimentConfig(_Model):
    scenario: Literal["SPECTRUM", "SWEEP", "IDENTIFY", "CALIBRATE", "BANDWIDTH_DEMO"] = "SPECTRUM"
    tiadc: TiadcSection = Field(default_factory=TiadcSection)
    mismatch_std: MismatchStdConfig = Field(default_factory=MismatchStdConfig)
    signal: SignalConfig = Field(default_factory=SignalConfig)
    k_frames: int = Field(1024, ge=2)
    taps: int = Field(32, ge=4)
    window: Literal["RECTANGULAR", "HANN"] = "RECTANGULAR"
    sweep: SweepConfig | None = None
    output_dir: str = "out"
    master_seed: int = Field(0, ge=0, lt=1 << 64)

    @field_validator("scenario", mode="before")
    @classmethod
    def _upper_scenario(cls, v):
        return v.upper() if isinstance(v, str) else v

    @field_validator("window", mode="before")
    @classmethod
    def _upper_window(cls, v):
        return v.upper() if isinstance(v, str) else v


def _cross_checks(cfg: ExperimentConfig) -> list[tuple[str, str]]:
    errors: list[tuple[str, str]] = []
    tiadc = cfg.tiadc
    if tiadc.channels is not None and len(tiadc.channels) != tiadc.m_channels:
        errors.append(
            ("tiadc.channels", f"expected {tiadc.m_channels} entries, got {len(tiadc.channels)}")
        )
    if tiadc.reference_aligned_to >= tiadc.m_channels:
        errors.append(
            ("tiadc.reference_aligned_to", f"must be < m_channels ({tiadc.m_channels})")
        )
    t_s = 1.0 / tiadc.sample_rate_hz
    for i, ch in enumerate(tiadc.channels or []):
        if abs(ch.timing_skew_s) >= t_s:
            errors.append(
                (f"tiadc.channels.{i}.timing_skew_s", "magnitude must be below one sample period")
            )
    if abs(tiadc.reference.timing_skew_s) >= t_s:
        errors.append(
            ("tiadc.reference.timing_skew_s", "magnitude must be below one sample period")
        )
    if not tiadc.quantizer.v_max > tiadc.quantizer.v_min:
        errors.append(("tiadc.quantizer.v_max", "must be greater than v_min"))
    n_analysis = cfg.k_frames * tiadc.m_channels
    if n_analysis & (n_analysis - 1):
        errors.append(
            ("k_frames", f"k_frames * m_channels must be a power of two, got {n_analysis}")
        )
    if cfg.scenario == "SWEEP" and cfg.sweep is None:
        errors.append(("sweep", "required when scenario is SWEEP"))
    if cfg.mismatch_std.timing_rel >= 0.5:
        errors.append(("mismatch_std.timing_rel", "sigma must be below 0.5 sample periods"))
    for i, tone in enumerate(cfg.signal.tones or []):
        if tone.frequency_hz >= tiadc.sample_rate_hz / 2.0:
            errors.append(
                (f"signal.tones.{i}.frequency_hz", "tone must lie below the Nyquist frequency")
            )
    return errors


def _normalize(cfg: ExperimentConfig) -> ExperimentConfig:
    """Fill derived defaults so the normalized form is fully concrete."""
    fs = cfg.tiadc.sample_rate_hz
    updates = {}
    if cfg.signal.tones is None:
        tone = ToneConfig(
            amplitude_v=DEFAULT_AMPLITUDE_V,
            frequency_hz=(COHERENT_BIN / COHERENT_DENOM) * fs,
            phase_rad=0.0,
        )
        updates["signal"] = cfg.signal.model_copy(update={"tones": [tone]})
    mismatch = cfg.mismatch_std
    if cfg.scenario == "BANDWIDTH_DEMO" and mismatch.cutoff_rel == 0.0:
        mismatch = mismatch.model_copy(update={"cutoff_rel": BANDWIDTH_DEMO_CUTOFF_REL_STD})
    if mismatch.cutoff_rel > 0.0 and mismatch.nominal_cutoff_hz is None:
        mismatch = mismatch.model_copy(
            update={"nominal_cutoff_hz": BANDWIDTH_DEMO_CUTOFF_MULTIPLE * fs}
        )
    if mismatch is not cfg.mismatch_std:
        updates["mismatch_std"] = mismatch
    return cfg.model_copy(update=updates) if updates else cfg


def validate_config(raw) -> ExperimentConfig:
    """Parse and normalize a raw config mapping.

    Raises ConfigSchemaError carrying every violation with its field path;
    unknown keys are rejected.
    """
    if not isinstance(raw, dict):
        raise ConfigSchemaError([("", f"config must be a JSON object, got {type(raw).__name__}")])
    try:
        cfg = ExperimentConfig.model_validate(raw)
    except ValidationError as exc:
        errors = [
            (".".join(str(part) for part in err["loc"]), err["msg"]) for err in exc.errors()
        ]
        raise ConfigSchemaError(errors) from exc
    errors = _cross_checks(cfg)
    if errors:
        raise ConfigSchemaError(errors)
    return _normalize(cfg)


def serialize_config(cfg: ExperimentConfig) -> dict:
    return cfg.model_dump(mode="json")


# --- experiment machinery ---------------------------------------------------


@dataclass(frozen=True)
class RunResult:
    scenario: str
    files: dict[str, str]
    summary: dict


def _signal_spec(cfg: ExperimentConfig) -> SignalSpec:
    tones = tuple(
        Tone(amplitude=t.amplitude_v, frequency=t.frequency_hz, phase=t.phase_rad)
        for t in cfg.signal.tones or []
    )
    return SignalSpec(tones=tones, dc=cfg.signal.dc_v)


def _channel_params(ch: ChannelConfig) -> ChannelParams:
    cutoff = math.inf if ch.cutoff_hz is None else ch.cutoff_hz
    return ChannelParams(
        offset=ch.offset_v, gain=ch.gain, timing_skew=ch.timing_skew_s, filter=FilterSpec(cutoff)
    )


def _build_channels(
    cfg: ExperimentConfig, trial_seed: int, sigma_override: dict | None = None
) -> tuple[ChannelParams, ...]:
    tiadc = cfg.tiadc
    if tiadc.channels is not None and sigma_override is None:
        return tuple(_channel_params(ch) for ch in tiadc.channels)
    sigma = {
        "offset_v": cfg.mismatch_std.offset_v,
        "gain": cfg.mismatch_std.gain,
        "timing_rel": cfg.mismatch_std.timing_rel,
        "cutoff_rel": cfg.mismatch_std.cutoff_rel,
    }
    if sigma_override:
        sigma.update(sigma_override)
    t_s = 1.0 / tiadc.sample_rate_hz
    nominal_cutoff = (
        math.inf if cfg.mismatch_std.nominal_cutoff_hz is None else cfg.mismatch_std.nominal_cutoff_hz
    )
    channels = []
    for m in range(tiadc.m_channels):
        rng = np.random.default_rng(derive_seed(trial_seed, m, "param-draw"))
        channels.append(
            draw_channel_params(
                offset_std=sigma["offset_v"],
                gain_std=sigma["gain"],
                timing_std=sigma["timing_rel"] * t_s,
                cutoff_rel_std=sigma["cutoff_rel"],
                nominal_cutoff=nominal_cutoff,
                rng=rng,
                t_s=t_s,
            )
        )
    return tuple(channels)


def _tiadc_config(
    cfg: ExperimentConfig, channels: tuple[ChannelParams, ...], trial_seed: int
) -> TiAdcConfig:
    tiadc = cfg.tiadc
    return TiAdcConfig(
        m_channels=tiadc.m_channels,
        sample_rate=tiadc.sample_rate_hz,
        channels=channels,
        quantizer=QuantizerSpec(
            bits=tiadc.quantizer.bits, v_min=tiadc.quantizer.v_min, v_max=tiadc.quantizer.v_max
        ),
        jitter_std=tiadc.jitter_std_s,
        reference=_channel_params(tiadc.reference),
        reference_aligned_to=tiadc.reference_aligned_to,
        rng_seed=trial_seed,
    )


def _truth(channels: tuple[ChannelParams, ...], t_s: float) -> dict:
    return {
        "offsets_v": [ch.offset for ch in channels],
        "gains": [ch.gain for ch in channels],
        "timing_rel": [ch.timing_skew / t_s for ch in channels],
        "cutoff_hz": [None if math.isinf(ch.filter.cutoff) else ch.filter.cutoff for ch in channels],
    }


def _estimate_dict(est: MismatchEstimate) -> dict:
    return {
        "offsets_v": [float(v) for v in est.offsets_v],
        "gains": [float(v) for v in est.gains],
        "timing_rel": [float(v) for v in est.rel_timing],
        "k_used": est.k_used,
    }


def _metrics(report: SpectrumReport) -> dict:
    return {
        "sinad_db": _finite(report.sinad_db),
        "sfdr_db": _finite(report.sfdr_db),
        "enob_bits": _finite(report.enob_bits),
        "noise_floor_dbc": _finite(report.noise_floor_dbc),
    }


def _spur_rows(report: SpectrumReport) -> list[dict]:
    return [
        {"bin": s.bin, "freq_hz": s.freq_hz, "power_dbc": s.power_dbc, "label": s.label}
        for s in report.spurs
    ]


def _finite(x: float):
    return float(x) if math.isfinite(x) else None


def _analyzed(cfg: ExperimentConfig, x: np.ndarray) -> SpectrumReport:
    report = analyze(x, cfg.tiadc.sample_rate_hz, window=cfg.window.lower())
    try:
        predicted = predict_spurs(
            cfg.tiadc.m_channels, report.carrier_freq, cfg.tiadc.sample_rate_hz
        )
    except DomainError:
        return report
    return label_spurs(report, predicted)


def _saturation(sim: ChannelOutputs) -> dict:
    return {
        "per_channel": list(sim.saturation_per_channel),
        "reference": sim.saturation_reference,
        "total": sim.saturation_total,
    }


def _fmt(x: float) -> str:
    return f"{x:.9g}"


def render_spectrum_csv(report: SpectrumReport) -> str:
    lines = ["freq_hz,power_dbc"]
    lines.extend(
        f"{_fmt(float(f))},{_fmt(float(p))}" for f, p in zip(report.bin_freqs, report.power_dbc)
    )
    return "\n".join(lines) + "\n"


def render_sweep_csv(rows: list[tuple[float, float, float]]) -> str:
    lines = ["sigma,aggregate_sinad_db_uncompensated,aggregate_sinad_db_compensated"]
    lines.extend(f"{_fmt(s)},{_fmt(u)},{_fmt(c)}" for s, u, c in rows)
    return "\n".join(lines) + "\n"


def render_report_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _base_report(cfg: ExperimentConfig) -> dict:
    return {
        "scenario": cfg.scenario,
        "master_seed": cfg.master_seed,
        "config": serialize_config(cfg),
    }


def _interior(cfg: ExperimentConfig) -> slice:
    """Interleaved-sample window excluding the correction guard frames."""
    m = cfg.tiadc.m_channels
    return slice(cfg.taps * m, (cfg.taps + cfg.k_frames) * m)


def _apply_compensation(
    sim: ChannelOutputs, est: MismatchEstimate, stages: Sequence[str], taps: int
) -> np.ndarray:
    streams = []
    for m in range(sim.m_channels):
        y = np.asarray(sim.per_channel[m], dtype=float)
        if "offset" in stages:
            y = compensate_offset(y, float(est.offsets_v[m]))
        if "gain" in stages:
            y = compensate_gain(y, float(est.gains[m]))
        if "timing" in stages:
            y, _ = compensate_timing(
                y, float(est.rel_timing[m]), taps=taps, interleave_factor=sim.m_channels
            )
        streams.append(y)
    return interleave(streams)


def _run_single(cfg: ExperimentConfig) -> RunResult:
    """SPECTRUM / IDENTIFY / BANDWIDTH_DEMO: one capture, one spectrum."""
    trial_seed = seed64(cfg.master_seed, 0)
    channels = _build_channels(cfg, trial_seed)
    tiadc = _tiadc_config(cfg, channels, trial_seed)
    signal = _signal_spec(cfg)
    sim = simulate(tiadc, signal, cfg.k_frames)
    report = _analyzed(cfg, interleave(sim))

    estimates = None
    if cfg.scenario == "IDENTIFY":
        est = estimate_all(sim, tiadc, resimulated_references(tiadc, signal, cfg.k_frames))
        estimates = _estimate_dict(est)

    summary = _base_report(cfg) | {
        "metrics": _metrics(report),
        "spurs": _spur_rows(report),
        "mismatch": {"truth": _truth(channels, tiadc.t_s), "estimates": estimates},
        "saturation": _saturation(sim),
    }
    files = {
        "spectrum.csv": render_spectrum_csv(report),
        "report.json": render_report_json(summary),
    }
    return RunResult(scenario=cfg.scenario, files=files, summary=summary)


def _run_calibrate(cfg: ExperimentConfig) -> RunResult:
    trial_seed = seed64(cfg.master_seed, 0)
    channels = _build_channels(cfg, trial_seed)
    tiadc = _tiadc_config(cfg, channels, trial_seed)
    signal = _signal_spec(cfg)
    k_sim = cfg.k_frames + 2 * cfg.taps
    sim = simulate(tiadc, signal, k_sim)
    est = estimate_all(sim, tiadc, resimulated_references(tiadc, signal, k_sim))
    corrected = _apply_compensation(sim, est, ("offset", "gain", "timing"), cfg.taps)

    window = _interior(cfg)
    report_unc = _analyzed(cfg, interleave(sim)[window])
    report_cal = _analyzed(cfg, corrected[window])

    summary = _base_report(cfg) | {
        "metrics": _metrics(report_cal),
        "metrics_uncalibrated": _metrics(report_unc),
        "spurs": _spur_rows(report_cal),
        "mismatch": {"truth": _truth(channels, tiadc.t_s), "estimates": _estimate_dict(est)},
        "saturation": _saturation(sim),
    }
    files = {
        "spectrum.csv": render_spectrum_csv(report_cal),
        "report.json": render_report_json(summary),
    }
    return RunResult(scenario=cfg.scenario, files=files, summary=summary)


def _sweep_sigma_override(parameter: str, value: float) -> dict:
    return {
        "OFFSET_STD": {"offset_v": value},
        "GAIN_STD": {"gain": value},
        "TIMING_STD": {"timing_rel": value},
    }[parameter]


def _aggregate(values: list[float], how: str) -> float:
    ordered = sorted(values)
    if how == "WORST":
        return ordered[0]
    return math.fsum(ordered) / len(ordered)


def run_sweep(cfg: ExperimentConfig, trial_order: Sequence[int] | None = None) -> RunResult:
    """SWEEP scenario; `trial_order` only reorders execution (results are a
    pure function of the config, whatever the order)."""
    sweep = cfg.sweep
    assert sweep is not None
    signal = _signal_spec(cfg)
    window = _interior(cfg)
    k_sim = cfg.k_frames + 2 * cfg.taps
    order = list(trial_order) if trial_order is not None else list(range(sweep.trials))
    if sorted(order) != list(range(sweep.trials)):
        raise ConfigSchemaError([("sweep.trials", "trial_order must permute range(trials)")])

    rows: list[tuple[float, float, float]] = []
    exclusions: list[dict] = []
    first_report: SpectrumReport | None = None
    for value in sweep.values:
        unc: dict[int, float] = {}
        comp: dict[int, float] = {}
        excluded: list[int] = []
        for trial in order:
            trial_seed = seed64(cfg.master_seed, trial)
            channels = _build_channels(
                cfg, trial_seed, _sweep_sigma_override(sweep.parameter, value)
            )
            tiadc = _tiadc_config(cfg, channels, trial_seed)
            sim = simulate(tiadc, signal, k_sim)
            report_unc = analyze(
                interleave(sim)[window], tiadc.sample_rate, window=cfg.window.lower()
            )
            if value == sweep.values[0] and trial == 0:
                first_report = report_unc
            try:
                est = estimate_all(sim, tiadc, resimulated_references(tiadc, signal, k_sim))
                corrected = _apply_compensation(sim, est, sweep.compensate, cfg.taps)
                report_comp = analyze(
                    corrected[window], tiadc.sample_rate, window=cfg.window.lower()
                )
            except (DegenerateSignalError, DivergenceError):
                excluded.append(trial)
                continue
            unc[trial] = report_unc.sinad_db
            comp[trial] = report_comp.sinad_db
        if not unc:
            raise DegenerateSignalError(
                f"all {sweep.trials} trials excluded at sigma={value:g}"
            )
        rows.append(
            (value, _aggregate(list(unc.values()), sweep.aggregate),
             _aggregate(list(comp.values()), sweep.aggregate))
        )
        exclusions.append({"sigma": value, "excluded_trials": sorted(excluded)})

    sweep_csv = render_sweep_csv(rows)
    summary = _base_report(cfg) | {
        "sweep": {
            "parameter": sweep.parameter,
            "aggregate": sweep.aggregate,
            "compensate": list(sweep.compensate),
            "trials": sweep.trials,
            "rows": [
                {
                    "sigma": s,
                    "aggregate_sinad_db_uncompensated": _finite(u),
                    "aggregate_sinad_db_compensated": _finite(c),
                }
                for s, u, c in rows
            ],
            "exclusions": exclusions,
        },
    }
    files = {"sweep.csv": sweep_csv, "report.json": render_report_json(summary)}
    if first_report is not None:
        files["spectrum.csv"] = render_spectrum_csv(first_report)
    return RunResult(scenario=cfg.scenario, files=files, summary=summary)


def run(cfg: ExperimentConfig) -> RunResult:
    """Execute a validated config and return its artifact files and summary."""
    if cfg.scenario in ("SPECTRUM", "IDENTIFY", "BANDWIDTH_DEMO"):
        return _run_single(cfg)
    if cfg.scenario == "CALIBRATE":
        return _run_calibrate(cfg)
    if cfg.scenario == "SWEEP":
        return run_sweep(cfg)
    raise ConfigSchemaError([("scenario", f"unknown scenario {cfg.scenario!r}")])


def write_artifacts(files: dict[str, str], out_dir: str) -> list[str]:
    """Atomically write artifact files (write-temp-then-rename)."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for name, content in files.items():
        final = os.path.join(out_dir, name)
        fd, tmp = tempfile.mkstemp(dir=out_dir, prefix=f".{name}.")
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                fh.write(content)
            os.replace(tmp, final)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        paths.append(final)
    return paths


def run_and_write(cfg: ExperimentConfig, out_dir: str | None = None) -> RunResult:
    result = run(cfg)
    write_artifacts(result.files, out_dir if out_dir is not None else cfg.output_dir)
    return result
