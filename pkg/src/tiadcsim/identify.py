"""Reference-channel mismatch identification: offset, gain, relative timing.

The estimators compare each channel's stream against a reference capture
clocked coincident with that channel. Timing uses the difference-ratio
statistic between a channel, its predecessor on the interleaved time axis,
and the reference: without skew the channel-minus-predecessor differences
match the reference-minus-predecessor differences; skew scales them.

Sign convention: with sampling instants modeled as nominal + timing_skew,
estimate_timing returns r_hat = E|y_m - y_prev| / E|y_ref - y_prev| - 1,
which estimates timing_skew/T_s directly (a channel sampling late yields a
positive r_hat).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .adc import ChannelOutputs, TiAdcConfig, reference_capture
from .errors import DegenerateSignalError, DivergenceError, InputError
from .signals import SignalSpec

__all__ = [
    "MismatchEstimate",
    "estimate_offset",
    "estimate_gain",
    "estimate_timing",
    "estimate_all",
    "resimulated_references",
]

TIMING_REJECT = 0.5
"""Relative-timing magnitude beyond which an estimate is treated as divergent."""


@dataclass(frozen=True)
class MismatchEstimate:
    """Per-channel estimates: offsets (V), gains, and relative timing
    (timing_skew / T_s, dimensionless)."""

    offsets_v: np.ndarray
    gains: np.ndarray
    rel_timing: np.ndarray
    k_used: int

    def __post_init__(self) -> None:
        for name in ("offsets_v", "gains", "rel_timing"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if not (len(self.offsets_v) == len(self.gains) == len(self.rel_timing)):
            raise InputError("estimate arrays must share one length")
        if np.any(self.gains <= 0.0):
            raise InputError("estimated gains must all be > 0")
        if np.any(np.abs(self.rel_timing) >= TIMING_REJECT):
            raise DivergenceError("relative timing estimate beyond half a sample period")

    @property
    def m_channels(self) -> int:
        return len(self.gains)


def _paired(y_m, y_ref, min_len: int = 1):
    y_m = np.asarray(y_m, dtype=float)
    y_ref = np.asarray(y_ref, dtype=float)
    if y_m.shape != y_ref.shape or y_m.ndim != 1:
        raise InputError(f"streams must be equal-length 1-D arrays, got {y_m.shape} vs {y_ref.shape}")
    if len(y_m) < min_len:
        raise InputError(f"need at least {min_len} samples, got {len(y_m)}")
    return y_m, y_ref


def estimate_offset(y_m, y_ref) -> float:
    """Channel offset relative to the aligned reference: mean(y_m) - mean(y_ref).

    Using the reference mean (rather than assuming a zero-mean input) keeps
    the estimate correct for inputs with a DC component.
    """
    y_m, y_ref = _paired(y_m, y_ref)
    return float(y_m.mean() - y_ref.mean())


def estimate_gain(y_m, y_ref) -> float:
    """Channel gain from the power ratio sqrt(sum(y_m^2) / sum(y_ref^2)).

    Both streams must already be offset-compensated; timing mismatch does not
    move channel power, so any power deviation is attributed to gain.
    """
    y_m, y_ref = _paired(y_m, y_ref)
    ref_power = float(np.dot(y_ref, y_ref))
    if ref_power <= 0.0:
        raise DegenerateSignalError("reference stream has zero power")
    return float(np.sqrt(np.dot(y_m, y_m) / ref_power))


def estimate_timing(y_m, y_prev, y_ref, mode: str = "absolute") -> float:
    """Relative timing mismatch r_hat ~= timing_skew/T_s of channel m.

    `y_prev` is the predecessor channel's stream (channel m-1; for channel 0
    use channel M-1 shifted back one frame), `y_ref` the reference aligned to
    channel m. Offsets and gains must already be compensated.

    `mode` selects how the expectation terms aggregate the first differences:
    "absolute" (default, averages |differences| so both slope signs add
    coherently) or "signed" (plain means, kept for comparison; slopes of
    opposite sign cancel).
    """
    y_m, y_prev = _paired(y_m, y_prev, min_len=2)
    y_ref, _ = _paired(y_ref, y_m, min_len=2)
    if mode not in ("absolute", "signed"):
        raise InputError(f"mode must be 'absolute' or 'signed', got {mode!r}")
    d_m = y_m - y_prev
    d_ref = y_ref - y_prev
    if mode == "absolute":
        num = float(np.mean(np.abs(d_m)))
        den = float(np.mean(np.abs(d_ref)))
    else:
        num = float(np.mean(d_m))
        den = float(np.mean(d_ref))
    if den == 0.0:
        raise DegenerateSignalError("reference difference mean is zero (constant input?)")
    r_hat = num / den - 1.0
    if abs(r_hat) >= TIMING_REJECT:
        raise DivergenceError(f"timing estimate {r_hat:.4g} beyond +/-{TIMING_REJECT}")
    return r_hat


def resimulated_references(
    cfg: TiAdcConfig, signal: SignalSpec, k_frames: int
) -> Callable[[int], np.ndarray]:
    """Reference-selection callback that re-captures the reference channel
    aligned to each requested channel (the simulation-side realization of a
    rotating reference clock)."""

    def _select(m: int) -> np.ndarray:
        return reference_capture(cfg, signal, k_frames, aligned_to=m)

    return _select


def estimate_all(
    out: ChannelOutputs,
    cfg: TiAdcConfig,
    reselect_reference: Callable[[int], np.ndarray],
    mode: str = "absolute",
) -> MismatchEstimate:
    """Sequential identification of all channels: offsets, then gains, then timing.

    `reselect_reference(m)` must return a reference stream of `out.k_frames`
    samples aligned to channel m's nominal instants. Estimator failures are
    re-raised tagged with the failing channel.
    """
    m_channels = out.m_channels
    refs = []
    for m in range(m_channels):
        ref = np.asarray(reselect_reference(m), dtype=float)
        if ref.shape != out.per_channel[m].shape:
            raise InputError(f"reference capture for channel {m} has wrong length")
        refs.append(ref)

    offsets = np.empty(m_channels)
    gains = np.empty(m_channels)
    rel_timing = np.empty(m_channels)

    centered = []
    centered_refs = []
    for m in range(m_channels):
        try:
            offsets[m] = estimate_offset(out.per_channel[m], refs[m])
            compensated = out.per_channel[m] - offsets[m]
            # gain compares offset-free powers; centering both streams removes
            # the (trusted) reference's own mean and any true DC identically
            ref_c = refs[m] - refs[m].mean()
            ch_c = compensated - compensated.mean()
            gains[m] = estimate_gain(ch_c, ref_c)
            centered.append(ch_c / gains[m])
            centered_refs.append(ref_c)
        except (DegenerateSignalError, DivergenceError, InputError) as exc:
            raise type(exc)(f"channel {m}: {exc}") from exc

    for m in range(m_channels):
        try:
            if m == 0:
                # channel 0's predecessor on the interleaved axis is channel
                # M-1 one frame earlier
                rel_timing[0] = estimate_timing(
                    centered[0][1:], centered[m_channels - 1][:-1], centered_refs[0][1:], mode
                )
            else:
                rel_timing[m] = estimate_timing(centered[m], centered[m - 1], centered_refs[m], mode)
        except (DegenerateSignalError, DivergenceError, InputError) as exc:
            raise type(exc)(f"channel {m}: {exc}") from exc

    return MismatchEstimate(
        offsets_v=offsets, gains=gains, rel_timing=rel_timing, k_used=out.k_frames
    )
