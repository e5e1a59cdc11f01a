"""Mismatch correction: offset subtraction, gain division, timing resampling.

Corrections apply in the identification order (offset, then gain, then
timing); timing is corrected digitally by fractional-delay resampling with a
Hann-windowed sinc interpolator. Stream edges, where the interpolator runs on
zero-padded support, are flagged as transient and should be excluded from
downstream metrics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .adc import ChannelOutputs, interleave
from .errors import DivergenceError, InputError
from .identify import TIMING_REJECT, MismatchEstimate

__all__ = [
    "compensate_offset",
    "compensate_gain",
    "compensate_timing",
    "fractional_delay_kernel",
    "CalibratedOutput",
    "calibrate",
]

DEFAULT_TAPS = 32


def compensate_offset(y, offset: float) -> np.ndarray:
    """Subtract an estimated offset elementwise."""
    return np.asarray(y, dtype=float) - offset


def compensate_gain(y, gain: float) -> np.ndarray:
    """Divide by an estimated gain elementwise."""
    if not gain > 0.0:
        raise InputError(f"gain must be > 0, got {gain}")
    return np.asarray(y, dtype=float) / gain


def fractional_delay_kernel(shift: float, taps: int) -> np.ndarray:
    """Hann-windowed sinc kernel with 2*taps+1 coefficients.

    Convolving a stream with the kernel evaluates it `shift` sample periods
    earlier (a delay for positive `shift`). shift = 0 yields an exact unit
    impulse. The kernel is normalized to unity DC gain.
    """
    if taps < 4:
        raise InputError(f"taps must be >= 4, got {taps}")
    j = np.arange(-taps, taps + 1)
    h = np.sinc(j - shift) * np.hanning(2 * taps + 3)[1:-1]
    return h / h.sum()


def compensate_timing(
    y, rel_timing: float, taps: int = DEFAULT_TAPS, interleave_factor: int = 1
) -> tuple[np.ndarray, np.ndarray]:
    """Resample a stream to undo a timing skew of rel_timing * T_s.

    `rel_timing` is the skew in units of the interleaved (aggregate) sample
    period T_s; `interleave_factor` is the number of T_s periods per sample
    of `y` (M for a de-interleaved channel stream, 1 for an aggregate-rate
    stream), so the applied fractional offset is -rel_timing on the
    interleaved grid. Edges use zero-padded support.

    Returns (corrected, transient) where `transient` flags the first and last
    `taps` samples.
    """
    if abs(rel_timing) >= TIMING_REJECT:
        raise DivergenceError(
            f"relative timing {rel_timing:.4g} beyond +/-{TIMING_REJECT}"
        )
    if interleave_factor < 1:
        raise InputError(f"interleave_factor must be >= 1, got {interleave_factor}")
    y = np.asarray(y, dtype=float)
    h = fractional_delay_kernel(rel_timing / interleave_factor, taps)
    # full convolution sliced back to len(y): np.convolve(..., "same") would
    # return the kernel length instead whenever the stream is shorter
    corrected = np.convolve(y, h)[taps : taps + len(y)]
    transient = np.zeros(len(y), dtype=bool)
    transient[:taps] = True
    transient[len(y) - taps :] = True
    return corrected, transient


@dataclass(frozen=True)
class CalibratedOutput:
    """Corrected interleaved stream plus its edge-transient mask."""

    samples: np.ndarray
    transient: np.ndarray

    def __post_init__(self) -> None:
        self.samples.setflags(write=False)
        self.transient.setflags(write=False)

    def steady(self) -> np.ndarray:
        """Samples outside the interpolator's edge transients."""
        return self.samples[~self.transient]


def calibrate(
    out: ChannelOutputs, est: MismatchEstimate, taps: int = DEFAULT_TAPS
) -> CalibratedOutput:
    """Correct every channel (offset, then gain, then timing) and interleave."""
    if est.m_channels != out.m_channels:
        raise InputError(
            f"estimate covers {est.m_channels} channels, capture has {out.m_channels}"
        )
    corrected, masks = [], []
    for m in range(out.m_channels):
        y = compensate_offset(out.per_channel[m], float(est.offsets_v[m]))
        y = compensate_gain(y, float(est.gains[m]))
        y, transient = compensate_timing(
            y, float(est.rel_timing[m]), taps=taps, interleave_factor=out.m_channels
        )
        corrected.append(y)
        masks.append(transient)
    return CalibratedOutput(
        samples=interleave(corrected),
        transient=interleave(masks).astype(bool),
    )
