"""Analytic band-limited test signals and first-order low-pass input filters.

Signals are finite sums of sinusoids plus a DC term, so they can be evaluated
exactly at arbitrary continuous-time instants (as needed when sampling with
timing skew and jitter) and filtered in closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError

__all__ = ["Tone", "SignalSpec", "FilterSpec", "eval_signal", "apply_filter"]

_TWO_PI = 2.0 * math.pi


def _wrap_phase(phi: float) -> float:
    """Normalize a phase to the canonical interval (-pi, pi]."""
    return math.pi - (math.pi - phi) % _TWO_PI


@dataclass(frozen=True)
class Tone:
    """One sinusoid: amplitude * sin(2*pi*frequency*t + phase).

    Amplitude is in volts, frequency in Hz, phase in radians. The stored
    phase is normalized to (-pi, pi].
    """

    amplitude: float
    frequency: float
    phase: float = 0.0

    def __post_init__(self) -> None:
        if not (self.amplitude >= 0.0 and math.isfinite(self.amplitude)):
            raise InputError(f"tone amplitude must be finite and >= 0, got {self.amplitude}")
        if not (self.frequency >= 0.0 and math.isfinite(self.frequency)):
            raise InputError(f"tone frequency must be finite and >= 0, got {self.frequency}")
        if not math.isfinite(self.phase):
            raise InputError(f"tone phase must be finite, got {self.phase}")
        object.__setattr__(self, "phase", _wrap_phase(self.phase))


@dataclass(frozen=True)
class SignalSpec:
    """A multi-tone signal: dc + sum of tones.

    Evaluation is pure and deterministic; |x(t)| <= |dc| + sum of amplitudes.
    """

    tones: tuple[Tone, ...] = ()
    dc: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "tones", tuple(self.tones))
        if not math.isfinite(self.dc):
            raise InputError(f"dc must be finite, got {self.dc}")

    def peak_bound(self) -> float:
        return abs(self.dc) + sum(t.amplitude for t in self.tones)


@dataclass(frozen=True)
class FilterSpec:
    """First-order low-pass input filter, -3 dB at `cutoff` (Hz).

    `cutoff` may be math.inf, which makes the filter transparent.
    """

    cutoff: float

    def __post_init__(self) -> None:
        if not self.cutoff > 0.0 or math.isnan(self.cutoff):
            raise InputError(f"filter cutoff must be > 0, got {self.cutoff}")

    def magnitude(self, frequency: float) -> float:
        """|H(f)| = 1/sqrt(1 + (f/fc)^2); exactly 1/sqrt(2) at f = cutoff."""
        ratio = frequency / self.cutoff
        return 1.0 / math.sqrt(1.0 + ratio * ratio)

    def phase_shift(self, frequency: float) -> float:
        """Phase response -atan(f/fc) in radians."""
        return -math.atan(frequency / self.cutoff)


def eval_signal(spec: SignalSpec, t):
    """Evaluate the signal at time(s) `t` (seconds).

    Accepts a scalar or an ndarray; returns the same shape. Total on finite
    inputs: dc + sum_i A_i * sin(2*pi*f_i*t + phi_i) in double precision.
    """
    t_arr = np.asarray(t, dtype=float)
    out = np.full(t_arr.shape, spec.dc, dtype=float)
    for tone in spec.tones:
        out += tone.amplitude * np.sin(_TWO_PI * tone.frequency * t_arr + tone.phase)
    if np.ndim(t) == 0:
        return float(out)
    return out


def apply_filter(spec: SignalSpec, filt: FilterSpec) -> SignalSpec:
    """Filter a signal analytically, tone by tone.

    Each tone (A, f, phi) maps to (A*|H(f)|, f, phi + arg H(f)); the DC term
    is unchanged (first-order low-pass has unity DC gain).
    """
    tones = tuple(
        Tone(
            amplitude=tone.amplitude * filt.magnitude(tone.frequency),
            frequency=tone.frequency,
            phase=tone.phase + filt.phase_shift(tone.frequency),
        )
        for tone in spec.tones
    )
    return SignalSpec(tones=tones, dc=spec.dc)
