"""Power spectra, SINAD/SFDR/ENOB metrics and interleaving-spur bookkeeping.

The carrier-relative (dBc) convention: the reported power array is normalized
so the carrier bin sits at exactly 0 dBc. SINAD is the carrier power over all
remaining non-DC power; the noise floor is the mean noise-bin power in dBc
(the flat level the total noise integrates to, which is what an FFT plot's
visual floor corresponds to); spurs are noise bins poking more than
`spur_threshold_db` above that floor.

With the rectangular window the carrier is taken as a single bin (coherent
sampling assumed); with the Hann window the carrier and DC lobes are widened
adaptively until the skirt falls to the local floor, so non-coherent tones
do not leak lobe power into the noise estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import DegenerateSignalError, DomainError, InputError, SizeError

__all__ = [
    "OFFSET_SPUR",
    "SIGNAL_IMAGE_SPUR",
    "UNCLASSIFIED",
    "Spur",
    "SpurPrediction",
    "SpectrumReport",
    "power_spectrum",
    "analyze",
    "predict_spurs",
    "label_spurs",
]

OFFSET_SPUR = "OFFSET_SPUR"
SIGNAL_IMAGE_SPUR = "SIGNAL_IMAGE_SPUR"
UNCLASSIFIED = "UNCLASSIFIED"

DBC_CLAMP = -400.0
"""Lower bound for dBc values (numerically-zero bins)."""

DEFAULT_SPUR_THRESHOLD_DB = 10.0

_WINDOWS = ("rectangular", "hann")


@dataclass(frozen=True)
class Spur:
    bin: int
    freq_hz: float
    power_dbc: float
    label: str = UNCLASSIFIED


@dataclass(frozen=True)
class SpurPrediction:
    """Predicted spur locations in [0, f_s/2] for an M-way interleaved converter."""

    offset_freqs: tuple[float, ...]
    image_freqs: tuple[float, ...]


@dataclass(frozen=True)
class SpectrumReport:
    """One-sided spectrum (carrier-normalized) plus its figures of merit."""

    bin_freqs: np.ndarray
    power_dbc: np.ndarray
    carrier_bin: int
    sinad_db: float
    sfdr_db: float
    enob_bits: float
    noise_floor_dbc: float
    spurs: tuple[Spur, ...]
    sample_rate: float
    window: str

    def __post_init__(self) -> None:
        self.bin_freqs.setflags(write=False)
        self.power_dbc.setflags(write=False)

    @property
    def carrier_freq(self) -> float:
        return float(self.bin_freqs[self.carrier_bin])

    @property
    def n_fft(self) -> int:
        return 2 * (len(self.bin_freqs) - 1)


def _check_window(window: str) -> str:
    w = window.lower()
    if w not in _WINDOWS:
        raise InputError(f"window must be one of {_WINDOWS}, got {window!r}")
    return w


def power_spectrum(x, window: str = "rectangular", sample_rate: float = 1.0):
    """One-sided power spectrum of `x` (length must be a power of two).

    Returns (bin_freqs, power): length N/2+1 arrays where power[i] is the
    power carried by bin i, scaled so the total equals the mean-square value
    of the (windowed, coherent-gain-normalized) sequence. With the
    rectangular window, sum(power) == mean(x**2) to machine precision
    (Parseval).
    """
    w = _check_window(window)
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    if n < 2 or (n & (n - 1)) != 0:
        raise SizeError(f"transform length must be a power of two, got {n}")
    if w == "hann":
        taper = np.hanning(n)
        spectrum = np.fft.rfft(x * taper) / taper.sum()
    else:
        spectrum = np.fft.rfft(x) / n
    power = np.abs(spectrum) ** 2
    power[1:-1] *= 2.0
    bin_freqs = np.arange(n // 2 + 1) * (sample_rate / n)
    return bin_freqs, power


def _expand_lobe(p: np.ndarray, center: int, stop_power: float, grace: int = 1) -> tuple[int, int]:
    """Grow [lo, hi] around `center` while bins stay above `stop_power`.

    Up to `grace` consecutive below-threshold bins are stepped over, so
    single sidelobe nulls do not truncate the lobe. The radius is capped at
    a quarter of the spectrum.
    """
    max_radius = max(1, len(p) // 4)
    lo = hi = center
    for direction in (-1, +1):
        below = 0
        i = center + direction
        while 0 <= i < len(p) and abs(i - center) <= max_radius:
            if p[i] >= stop_power:
                below = 0
                if direction < 0:
                    lo = i
                else:
                    hi = i
            else:
                below += 1
                if below > grace:
                    break
            i += direction
    return lo, hi


def analyze(
    x,
    sample_rate: float,
    carrier_hint: float | None = None,
    window: str = "rectangular",
    spur_threshold_db: float = DEFAULT_SPUR_THRESHOLD_DB,
) -> SpectrumReport:
    """Figures of merit for a captured stream.

    The carrier is the strongest non-DC bin, or the bin nearest
    `carrier_hint` (Hz) when given. SINAD excludes the DC bin; ENOB is
    (SINAD - 1.76)/6.02; SFDR is the carrier-to-strongest-spur ratio; the
    noise floor is the mean non-carrier, non-spur bin power in dBc.
    """
    x = np.asarray(x, dtype=float)
    if not np.any(x):
        raise DegenerateSignalError("all-zero input")
    bin_freqs, p = power_spectrum(x, window=window, sample_rate=sample_rate)
    n_bins = len(p)

    if carrier_hint is None:
        carrier_bin = 1 + int(np.argmax(p[1:]))
    else:
        df = sample_rate / (2 * (n_bins - 1))
        carrier_bin = min(max(int(round(carrier_hint / df)), 1), n_bins - 1)
    if p[carrier_bin] <= 0.0:
        raise DegenerateSignalError("no detectable carrier")

    w = _check_window(window)
    if w == "hann":
        provisional = float(np.median(p[1:]))
        stop = max(provisional, 1e-300) * 10.0
        lobe_lo, lobe_hi = _expand_lobe(p, carrier_bin, stop)
        _, dc_hi = _expand_lobe(p, 0, stop)
    else:
        lobe_lo = lobe_hi = carrier_bin
        dc_hi = 0

    noise_mask = np.ones(n_bins, dtype=bool)
    noise_mask[: dc_hi + 1] = False
    noise_mask[lobe_lo : lobe_hi + 1] = False
    if not noise_mask.any():
        raise DegenerateSignalError("carrier lobe swallowed the whole spectrum")

    carrier_power = float(p[lobe_lo : lobe_hi + 1].sum())
    noise_power = float(p[noise_mask].sum())
    sinad_db = 10.0 * math.log10(carrier_power / max(noise_power, 1e-300))
    enob_bits = (sinad_db - 1.76) / 6.02

    with np.errstate(divide="ignore"):
        power_dbc = 10.0 * np.log10(p / p[carrier_bin])
    power_dbc = np.maximum(power_dbc, DBC_CLAMP)
    sfdr_db = float(-power_dbc[noise_mask].max())

    # floor via one refinement pass: detect spurs against the provisional
    # mean, then average the remaining bins
    mean_noise = float(p[noise_mask].mean())
    spur_gate = mean_noise * 10.0 ** (spur_threshold_db / 10.0)
    spur_bins = np.where(noise_mask & (p >= spur_gate))[0]
    floor_mask = noise_mask.copy()
    floor_mask[spur_bins] = False
    floor_power = float(p[floor_mask].mean()) if floor_mask.any() else mean_noise
    noise_floor_dbc = max(
        10.0 * math.log10(max(floor_power, 1e-300) / p[carrier_bin]), DBC_CLAMP
    )

    spurs = tuple(
        Spur(bin=int(b), freq_hz=float(bin_freqs[b]), power_dbc=float(power_dbc[b]))
        for b in spur_bins
    )
    return SpectrumReport(
        bin_freqs=bin_freqs,
        power_dbc=power_dbc,
        carrier_bin=carrier_bin,
        sinad_db=sinad_db,
        sfdr_db=sfdr_db,
        enob_bits=enob_bits,
        noise_floor_dbc=noise_floor_dbc,
        spurs=spurs,
        sample_rate=sample_rate,
        window=w,
    )


def _fold(freq: float, sample_rate: float) -> float:
    """Alias `freq` into the first Nyquist zone [0, f_s/2] by reflection."""
    r = math.fmod(abs(freq), sample_rate)
    return min(r, sample_rate - r)


def _dedupe(values, tol: float) -> tuple[float, ...]:
    """Collapse float-noise duplicates from folding arithmetic."""
    out: list[float] = []
    for v in sorted(values):
        if not out or v - out[-1] > tol:
            out.append(v)
    return tuple(out)


def predict_spurs(m_channels: int, f0: float, sample_rate: float) -> SpurPrediction:
    """Spur locations for offset and gain/timing mismatches.

    Offset mismatches place lines at k*f_s/M (k = 1..floor(M/2), folded);
    gain and timing mismatches place images at +/-f0 + k*f_s/M (k = 0..M-1,
    folded), excluding the carrier itself.
    """
    if m_channels < 1:
        raise InputError(f"m_channels must be >= 1, got {m_channels}")
    if not 0.0 < f0 < sample_rate / 2.0:
        raise DomainError(f"carrier must satisfy 0 < f0 < fs/2, got {f0}")
    tol = 1e-9 * sample_rate
    offset = {_fold(k * sample_rate / m_channels, sample_rate) for k in range(1, m_channels // 2 + 1)}
    image = {
        _fold(sign * f0 + k * sample_rate / m_channels, sample_rate)
        for sign in (1.0, -1.0)
        for k in range(m_channels)
    }
    image = {f for f in image if abs(f - f0) > tol}
    return SpurPrediction(
        offset_freqs=_dedupe(offset, tol), image_freqs=_dedupe(image, tol)
    )


def label_spurs(
    report: SpectrumReport, predicted: SpurPrediction, tolerance_bins: int = 1
) -> SpectrumReport:
    """Attach mismatch labels to a report's spurs.

    A spur within `tolerance_bins` of a predicted offset-spur frequency is
    labeled OFFSET_SPUR; otherwise, within tolerance of an image frequency,
    SIGNAL_IMAGE_SPUR (offset wins a tie); anything else stays UNCLASSIFIED.
    """
    n = report.n_fft
    df = report.sample_rate / n
    offset_bins = {int(round(f / df)) for f in predicted.offset_freqs}
    image_bins = {int(round(f / df)) for f in predicted.image_freqs}

    def _classify(b: int) -> str:
        if any(abs(b - ob) <= tolerance_bins for ob in offset_bins):
            return OFFSET_SPUR
        if any(abs(b - ib) <= tolerance_bins for ib in image_bins):
            return SIGNAL_IMAGE_SPUR
        return UNCLASSIFIED

    labeled = tuple(replace(s, label=_classify(s.bin)) for s in report.spurs)
    return replace(report, spurs=labeled)
