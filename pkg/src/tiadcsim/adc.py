"""Behavioral model of an M-channel time-interleaved ADC with a reference channel.

Conventions
-----------
* `sample_rate` is the aggregate (interleaved) rate f_s; T_s = 1/f_s. Each
  channel runs at f_s/M and channel m owns the nominal instants
  t = (k*M + m) * T_s for frame k.
* A channel's actual sampling instant is nominal + timing_skew + jitter,
  i.e. a positive skew samples late.
* The reference channel is clocked coincident with channel
  `reference_aligned_to`: its nominal instants are (k*M + a) * T_s.
* Per-channel error pipeline: input filter -> (skewed, jittered) sampling
  -> x gain -> + offset -> quantizer.

Randomness is drawn from streams derived deterministically from
(rng_seed, channel key, purpose), so adding channels or re-aligning the
reference never perturbs another channel's draws.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigurationError, InputError
from .signals import FilterSpec, SignalSpec, apply_filter, eval_signal

__all__ = [
    "REF",
    "ChannelParams",
    "QuantizerSpec",
    "TiAdcConfig",
    "ChannelOutputs",
    "sample_instant",
    "jitter_stream",
    "quantize",
    "simulate",
    "reference_capture",
    "interleave",
    "deinterleave",
    "draw_channel_params",
]

REF = -1
"""Sentinel channel index selecting the reference channel."""


def derive_seed(*parts) -> int:
    """Collision-resistant, platform-stable 128-bit seed from labeled parts."""
    digest = hashlib.sha256("/".join(str(p) for p in parts).encode()).digest()
    return int.from_bytes(digest[:16], "little")


def _stream(seed: int, channel_key, purpose: str) -> np.random.Generator:
    return np.random.default_rng(derive_seed(seed, channel_key, purpose))


@dataclass(frozen=True)
class ChannelParams:
    """Static per-channel errors: offset (V), gain (nominal 1), timing skew (s),
    and the channel's input-filter cutoff."""

    offset: float = 0.0
    gain: float = 1.0
    timing_skew: float = 0.0
    filter: FilterSpec = field(default_factory=lambda: FilterSpec(math.inf))

    def __post_init__(self) -> None:
        if not self.gain > 0.0:
            raise InputError(f"channel gain must be > 0, got {self.gain}")


@dataclass(frozen=True)
class QuantizerSpec:
    """Mid-rise uniform quantizer: B bits over [v_min, v_max], clipping beyond."""

    bits: int
    v_min: float = -1.0
    v_max: float = 1.0

    def __post_init__(self) -> None:
        if self.bits < 1:
            raise InputError(f"quantizer bits must be >= 1, got {self.bits}")
        if not self.v_max > self.v_min:
            raise InputError("quantizer range requires v_max > v_min")

    @property
    def lsb(self) -> float:
        return (self.v_max - self.v_min) / (1 << self.bits)

    @property
    def n_codes(self) -> int:
        return 1 << self.bits


@dataclass(frozen=True)
class TiAdcConfig:
    """Full converter configuration.

    `channels` must hold exactly `m_channels` entries. Timing skews must stay
    below one aggregate sample period in magnitude.
    """

    m_channels: int
    sample_rate: float
    channels: tuple[ChannelParams, ...]
    quantizer: QuantizerSpec = field(default_factory=lambda: QuantizerSpec(bits=8))
    jitter_std: float = 0.0
    reference: ChannelParams = field(default_factory=ChannelParams)
    reference_aligned_to: int = 0
    rng_seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "channels", tuple(self.channels))
        if self.m_channels < 2:
            raise ConfigurationError(f"m_channels must be >= 2, got {self.m_channels}")
        if not (self.sample_rate > 0.0 and math.isfinite(self.sample_rate)):
            raise ConfigurationError(f"sample_rate must be finite and > 0, got {self.sample_rate}")
        if len(self.channels) != self.m_channels:
            raise ConfigurationError(
                f"expected {self.m_channels} channel entries, got {len(self.channels)}"
            )
        if self.jitter_std < 0.0:
            raise ConfigurationError("jitter_std must be >= 0")
        if not 0 <= self.reference_aligned_to < self.m_channels:
            raise ConfigurationError(
                f"reference_aligned_to must lie in [0, {self.m_channels}), "
                f"got {self.reference_aligned_to}"
            )
        for m, ch in enumerate(list(self.channels) + [self.reference]):
            if abs(ch.timing_skew) >= self.t_s:
                name = "reference" if m == self.m_channels else f"channel {m}"
                raise ConfigurationError(f"{name} timing skew exceeds one sample period")

    @property
    def t_s(self) -> float:
        """Aggregate sample period (seconds)."""
        return 1.0 / self.sample_rate


@dataclass(frozen=True)
class ChannelOutputs:
    """De-interleaved capture: M channel streams plus the reference stream.

    All arrays hold exactly `k_frames` samples; voltage streams are the
    quantizer reconstructions of the parallel integer code arrays. Arrays
    are frozen (non-writeable) so captures can be shared across threads.
    """

    per_channel: tuple[np.ndarray, ...]
    reference: np.ndarray
    codes: tuple[np.ndarray, ...]
    reference_codes: np.ndarray
    k_frames: int
    saturation_per_channel: tuple[int, ...]
    saturation_reference: int

    def __post_init__(self) -> None:
        for arr in (*self.per_channel, self.reference, *self.codes, self.reference_codes):
            arr.setflags(write=False)

    @property
    def m_channels(self) -> int:
        return len(self.per_channel)

    @property
    def saturation_total(self) -> int:
        return sum(self.saturation_per_channel) + self.saturation_reference


def jitter_stream(cfg: TiAdcConfig, m: int) -> np.random.Generator:
    """The per-channel jitter RNG stream (consumed in frame order).

    `m` is a channel index or REF. The reference stream does not depend on
    `reference_aligned_to`, so re-aligned captures reuse identical draws.
    """
    key = "ref" if m == REF else int(m)
    return _stream(cfg.rng_seed, key, "jitter")


def sample_instant(cfg: TiAdcConfig, m: int, k: int, rng: np.random.Generator | None = None) -> float:
    """Actual sampling instant of channel `m` (or REF) at frame `k`.

    Returns (k*M + m')*T_s + timing_skew + jitter, where m' is
    `reference_aligned_to` for REF. With jitter_std > 0 one Normal(0,
    jitter_std^2) value is drawn from `rng`, which must be that channel's
    stream positioned at frame k (see `jitter_stream`).
    """
    if m == REF:
        slot, params = cfg.reference_aligned_to, cfg.reference
    elif 0 <= m < cfg.m_channels:
        slot, params = m, cfg.channels[m]
    else:
        raise ConfigurationError(f"channel index {m} out of range for M={cfg.m_channels}")
    if k < 0:
        raise InputError(f"frame index must be >= 0, got {k}")
    t = (k * cfg.m_channels + slot) * cfg.t_s + params.timing_skew
    if cfg.jitter_std > 0.0:
        if rng is None:
            raise InputError("an rng stream is required when jitter_std > 0")
        t += rng.normal(0.0, cfg.jitter_std)
    return t


def quantize(q: QuantizerSpec, v):
    """Mid-rise quantization of voltage(s) `v`.

    Returns (code, reconstructed): code = clamp(floor((v - v_min)/LSB),
    0, 2^B - 1) and reconstructed = v_min + (code + 0.5)*LSB. Out-of-range
    inputs clip to the extreme codes.
    """
    v_arr = np.asarray(v, dtype=float)
    raw = np.floor((v_arr - q.v_min) / q.lsb)
    codes = np.clip(raw, 0, q.n_codes - 1).astype(np.int64)
    recon = q.v_min + (codes + 0.5) * q.lsb
    if np.ndim(v) == 0:
        return int(codes), float(recon)
    return codes, recon


def _capture_stream(cfg: TiAdcConfig, signal: SignalSpec, k_frames: int, m: int):
    """One channel's (or REF's) codes, reconstruction and saturation count."""
    if m == REF:
        slot, params = cfg.reference_aligned_to, cfg.reference
    else:
        slot, params = m, cfg.channels[m]
    filtered = apply_filter(signal, params.filter)
    k = np.arange(k_frames)
    t = (k * cfg.m_channels + slot) * cfg.t_s + params.timing_skew
    if cfg.jitter_std > 0.0:
        t = t + jitter_stream(cfg, m).normal(0.0, cfg.jitter_std, size=k_frames)
    w = params.gain * eval_signal(filtered, t) + params.offset
    saturated = int(np.count_nonzero((w < cfg.quantizer.v_min) | (w > cfg.quantizer.v_max)))
    codes, recon = quantize(cfg.quantizer, w)
    return codes, recon, saturated


def simulate(cfg: TiAdcConfig, signal: SignalSpec, k_frames: int) -> ChannelOutputs:
    """Run the full converter for `k_frames` frames per channel.

    Deterministic for a fixed cfg (including rng_seed) and signal.
    """
    if k_frames < 1:
        raise InputError(f"k_frames must be >= 1, got {k_frames}")
    codes, recon, sat = [], [], []
    for m in range(cfg.m_channels):
        c, r, s = _capture_stream(cfg, signal, k_frames, m)
        codes.append(c)
        recon.append(r)
        sat.append(s)
    ref_codes, ref_recon, ref_sat = _capture_stream(cfg, signal, k_frames, REF)
    return ChannelOutputs(
        per_channel=tuple(recon),
        reference=ref_recon,
        codes=tuple(codes),
        reference_codes=ref_codes,
        k_frames=k_frames,
        saturation_per_channel=tuple(sat),
        saturation_reference=ref_sat,
    )


def reference_capture(
    cfg: TiAdcConfig, signal: SignalSpec, k_frames: int, aligned_to: int | None = None
) -> np.ndarray:
    """Reference stream only, optionally re-aligned to another channel.

    Cheaper than `simulate` when rotating the reference across channels for
    identification; the jitter draws are identical either way.
    """
    if aligned_to is not None:
        cfg = replace(cfg, reference_aligned_to=aligned_to)
    _, recon, _ = _capture_stream(cfg, signal, k_frames, REF)
    recon.setflags(write=False)
    return recon


def interleave(out) -> np.ndarray:
    """Merge channel streams into the aggregate-rate stream: x[k*M + m] = y_m[k].

    Accepts a ChannelOutputs or any sequence of equal-length arrays
    (a one-element sequence interleaves to itself).
    """
    streams = out.per_channel if isinstance(out, ChannelOutputs) else tuple(out)
    if not streams:
        raise InputError("nothing to interleave")
    lengths = {len(s) for s in streams}
    if len(lengths) != 1:
        raise InputError("channel streams must share one length")
    return np.stack([np.asarray(s, dtype=float) for s in streams], axis=1).reshape(-1)


def deinterleave(x: np.ndarray, m_channels: int) -> list[np.ndarray]:
    """Split an aggregate-rate stream back into M channel streams."""
    x = np.asarray(x)
    if m_channels < 1 or len(x) % m_channels:
        raise InputError(f"length {len(x)} does not divide into {m_channels} channels")
    return [x[m::m_channels].copy() for m in range(m_channels)]


def _truncated(draw, accept, max_tries: int = 1000) -> float:
    for _ in range(max_tries):
        value = draw()
        if accept(value):
            return value
    raise ConfigurationError("truncated draw failed; sigma is too large for its bound")


def draw_channel_params(
    offset_std: float,
    gain_std: float,
    timing_std: float,
    cutoff_rel_std: float,
    nominal_cutoff: float,
    rng: np.random.Generator,
    t_s: float | None = None,
) -> ChannelParams:
    """Draw one channel's mismatch parameters.

    offset ~ N(0, offset_std^2); gain ~ N(1, gain_std^2) truncated > 0;
    timing ~ N(0, timing_std^2) truncated to |dt| < t_s/2 when `t_s` is given;
    cutoff = nominal_cutoff * (1 + N(0, cutoff_rel_std^2)) truncated > 0.
    All sigmas may be zero, yielding the exact nominal parameter.
    """
    for name, sigma in (
        ("offset_std", offset_std),
        ("gain_std", gain_std),
        ("timing_std", timing_std),
        ("cutoff_rel_std", cutoff_rel_std),
    ):
        if sigma < 0.0:
            raise InputError(f"{name} must be >= 0")
    offset = rng.normal(0.0, offset_std) if offset_std > 0 else 0.0
    gain = (
        _truncated(lambda: rng.normal(1.0, gain_std), lambda g: g > 0.0)
        if gain_std > 0
        else 1.0
    )
    if timing_std > 0:
        bound = math.inf if t_s is None else t_s / 2.0
        skew = _truncated(lambda: rng.normal(0.0, timing_std), lambda d: abs(d) < bound)
    else:
        skew = 0.0
    if cutoff_rel_std > 0:
        cutoff = nominal_cutoff * _truncated(
            lambda: 1.0 + rng.normal(0.0, cutoff_rel_std), lambda c: c > 0.0
        )
    else:
        cutoff = nominal_cutoff
    return ChannelParams(offset=offset, gain=gain, timing_skew=skew, filter=FilterSpec(cutoff))
