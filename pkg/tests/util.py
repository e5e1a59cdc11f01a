"""Shared builders for the test suite."""

from __future__ import annotations

import numpy as np

from tiadcsim import (
    ChannelParams,
    FilterSpec,
    QuantizerSpec,
    SignalSpec,
    TiAdcConfig,
    Tone,
)

FS = 1.0
F0 = 101.0 / 1024.0  # coherent: bin 101 of a 1024-point window at f_s = 1


def coherent_tone(amplitude: float = 0.9, phase: float = 0.0, f0: float = F0) -> SignalSpec:
    return SignalSpec(tones=(Tone(amplitude, f0, phase),))


def make_config(
    m_channels: int = 4,
    bits: int = 10,
    offsets=None,
    gains=None,
    skews=None,
    cutoffs=None,
    jitter_std: float = 0.0,
    reference: ChannelParams | None = None,
    reference_aligned_to: int = 0,
    rng_seed: int = 0,
    sample_rate: float = FS,
) -> TiAdcConfig:
    def _get(values, m, default):
        if values is None:
            return default
        return values[m]

    channels = tuple(
        ChannelParams(
            offset=_get(offsets, m, 0.0),
            gain=_get(gains, m, 1.0),
            timing_skew=_get(skews, m, 0.0),
            filter=FilterSpec(_get(cutoffs, m, np.inf)),
        )
        for m in range(m_channels)
    )
    return TiAdcConfig(
        m_channels=m_channels,
        sample_rate=sample_rate,
        channels=channels,
        quantizer=QuantizerSpec(bits=bits),
        jitter_std=jitter_std,
        reference=reference if reference is not None else ChannelParams(),
        reference_aligned_to=reference_aligned_to,
        rng_seed=rng_seed,
    )
