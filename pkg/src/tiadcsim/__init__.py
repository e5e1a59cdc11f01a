"""tiadcsim: behavioral time-interleaved ADC simulation, reference-channel
mismatch identification (offset/gain/timing), digital calibration, and
spectral verification of mismatch signatures."""

from .adc import (
    REF,
    ChannelOutputs,
    ChannelParams,
    QuantizerSpec,
    TiAdcConfig,
    deinterleave,
    draw_channel_params,
    interleave,
    jitter_stream,
    quantize,
    reference_capture,
    sample_instant,
    simulate,
)
from .calibration import (
    CalibratedOutput,
    calibrate,
    compensate_gain,
    compensate_offset,
    compensate_timing,
)
from .errors import (
    ConfigurationError,
    DegenerateSignalError,
    DivergenceError,
    DomainError,
    InputError,
    SizeError,
    TiAdcError,
)
from .identify import (
    MismatchEstimate,
    estimate_all,
    estimate_gain,
    estimate_offset,
    estimate_timing,
    resimulated_references,
)
from .signals import FilterSpec, SignalSpec, Tone, apply_filter, eval_signal
from .spectrum import (
    OFFSET_SPUR,
    SIGNAL_IMAGE_SPUR,
    UNCLASSIFIED,
    SpectrumReport,
    Spur,
    SpurPrediction,
    analyze,
    label_spurs,
    power_spectrum,
    predict_spurs,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "REF",
    "Tone",
    "SignalSpec",
    "FilterSpec",
    "eval_signal",
    "apply_filter",
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
    "SpectrumReport",
    "Spur",
    "SpurPrediction",
    "OFFSET_SPUR",
    "SIGNAL_IMAGE_SPUR",
    "UNCLASSIFIED",
    "power_spectrum",
    "analyze",
    "predict_spurs",
    "label_spurs",
    "MismatchEstimate",
    "estimate_offset",
    "estimate_gain",
    "estimate_timing",
    "estimate_all",
    "resimulated_references",
    "compensate_offset",
    "compensate_gain",
    "compensate_timing",
    "CalibratedOutput",
    "calibrate",
    "TiAdcError",
    "InputError",
    "SizeError",
    "DomainError",
    "ConfigurationError",
    "DegenerateSignalError",
    "DivergenceError",
]
