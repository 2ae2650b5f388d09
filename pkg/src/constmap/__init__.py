"""Learnable constellation mappings over an AWGN channel.

Two trainable mappings take full-resolution complex symbols to a finite
transmittable set: one learns per-axis decision boundaries over a fixed
uniform grid, the other learns the constellation points themselves with
nearest-point assignment. Both pair a hard forward rule with a smooth
softmax-weighted stand-in for gradients (straight-through), and both plug
into a two-stage Adam fine-tuning loop and an SNR-sweep harness that
compares them against the fixed uniform grid.
"""

__version__ = "0.1.0"

from .channel import NOISELESS, ChannelConfig, awgn_transmit, snr_to_noise_variance
from .core import (
    ComplexPoint,
    Constellation,
    LevelSet,
    clip,
    complex_to_pair,
    make_qam_grid,
    make_uniform_levels,
    pair_to_complex,
    power_normalize,
    qam_map,
    qam_map_block,
)
from .errors import DegenerateInputError, SchemaError, ShapeMismatchError
from .grad import DualResult, finite_difference_check, straight_through
from .mic import (
    MicParams,
    mic_backward_grad,
    mic_backward_value,
    mic_forward,
    mic_from_qam,
    mic_map_point,
    soft_weights,
)
from .mrc import (
    BoundarySet,
    MrcParams,
    midpoint_boundaries,
    mrc_backward_grad,
    mrc_backward_value,
    mrc_forward,
    mrc_init,
    mrc_map_point,
)
from .params import (
    MappingParams,
    QamParams,
    constellation_of,
    from_json_dict,
    load_params,
    map_block,
    map_point,
    save_params,
    to_json_dict,
    with_delta,
)
from .sources import SourceSpec, default_mixture, gen_source
from .sweep import (
    CALIBRATION_STREAM,
    EVAL_STREAM_BASE,
    MetricRow,
    SweepEntry,
    compute_fixed_scale,
    evaluate_mse,
    export_constellation,
    run_sweep,
    write_metrics_csv,
)
from .train import (
    AdamState,
    AffineDecoder,
    LossAndGrads,
    StageSchedule,
    TrainConfig,
    TrainResult,
    adam_step,
    end_to_end_loss,
    load_decoder,
    run_pipeline,
    save_decoder,
    train,
    write_history_csv,
)
from .config import EntryConfig, ExperimentConfig, load_config

__all__ = [
    "AdamState",
    "AffineDecoder",
    "BoundarySet",
    "ChannelConfig",
    "ComplexPoint",
    "Constellation",
    "DegenerateInputError",
    "DualResult",
    "EVAL_STREAM_BASE",
    "EntryConfig",
    "ExperimentConfig",
    "LevelSet",
    "LossAndGrads",
    "MappingParams",
    "MetricRow",
    "MicParams",
    "MrcParams",
    "NOISELESS",
    "QamParams",
    "SchemaError",
    "ShapeMismatchError",
    "SourceSpec",
    "StageSchedule",
    "SweepEntry",
    "TrainConfig",
    "TrainResult",
    "adam_step",
    "awgn_transmit",
    "CALIBRATION_STREAM",
    "clip",
    "complex_to_pair",
    "compute_fixed_scale",
    "constellation_of",
    "default_mixture",
    "end_to_end_loss",
    "evaluate_mse",
    "export_constellation",
    "finite_difference_check",
    "from_json_dict",
    "gen_source",
    "load_config",
    "load_decoder",
    "load_params",
    "make_qam_grid",
    "make_uniform_levels",
    "map_block",
    "map_point",
    "mic_backward_grad",
    "mic_backward_value",
    "mic_forward",
    "mic_from_qam",
    "mic_map_point",
    "midpoint_boundaries",
    "mrc_backward_grad",
    "mrc_backward_value",
    "mrc_forward",
    "mrc_init",
    "mrc_map_point",
    "pair_to_complex",
    "power_normalize",
    "qam_map",
    "qam_map_block",
    "run_pipeline",
    "run_sweep",
    "save_decoder",
    "save_params",
    "snr_to_noise_variance",
    "soft_weights",
    "straight_through",
    "to_json_dict",
    "train",
    "with_delta",
    "write_history_csv",
    "write_metrics_csv",
]
