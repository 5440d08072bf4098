"""Temporal sequence question answering at desk scale.

Frame sequences are rebuilt along two branches: a smoothing branch
constrained to pass through the first and last frame exactly, and a
differencing branch that keeps per-frame changes. A convex blend of the two
is fused with the question through shared-parameter cross-attention and
scored against answer candidates. Everything runs on a small tape-based
float64 autodiff engine, and a synthetic task generator plus training and
ablation harnesses make the whole pipeline reproducible end to end.
"""

from .config import ModelConfig, default_config, load_config, save_config
from .errors import (BridgeQAError, ConfigError, ContractError, DimensionError,
                     FormatError, TrainingError)
from .fusion import (AttentionParams, answer_predict, attention, init_attention_params,
                     qa_loss, temporal_fusion)
from .gradcheck import model_gradient_report
from .model import Model, apply_mask, mask_names
from .synth import Sample, TaskSpec, generate, generate_split, spec_from_config
from .temporal import (DiffConfig, SmoothConfig, blend, stochastic_part,
                       temporal_difference, temporal_smoothing, uniform_time_steps)
from .tensor import Tape, Tensor, backward
from .tensorfile import (load_dataset, load_params, load_tensor, save_dataset,
                         save_params, save_tensor)
from .train import (Adam, Metrics, TrainResult, ablate, analyze_scales, evaluate,
                    sweep_alpha, train)

__version__ = "0.1.0"

__all__ = [
    "Adam",
    "AttentionParams",
    "BridgeQAError",
    "ConfigError",
    "ContractError",
    "DiffConfig",
    "DimensionError",
    "FormatError",
    "Metrics",
    "Model",
    "ModelConfig",
    "Sample",
    "SmoothConfig",
    "Tape",
    "TaskSpec",
    "Tensor",
    "TrainResult",
    "TrainingError",
    "ablate",
    "analyze_scales",
    "answer_predict",
    "apply_mask",
    "attention",
    "backward",
    "blend",
    "default_config",
    "evaluate",
    "generate",
    "generate_split",
    "init_attention_params",
    "load_config",
    "load_dataset",
    "load_params",
    "load_tensor",
    "mask_names",
    "model_gradient_report",
    "qa_loss",
    "save_config",
    "save_dataset",
    "save_params",
    "save_tensor",
    "spec_from_config",
    "stochastic_part",
    "sweep_alpha",
    "temporal_difference",
    "temporal_fusion",
    "temporal_smoothing",
    "train",
    "uniform_time_steps",
]
