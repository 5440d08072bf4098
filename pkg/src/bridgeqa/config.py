"""Validated run configuration with JSON load/save."""

import json
from dataclasses import asdict, dataclass, fields, replace

from .errors import ConfigError

__all__ = ["ModelConfig", "default_config", "config_from_dict", "config_to_dict",
           "load_config", "save_config", "TASK_PRESETS"]

# Per-task defaults: candidate count and the blend weight that favours the
# branch carrying that task's evidence (smoothing for trends, differencing
# for events).
TASK_PRESETS = {
    "trend": {"num_candidates": 2, "alpha": 0.2},
    "event": {"num_candidates": 3, "alpha": 0.8},
    "mixed": {"num_candidates": 5, "alpha": 0.5},
}

TASKS = ("trend", "event", "mixed")
FUSION_VARIANTS = ("shared", "only_q", "only_t", "unshared")


@dataclass(frozen=True)
class ModelConfig:
    # architecture
    n_frames: int = 16
    feature_dim: int = 32
    question_len: int = 4
    num_candidates: int = 5
    vocab_size: int = 32
    alpha: float = 0.5
    smooth_layers: int = 2
    kernel_width: int = 3
    diff_interval: int = 0
    use_softmax: bool = True
    heads: int = 4
    residual: bool = False
    dropout_rate: float = 0.0
    # ablation switches
    use_temporal: bool = True
    use_question_guidance: bool = True
    tf_variant: str = "shared"
    # synthetic task
    task: str = "mixed"
    noise: float = 0.1
    jump: float = 1.0
    drift: float = 0.75
    trend_fraction: float = 0.5
    train_count: int = 2000
    val_count: int = 500
    test_count: int = 500
    data_seed: int = 1
    # optimisation
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    epochs: int = 30
    seed: int = 0

    def __post_init__(self):
        _validate(self)


def _check(ok: bool, field_name: str, message: str) -> None:
    if not ok:
        raise ConfigError(f"{field_name}: {message}")


def _validate(cfg: ModelConfig) -> None:
    _check(cfg.n_frames >= 2, "n_frames", f"must be at least 2, got {cfg.n_frames}")
    _check(cfg.feature_dim >= 1, "feature_dim", f"must be positive, got {cfg.feature_dim}")
    _check(cfg.heads >= 1, "heads", f"must be positive, got {cfg.heads}")
    _check(cfg.feature_dim % cfg.heads == 0, "feature_dim",
           f"must be divisible by heads, got {cfg.feature_dim} with heads={cfg.heads}")
    _check(cfg.question_len >= 1, "question_len", f"must be positive, got {cfg.question_len}")
    _check(cfg.num_candidates >= 2, "num_candidates", f"must be at least 2, got {cfg.num_candidates}")
    _check(cfg.vocab_size >= 16 + cfg.num_candidates, "vocab_size",
           f"must cover all class tokens, got {cfg.vocab_size}")
    _check(0.0 <= cfg.alpha <= 1.0, "alpha", f"must lie in [0, 1], got {cfg.alpha}")
    _check(cfg.smooth_layers >= 1, "smooth_layers", f"must be at least 1, got {cfg.smooth_layers}")
    _check(cfg.kernel_width >= 1 and cfg.kernel_width % 2 == 1, "kernel_width",
           f"must be odd and positive, got {cfg.kernel_width}")
    _check(cfg.diff_interval >= 0, "diff_interval", f"must be non-negative, got {cfg.diff_interval}")
    _check(cfg.diff_interval + 1 < cfg.n_frames, "diff_interval",
           f"must satisfy diff_interval + 1 < n_frames, got {cfg.diff_interval} with n_frames={cfg.n_frames}")
    _check(0.0 <= cfg.dropout_rate < 1.0, "dropout_rate", f"must lie in [0, 1), got {cfg.dropout_rate}")
    _check(cfg.tf_variant in FUSION_VARIANTS, "tf_variant",
           f"must be one of {FUSION_VARIANTS}, got {cfg.tf_variant!r}")
    _check(cfg.task in TASKS, "task", f"must be one of {TASKS}, got {cfg.task!r}")
    _check(cfg.noise >= 0.0, "noise", f"must be non-negative, got {cfg.noise}")
    _check(0.0 <= cfg.trend_fraction <= 1.0, "trend_fraction",
           f"must lie in [0, 1], got {cfg.trend_fraction}")
    if cfg.task in ("event", "mixed"):
        _check(cfg.jump > 0.0, "jump", f"must be positive for event questions, got {cfg.jump}")
        _check(cfg.n_frames >= 5, "n_frames",
               f"event sequences need at least 5 frames, got {cfg.n_frames}")
        _check(cfg.question_len >= 2, "question_len",
               f"event questions need at least 2 tokens, got {cfg.question_len}")
    if cfg.task in ("trend", "mixed"):
        _check(cfg.drift > 0.0, "drift", f"must be positive for trend questions, got {cfg.drift}")
    if cfg.task == "mixed":
        _check(cfg.num_candidates == 5, "num_candidates",
               f"the mixed task uses the 5-way candidate union, got {cfg.num_candidates}")
    if cfg.task == "event":
        _check(cfg.num_candidates <= min(8, cfg.feature_dim), "num_candidates",
               f"event channel groups need num_candidates <= min(8, feature_dim), got {cfg.num_candidates}")
    if cfg.task == "trend":
        _check(cfg.num_candidates <= min(8, 2 * cfg.feature_dim), "num_candidates",
               f"trend directions need num_candidates <= min(8, 2 * feature_dim), got {cfg.num_candidates}")
    for name in ("train_count", "val_count", "test_count"):
        _check(getattr(cfg, name) >= 0, name, f"must be non-negative, got {getattr(cfg, name)}")
    _check(cfg.lr > 0.0, "lr", f"must be positive, got {cfg.lr}")
    _check(0.0 <= cfg.beta1 < 1.0, "beta1", f"must lie in [0, 1), got {cfg.beta1}")
    _check(0.0 <= cfg.beta2 < 1.0, "beta2", f"must lie in [0, 1), got {cfg.beta2}")
    _check(cfg.eps > 0.0, "eps", f"must be positive, got {cfg.eps}")
    _check(cfg.epochs >= 0, "epochs", f"must be non-negative, got {cfg.epochs}")


def default_config(task: str = "mixed", **overrides) -> ModelConfig:
    """Config with per-task presets applied, then explicit overrides."""
    if task not in TASK_PRESETS:
        raise ConfigError(f"task: must be one of {TASKS}, got {task!r}")
    values = {"task": task, **TASK_PRESETS[task]}
    values.update(overrides)
    return ModelConfig(**values)


def config_to_dict(cfg: ModelConfig) -> dict:
    return asdict(cfg)


def config_from_dict(values: dict) -> ModelConfig:
    known = {f.name for f in fields(ModelConfig)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    return ModelConfig(**values)


def load_config(path) -> ModelConfig:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        values = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(values, dict):
        raise ConfigError(f"{path}: expected a JSON object at the top level")
    return config_from_dict(values)


def save_config(path, cfg: ModelConfig) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(config_to_dict(cfg), fh, indent=2, sort_keys=True)
        fh.write("\n")


def with_overrides(cfg: ModelConfig, **overrides) -> ModelConfig:
    return replace(cfg, **overrides)
