"""Finite-difference verification of the gradient engine on the full model."""

import numpy as np

from .config import ModelConfig, default_config
from .errors import ConfigError
from .fusion import qa_loss
from .model import Model
from .synth import Sample
from .tensor import Tape, backward

__all__ = ["central_difference", "relative_error", "gradcheck_config",
           "random_sample", "model_gradient_report"]


def central_difference(loss_fn, array: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Central finite differences of a scalar function, one element at a time.

    ``array`` is perturbed in place and restored exactly after each element.
    """
    grad = np.zeros_like(array)
    flat = array.reshape(-1)
    grad_flat = grad.reshape(-1)
    for i in range(flat.size):
        saved = flat[i]
        flat[i] = saved + h
        plus = loss_fn()
        flat[i] = saved - h
        minus = loss_fn()
        flat[i] = saved
        grad_flat[i] = (plus - minus) / (2.0 * h)
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray, floor: float = 1e-6) -> float:
    """Largest per-element |analytic - numeric| / max(floor, |analytic|, |numeric|)."""
    denom = np.maximum(floor, np.maximum(np.abs(analytic), np.abs(numeric)))
    if analytic.size == 0:
        return 0.0
    return float((np.abs(analytic - numeric) / denom).max())


def gradcheck_config(n_frames: int = 6, feature_dim: int = 8, question_len: int = 3,
                     num_candidates: int = 3, heads: int = 4) -> ModelConfig:
    """A tiny event-task config sized for exhaustive finite differences."""
    return default_config("event", n_frames=n_frames, feature_dim=feature_dim,
                          question_len=question_len, num_candidates=num_candidates,
                          heads=heads)


def random_sample(cfg: ModelConfig, rng: np.random.Generator) -> Sample:
    """A structurally valid sample with random frame features and token ids."""
    frames = rng.normal(0.0, 1.0, (cfg.n_frames, cfg.feature_dim))
    question_ids = rng.integers(0, cfg.vocab_size, cfg.question_len)
    candidate_ids = rng.choice(cfg.vocab_size, cfg.num_candidates, replace=False)
    return Sample(frames=frames, question_ids=question_ids.astype(np.int64),
                  candidate_ids=candidate_ids.astype(np.int64), gold=0, task_kind=cfg.task)


def model_gradient_report(cfg: ModelConfig, seed: int = 7, h: float = 1e-5) -> dict[str, float]:
    """Max relative error between tape and finite-difference gradients,
    reported per parameter group."""
    if h <= 0.0:
        raise ConfigError(f"h: must be positive, got {h}")
    root = np.random.SeedSequence(seed)
    model_ss, sample_ss = root.spawn(2)
    model = Model(cfg, seed=model_ss)
    sample = random_sample(cfg, np.random.default_rng(sample_ss))

    def loss_value() -> float:
        return qa_loss(model.forward(sample), sample.gold).item()

    with Tape():
        loss = qa_loss(model.forward(sample), sample.gold)
        backward(loss)
    report: dict[str, float] = {}
    for name, param in model.parameters().items():
        analytic = param.grad.copy()
        numeric = central_difference(loss_value, param.data, h)
        group = name.split(".")[0]
        err = relative_error(analytic, numeric)
        report[group] = max(report.get(group, 0.0), err)
    return report
