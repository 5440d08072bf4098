"""Adam optimisation, the training loop, and the analysis harnesses."""

import csv
import json
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .config import ModelConfig
from .errors import ConfigError, TrainingError
from .fusion import qa_loss
from .model import Model, apply_mask
from .synth import Sample, generate, spec_from_config
from .tensor import Tape, backward

__all__ = [
    "Adam",
    "Metrics",
    "TrainResult",
    "train",
    "evaluate",
    "ablate",
    "sweep_alpha",
    "analyze_scales",
    "ScaleAnalysis",
    "write_ablation_csv",
    "write_sweep_csv",
    "write_scales_csv",
    "ABLATION_COLUMNS",
    "SWEEP_COLUMNS",
    "SCALES_COLUMNS",
]


class Adam:
    """Bias-corrected Adam over a named parameter dict, batch size 1."""

    def __init__(self, params: dict, lr: float = 1e-3, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self._m = {name: np.zeros_like(p.data) for name, p in params.items()}
        self._v = {name: np.zeros_like(p.data) for name, p in params.items()}

    def step(self) -> None:
        """One update from the gradients currently stored on the parameters."""
        self.step_count += 1
        t = self.step_count
        bias1 = 1.0 - self.beta1 ** t
        bias2 = 1.0 - self.beta2 ** t
        for name, p in self.params.items():
            g = p.grad
            if not np.all(np.isfinite(g)):
                raise TrainingError(f"non-finite gradient in parameter {name!r} at step {t}")
            m = self._m[name]
            v = self._v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            p.data -= self.lr * (m / bias1) / (np.sqrt(v / bias2) + self.eps)

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.zero_grad()


@dataclass
class Metrics:
    epoch: int
    split: str
    loss: float
    accuracy: float
    kind_accuracy: dict[str, float] = field(default_factory=dict)
    wall_time: float = 0.0

    def to_record(self) -> dict:
        # wall time is intentionally left out so metric files are
        # reproducible byte-for-byte under a fixed seed
        return {
            "epoch": self.epoch,
            "split": self.split,
            "loss": self.loss,
            "accuracy": self.accuracy,
            "kind_accuracy": dict(sorted(self.kind_accuracy.items())),
        }


@dataclass
class TrainResult:
    history: list[Metrics]
    test: Metrics
    model: Model


def evaluate(model: Model, samples: list[Sample], *, epoch: int = 0,
             split: str = "test") -> Metrics:
    """Mean loss and accuracy in evaluation mode (no dropout, no recording)."""
    started = time.perf_counter()
    total_loss = 0.0
    hits = 0
    kind_hits: dict[str, list[int]] = {}
    for sample in samples:
        logits = model.forward(sample)
        loss = qa_loss(logits, sample.gold)
        total_loss += loss.item()
        hit = int(np.argmax(logits.data[:, 0])) == sample.gold
        hits += hit
        kind_hits.setdefault(sample.task_kind, []).append(int(hit))
    count = max(len(samples), 1)
    return Metrics(
        epoch=epoch,
        split=split,
        loss=total_loss / count,
        accuracy=hits / count,
        kind_accuracy={kind: sum(v) / len(v) for kind, v in kind_hits.items()},
        wall_time=time.perf_counter() - started,
    )


def train(cfg: ModelConfig, data: dict[str, list[Sample]] | None = None, *,
          seed: int | None = None, epochs: int | None = None,
          on_metrics=None) -> TrainResult:
    """Train a model built from ``cfg`` on the given (or generated) splits.

    ``seed`` overrides ``cfg.seed`` as the master seed; it controls parameter
    initialisation, per-epoch shuffling, and dropout, each through its own
    child stream. With a fixed seed every run is bit-identical.
    """
    if data is None:
        data = generate(spec_from_config(cfg))
    if epochs is None:
        epochs = cfg.epochs
    master = cfg.seed if seed is None else seed
    init_ss, shuffle_ss, dropout_ss = np.random.SeedSequence(master).spawn(3)
    model = Model(cfg, seed=init_ss)
    shuffle_rng = np.random.default_rng(shuffle_ss)
    dropout_rng = np.random.default_rng(dropout_ss)
    adam = Adam(model.parameters(), lr=cfg.lr, beta1=cfg.beta1, beta2=cfg.beta2, eps=cfg.eps)
    train_samples = data.get("train", [])
    val_samples = data.get("val", [])
    history: list[Metrics] = []

    def emit(metrics: Metrics) -> None:
        history.append(metrics)
        if on_metrics is not None:
            on_metrics(metrics)

    for epoch in range(1, epochs + 1):
        started = time.perf_counter()
        order = shuffle_rng.permutation(len(train_samples))
        total_loss = 0.0
        hits = 0
        kind_hits: dict[str, list[int]] = {}
        for position, sample_idx in enumerate(order):
            sample = train_samples[sample_idx]
            with Tape():
                logits = model.forward(sample, training=True, rng=dropout_rng)
                loss = qa_loss(logits, sample.gold)
                loss_value = loss.item()
                if not np.isfinite(loss_value):
                    raise TrainingError(
                        f"loss became non-finite at epoch {epoch}, step {position + 1}; "
                        f"last completed epoch was {epoch - 1}")
                backward(loss)
            adam.step()
            adam.zero_grad()
            total_loss += loss_value
            hit = int(np.argmax(logits.data[:, 0])) == sample.gold
            hits += hit
            kind_hits.setdefault(sample.task_kind, []).append(int(hit))
        count = max(len(train_samples), 1)
        emit(Metrics(
            epoch=epoch,
            split="train",
            loss=total_loss / count,
            accuracy=hits / count,
            kind_accuracy={kind: sum(v) / len(v) for kind, v in kind_hits.items()},
            wall_time=time.perf_counter() - started,
        ))
        if val_samples:
            emit(evaluate(model, val_samples, epoch=epoch, split="val"))
    test = evaluate(model, data.get("test", []), epoch=epochs, split="test")
    emit(test)
    return TrainResult(history=history, test=test, model=model)


@dataclass
class AblationRow:
    mask: str
    metrics: Metrics


def ablate(cfg: ModelConfig, masks: list[str],
           data: dict[str, list[Sample]] | None = None) -> list[AblationRow]:
    """Train one model per mask on identical data with identical seeds."""
    variants = [(name, apply_mask(cfg, name)) for name in masks]  # validate all names first
    if data is None:
        data = generate(spec_from_config(cfg))
    rows = []
    for name, variant_cfg in variants:
        result = train(variant_cfg, data)
        rows.append(AblationRow(mask=name, metrics=result.test))
    return rows


@dataclass
class SweepRow:
    alpha: float
    metrics: Metrics


def sweep_alpha(cfg: ModelConfig, grid: list[float],
                data: dict[str, list[Sample]] | None = None) -> tuple[list[SweepRow], float]:
    """Train once per blend weight; returns the rows and the best weight.

    Ties resolve toward the smaller weight so the result is deterministic.
    """
    for value in grid:
        if not 0.0 <= value <= 1.0:
            raise ConfigError(f"alpha: sweep values must lie in [0, 1], got {value}")
    if data is None:
        data = generate(spec_from_config(cfg))
    rows = []
    for value in grid:
        result = train(replace(cfg, alpha=float(value)), data)
        rows.append(SweepRow(alpha=float(value), metrics=result.test))
    best = max(rows, key=lambda row: (row.metrics.accuracy, -row.alpha))
    return rows, best.alpha


@dataclass
class ScaleAnalysis:
    """Per-frame magnitude profiles of the two temporal branches.

    ``smooth_dev[s, n]`` is the norm of the smoothing branch's deviation from
    the chord at frame n of sample s; ``diff_mag[s, n]`` is the norm of the
    differencing branch's row. Both are normalised per sample by that
    sample's largest value (samples that are exactly zero everywhere stay
    zero).
    """

    smooth_dev: np.ndarray
    diff_mag: np.ndarray

    def summary(self) -> list[dict]:
        rows = []
        for n in range(self.smooth_dev.shape[1]):
            ts = self.smooth_dev[:, n]
            td = self.diff_mag[:, n]
            rows.append({
                "frame": n + 1,
                "ts_min": ts.min(), "ts_max": ts.max(), "ts_mean": ts.mean(), "ts_std": ts.std(),
                "td_min": td.min(), "td_max": td.max(), "td_mean": td.mean(), "td_std": td.std(),
            })
        return rows


def _normalize_rows(values: np.ndarray) -> np.ndarray:
    peak = values.max(axis=1, keepdims=True)
    safe = np.where(peak > 0.0, peak, 1.0)
    return values / safe


def analyze_scales(model: Model, samples: list[Sample]) -> ScaleAnalysis:
    """Distribution of normalised per-frame norms over a sample set."""
    if not samples:
        raise ConfigError("analyze_scales needs at least one sample")
    n = model.cfg.n_frames
    smooth_dev = np.zeros((len(samples), n))
    diff_mag = np.zeros((len(samples), n))
    for i, sample in enumerate(samples):
        parts = model.temporal_internals(sample)
        smooth_dev[i] = np.linalg.norm(parts["smooth"] - parts["chord"], axis=1)
        diff_mag[i] = np.linalg.norm(parts["diff"], axis=1)
    return ScaleAnalysis(_normalize_rows(smooth_dev), _normalize_rows(diff_mag))


ABLATION_COLUMNS = ["mask", "task", "seed", "epochs", "test_loss", "test_accuracy",
                    "trend_accuracy", "event_accuracy"]
SWEEP_COLUMNS = ["alpha", "task", "seed", "epochs", "test_loss", "test_accuracy",
                 "trend_accuracy", "event_accuracy"]
SCALES_COLUMNS = ["frame", "ts_min", "ts_max", "ts_mean", "ts_std",
                  "td_min", "td_max", "td_mean", "td_std"]


def _metrics_cells(cfg: ModelConfig, metrics: Metrics) -> list:
    return [cfg.task, cfg.seed, cfg.epochs,
            f"{metrics.loss:.10g}", f"{metrics.accuracy:.10g}",
            f"{metrics.kind_accuracy.get('trend', float('nan')):.10g}",
            f"{metrics.kind_accuracy.get('event', float('nan')):.10g}"]


def write_ablation_csv(path, cfg: ModelConfig, rows: list[AblationRow]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(ABLATION_COLUMNS)
        for row in rows:
            writer.writerow([row.mask] + _metrics_cells(cfg, row.metrics))


def write_sweep_csv(path, cfg: ModelConfig, rows: list[SweepRow]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SWEEP_COLUMNS)
        for row in rows:
            writer.writerow([f"{row.alpha:.10g}"] + _metrics_cells(cfg, row.metrics))


def write_scales_csv(path, analysis: ScaleAnalysis) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SCALES_COLUMNS)
        for row in analysis.summary():
            writer.writerow([row["frame"]] + [f"{row[c]:.10g}" for c in SCALES_COLUMNS[1:]])


def write_metrics_jsonl(path, history: list[Metrics]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for metrics in history:
            fh.write(json.dumps(metrics.to_record(), sort_keys=True) + "\n")
