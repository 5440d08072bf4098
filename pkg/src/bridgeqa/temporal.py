"""Temporal feature branches: bridge-constrained smoothing and interval differencing.

The smoothing branch rebuilds every frame as a point on the chord between the
first and last frame plus a learned noise term whose weight
``sqrt(step * (1 - step))`` vanishes at both ends, so the endpoints are
reproduced exactly. The differencing branch keeps per-frame changes over a
configurable lag, optionally re-weighted by a feature-wise softmax of the
change itself. A convex blend combines the two.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DimensionError
from .tensor import (
    Tensor,
    add,
    concat_rows,
    conv1d_time,
    dropout,
    mul,
    relu,
    repeat_rows,
    scale,
    slice_rows,
    softmax_rows,
    sub,
)

__all__ = [
    "SmoothConfig",
    "DiffConfig",
    "uniform_time_steps",
    "stochastic_part",
    "temporal_smoothing",
    "temporal_difference",
    "blend",
]


@dataclass(frozen=True)
class SmoothConfig:
    """Settings for the learned noise term of the smoothing branch."""

    layers: int = 2
    kernel_width: int = 3
    dropout_rate: float = 0.0

    def __post_init__(self):
        if self.layers < 1:
            raise ConfigError(f"layers must be at least 1, got {self.layers}")
        if self.kernel_width < 1 or self.kernel_width % 2 == 0:
            raise ConfigError(f"kernel_width must be odd and positive, got {self.kernel_width}")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ConfigError(f"dropout_rate must lie in [0, 1), got {self.dropout_rate}")


@dataclass(frozen=True)
class DiffConfig:
    """Settings for the differencing branch."""

    interval: int = 0
    use_softmax: bool = True

    def __post_init__(self):
        if self.interval < 0:
            raise ConfigError(f"interval must be non-negative, got {self.interval}")

    def validate_for(self, n_frames: int) -> None:
        if self.interval + 1 >= n_frames:
            raise ConfigError(
                f"interval must satisfy interval + 1 < n_frames, got interval={self.interval} "
                f"with n_frames={n_frames}"
            )


def uniform_time_steps(n: int) -> np.ndarray:
    """Evenly spaced grid on [0, 1]; the first entry is 0 and the last is 1 exactly."""
    if n < 2:
        raise ConfigError(f"time steps need at least 2 frames, got {n}")
    return np.linspace(0.0, 1.0, n)


def _check_steps(steps: np.ndarray, n: int) -> None:
    steps = np.asarray(steps)
    if steps.shape != (n,):
        raise DimensionError(f"time steps of shape {steps.shape} do not match {n} frames")
    if steps[0] != 0.0 or steps[-1] != 1.0 or np.any(np.diff(steps) < 0.0):
        raise ConfigError("time steps must be non-decreasing with first entry 0 and last entry 1")


def stochastic_part(frames: Tensor, conv_params: list[tuple[Tensor, Tensor]], cfg: SmoothConfig,
                    *, training: bool = False, rng: np.random.Generator | None = None) -> Tensor:
    """Noise term of the smoothing branch: a stack of conv/relu pairs along time.

    Dropout (when configured) applies after each pair and only in training
    mode; ``rng`` supplies its randomness.
    """
    if len(conv_params) != cfg.layers:
        raise ConfigError(f"expected {cfg.layers} conv layers, got {len(conv_params)}")
    apply_dropout = training and cfg.dropout_rate > 0.0
    if apply_dropout and rng is None:
        raise ConfigError("dropout in training mode needs an rng")
    out = frames
    for weights, bias in conv_params:
        out = relu(conv1d_time(out, weights, bias))
        if apply_dropout:
            out = dropout(out, cfg.dropout_rate, rng)
    return out


def temporal_smoothing(frames: Tensor, noise: Tensor, steps: np.ndarray) -> Tensor:
    """Chord between the first and last frame plus a bridge-weighted noise term.

    Row n is ``(1 - steps[n]) * frames[0] + steps[n] * frames[-1]
    + sqrt(steps[n] * (1 - steps[n])) * noise[n]``. The endpoint rows are
    reproduced exactly because their noise weight is exactly zero.
    """
    if frames.data.ndim != 2:
        raise DimensionError(f"temporal_smoothing: frames must be 2-D, got shape {frames.shape}")
    if frames.shape != noise.shape:
        raise DimensionError(
            f"temporal_smoothing: frames shape {frames.shape} and noise shape {noise.shape} differ"
        )
    n, d = frames.shape
    _check_steps(steps, n)
    toward_start = Tensor(np.tile((1.0 - steps)[:, None], (1, d)))
    toward_end = Tensor(np.tile(steps[:, None], (1, d)))
    bridge_weight = Tensor(np.tile(np.sqrt(steps * (1.0 - steps))[:, None], (1, d)))
    first = repeat_rows(slice_rows(frames, 0, 1), n)
    last = repeat_rows(slice_rows(frames, n - 1, n), n)
    chord = add(mul(toward_start, first), mul(toward_end, last))
    return add(chord, mul(bridge_weight, noise))


def temporal_difference(frames: Tensor, cfg: DiffConfig) -> Tensor:
    """Per-frame change over a lag of ``interval + 1`` frames.

    Rows whose lagged index would fall before the first frame are exactly
    zero; with ``use_softmax`` each remaining difference row is multiplied
    elementwise by its own feature-wise softmax.
    """
    if frames.data.ndim != 2:
        raise DimensionError(f"temporal_difference: frames must be 2-D, got shape {frames.shape}")
    n, d = frames.shape
    cfg.validate_for(n)
    lead = Tensor(np.zeros((cfg.interval + 1, d)))
    current = slice_rows(frames, cfg.interval + 1, n)
    lagged = slice_rows(frames, 0, n - 1 - cfg.interval)
    diffs = sub(current, lagged)
    body = mul(diffs, softmax_rows(diffs)) if cfg.use_softmax else diffs
    return concat_rows(lead, body)


def blend(smooth: Tensor, diff: Tensor, alpha: float) -> Tensor:
    """Convex combination ``(1 - alpha) * smooth + alpha * diff``."""
    if not 0.0 <= alpha <= 1.0:
        raise ConfigError(f"alpha must lie in [0, 1], got {alpha}")
    if smooth.shape != diff.shape:
        raise DimensionError(f"blend: shapes {smooth.shape} and {diff.shape} differ")
    return add(scale(smooth, 1.0 - alpha), scale(diff, alpha))
