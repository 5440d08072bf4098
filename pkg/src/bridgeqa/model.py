"""Full model assembly: parameters, forward pass, and ablation variants."""

import math
from dataclasses import replace

import numpy as np

from .config import ModelConfig
from .errors import ConfigError
from .fusion import (AttentionParams, answer_predict, attention, init_attention_params,
                     qa_loss, temporal_fusion)
from .synth import Sample
from .temporal import (DiffConfig, SmoothConfig, blend, stochastic_part,
                       temporal_difference, temporal_smoothing, uniform_time_steps)
from .tensor import Tensor, embedding

__all__ = ["Model", "apply_mask", "mask_names", "MASK_OVERRIDES"]

# Named model variants for the ablation harness. Each entry overrides config
# fields; "full" is the identity and trains bit-for-bit like the base config.
MASK_OVERRIDES: dict[str, dict] = {
    "full": {},
    "tf-only": {"use_temporal": False},
    "ts+td-only": {"use_question_guidance": False},
    "only-ts": {"alpha": 0.0},
    "only-td": {"alpha": 1.0},
    "only-q": {"tf_variant": "only_q"},
    "only-t": {"tf_variant": "only_t"},
    "wo-shared": {"tf_variant": "unshared"},
    "k=1": {"smooth_layers": 1},
    "k=2": {"smooth_layers": 2},
    "dropout": {"dropout_rate": 0.1},
    "no-dropout": {"dropout_rate": 0.0},
    "i=0": {"diff_interval": 0},
    "i=1": {"diff_interval": 1},
    "softmax": {"use_softmax": True},
    "no-softmax": {"use_softmax": False},
}

_MASK_ALIASES = {
    "ts+td+tf": "full",
    "w/o-shared": "wo-shared",
    "only-*q": "only-q",
    "only-*t": "only-t",
}


def mask_names() -> list[str]:
    return sorted(MASK_OVERRIDES) + sorted(_MASK_ALIASES)


def apply_mask(cfg: ModelConfig, name: str) -> ModelConfig:
    key = name.strip().lower()
    key = _MASK_ALIASES.get(key, key)
    if key not in MASK_OVERRIDES:
        raise ConfigError(f"unknown ablation mask {name!r}; expected one of {mask_names()}")
    return replace(cfg, **MASK_OVERRIDES[key])


# One seed stream per parameter group, so variants that skip a group leave
# every other group's initial values untouched.
_STREAMS = ("embed", "conv", "tf", "tf2", "self", "head", "out")


class Model:
    """Parameter container plus the forward pass over one sample."""

    def __init__(self, cfg: ModelConfig, seed: int | np.random.SeedSequence | None = None):
        self.cfg = cfg
        if seed is None:
            seed = cfg.seed
        root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
        rngs = dict(zip(_STREAMS, map(np.random.default_rng, root.spawn(len(_STREAMS)))))
        d = cfg.feature_dim
        # variance-preserving symmetric uniform: variance 1/fan_in
        bound = math.sqrt(3.0 / d)
        self.embed = Tensor(rngs["embed"].uniform(-bound, bound, (cfg.vocab_size, d)),
                            requires_grad=True)
        conv_bound = math.sqrt(3.0 / (d * cfg.kernel_width))
        self.conv_params: list[tuple[Tensor, Tensor]] = []
        for _ in range(cfg.smooth_layers):
            weights = Tensor(rngs["conv"].uniform(-conv_bound, conv_bound,
                                                  (d, d, cfg.kernel_width)), requires_grad=True)
            bias = Tensor(np.zeros(d), requires_grad=True)
            self.conv_params.append((weights, bias))
        self.tf = init_attention_params(d, cfg.heads, rngs["tf"])
        self.tf_second = (init_attention_params(d, cfg.heads, rngs["tf2"])
                          if cfg.tf_variant == "unshared" else None)
        self.self_att = init_attention_params(d, cfg.heads, rngs["self"])
        self.head_att = init_attention_params(d, cfg.heads, rngs["head"])
        self.out_weights = Tensor(rngs["out"].uniform(-bound, bound, (d, 1)), requires_grad=True)
        self.time_steps = uniform_time_steps(cfg.n_frames)
        self.smooth_cfg = SmoothConfig(cfg.smooth_layers, cfg.kernel_width, cfg.dropout_rate)
        self.diff_cfg = DiffConfig(cfg.diff_interval, cfg.use_softmax)

    def parameters(self) -> dict[str, Tensor]:
        params: dict[str, Tensor] = {"embed": self.embed}
        for i, (weights, bias) in enumerate(self.conv_params, start=1):
            params[f"conv{i}.weight"] = weights
            params[f"conv{i}.bias"] = bias
        params.update(self.tf.tensors("tf"))
        if self.tf_second is not None:
            params.update(self.tf_second.tensors("tf2"))
        params.update(self.self_att.tensors("self"))
        params.update(self.head_att.tensors("head"))
        params["out.weight"] = self.out_weights
        return params

    def zero_grad(self) -> None:
        for tensor in self.parameters().values():
            tensor.zero_grad()

    def _check_sample(self, sample: Sample) -> None:
        cfg = self.cfg
        expected = (cfg.n_frames, cfg.feature_dim)
        if tuple(sample.frames.shape) != expected:
            raise ConfigError(f"sample frames shape {tuple(sample.frames.shape)} does not match "
                              f"configured shape {expected}")
        if len(sample.question_ids) != cfg.question_len:
            raise ConfigError(f"sample question length {len(sample.question_ids)} does not match "
                              f"configured question_len {cfg.question_len}")
        if len(sample.candidate_ids) != cfg.num_candidates:
            raise ConfigError(f"sample candidate count {len(sample.candidate_ids)} does not match "
                              f"configured num_candidates {cfg.num_candidates}")

    def forward(self, sample: Sample, *, training: bool = False,
                rng: np.random.Generator | None = None,
                internals: dict | None = None) -> Tensor:
        """Logits over the sample's candidates, shape (num_candidates, 1)."""
        self._check_sample(sample)
        cfg = self.cfg
        frames = Tensor(sample.frames)
        question = embedding(self.embed, sample.question_ids)
        candidates = embedding(self.embed, sample.candidate_ids)
        if cfg.use_temporal:
            noise = stochastic_part(frames, self.conv_params, self.smooth_cfg,
                                    training=training, rng=rng)
            smooth = temporal_smoothing(frames, noise, self.time_steps)
            diff = temporal_difference(frames, self.diff_cfg)
            temporal = blend(smooth, diff, cfg.alpha)
        else:
            noise = smooth = diff = None
            temporal = frames
        variant = cfg.tf_variant if cfg.use_question_guidance else "only_t"
        fused = temporal_fusion(frames, temporal, question, self.tf,
                                second=self.tf_second, variant=variant, residual=cfg.residual)
        logits = answer_predict(fused, question, candidates, self.self_att, self.head_att,
                                self.out_weights, residual=cfg.residual)
        if internals is not None:
            internals.update(noise=noise, smooth=smooth, diff=diff, temporal=temporal,
                             fused=fused, logits=logits)
        return logits

    def loss(self, sample: Sample, *, training: bool = False,
             rng: np.random.Generator | None = None) -> Tensor:
        return qa_loss(self.forward(sample, training=training, rng=rng), sample.gold)

    def predict(self, sample: Sample) -> int:
        logits = self.forward(sample)
        return int(np.argmax(logits.data[:, 0]))

    def temporal_internals(self, sample: Sample) -> dict[str, np.ndarray]:
        """Evaluation-mode temporal branch arrays, computed even for variants
        whose forward pass skips the temporal module."""
        self._check_sample(sample)
        frames = Tensor(sample.frames)
        noise = stochastic_part(frames, self.conv_params, self.smooth_cfg)
        smooth = temporal_smoothing(frames, noise, self.time_steps)
        diff = temporal_difference(frames, self.diff_cfg)
        steps = self.time_steps
        chord = ((1.0 - steps)[:, None] * sample.frames[0][None, :]
                 + steps[:, None] * sample.frames[-1][None, :])
        return {"noise": noise.data, "smooth": smooth.data, "diff": diff.data, "chord": chord}
