"""Attention blocks, question-guided fusion, and the answer head."""

import math
from dataclasses import dataclass

from .errors import ConfigError, ContractError, DimensionError
from .tensor import (
    Tensor,
    add,
    add_bias,
    concat_cols,
    concat_rows,
    log_softmax_rows,
    matmul,
    scale,
    slice_cols,
    softmax_rows,
    sum_all,
    transpose,
)

__all__ = [
    "AttentionParams",
    "init_attention_params",
    "attention",
    "temporal_fusion",
    "answer_predict",
    "qa_loss",
    "TF_VARIANTS",
]

TF_VARIANTS = ("shared", "only_q", "only_t", "unshared")


@dataclass
class AttentionParams:
    """Projection weights and biases for one multi-head attention block."""

    wq: Tensor
    wk: Tensor
    wv: Tensor
    wo: Tensor
    bq: Tensor
    bk: Tensor
    bv: Tensor
    bo: Tensor
    heads: int

    def __post_init__(self):
        d = self.wq.shape[0] if self.wq.data.ndim == 2 else 0
        for name in ("wq", "wk", "wv", "wo"):
            w = getattr(self, name)
            if w.data.ndim != 2 or w.shape != (d, d) or d == 0:
                raise DimensionError(f"attention weight {name} must be square, got shape {w.shape}")
        for name in ("bq", "bk", "bv", "bo"):
            b = getattr(self, name)
            if b.data.ndim != 1 or b.shape != (d,):
                raise DimensionError(f"attention bias {name} must have shape ({d},), got {b.shape}")
        if self.heads < 1 or d % self.heads != 0:
            raise ConfigError(f"heads must divide the width {d}, got heads={self.heads}")

    @property
    def dim(self) -> int:
        return self.wq.shape[0]

    def tensors(self, prefix: str) -> dict[str, Tensor]:
        return {f"{prefix}.{name}": getattr(self, name)
                for name in ("wq", "wk", "wv", "wo", "bq", "bk", "bv", "bo")}


def init_attention_params(dim: int, heads: int, rng) -> AttentionParams:
    """Variance-preserving symmetric uniform weights (variance 1/dim); zero biases."""
    bound = math.sqrt(3.0 / dim)
    weights = [Tensor(rng.uniform(-bound, bound, (dim, dim)), requires_grad=True) for _ in range(4)]
    biases = [Tensor([0.0] * dim, requires_grad=True) for _ in range(4)]
    return AttentionParams(*weights, *biases, heads=heads)


def attention(query: Tensor, key_value: Tensor, params: AttentionParams,
              *, residual: bool = False, weights_sink: list | None = None) -> Tensor:
    """Multi-head scaled dot-product attention of query rows over key/value rows.

    Per head: softmax((Q_h K_h^T) / sqrt(dim / heads)) V_h; head outputs are
    concatenated and projected. If ``weights_sink`` is a list, the per-head
    softmax weight tensors are appended to it.
    """
    d = params.dim
    for name, t in (("query", query), ("key_value", key_value)):
        if t.data.ndim != 2 or t.shape[1] != d:
            raise DimensionError(f"attention: {name} shape {t.shape} does not match width {d}")
    q = add_bias(matmul(query, params.wq), params.bq)
    k = add_bias(matmul(key_value, params.wk), params.bk)
    v = add_bias(matmul(key_value, params.wv), params.bv)
    head_dim = d // params.heads
    inv_scale = 1.0 / math.sqrt(head_dim)
    merged = None
    for h in range(params.heads):
        lo, hi = h * head_dim, (h + 1) * head_dim
        scores = scale(matmul(slice_cols(q, lo, hi), transpose(slice_cols(k, lo, hi))), inv_scale)
        weights = softmax_rows(scores)
        if weights_sink is not None:
            weights_sink.append(weights)
        head_out = matmul(weights, slice_cols(v, lo, hi))
        merged = head_out if merged is None else concat_cols(merged, head_out)
    out = add_bias(matmul(merged, params.wo), params.bo)
    if residual:
        out = add(out, query)
    return out


def temporal_fusion(frames: Tensor, temporal: Tensor, question: Tensor,
                    shared: AttentionParams, *, second: AttentionParams | None = None,
                    variant: str = "shared", residual: bool = False) -> Tensor:
    """Fuse frame, temporal, and question representations with cross-attention.

    The default variant runs two cross-attention calls through one shared
    parameter block: frames attend over the question, then the temporal
    features attend over that result. ``only_q`` keeps just the first call,
    ``only_t`` re-keys the temporal features by the raw frames, and
    ``unshared`` uses a second independent parameter block for the second
    call.
    """
    if variant not in TF_VARIANTS:
        raise ConfigError(f"unknown fusion variant {variant!r}; expected one of {TF_VARIANTS}")
    if variant == "only_q":
        return attention(frames, question, shared, residual=residual)
    if variant == "only_t":
        return attention(temporal, frames, shared, residual=residual)
    guided = attention(frames, question, shared, residual=residual)
    if variant == "unshared":
        if second is None:
            raise ConfigError("the unshared fusion variant needs a second parameter block")
        return attention(temporal, guided, second, residual=residual)
    return attention(temporal, guided, shared, residual=residual)


def answer_predict(fused: Tensor, question: Tensor, candidates: Tensor,
                   self_params: AttentionParams, head_params: AttentionParams,
                   out_weights: Tensor, *, residual: bool = False) -> Tensor:
    """Score answer candidates against the fused sequence.

    The fused rows and question rows are stacked and self-attended; candidate
    rows then attend over the result and a final width-to-1 projection yields
    one logit per candidate.
    """
    if out_weights.data.ndim != 2 or out_weights.shape[1] != 1:
        raise DimensionError(f"answer_predict: out_weights must have shape (D, 1), got {out_weights.shape}")
    joint = concat_rows(fused, question)
    context = attention(joint, joint, self_params, residual=residual)
    pooled = attention(candidates, context, head_params, residual=residual)
    return matmul(pooled, out_weights)


def qa_loss(logits: Tensor, gold: int) -> Tensor:
    """Negative log-likelihood of the gold candidate under a softmax over logits."""
    if logits.data.ndim != 2 or logits.shape[1] != 1:
        raise DimensionError(f"qa_loss: logits must have shape (M, 1), got {logits.shape}")
    m = logits.shape[0]
    if not 0 <= gold < m:
        raise ContractError(f"qa_loss: gold index {gold} out of range for {m} candidates")
    log_probs = log_softmax_rows(transpose(logits))
    picked = slice_cols(log_probs, gold, gold + 1)
    return scale(sum_all(picked), -1.0)
