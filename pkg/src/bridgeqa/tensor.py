"""Dense float64 tensors with a tape-based reverse-mode gradient engine.

Operations are recorded on an explicit gradient tape while one is active.
Nodes are appended in creation order, which is a valid topological order of
the data-flow graph, so ``backward`` is a single reverse sweep over the
recorded nodes. Gradients accumulate on leaf tensors constructed with
``requires_grad=True``; gradients of recorded intermediates are reset at the
start of every ``backward`` call. Everything is stored as row-major 64-bit
floats and all computations are deterministic.
"""

import numpy as np

from .errors import ConfigError, ContractError, DimensionError

__all__ = [
    "Tensor",
    "Tape",
    "backward",
    "add",
    "add_bias",
    "sub",
    "mul",
    "scale",
    "matmul",
    "transpose",
    "relu",
    "softmax_rows",
    "log_softmax_rows",
    "log",
    "sum_all",
    "mean_all",
    "concat_rows",
    "concat_cols",
    "slice_rows",
    "slice_cols",
    "repeat_rows",
    "embedding",
    "conv1d_time",
    "dropout",
]


class Tensor:
    """A dense float64 array plus an optional same-shape gradient buffer.

    Tensors own their storage: the constructor always copies. ``grad`` is
    allocated eagerly for leaves that require gradients and for any result
    recorded on an active tape.
    """

    __slots__ = ("data", "requires_grad", "grad", "_backward", "_tape")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.array(data, dtype=np.float64)
        self.requires_grad = bool(requires_grad)
        self.grad = np.zeros_like(self.data) if self.requires_grad else None
        self._backward = None
        self._tape = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def size(self) -> int:
        return int(self.data.size)

    def zero_grad(self) -> None:
        if self.grad is not None:
            self.grad.fill(0.0)

    def item(self) -> float:
        if self.data.size != 1:
            raise ContractError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.data.reshape(()))

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"

    def __add__(self, other: "Tensor") -> "Tensor":
        return add(self, other)

    def __sub__(self, other: "Tensor") -> "Tensor":
        return sub(self, other)

    def __mul__(self, other):
        if isinstance(other, Tensor):
            return mul(self, other)
        return scale(self, float(other))

    def __rmul__(self, other):
        return scale(self, float(other))

    def __matmul__(self, other: "Tensor") -> "Tensor":
        return matmul(self, other)


_TAPE_STACK: list["Tape"] = []


class Tape:
    """Ordered record of operations, oldest first.

    Entering the context makes the tape active; any operation with at least
    one gradient-requiring input is appended to ``nodes``.
    """

    def __init__(self):
        self.nodes: list[Tensor] = []

    def __enter__(self) -> "Tape":
        _TAPE_STACK.append(self)
        return self

    def __exit__(self, exc_type, exc_value, tb) -> bool:
        _TAPE_STACK.pop()
        return False


def _active_tape() -> Tape | None:
    return _TAPE_STACK[-1] if _TAPE_STACK else None


def _record(out: Tensor, inputs: tuple[Tensor, ...], backward_fn) -> Tensor:
    tape = _active_tape()
    if tape is not None and any(t.requires_grad for t in inputs):
        out.requires_grad = True
        out.grad = np.zeros_like(out.data)
        out._backward = backward_fn
        out._tape = tape
        tape.nodes.append(out)
    return out


def backward(loss: Tensor) -> None:
    """Reverse sweep from a scalar recorded on a tape.

    Leaf gradients accumulate across repeated calls; gradients of recorded
    intermediates (including ``loss`` itself) are reset on each call before
    the sweep.
    """
    if loss.data.size != 1:
        raise ContractError(f"backward needs a scalar loss, got shape {loss.shape}")
    tape = loss._tape
    if tape is None:
        raise ContractError("backward needs a loss recorded on an active tape")
    for node in tape.nodes:
        node.grad.fill(0.0)
    loss.grad.fill(1.0)
    for node in reversed(tape.nodes):
        node._backward()


def _require_2d(x: Tensor, op: str) -> None:
    if x.data.ndim != 2:
        raise DimensionError(f"{op}: expected a 2-D tensor, got shape {x.shape}")


def _require_same_shape(a: Tensor, b: Tensor, op: str) -> None:
    if a.shape != b.shape:
        raise DimensionError(f"{op}: shapes {a.shape} and {b.shape} differ")


def add(a: Tensor, b: Tensor) -> Tensor:
    _require_same_shape(a, b, "add")
    out = Tensor(a.data + b.data)

    def _bwd():
        g = out.grad
        if a.requires_grad:
            a.grad += g
        if b.requires_grad:
            b.grad += g

    return _record(out, (a, b), _bwd)


def add_bias(x: Tensor, bias: Tensor) -> Tensor:
    """Add a length-C bias vector to every row of an R x C tensor."""
    _require_2d(x, "add_bias")
    if bias.data.ndim != 1 or bias.shape[0] != x.shape[1]:
        raise DimensionError(f"add_bias: shapes {x.shape} and {bias.shape} are incompatible")
    out = Tensor(x.data + bias.data[None, :])

    def _bwd():
        g = out.grad
        if x.requires_grad:
            x.grad += g
        if bias.requires_grad:
            bias.grad += g.sum(axis=0)

    return _record(out, (x, bias), _bwd)


def sub(a: Tensor, b: Tensor) -> Tensor:
    _require_same_shape(a, b, "sub")
    out = Tensor(a.data - b.data)

    def _bwd():
        g = out.grad
        if a.requires_grad:
            a.grad += g
        if b.requires_grad:
            b.grad -= g

    return _record(out, (a, b), _bwd)


def mul(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise product of same-shape tensors."""
    _require_same_shape(a, b, "mul")
    a_data, b_data = a.data, b.data
    out = Tensor(a_data * b_data)

    def _bwd():
        g = out.grad
        if a.requires_grad:
            a.grad += g * b_data
        if b.requires_grad:
            b.grad += g * a_data

    return _record(out, (a, b), _bwd)


def scale(x: Tensor, s: float) -> Tensor:
    s = float(s)
    out = Tensor(x.data * s)

    def _bwd():
        if x.requires_grad:
            x.grad += out.grad * s

    return _record(out, (x,), _bwd)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    _require_2d(a, "matmul")
    _require_2d(b, "matmul")
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"matmul: inner dimensions disagree for shapes {a.shape} and {b.shape}")
    a_data, b_data = a.data, b.data
    out = Tensor(a_data @ b_data)

    def _bwd():
        g = out.grad
        if a.requires_grad:
            a.grad += g @ b_data.T
        if b.requires_grad:
            b.grad += a_data.T @ g

    return _record(out, (a, b), _bwd)


def transpose(x: Tensor) -> Tensor:
    _require_2d(x, "transpose")
    out = Tensor(x.data.T)

    def _bwd():
        if x.requires_grad:
            x.grad += out.grad.T

    return _record(out, (x,), _bwd)


def relu(x: Tensor) -> Tensor:
    """Elementwise max(x, 0); the subgradient at exactly 0 is taken as 0."""
    mask = x.data > 0.0
    out = Tensor(np.where(mask, x.data, 0.0))

    def _bwd():
        if x.requires_grad:
            x.grad += out.grad * mask

    return _record(out, (x,), _bwd)


def softmax_rows(x: Tensor) -> Tensor:
    """Row-wise softmax with max subtraction, safe for large inputs."""
    _require_2d(x, "softmax_rows")
    shifted = x.data - x.data.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    probs = e / e.sum(axis=1, keepdims=True)
    out = Tensor(probs)

    def _bwd():
        if x.requires_grad:
            g = out.grad
            x.grad += probs * (g - (g * probs).sum(axis=1, keepdims=True))

    return _record(out, (x,), _bwd)


def log_softmax_rows(x: Tensor) -> Tensor:
    """Row-wise log of the softmax, computed without forming the softmax."""
    _require_2d(x, "log_softmax_rows")
    shifted = x.data - x.data.max(axis=1, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    out = Tensor(shifted - lse)
    probs = np.exp(out.data)

    def _bwd():
        if x.requires_grad:
            g = out.grad
            x.grad += g - probs * g.sum(axis=1, keepdims=True)

    return _record(out, (x,), _bwd)


def log(x: Tensor) -> Tensor:
    x_data = x.data
    out = Tensor(np.log(x_data))

    def _bwd():
        if x.requires_grad:
            x.grad += out.grad / x_data

    return _record(out, (x,), _bwd)


def sum_all(x: Tensor) -> Tensor:
    out = Tensor(x.data.sum())

    def _bwd():
        if x.requires_grad:
            x.grad += out.grad

    return _record(out, (x,), _bwd)


def mean_all(x: Tensor) -> Tensor:
    size = x.data.size
    out = Tensor(x.data.mean())

    def _bwd():
        if x.requires_grad:
            x.grad += out.grad / size

    return _record(out, (x,), _bwd)


def concat_rows(a: Tensor, b: Tensor) -> Tensor:
    """Stack two 2-D tensors along axis 0."""
    _require_2d(a, "concat_rows")
    _require_2d(b, "concat_rows")
    if a.shape[1] != b.shape[1]:
        raise DimensionError(f"concat_rows: column counts disagree for shapes {a.shape} and {b.shape}")
    split = a.shape[0]
    out = Tensor(np.concatenate([a.data, b.data], axis=0))

    def _bwd():
        g = out.grad
        if a.requires_grad:
            a.grad += g[:split]
        if b.requires_grad:
            b.grad += g[split:]

    return _record(out, (a, b), _bwd)


def concat_cols(a: Tensor, b: Tensor) -> Tensor:
    """Stack two 2-D tensors along axis 1."""
    _require_2d(a, "concat_cols")
    _require_2d(b, "concat_cols")
    if a.shape[0] != b.shape[0]:
        raise DimensionError(f"concat_cols: row counts disagree for shapes {a.shape} and {b.shape}")
    split = a.shape[1]
    out = Tensor(np.concatenate([a.data, b.data], axis=1))

    def _bwd():
        g = out.grad
        if a.requires_grad:
            a.grad += g[:, :split]
        if b.requires_grad:
            b.grad += g[:, split:]

    return _record(out, (a, b), _bwd)


def slice_rows(x: Tensor, start: int, stop: int) -> Tensor:
    _require_2d(x, "slice_rows")
    if not 0 <= start < stop <= x.shape[0]:
        raise DimensionError(f"slice_rows: range [{start}, {stop}) is invalid for shape {x.shape}")
    out = Tensor(x.data[start:stop])

    def _bwd():
        if x.requires_grad:
            x.grad[start:stop] += out.grad

    return _record(out, (x,), _bwd)


def slice_cols(x: Tensor, start: int, stop: int) -> Tensor:
    _require_2d(x, "slice_cols")
    if not 0 <= start < stop <= x.shape[1]:
        raise DimensionError(f"slice_cols: range [{start}, {stop}) is invalid for shape {x.shape}")
    out = Tensor(x.data[:, start:stop])

    def _bwd():
        if x.requires_grad:
            x.grad[:, start:stop] += out.grad

    return _record(out, (x,), _bwd)


def repeat_rows(x: Tensor, count: int) -> Tensor:
    """Tile a 1 x C tensor into count identical rows."""
    _require_2d(x, "repeat_rows")
    if x.shape[0] != 1:
        raise DimensionError(f"repeat_rows: expected shape (1, C), got {x.shape}")
    if count < 1:
        raise DimensionError(f"repeat_rows: count must be positive, got {count}")
    out = Tensor(np.repeat(x.data, count, axis=0))

    def _bwd():
        if x.requires_grad:
            x.grad += out.grad.sum(axis=0, keepdims=True)

    return _record(out, (x,), _bwd)


def embedding(table: Tensor, ids) -> Tensor:
    """Gather rows of a vocabulary table; backward scatter-adds into it."""
    _require_2d(table, "embedding")
    idx = np.asarray(ids, dtype=np.intp)
    if idx.ndim != 1:
        raise DimensionError(f"embedding: ids must be 1-D, got shape {idx.shape}")
    if idx.size == 0:
        raise DimensionError("embedding: ids must be non-empty")
    if idx.min() < 0 or idx.max() >= table.shape[0]:
        raise ContractError(
            f"embedding: id out of range for a table with {table.shape[0]} rows: {idx.tolist()}"
        )
    out = Tensor(table.data[idx])

    def _bwd():
        if table.requires_grad:
            np.add.at(table.grad, idx, out.grad)

    return _record(out, (table,), _bwd)


def conv1d_time(x: Tensor, weights: Tensor, bias: Tensor) -> Tensor:
    """1-D convolution along axis 0 (time) with zero padding to the same length.

    ``x`` is N x D, ``weights`` is D_out x D_in x k with an odd kernel width k,
    ``bias`` is length D_out. Output row n, channel c is
    ``bias[c] + sum_{i,j} weights[c, i, j] * padded_x[n + j, i]``.
    """
    _require_2d(x, "conv1d_time")
    if weights.data.ndim != 3:
        raise DimensionError(f"conv1d_time: weights must be 3-D, got shape {weights.shape}")
    d_out, d_in, k = weights.shape
    n, d = x.shape
    if d_in != d:
        raise DimensionError(f"conv1d_time: input shape {x.shape} does not match weights shape {weights.shape}")
    if bias.data.ndim != 1 or bias.shape[0] != d_out:
        raise DimensionError(f"conv1d_time: bias shape {bias.shape} does not match weights shape {weights.shape}")
    if k % 2 == 0 or k < 1:
        raise ConfigError(f"conv1d_time: kernel width must be odd and positive, got {k}")
    pad = (k - 1) // 2
    padded = np.zeros((n + k - 1, d))
    padded[pad:pad + n] = x.data
    w_data = weights.data
    result = np.tile(bias.data, (n, 1))
    for j in range(k):
        result += padded[j:j + n] @ w_data[:, :, j].T
    out = Tensor(result)

    def _bwd():
        g = out.grad
        if bias.requires_grad:
            bias.grad += g.sum(axis=0)
        if weights.requires_grad:
            for j in range(k):
                weights.grad[:, :, j] += g.T @ padded[j:j + n]
        if x.requires_grad:
            g_padded = np.zeros_like(padded)
            for j in range(k):
                g_padded[j:j + n] += g @ w_data[:, :, j]
            x.grad += g_padded[pad:pad + n]

    return _record(out, (x, weights, bias), _bwd)


def dropout(x: Tensor, rate: float, rng: np.random.Generator) -> Tensor:
    """Inverted dropout: zero each element with probability rate, scale by 1/(1-rate)."""
    if not 0.0 <= rate < 1.0:
        raise ConfigError(f"dropout: rate must lie in [0, 1), got {rate}")
    keep = (rng.random(x.shape) >= rate) / (1.0 - rate)
    out = Tensor(x.data * keep)

    def _bwd():
        if x.requires_grad:
            x.grad += out.grad * keep

    return _record(out, (x,), _bwd)
