"""Synthetic sequence question-answering tasks.

Two question families share one frame format. Trend sequences drift linearly
between two random endpoints and ask for the drift's direction class, which
is decidable from the endpoints alone. Event sequences are stationary noise
with a single decaying pulse confined to one channel group and ask which
group jumped; the pulse never touches the first or last frame, so endpoints
carry no information. The mixed task interleaves both with a question token
that selects the family and a 5-way candidate union.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

__all__ = [
    "TaskSpec",
    "Sample",
    "generate",
    "generate_split",
    "spec_from_config",
    "PAD",
    "QUERY",
    "ASK_TREND",
    "ASK_EVENT",
    "ASK_WHERE",
    "TREND_CLASS_BASE",
    "EVENT_CLASS_BASE",
    "MIXED_TREND_CLASSES",
    "MIXED_EVENT_CLASSES",
]

# Fixed vocabulary layout. Question tokens sit below 8, trend class tokens
# start at 8, event class tokens at 16.
PAD = 0
QUERY = 1
ASK_TREND = 2
ASK_EVENT = 3
ASK_WHERE = 4
TREND_CLASS_BASE = 8
EVENT_CLASS_BASE = 16
MIXED_TREND_CLASSES = 2
MIXED_EVENT_CLASSES = 3

# Magnitude profile of an injected event, relative to the jump size. The
# strict decay makes the largest frame-to-frame change land on the first
# pulse frame, and the hard zero afterwards keeps the endpoints clean.
EVENT_PROFILE = (1.0, 0.5, 0.25)

SPLITS = ("train", "val", "test")


@dataclass(frozen=True)
class TaskSpec:
    kind: str = "mixed"
    n_frames: int = 16
    feature_dim: int = 32
    question_len: int = 4
    num_candidates: int = 5
    train_count: int = 2000
    val_count: int = 500
    test_count: int = 500
    noise: float = 0.1
    jump: float = 1.0
    drift: float = 0.75
    trend_fraction: float = 0.5
    seed: int = 1

    def __post_init__(self):
        if self.kind not in ("trend", "event", "mixed"):
            raise ConfigError(f"kind: must be trend, event, or mixed, got {self.kind!r}")
        if self.n_frames < 2:
            raise ConfigError(f"n_frames: must be at least 2, got {self.n_frames}")
        if self.feature_dim < 1:
            raise ConfigError(f"feature_dim: must be positive, got {self.feature_dim}")
        if self.question_len < 1:
            raise ConfigError(f"question_len: must be positive, got {self.question_len}")
        if self.num_candidates < 2:
            raise ConfigError(f"num_candidates: must be at least 2, got {self.num_candidates}")
        if self.noise < 0.0:
            raise ConfigError(f"noise: must be non-negative, got {self.noise}")
        if not 0.0 <= self.trend_fraction <= 1.0:
            raise ConfigError(f"trend_fraction: must lie in [0, 1], got {self.trend_fraction}")
        for name in ("train_count", "val_count", "test_count"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name}: must be non-negative, got {getattr(self, name)}")
        if self.kind in ("event", "mixed"):
            if self.jump <= 0.0:
                raise ConfigError(f"jump: must be positive for event questions, got {self.jump}")
            # the pulse spans len(EVENT_PROFILE) frames strictly inside the sequence
            if self.n_frames < len(EVENT_PROFILE) + 2:
                raise ConfigError(
                    f"n_frames: event sequences need at least {len(EVENT_PROFILE) + 2} frames, "
                    f"got {self.n_frames}")
            if self.question_len < 2:
                raise ConfigError(f"question_len: event questions need at least 2 tokens, "
                                  f"got {self.question_len}")
        if self.kind in ("trend", "mixed") and self.drift <= 0.0:
            raise ConfigError(f"drift: must be positive for trend questions, got {self.drift}")
        groups = MIXED_EVENT_CLASSES if self.kind == "mixed" else self.num_candidates
        if self.kind in ("event", "mixed") and groups > min(8, self.feature_dim):
            raise ConfigError(f"num_candidates: event channel groups need at most "
                              f"min(8, feature_dim) classes, got {groups}")
        directions = MIXED_TREND_CLASSES if self.kind == "mixed" else self.num_candidates
        if self.kind in ("trend", "mixed") and directions > min(8, 2 * self.feature_dim):
            raise ConfigError(f"num_candidates: trend directions need at most "
                              f"min(8, 2 * feature_dim) classes, got {directions}")
        if self.kind == "mixed" and self.num_candidates != MIXED_TREND_CLASSES + MIXED_EVENT_CLASSES:
            raise ConfigError(f"num_candidates: the mixed task uses the "
                              f"{MIXED_TREND_CLASSES + MIXED_EVENT_CLASSES}-way candidate union, "
                              f"got {self.num_candidates}")


@dataclass
class Sample:
    frames: np.ndarray          # (n_frames, feature_dim) float64
    question_ids: np.ndarray    # (question_len,) int64
    candidate_ids: np.ndarray   # (num_candidates,) int64
    gold: int                   # zero-based index into candidate_ids
    task_kind: str              # "trend" or "event"


def spec_from_config(cfg) -> TaskSpec:
    """Build a TaskSpec from any object exposing the task-related config fields."""
    return TaskSpec(
        kind=cfg.task,
        n_frames=cfg.n_frames,
        feature_dim=cfg.feature_dim,
        question_len=cfg.question_len,
        num_candidates=cfg.num_candidates,
        train_count=cfg.train_count,
        val_count=cfg.val_count,
        test_count=cfg.test_count,
        noise=cfg.noise,
        jump=cfg.jump,
        drift=cfg.drift,
        trend_fraction=cfg.trend_fraction,
        seed=cfg.data_seed,
    )


def _question(template: list[int], length: int) -> np.ndarray:
    ids = (template + [PAD] * length)[:length]
    return np.asarray(ids, dtype=np.int64)


def _trend_direction(class_idx: int, dim: int) -> np.ndarray:
    """Direction for class c: the (c // 2)-th axis with alternating sign."""
    u = np.zeros(dim)
    u[class_idx // 2] = 1.0 if class_idx % 2 == 0 else -1.0
    return u


def _trend_payload(rng: np.random.Generator, spec: TaskSpec, num_classes: int):
    """Frames drifting linearly from a random start along a class direction."""
    gold = int(rng.integers(num_classes))
    direction = _trend_direction(gold, spec.feature_dim)
    start = rng.normal(0.0, 0.5, spec.feature_dim)
    taus = np.linspace(0.0, 1.0, spec.n_frames)
    noise = rng.normal(0.0, spec.noise, (spec.n_frames, spec.feature_dim))
    frames = start[None, :] + spec.drift * taus[:, None] * direction[None, :] + noise
    return frames, gold


def _event_payload(rng: np.random.Generator, spec: TaskSpec, num_groups: int):
    """Stationary noise around a random baseline plus one decaying pulse.

    The pulse direction lives in one contiguous channel group; its start
    frame is uniform over positions that keep the whole profile strictly
    inside the sequence, so the first and last frame stay informative-free.
    """
    gold = int(rng.integers(num_groups))
    bounds = np.linspace(0, spec.feature_dim, num_groups + 1).astype(int)
    lo, hi = bounds[gold], bounds[gold + 1]
    raw = rng.normal(0.0, 1.0, hi - lo)
    norm = np.linalg.norm(raw)
    if norm == 0.0:
        raw[0] = 1.0
        norm = 1.0
    direction = np.zeros(spec.feature_dim)
    direction[lo:hi] = raw / norm
    baseline = rng.normal(0.0, 0.5, spec.feature_dim)
    noise = rng.normal(0.0, spec.noise, (spec.n_frames, spec.feature_dim))
    frames = baseline[None, :] + noise
    start = int(rng.integers(1, spec.n_frames - len(EVENT_PROFILE)))
    for offset, weight in enumerate(EVENT_PROFILE):
        frames[start + offset] += spec.jump * weight * direction
    return frames, gold


def _trend_sample(rng: np.random.Generator, spec: TaskSpec) -> Sample:
    frames, gold = _trend_payload(rng, spec, spec.num_candidates)
    return Sample(
        frames=frames,
        question_ids=_question([QUERY, ASK_TREND], spec.question_len),
        candidate_ids=np.arange(TREND_CLASS_BASE, TREND_CLASS_BASE + spec.num_candidates,
                                dtype=np.int64),
        gold=gold,
        task_kind="trend",
    )


def _event_sample(rng: np.random.Generator, spec: TaskSpec) -> Sample:
    frames, gold = _event_payload(rng, spec, spec.num_candidates)
    return Sample(
        frames=frames,
        question_ids=_question([QUERY, ASK_EVENT, ASK_WHERE], spec.question_len),
        candidate_ids=np.arange(EVENT_CLASS_BASE, EVENT_CLASS_BASE + spec.num_candidates,
                                dtype=np.int64),
        gold=gold,
        task_kind="event",
    )


_MIXED_CANDIDATES = np.concatenate([
    np.arange(TREND_CLASS_BASE, TREND_CLASS_BASE + MIXED_TREND_CLASSES),
    np.arange(EVENT_CLASS_BASE, EVENT_CLASS_BASE + MIXED_EVENT_CLASSES),
]).astype(np.int64)


def _mixed_sample(rng: np.random.Generator, spec: TaskSpec) -> Sample:
    if rng.random() < spec.trend_fraction:
        frames, gold = _trend_payload(rng, spec, MIXED_TREND_CLASSES)
        question = _question([QUERY, ASK_TREND], spec.question_len)
        kind = "trend"
    else:
        frames, gold = _event_payload(rng, spec, MIXED_EVENT_CLASSES)
        question = _question([QUERY, ASK_EVENT, ASK_WHERE], spec.question_len)
        gold += MIXED_TREND_CLASSES
        kind = "event"
    return Sample(
        frames=frames,
        question_ids=question,
        candidate_ids=_MIXED_CANDIDATES.copy(),
        gold=gold,
        task_kind=kind,
    )


_BUILDERS = {"trend": _trend_sample, "event": _event_sample, "mixed": _mixed_sample}

# Fixed split order for seed derivation; regeneration is byte-identical and
# train/test disjointness rests on the disjoint seed streams.
_SPLIT_INDEX = {"train": 0, "val": 1, "test": 2}


def generate_split(spec: TaskSpec, split: str) -> list[Sample]:
    if split not in _SPLIT_INDEX:
        raise ConfigError(f"split: must be one of {SPLITS}, got {split!r}")
    count = getattr(spec, f"{split}_count")
    child = np.random.SeedSequence(spec.seed).spawn(len(_SPLIT_INDEX))[_SPLIT_INDEX[split]]
    rng = np.random.default_rng(child)
    build = _BUILDERS[spec.kind]
    return [build(rng, spec) for _ in range(count)]


def generate(spec: TaskSpec) -> dict[str, list[Sample]]:
    """All three splits, each from its own child seed stream."""
    return {split: generate_split(spec, split) for split in SPLITS}
