"""Binary tensor files plus dataset and parameter bundles.

A tensor file is: 4 magic bytes ``T3TF``, a little-endian uint16 version, a
uint8 rank, one little-endian uint32 per dimension, then the payload as
little-endian float64 in row-major order. Round trips are bit-identical.
"""

import json
import struct
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .config import ModelConfig, config_from_dict, config_to_dict
from .errors import FormatError
from .model import Model
from .synth import Sample, TaskSpec

__all__ = [
    "MAGIC",
    "VERSION",
    "save_tensor",
    "load_tensor",
    "save_dataset",
    "load_dataset",
    "save_params",
    "load_params",
]

MAGIC = b"T3TF"
VERSION = 1
_HEADER = struct.Struct("<4sHB")


def save_tensor(path, values) -> None:
    arr = np.ascontiguousarray(values, dtype=np.float64)
    if arr.ndim > 255:
        raise FormatError(f"tensor rank {arr.ndim} exceeds the format maximum of 255")
    for dim in arr.shape:
        if dim > 0xFFFFFFFF:
            raise FormatError(f"dimension {dim} exceeds the format maximum")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, arr.ndim))
        fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
        fh.write(arr.astype("<f8", copy=False).tobytes(order="C"))


def load_tensor(path) -> np.ndarray:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER.size:
        raise FormatError(f"{path}: truncated header")
    magic, version, rank = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise FormatError(f"{path}: unsupported version {version}, expected {VERSION}")
    offset = _HEADER.size
    dims_size = 4 * rank
    if len(blob) < offset + dims_size:
        raise FormatError(f"{path}: truncated dimension list")
    shape = struct.unpack_from(f"<{rank}I", blob, offset)
    offset += dims_size
    expected = 8 * int(np.prod(shape, dtype=np.int64)) if rank else 8
    if len(blob) - offset != expected:
        raise FormatError(f"{path}: payload holds {len(blob) - offset} bytes, expected {expected}")
    flat = np.frombuffer(blob, dtype="<f8", count=expected // 8, offset=offset)
    return flat.astype(np.float64).reshape(shape)


DATASET_MANIFEST = "manifest.json"
_DATASET_FORMAT = "bridgeqa-dataset"
_PARAMS_FORMAT = "bridgeqa-params"


def save_dataset(directory, spec: TaskSpec, splits: dict[str, list[Sample]]) -> None:
    """One frames tensor file per split plus a JSON manifest with the rest."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    manifest = {"format": _DATASET_FORMAT, "version": VERSION, "task": asdict(spec), "splits": {}}
    for split, samples in splits.items():
        filename = f"{split}.t3t"
        frames = (np.stack([s.frames for s in samples])
                  if samples else np.zeros((0, spec.n_frames, spec.feature_dim)))
        save_tensor(directory / filename, frames)
        manifest["splits"][split] = {
            "file": filename,
            "count": len(samples),
            "question_ids": [s.question_ids.tolist() for s in samples],
            "candidate_ids": [s.candidate_ids.tolist() for s in samples],
            "gold": [s.gold for s in samples],
            "task_kinds": [s.task_kind for s in samples],
        }
    with open(directory / DATASET_MANIFEST, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load_manifest(directory, expected_format: str) -> dict:
    path = Path(directory) / DATASET_MANIFEST
    try:
        with open(path, "r", encoding="utf-8") as fh:
            manifest = json.load(fh)
    except OSError as exc:
        raise FormatError(f"{path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
    if manifest.get("format") != expected_format:
        raise FormatError(f"{path}: format is {manifest.get('format')!r}, expected {expected_format!r}")
    if manifest.get("version") != VERSION:
        raise FormatError(f"{path}: unsupported version {manifest.get('version')}")
    return manifest


def load_dataset(directory) -> tuple[TaskSpec, dict[str, list[Sample]]]:
    directory = Path(directory)
    manifest = _load_manifest(directory, _DATASET_FORMAT)
    spec = TaskSpec(**manifest["task"])
    splits: dict[str, list[Sample]] = {}
    for split, entry in manifest["splits"].items():
        frames = load_tensor(directory / entry["file"])
        count = entry["count"]
        if frames.shape[0] != count:
            raise FormatError(f"{split}: frames tensor holds {frames.shape[0]} samples, "
                              f"manifest says {count}")
        lists = (entry["question_ids"], entry["candidate_ids"], entry["gold"], entry["task_kinds"])
        if any(len(lst) != count for lst in lists):
            raise FormatError(f"{split}: manifest field lengths do not match count {count}")
        samples = []
        for i in range(count):
            gold = int(entry["gold"][i])
            candidates = np.asarray(entry["candidate_ids"][i], dtype=np.int64)
            if not 0 <= gold < len(candidates):
                raise FormatError(f"{split}: sample {i} gold index {gold} is out of range")
            samples.append(Sample(
                frames=frames[i],
                question_ids=np.asarray(entry["question_ids"][i], dtype=np.int64),
                candidate_ids=candidates,
                gold=gold,
                task_kind=str(entry["task_kinds"][i]),
            ))
        splits[split] = samples
    return spec, splits


def save_params(directory, model: Model) -> None:
    """One tensor file per parameter plus a manifest embedding the config."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    tensors = {}
    for name, param in model.parameters().items():
        filename = name.replace(".", "_") + ".t3t"
        save_tensor(directory / filename, param.data)
        tensors[name] = filename
    manifest = {"format": _PARAMS_FORMAT, "version": VERSION,
                "config": config_to_dict(model.cfg), "tensors": tensors}
    with open(directory / DATASET_MANIFEST, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_params(directory) -> Model:
    directory = Path(directory)
    manifest = _load_manifest(directory, _PARAMS_FORMAT)
    cfg: ModelConfig = config_from_dict(manifest["config"])
    model = Model(cfg)
    params = model.parameters()
    stored = manifest["tensors"]
    missing = sorted(set(params) - set(stored))
    extra = sorted(set(stored) - set(params))
    if missing or extra:
        raise FormatError(f"parameter names disagree with the config: "
                          f"missing {missing}, unexpected {extra}")
    for name, filename in stored.items():
        values = load_tensor(directory / filename)
        if values.shape != params[name].shape:
            raise FormatError(f"{name}: stored shape {values.shape} does not match "
                              f"expected shape {params[name].shape}")
        params[name].data[...] = values
    return model
