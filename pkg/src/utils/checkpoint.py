"""
On-disk checkpoints: a JSON manifest plus one little-endian float32 file per named tensor.

    <dir>/manifest.json
    <dir>/tensors/<tensor name>.f32
"""

import hashlib
import json
import math
import warnings
from pathlib import Path

import numpy as np

from ..errors import CheckpointError, CheckpointWarning
from ..models.artifacts import AMNCheckpoint, ExpertCheckpoint
from ..models.lateral import LateralExpertParams
from ..models.losses import FeatureAdapter
from ..models.network import NetworkParams, NetworkSpec
from ..models.optim import AdamState
from .logger import get_logger
from .metric_log import MetricLog

logger = get_logger(__name__)

FORMAT = "consolidation-lab-checkpoint/1"
MANIFEST = "manifest.json"
TENSOR_DIR = "tensors"
DTYPE = np.dtype("<f4")


def _clean(value):
    """JSON-safe copy: NaN/inf become null, numpy scalars become Python numbers"""
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def _number(value):
    return math.nan if value is None else float(value)


def _file_name(name):
    return name.replace("/", "__") + ".f32"


def fingerprint(manifest):
    """Hash over the identity fields of a manifest"""
    identity = {k: manifest.get(k) for k in ("kind", "task_ids", "spec", "seed", "config_hash")}
    canonical = json.dumps(identity, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _collect_tensors(checkpoint):
    tensors = {}
    params = checkpoint.params
    network = params.expert if isinstance(params, LateralExpertParams) else params
    for name, value in network.tensors.items():
        tensors[f"network/{name}"] = value
    if isinstance(params, LateralExpertParams):
        tensors["lateral/weight"] = params.lateral_weight
        for name, value in params.amn.tensors.items():
            tensors[f"amn/{name}"] = value
    if isinstance(checkpoint, AMNCheckpoint):
        for task_id, adapter in checkpoint.adapters.items():
            tensors[f"adapter/{task_id}/weight"] = adapter.weight
            tensors[f"adapter/{task_id}/bias"] = adapter.bias
    if checkpoint.adam is not None:
        for name, value in checkpoint.adam.m.items():
            tensors[f"adam.m/{name}"] = value
        for name, value in checkpoint.adam.v.items():
            tensors[f"adam.v/{name}"] = value
    return tensors


def save(checkpoint, path):
    """
    Write an ExpertCheckpoint or AMNCheckpoint to directory ``path``.
    @return The checkpoint directory.
    """
    path = Path(path)
    (path / TENSOR_DIR).mkdir(parents=True, exist_ok=True)
    params = checkpoint.params
    network = params.expert if isinstance(params, LateralExpertParams) else params

    manifest = {
        "format": FORMAT,
        "kind": checkpoint.kind,
        "task_ids": list(checkpoint.task_ids),
        "spec": network.spec.to_dict(),
        "provenance": dict(sorted(network.provenance.items())),
        "config_hash": checkpoint.config_hash,
        "seed": int(checkpoint.seed),
        "adam": checkpoint.adam.hyperparameters() if checkpoint.adam is not None else None,
        "tensors": {},
    }
    if isinstance(params, LateralExpertParams):
        manifest["amn_spec"] = params.amn.spec.to_dict()
        manifest["amn_provenance"] = dict(sorted(params.amn.provenance.items()))
        manifest["column_provenance"] = list(params.column_provenance)
    if isinstance(checkpoint, ExpertCheckpoint):
        manifest["scores"] = {
            "final_score": checkpoint.final_score,
            "final_std": checkpoint.final_std,
            "initial_score": checkpoint.initial_score,
            "random_mean": checkpoint.random_mean,
            "random_std": checkpoint.random_std,
        }
        manifest["logs"] = {checkpoint.task_id: checkpoint.log.to_dict()}
    else:
        manifest["scores"] = {
            "expert_scores": dict(checkpoint.expert_scores),
            "baselines": dict(checkpoint.baselines),
        }
        manifest["logs"] = {task: log.to_dict() for task, log in checkpoint.logs.items()}

    for name, value in sorted(_collect_tensors(checkpoint).items()):
        file_name = _file_name(name)
        np.ascontiguousarray(value, dtype=DTYPE).tofile(path / TENSOR_DIR / file_name)
        manifest["tensors"][name] = {"file": file_name, "shape": list(np.shape(value))}

    manifest["fingerprint"] = fingerprint(manifest)
    with open(path / MANIFEST, "w", encoding="utf-8") as handle:
        json.dump(_clean(manifest), handle, indent=2, sort_keys=True, allow_nan=False)
        handle.write("\n")
    logger.info(f"Checkpoint ({checkpoint.kind}, {', '.join(checkpoint.task_ids)}) written to {path}")
    return path


def _read_tensor(path, name, entry):
    file_path = path / TENSOR_DIR / entry["file"]
    shape = tuple(entry["shape"])
    expected = int(np.prod(shape, dtype=np.int64))
    if not file_path.exists():
        raise CheckpointError(f"Tensor file for '{name}' is missing: {file_path}", name)
    if file_path.stat().st_size != expected * DTYPE.itemsize:
        raise CheckpointError(
            f"Tensor '{name}' holds {file_path.stat().st_size} bytes, expected {expected * DTYPE.itemsize}",
            name,
        )
    values = np.fromfile(file_path, dtype=DTYPE)
    return values.astype(np.float32).reshape(shape)


def _warn(message):
    logger.warning(message)
    warnings.warn(message, CheckpointWarning, stacklevel=3)


def _prefixed(tensors, prefix):
    return {name[len(prefix) :]: value for name, value in tensors.items() if name.startswith(prefix)}


def _load_adapters(path, manifest, tensors):
    """Adapters keyed by the task ids stored in the tensor names, in manifest order where it agrees"""
    stored = []
    for name in tensors:
        parts = name.split("/")
        if parts[0] == "adapter" and len(parts) == 3 and parts[1] not in stored:
            stored.append(parts[1])
    for task_id in manifest["task_ids"]:
        if task_id not in stored:
            _warn(f"Checkpoint {path}: manifest task id {task_id!r} has no stored adapter")
    order = [t for t in manifest["task_ids"] if t in stored]
    order += [t for t in stored if t not in order]

    adapters = {}
    for task_id in order:
        try:
            weight, bias = tensors[f"adapter/{task_id}/weight"], tensors[f"adapter/{task_id}/bias"]
        except KeyError as error:
            raise CheckpointError(
                f"Checkpoint {path}: adapter for {task_id!r} is incomplete", tensor_name=error.args[0]
            ) from None
        adapters[task_id] = FeatureAdapter(task_id, weight, bias)
    if not adapters:
        raise CheckpointError(f"Checkpoint {path}: AMN checkpoint stores no adapters")
    return adapters


def load(path, expected_config_hash=None, expected_task_ids=None):
    """
    Read a checkpoint directory written by save().

    Identity mismatches (edited manifest fields, unexpected config hash or task ids) load anyway
    with a CheckpointWarning; unreadable or truncated tensors raise CheckpointError.
    """
    path = Path(path)
    try:
        with open(path / MANIFEST, "r", encoding="utf-8") as handle:
            manifest = json.load(handle)
    except (OSError, json.JSONDecodeError) as error:
        raise CheckpointError(f"Cannot read checkpoint manifest in {path}: {error}") from error
    if manifest.get("format") != FORMAT:
        raise CheckpointError(f"Unsupported checkpoint format {manifest.get('format')!r} in {path}")

    if manifest.get("fingerprint") != fingerprint(manifest):
        _warn(f"Checkpoint {path}: manifest identity fields do not match its fingerprint")
    if expected_config_hash is not None and manifest.get("config_hash") != expected_config_hash:
        _warn(
            f"Checkpoint {path}: config hash {manifest.get('config_hash')} differs from {expected_config_hash}"
        )
    if expected_task_ids is not None and list(manifest["task_ids"]) != list(expected_task_ids):
        _warn(f"Checkpoint {path}: task ids {manifest['task_ids']} differ from {list(expected_task_ids)}")

    tensors = {name: _read_tensor(path, name, entry) for name, entry in manifest["tensors"].items()}
    spec = NetworkSpec.from_dict(manifest["spec"])
    try:
        network = NetworkParams(spec, _prefixed(tensors, "network/"), dict(manifest["provenance"]))
    except ValueError as error:
        raise CheckpointError(f"Checkpoint {path}: {error}") from error

    adam = None
    if manifest.get("adam") is not None:
        hyper = manifest["adam"]
        adam = AdamState(
            lr=hyper["lr"],
            beta1=hyper["beta1"],
            beta2=hyper["beta2"],
            eps=hyper["eps"],
            t=int(hyper["t"]),
            m=_prefixed(tensors, "adam.m/"),
            v=_prefixed(tensors, "adam.v/"),
        )

    logs = {task: MetricLog.from_dict(data) for task, data in manifest.get("logs", {}).items()}
    scores = manifest.get("scores", {})
    kind = manifest["kind"]

    if kind == "amn":
        adapters = _load_adapters(path, manifest, tensors)
        return AMNCheckpoint(
            params=network,
            adapters=adapters,
            adam=adam,
            logs=logs,
            expert_scores={k: _number(v) for k, v in scores.get("expert_scores", {}).items()},
            baselines={k: _number(v) for k, v in scores.get("baselines", {}).items()},
            seed=manifest["seed"],
            config_hash=manifest["config_hash"],
        )

    params = network
    if kind == "lateral-expert":
        amn = NetworkParams(
            NetworkSpec.from_dict(manifest["amn_spec"]),
            _prefixed(tensors, "amn/"),
            dict(manifest.get("amn_provenance", {})),
        )
        params = LateralExpertParams(
            network, amn, tensors["lateral/weight"], tuple(manifest["column_provenance"])
        )
    task_id = manifest["task_ids"][0]
    return ExpertCheckpoint(
        task_id=task_id,
        params=params,
        adam=adam,
        final_score=_number(scores.get("final_score")),
        log=logs.get(task_id, MetricLog(task_id)),
        final_std=_number(scores.get("final_std")),
        initial_score=_number(scores.get("initial_score")),
        random_mean=_number(scores.get("random_mean")),
        random_std=_number(scores.get("random_std")),
        seed=manifest["seed"],
        config_hash=manifest["config_hash"],
    )
