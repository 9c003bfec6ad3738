"""
Weight reuse between networks: AMN transplant, lateral experts, layer-subset transfer, and the
last-layer weight histogram used to inspect lateral experts.
"""

import re
from dataclasses import dataclass

import numpy as np
import pandas as pd

from ..errors import SurgeryError
from ..utils.logger import get_logger
from ..utils.seeding import derive_seed
from .artifacts import ALPHABET, AMNCheckpoint
from .games import get_task
from .lateral import AMN_SOURCED, EXPERT_SOURCED, LateralExpertParams
from .network import (
    LAYER_NAMES,
    PROVENANCE_AMN,
    PROVENANCE_TRANSPLANTED,
    NetworkParams,
    NetworkSpec,
    init_params,
    tensor_names,
)

logger = get_logger(__name__)

HISTOGRAM_COLUMNS = ["bin_left", "bin_right", "count_amn", "count_expert"]


@dataclass(frozen=True)
class TransferMechanism:
    kind: str  # none | transplant | lateral | layers
    layers: int = 0

    def __str__(self):
        return f"layers:{self.layers}" if self.kind == "layers" else self.kind


def parse_mechanism(text):
    """Parse 'none', 'transplant', 'lateral' or 'layers:K' (0 <= K <= 5)"""
    if isinstance(text, TransferMechanism):
        return text
    text = str(text).strip().lower()
    if text in ("none", "transplant", "lateral"):
        return TransferMechanism(text)
    match = re.fullmatch(r"layers:(\d+)", text)
    if match:
        k = int(match.group(1))
        if k > len(LAYER_NAMES):
            raise SurgeryError(f"Cannot transfer {k} layers, the network has {len(LAYER_NAMES)}")
        return TransferMechanism("layers", k)
    raise SurgeryError(f"Unknown transfer mechanism '{text}'")


def _resolve_source(source, source_actions=None):
    """@return (NetworkParams, global action ids of its head columns, provenance label)"""
    if isinstance(source, AMNCheckpoint):
        return source.params, source.action_ids, PROVENANCE_AMN
    if hasattr(source, "network"):
        return source.network, source.action_ids, PROVENANCE_TRANSPLANTED
    if isinstance(source, NetworkParams):
        if source_actions is None:
            source_actions = ALPHABET[: source.spec.head_width]
        return source, tuple(source_actions), PROVENANCE_TRANSPLANTED
    raise SurgeryError(f"Cannot transfer weights from {type(source).__name__}")


def _head_columns(source_actions, task):
    missing = [a for a in task.action_subset if a not in source_actions]
    if missing:
        raise SurgeryError(
            f"Source head {tuple(source_actions)} does not cover {task.task_id} actions {missing}"
        )
    return [source_actions.index(a) for a in task.action_subset]


def transplant(amn, task, seed=None):
    """
    New expert for ``task`` copying the whole AMN trunk and the head columns of the task's actions.
    Optimizer state is not carried over. ``seed`` is accepted for symmetry with the other
    mechanisms; transplanting is deterministic.
    """
    task = get_task(task)
    params, source_actions, _ = _resolve_source(amn)
    columns = _head_columns(source_actions, task)

    tensors = {name: value.copy() for name, value in params.tensors.items()}
    tensors["head.weight"] = params.tensors["head.weight"][:, columns].copy()
    tensors["head.bias"] = params.tensors["head.bias"][columns].copy()
    spec = params.spec.with_head(task.action_count)
    logger.debug(f"Transplanted AMN into {task.task_id} using head columns {columns}")
    return NetworkParams(spec, tensors, {name: PROVENANCE_TRANSPLANTED for name in tensors})


def make_lateral(amn, task, seed):
    """
    Freshly initialised expert plus a lateral connection from the frozen AMN features.
    Lateral rows start at the same He scale as the expert's own head rows.
    """
    task = get_task(task)
    amn_params, _, _ = _resolve_source(amn)
    spec = amn_params.spec.with_head(task.action_count)
    expert = init_params(spec, seed, dtype=amn_params.dtype)

    rng = np.random.default_rng(derive_seed(seed, "lateral"))
    fan_in = expert.spec.feature_width
    shape = (amn_params.spec.feature_width, task.action_count)
    lateral_weight = (rng.standard_normal(shape) * np.sqrt(2.0 / fan_in)).astype(amn_params.dtype)
    return LateralExpertParams(expert, amn_params.copy(), lateral_weight)


def layer_subset_init(source, k, task, seed, source_actions=None):
    """
    Copy the first ``k`` layers (conv1, conv2, conv3, dense1, head) of ``source``; every other
    layer keeps its init_params(spec, seed) value. Head transfer matches columns by global action id.
    """
    task = get_task(task)
    if not 0 <= k <= len(LAYER_NAMES):
        raise SurgeryError(f"Layer count must be in [0, {len(LAYER_NAMES)}], got {k}")
    params, actions, label = _resolve_source(source, source_actions)
    spec = params.spec.with_head(task.action_count)
    fresh = init_params(spec, seed, dtype=params.dtype)
    if k == 0:
        return fresh

    tensors = dict(fresh.tensors)
    provenance = dict(fresh.provenance)
    for layer in LAYER_NAMES[:k]:
        w_name, b_name = tensor_names(layer)
        if layer == "head":
            columns = _head_columns(actions, task)
            weight = params.tensors[w_name][:, columns]
            bias = params.tensors[b_name][columns]
        else:
            weight, bias = params.tensors[w_name], params.tensors[b_name]
        for name, value in ((w_name, weight), (b_name, bias)):
            if value.shape != fresh.tensors[name].shape:
                raise SurgeryError(
                    f"Cannot copy '{name}': source shape {value.shape}, target {fresh.tensors[name].shape}"
                )
            tensors[name] = value.copy()
            provenance[name] = label
    return NetworkParams(spec, tensors, provenance)


def init_for_task(mechanism, source, task, seed):
    """Initial parameters of a next-phase expert under a transfer mechanism"""
    mechanism = parse_mechanism(mechanism)
    task = get_task(task)
    if mechanism.kind == "none" or source is None:
        return init_params(_default_spec(source, task), seed)
    if mechanism.kind == "transplant":
        return transplant(source, task, seed)
    if mechanism.kind == "lateral":
        return make_lateral(source, task, seed)
    return layer_subset_init(source, mechanism.layers, task, seed)


def _default_spec(source, task):
    if source is None:
        return NetworkSpec().with_head(task.action_count)
    params, _, _ = _resolve_source(source)
    return params.spec.with_head(task.action_count)


@dataclass
class WeightHistogram:
    edges: np.ndarray
    count_amn: np.ndarray
    count_expert: np.ndarray
    median_amn: float
    median_expert: float

    @property
    def median_ratio(self):
        if self.median_expert == 0:
            return float("nan")
        return self.median_amn / self.median_expert

    def to_frame(self):
        return pd.DataFrame(
            {
                "bin_left": self.edges[:-1],
                "bin_right": self.edges[1:],
                "count_amn": self.count_amn,
                "count_expert": self.count_expert,
            },
            columns=HISTOGRAM_COLUMNS,
        )


def last_layer_weight_histogram(params, bins=20):
    """Histogram of |w| in the output layer, split by where each input column comes from"""
    provenance = getattr(params, "column_provenance", None)
    if not isinstance(params, LateralExpertParams) or provenance is None:
        raise SurgeryError("Output-layer provenance labels are required for the weight histogram")
    weight = np.abs(params.output_weight().astype(np.float64))
    if len(provenance) != weight.shape[0]:
        raise SurgeryError(
            f"{len(provenance)} provenance labels for an output layer with {weight.shape[0]} inputs"
        )
    labels = np.asarray(provenance)
    amn = weight[labels == AMN_SOURCED].ravel()
    expert = weight[labels == EXPERT_SOURCED].ravel()
    if amn.size == 0 or expert.size == 0:
        raise SurgeryError("Both amn-sourced and expert-sourced columns are needed")

    top = float(max(amn.max(), expert.max()))
    if top == 0.0:
        edges = np.array([0.0, 0.0])
        count_amn, count_expert = np.array([amn.size]), np.array([expert.size])
    else:
        edges = np.linspace(0.0, top, bins + 1)
        count_amn, _ = np.histogram(amn, bins=edges)
        count_expert, _ = np.histogram(expert, bins=edges)
    return WeightHistogram(
        edges, count_amn, count_expert, float(np.median(amn)), float(np.median(expert))
    )


def write_histogram_csv(histogram, path):
    histogram.to_frame().to_csv(path, index=False, lineterminator="\n")
    logger.info(f"Weight histogram written to {path}")
