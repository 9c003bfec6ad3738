"""
Experts with a lateral connection from a frozen AMN.

The output layer sees [expert features ; AMN features]. It is stored as the expert's own head
(rows fed by expert features) plus ``lateral.weight`` (rows fed by AMN features), and the two
contributions are summed, so zeroing the lateral rows reproduces the plain expert exactly.
"""

from dataclasses import dataclass, field

import numpy as np

from ..errors import ShapeError, StaleCacheError
from . import network
from .network import ForwardResult, Grads

LATERAL_WEIGHT = "lateral.weight"
EXPERT_SOURCED = "expert-sourced"
AMN_SOURCED = "amn-sourced"


@dataclass(eq=False)
class LateralExpertParams:
    expert: network.NetworkParams
    amn: network.NetworkParams  # frozen, used up to its feature layer
    lateral_weight: np.ndarray  # (AMN feature width, head width)
    column_provenance: tuple = None  # one label per input of the output layer
    serial: int = field(default_factory=lambda: next(network._serials))

    def __post_init__(self):
        expected = (self.amn.spec.feature_width, self.expert.spec.head_width)
        if self.lateral_weight.shape != expected:
            raise ShapeError(f"Lateral weight has shape {self.lateral_weight.shape}, expected {expected}")
        if self.column_provenance is None:
            self.column_provenance = (EXPERT_SOURCED,) * self.expert.spec.feature_width + (
                AMN_SOURCED,
            ) * self.amn.spec.feature_width

    def __setstate__(self, state):
        self.__dict__.update(state)
        self.serial = next(network._serials)

    @property
    def spec(self):
        return self.expert.spec

    @property
    def dtype(self):
        return self.expert.dtype

    @property
    def provenance(self):
        return self.expert.provenance

    def output_weight(self):
        """The full (expert width + AMN width, head width) output matrix"""
        head_weight, _ = self.expert.layer("head")
        return np.concatenate([head_weight, self.lateral_weight], axis=0)

    def trainable_tensors(self):
        return {**self.expert.tensors, LATERAL_WEIGHT: self.lateral_weight}

    def with_tensors(self, updated):
        updated = dict(updated)
        lateral = updated.pop(LATERAL_WEIGHT, self.lateral_weight)
        return LateralExpertParams(
            self.expert.with_tensors(updated), self.amn, lateral, self.column_provenance
        )

    def copy(self):
        return LateralExpertParams(
            self.expert.copy(), self.amn, self.lateral_weight.copy(), self.column_provenance
        )


@dataclass
class LateralCache:
    serial: int
    expert: network.ForwardCache
    amn_features: np.ndarray  # always batched


def forward(params, obs):
    expert_out = network.forward(params.expert, obs)
    amn_features = network.forward(params.amn, obs).features
    q = expert_out.q + amn_features @ params.lateral_weight
    batched_features = amn_features if expert_out.cache.batched else amn_features[None]
    cache = LateralCache(params.serial, expert_out.cache, batched_features)
    return ForwardResult(q, expert_out.features, cache)


def backward(params, cache, dL_dq, dL_dfeatures=None):
    """
    Gradients for the expert tensors and the lateral rows. The AMN receives none, and the input
    gradient covers the expert path only.
    """
    if cache.serial != params.serial:
        raise StaleCacheError("Forward cache was computed with different parameters")
    grads = network.backward(params.expert, cache.expert, dL_dq, dL_dfeatures)
    d_q = np.asarray(dL_dq, dtype=params.dtype)
    if not cache.expert.batched:
        d_q = d_q[None]
    grads.tensors[LATERAL_WEIGHT] = cache.amn_features.T @ d_q
    return Grads(grads.tensors, grads.input)
