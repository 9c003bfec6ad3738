"""
The 3-conv + 2-dense value network: parameter initialization, forward pass and manual backward pass.

The second-to-last layer (``dense1``) is the feature layer consumed by the feature-regression
objective and by lateral connections.
"""

import itertools
from dataclasses import dataclass, field

import numpy as np

from ..config import (
    CONV_FILTERS,
    CONV_KERNEL,
    CONV_STRIDES,
    FEATURE_WIDTH,
    NUM_ACTIONS,
    OBSERVATION_SHAPE,
)
from ..errors import ShapeError, StaleCacheError
from . import layers

LAYER_NAMES = ("conv1", "conv2", "conv3", "dense1", "head")
CONV_LAYERS = LAYER_NAMES[:3]

PROVENANCE_RANDOM = "random"
PROVENANCE_TRANSPLANTED = "transplanted"
PROVENANCE_AMN = "amn-sourced"
PROVENANCE_LABELS = (PROVENANCE_RANDOM, PROVENANCE_TRANSPLANTED, PROVENANCE_AMN)

_serials = itertools.count(1)


def tensor_names(layer):
    return f"{layer}.weight", f"{layer}.bias"


@dataclass(frozen=True)
class ConvSpec:
    filters: int
    kernel: int
    stride: int


@dataclass(frozen=True)
class NetworkSpec:
    """Shape of the network. Exactly three conv layers followed by dense1 (features) and the head."""

    input_shape: tuple = OBSERVATION_SHAPE
    convs: tuple = tuple(ConvSpec(CONV_FILTERS, CONV_KERNEL, s) for s in CONV_STRIDES)
    feature_width: int = FEATURE_WIDTH
    head_width: int = NUM_ACTIONS

    def __post_init__(self):
        if len(self.convs) != 3:
            raise ShapeError(f"Expected 3 conv layers, got {len(self.convs)}")
        if self.feature_width <= 0 or self.head_width <= 0:
            raise ShapeError("Feature and head widths must be positive")
        h, w, _ = self.input_shape
        for conv in self.convs:
            h = layers.conv_output_size(h, conv.kernel, conv.stride)
            w = layers.conv_output_size(w, conv.kernel, conv.stride)
            if h < 1 or w < 1:
                raise ShapeError(f"Input {self.input_shape} too small for conv stack {self.convs}")

    @property
    def conv_output_shape(self):
        h, w, c = self.input_shape
        for conv in self.convs:
            h = layers.conv_output_size(h, conv.kernel, conv.stride)
            w = layers.conv_output_size(w, conv.kernel, conv.stride)
            c = conv.filters
        return h, w, c

    def layer_shapes(self):
        """Map layer name -> (weight shape, bias shape)"""
        shapes = {}
        channels = self.input_shape[2]
        for name, conv in zip(CONV_LAYERS, self.convs):
            shapes[name] = ((conv.kernel, conv.kernel, channels, conv.filters), (conv.filters,))
            channels = conv.filters
        flat = int(np.prod(self.conv_output_shape))
        shapes["dense1"] = ((flat, self.feature_width), (self.feature_width,))
        shapes["head"] = ((self.feature_width, self.head_width), (self.head_width,))
        return shapes

    def tensor_shapes(self):
        shapes = {}
        for layer, (w_shape, b_shape) in self.layer_shapes().items():
            w_name, b_name = tensor_names(layer)
            shapes[w_name] = w_shape
            shapes[b_name] = b_shape
        return shapes

    def with_head(self, width):
        return NetworkSpec(self.input_shape, self.convs, self.feature_width, width)

    def to_dict(self):
        return {
            "input_shape": list(self.input_shape),
            "convs": [[c.filters, c.kernel, c.stride] for c in self.convs],
            "feature_width": self.feature_width,
            "head_width": self.head_width,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            input_shape=tuple(data["input_shape"]),
            convs=tuple(ConvSpec(*c) for c in data["convs"]),
            feature_width=data["feature_width"],
            head_width=data["head_width"],
        )

    @classmethod
    def reduced(cls, head_width=3):
        """4x4 input variant used by gradient checks"""
        return cls(
            input_shape=(4, 4, 2),
            convs=(ConvSpec(3, 2, 1), ConvSpec(3, 2, 1), ConvSpec(3, 2, 1)),
            feature_width=5,
            head_width=head_width,
        )


@dataclass(eq=False)
class NetworkParams:
    """Named parameter tensors plus a provenance label per tensor"""

    spec: NetworkSpec
    tensors: dict
    provenance: dict
    serial: int = field(default_factory=lambda: next(_serials), compare=False)

    def __post_init__(self):
        expected = self.spec.tensor_shapes()
        if set(expected) != set(self.tensors):
            raise ShapeError(f"Tensor names {sorted(self.tensors)} do not match {sorted(expected)}")
        for name, shape in expected.items():
            if tuple(self.tensors[name].shape) != tuple(shape):
                raise ShapeError(
                    f"Tensor '{name}' has shape {self.tensors[name].shape}, expected {shape}"
                )
        for name in expected:
            self.provenance.setdefault(name, PROVENANCE_RANDOM)

    def __setstate__(self, state):
        # unpickled copies (e.g. from worker processes) get a serial of this process
        self.__dict__.update(state)
        self.serial = next(_serials)

    @property
    def dtype(self):
        return self.tensors["head.weight"].dtype

    def layer(self, name):
        w_name, b_name = tensor_names(name)
        return self.tensors[w_name], self.tensors[b_name]

    def copy(self):
        return NetworkParams(
            self.spec,
            {k: v.copy() for k, v in self.tensors.items()},
            dict(self.provenance),
        )

    def trainable_tensors(self):
        return self.tensors

    def with_tensors(self, updated):
        tensors = dict(self.tensors)
        tensors.update(updated)
        return NetworkParams(self.spec, tensors, dict(self.provenance))

    def astype(self, dtype):
        return NetworkParams(
            self.spec, {k: v.astype(dtype) for k, v in self.tensors.items()}, dict(self.provenance)
        )

    @classmethod
    def zeros(cls, spec, dtype=np.float32):
        tensors = {k: np.zeros(s, dtype=dtype) for k, s in spec.tensor_shapes().items()}
        return cls(spec, tensors, {})


@dataclass
class ForwardCache:
    serial: int
    batched: bool
    conv_inputs: list
    conv_preacts: list
    flat: np.ndarray
    dense_preact: np.ndarray
    features: np.ndarray


@dataclass
class ForwardResult:
    q: np.ndarray
    features: np.ndarray
    cache: ForwardCache


@dataclass
class Grads:
    tensors: dict
    input: np.ndarray


def init_params(spec, seed, dtype=np.float32):
    """He-scaled normal weights, zero biases. Deterministic in (spec, seed)."""
    rng = np.random.default_rng(int(seed) & 0xFFFFFFFFFFFFFFFF)
    tensors = {}
    for layer, (w_shape, b_shape) in spec.layer_shapes().items():
        fan_in = int(np.prod(w_shape[:-1]))
        w_name, b_name = tensor_names(layer)
        tensors[w_name] = (rng.standard_normal(w_shape) * np.sqrt(2.0 / fan_in)).astype(dtype)
        tensors[b_name] = np.zeros(b_shape, dtype=dtype)
    return NetworkParams(spec, tensors, {name: PROVENANCE_RANDOM for name in tensors})


def _as_batch(params, obs):
    x = np.asarray(obs)
    batched = x.ndim == len(params.spec.input_shape) + 1
    if not batched:
        x = x[None]
    if x.ndim != 4 or tuple(x.shape[1:]) != tuple(params.spec.input_shape):
        raise ShapeError(
            f"Observation shape {np.shape(obs)} does not match network input {params.spec.input_shape}"
        )
    return x.astype(params.dtype, copy=False), batched


def forward(params, obs):
    """
    @param obs One observation (H, W, C) or a batch (B, H, W, C).
    @return ForwardResult with Q-values, features (post-ReLU dense1) and the cache for backward().
    """
    x, batched = _as_batch(params, obs)
    conv_inputs, conv_preacts = [], []
    h = x
    for name, conv in zip(CONV_LAYERS, params.spec.convs):
        weight, bias = params.layer(name)
        conv_inputs.append(h)
        z = layers.conv2d_forward(h, weight, bias, conv.stride)
        conv_preacts.append(z)
        h = layers.relu(z)

    flat = h.reshape(h.shape[0], -1)
    weight, bias = params.layer("dense1")
    dense_preact = layers.dense_forward(flat, weight, bias)
    features = layers.relu(dense_preact)
    weight, bias = params.layer("head")
    q = layers.dense_forward(features, weight, bias)

    cache = ForwardCache(params.serial, batched, conv_inputs, conv_preacts, flat, dense_preact, features)
    if not batched:
        return ForwardResult(q[0], features[0], cache)
    return ForwardResult(q, features, cache)


def q_values(params, obs):
    return forward(params, obs).q


def backward(params, cache, dL_dq, dL_dfeatures=None):
    """
    Backpropagate gradients arriving at the head output and, optionally, at the feature layer.

    @return Grads with one gradient per parameter tensor and the gradient w.r.t. the input.
    """
    if cache.serial != params.serial:
        raise StaleCacheError("Forward cache was computed with different parameters")

    dtype = params.dtype
    d_q = np.asarray(dL_dq, dtype=dtype)
    if not cache.batched:
        d_q = d_q[None]
    if d_q.shape != (cache.features.shape[0], params.spec.head_width):
        raise ShapeError(f"dL_dq shape {np.shape(dL_dq)} does not match head output")

    grads = {}
    weight, _ = params.layer("head")
    d_features, grads["head.weight"], grads["head.bias"] = layers.dense_backward(
        cache.features, weight, d_q
    )
    if dL_dfeatures is not None:
        d_feat_extra = np.asarray(dL_dfeatures, dtype=dtype)
        if not cache.batched:
            d_feat_extra = d_feat_extra[None]
        if d_feat_extra.shape != cache.features.shape:
            raise ShapeError(f"dL_dfeatures shape {np.shape(dL_dfeatures)} does not match features")
        d_features = d_features + d_feat_extra

    d_dense = layers.relu_backward(cache.dense_preact, d_features)
    weight, _ = params.layer("dense1")
    d_flat, grads["dense1.weight"], grads["dense1.bias"] = layers.dense_backward(
        cache.flat, weight, d_dense
    )

    d_h = d_flat.reshape(cache.conv_preacts[-1].shape)
    for index in reversed(range(len(CONV_LAYERS))):
        name = CONV_LAYERS[index]
        d_z = layers.relu_backward(cache.conv_preacts[index], d_h)
        weight, _ = params.layer(name)
        d_h, grads[f"{name}.weight"], grads[f"{name}.bias"] = layers.conv2d_backward(
            cache.conv_inputs[index], weight, params.spec.convs[index].stride, d_z
        )

    d_input = d_h if cache.batched else d_h[0]
    return Grads(grads, d_input)
