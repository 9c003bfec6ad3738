"""Adam with bias correction, as a pure function over named tensors."""

from dataclasses import dataclass, field

import numpy as np

from ..config import ADAM_BETA1, ADAM_BETA2
from ..errors import NonFiniteGradientError, ShapeError


@dataclass(eq=False)
class AdamState:
    lr: float
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    eps: float = 1e-8
    t: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)

    @classmethod
    def fresh(cls, tensors, lr, beta1=ADAM_BETA1, beta2=ADAM_BETA2, eps=1e-8):
        """Zero moments mirroring the given tensors"""
        return cls(
            lr=lr,
            beta1=beta1,
            beta2=beta2,
            eps=eps,
            m={k: np.zeros_like(v) for k, v in tensors.items()},
            v={k: np.zeros_like(v) for k, v in tensors.items()},
        )

    def hyperparameters(self):
        return {"lr": self.lr, "beta1": self.beta1, "beta2": self.beta2, "eps": self.eps, "t": self.t}


def adam_step(params, grads, state):
    """
    One bias-corrected Adam update.

    ``params`` is any object exposing ``trainable_tensors()`` and ``with_tensors()``
    (NetworkParams, LateralExpertParams, the AMN training state). Tensors without an entry in
    ``grads`` keep their values and moments; the step counter advances once per call.
    @return (updated params, updated state)
    """
    if hasattr(grads, "tensors"):
        grads = grads.tensors
    tensors = params.trainable_tensors()

    for name, g in grads.items():
        if name not in tensors:
            raise ShapeError(f"Gradient for unknown tensor '{name}'")
        if g.shape != tensors[name].shape:
            raise ShapeError(f"Gradient '{name}' has shape {g.shape}, expected {tensors[name].shape}")
        if not np.all(np.isfinite(g)):
            raise NonFiniteGradientError(name)

    t = state.t + 1
    bc1 = 1.0 - state.beta1**t
    bc2 = 1.0 - state.beta2**t

    m, v, updated = dict(state.m), dict(state.v), {}
    for name, g in grads.items():
        p = tensors[name]
        m_prev = m.get(name)
        if m_prev is None:
            m_prev = np.zeros_like(p)
            v_prev = np.zeros_like(p)
        else:
            v_prev = v[name]
        m[name] = state.beta1 * m_prev + (1.0 - state.beta1) * g
        v[name] = state.beta2 * v_prev + (1.0 - state.beta2) * (g * g)
        m_hat = m[name] / bc1
        v_hat = v[name] / bc2
        updated[name] = (p - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)).astype(p.dtype)

    new_state = AdamState(state.lr, state.beta1, state.beta2, state.eps, t, m, v)
    return params.with_tensors(updated), new_state


@dataclass(eq=False)
class TensorBundle:
    """Plain name -> tensor mapping usable with adam_step"""

    tensors: dict

    def trainable_tensors(self):
        return self.tensors

    def with_tensors(self, updated):
        return TensorBundle({**self.tensors, **updated})
