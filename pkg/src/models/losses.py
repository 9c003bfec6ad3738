"""
Training objectives with their analytic gradients.

All losses accept a single example (1-D) or a batch (2-D, first axis = batch). Batched losses are
averaged and their gradients scaled accordingly; the policy loss also takes ``reduction="none"``
for per-example values.
"""

from dataclasses import dataclass

import numpy as np

from ..errors import ShapeError
from .functional import huber, huber_grad, log_softmax, softmax


@dataclass(eq=False)
class FeatureAdapter:
    """Linear map from student features into one teacher's feature basis"""

    task_id: str
    weight: np.ndarray  # (student width, teacher width)
    bias: np.ndarray

    def __call__(self, features):
        return features @ self.weight + self.bias

    @classmethod
    def identity(cls, task_id, width, dtype=np.float32):
        return cls(task_id, np.eye(width, dtype=dtype), np.zeros(width, dtype=dtype))


def _reduce(per_example, grad, reduction, batched):
    if reduction == "none" or not batched:
        return (per_example if batched else float(per_example)), grad
    count = per_example.shape[0]
    return float(np.mean(per_example)), grad / count


def td_errors(q, actions, targets):
    """q[i, a_i] - y_i"""
    q = np.asarray(q)
    rows = np.arange(q.shape[0])
    return q[rows, np.asarray(actions)] - np.asarray(targets, dtype=q.dtype)


def huber_td_loss(q, actions, targets, weights=None, delta=1.0):
    """
    Importance-weighted Huber loss on the TD errors of the taken actions.

    @param q Online Q-values, shape (B, A).
    @param actions Head indices of the taken actions, shape (B,).
    @param targets TD targets, shape (B,).
    @param weights Importance weights, shape (B,). Defaults to ones.
    @return (mean loss, dL/dq of shape (B, A), TD errors of shape (B,))
    """
    q = np.asarray(q)
    batch = q.shape[0]
    errors = td_errors(q, actions, targets)
    w = np.ones(batch, dtype=q.dtype) if weights is None else np.asarray(weights, dtype=q.dtype)
    loss = float(np.mean(w * huber(errors, delta)))
    d_q = np.zeros_like(q)
    d_q[np.arange(batch), np.asarray(actions)] = w * huber_grad(errors, delta) / batch
    return loss, d_q, errors


def policy_regression_loss(teacher_q, student_logits, temperature=1.0, weights=None, reduction="mean"):
    """
    Cross-entropy between softmax(teacher_q / temperature) and softmax(student_logits).

    Both inputs must already be restricted to the same task action subset.
    @return (loss, dLoss/dlogits)
    """
    teacher_q = np.asarray(teacher_q)
    student_logits = np.asarray(student_logits)
    if teacher_q.shape != student_logits.shape:
        raise ShapeError(
            f"Teacher Q shape {teacher_q.shape} does not match student logits {student_logits.shape}"
        )
    target = softmax(teacher_q, temperature)
    per_example = -np.sum(target * log_softmax(student_logits), axis=-1)
    grad = softmax(student_logits) - target
    if weights is not None:
        w = np.asarray(weights, dtype=grad.dtype)
        per_example = per_example * w
        grad = grad * w[:, None]
    return _reduce(per_example, grad, reduction, teacher_q.ndim == 2)


def policy_kl(teacher_q, student_logits, temperature=1.0):
    """Per-example KL(teacher || student); the policy loss minus the teacher entropy."""
    target = softmax(teacher_q, temperature)
    log_target = log_softmax(teacher_q, temperature)
    return np.sum(target * (log_target - log_softmax(student_logits)), axis=-1)


def feature_regression_loss(student_features, teacher_features, adapter, weights=None):
    """
    Squared distance between adapter(student features) and teacher features.

    Batched inputs are averaged over the batch, optionally weighted per example.
    @return (loss, dLoss/dstudent_features, {"weight": dLoss/dW, "bias": dLoss/db})
    """
    s = np.asarray(student_features)
    t = np.asarray(teacher_features)
    if s.shape != t.shape:
        raise ShapeError(f"Student features {s.shape} do not match teacher features {t.shape}")
    residual = adapter(s) - t
    per_example = np.sum(residual * residual, axis=-1)
    d_residual = 2.0 * residual

    if s.ndim == 1:
        adapter_grads = {"weight": np.outer(s, d_residual), "bias": d_residual}
        return float(per_example), d_residual @ adapter.weight.T, adapter_grads

    count = s.shape[0]
    if weights is not None:
        w = np.asarray(weights, dtype=s.dtype)
        per_example = per_example * w
        d_residual = d_residual * w[:, None]
    adapter_grads = {
        "weight": s.T @ d_residual / count,
        "bias": d_residual.sum(axis=0) / count,
    }
    return float(np.mean(per_example)), d_residual @ adapter.weight.T / count, adapter_grads
