import math

import numpy as np
import pytest

from src.errors import ShapeError
from src.models.functional import softmax
from src.models.losses import (
    FeatureAdapter,
    feature_regression_loss,
    huber_td_loss,
    policy_kl,
    policy_regression_loss,
)


def test_policy_loss_uniform_teacher_and_student():
    loss, grad = policy_regression_loss(np.zeros(3), np.zeros(3))
    assert loss == pytest.approx(math.log(3), abs=1e-9)
    assert not grad.any()


def test_policy_loss_gradient_zero_when_student_equals_teacher(rng):
    v = rng.normal(size=(4, 3))
    _, grad = policy_regression_loss(v, v)
    np.testing.assert_allclose(grad, 0.0, atol=1e-12)


def test_policy_loss_hand_computed():
    p = softmax(np.array([1.0, 0.0]))
    q = softmax(np.array([0.0, 1.0]))
    loss, grad = policy_regression_loss(np.array([1.0, 0.0]), np.array([0.0, 1.0]))
    assert loss == pytest.approx(-np.sum(p * np.log(q)), abs=1e-9)
    np.testing.assert_allclose(grad, q - p, atol=1e-12)


def test_policy_loss_at_least_teacher_entropy(rng):
    for _ in range(20):
        teacher, student = rng.normal(size=4), rng.normal(size=4)
        p = softmax(teacher)
        entropy = -np.sum(p * np.log(p))
        loss, _ = policy_regression_loss(teacher, student)
        assert loss >= entropy - 1e-12
        assert policy_kl(teacher, student) >= -1e-12


def test_policy_loss_rejects_subset_mismatch():
    with pytest.raises(ShapeError):
        policy_regression_loss(np.zeros(3), np.zeros(4))


def test_feature_loss_identity_adapter():
    adapter = FeatureAdapter.identity("t", 4, np.float64)
    features = np.array([0.5, 1.0, 0.0, 2.0])
    loss, d_student, adapter_grads = feature_regression_loss(features, features, adapter)
    assert loss == 0.0
    assert not d_student.any()
    assert not adapter_grads["weight"].any()

    v = np.array([1.0, -2.0, 0.5, 0.0])
    loss, _, _ = feature_regression_loss(features + v, features, adapter)
    assert loss == pytest.approx(float(v @ v))


def test_feature_loss_batched_weights_scale_examples():
    adapter = FeatureAdapter.identity("t", 2, np.float64)
    student = np.array([[1.0, 0.0], [0.0, 2.0]])
    teacher = np.zeros((2, 2))
    loss, _, _ = feature_regression_loss(student, teacher, adapter, weights=np.array([1.0, 0.5]))
    assert loss == pytest.approx((1.0 + 0.5 * 4.0) / 2)


def test_huber_loss_quadratic_and_linear_regions():
    q = np.array([[0.0, 0.5], [0.0, 3.0]])
    loss, d_q, errors = huber_td_loss(q, np.array([1, 1]), np.array([0.0, 0.0]))
    np.testing.assert_allclose(errors, [0.5, 3.0])
    assert loss == pytest.approx((0.125 + 2.5) / 2)
    np.testing.assert_allclose(d_q, [[0.0, 0.25], [0.0, 0.5]])
