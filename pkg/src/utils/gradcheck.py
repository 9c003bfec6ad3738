"""Central finite-difference checks of every analytic gradient, run in float64 on the reduced network."""

from dataclasses import dataclass

import numpy as np

from ..models import lateral, network
from ..models.losses import FeatureAdapter, feature_regression_loss, huber_td_loss, policy_regression_loss
from .seeding import derive_seed

STEP = 1e-5
TOLERANCE = 1e-4


@dataclass
class GradientCheck:
    name: str
    error: float

    @property
    def passed(self):
        return bool(self.error < TOLERANCE)


def relative_error(analytic, numeric):
    """
    |a - n| / (|a| + |n|) over the whole tensor. Per-entry errors blow up on the few entries whose
    perturbation crosses a ReLU kink, so a tensor is judged by its norms instead.
    """
    analytic, numeric = np.asarray(analytic, dtype=np.float64), np.asarray(numeric, dtype=np.float64)
    scale = np.linalg.norm(analytic) + np.linalg.norm(numeric)
    if scale < 1e-12:
        return 0.0
    return float(np.linalg.norm(analytic - numeric) / scale)


def numeric_gradient(f, x, h=STEP):
    """dF/dx by central differences; ``x`` is perturbed in place and restored"""
    grad = np.zeros_like(x, dtype=np.float64)
    flat, out = x.reshape(-1), grad.reshape(-1)
    for i in range(flat.size):
        original = flat[i]
        flat[i] = original + h
        plus = f()
        flat[i] = original - h
        minus = f()
        flat[i] = original
        out[i] = (plus - minus) / (2 * h)
    return grad


def _reduced_setup(seed, head_width=3, batch=3):
    rng = np.random.default_rng(derive_seed(seed, "gradcheck"))
    spec = network.NetworkSpec.reduced(head_width)
    params = network.init_params(spec, derive_seed(seed, "gradcheck-params"), dtype=np.float64)
    # shift biases off zero so few units sit on a ReLU kink
    params = params.with_tensors(
        {name: rng.normal(0.0, 0.1, value.shape) for name, value in params.tensors.items() if name.endswith(".bias")}
    )
    obs = rng.normal(size=(batch, *spec.input_shape))
    return rng, params, obs


def check_network(seed):
    """Every tensor of the network under L = <c, q> + <d, features>"""
    rng, params, obs = _reduced_setup(seed)
    out = network.forward(params, obs)
    c = rng.normal(size=out.q.shape)
    d = rng.normal(size=out.features.shape)
    grads = network.backward(params, out.cache, c, d)

    def loss():
        o = network.forward(params, obs)
        return float(np.sum(c * o.q) + np.sum(d * o.features))

    checks = [
        GradientCheck(f"network/{name}", relative_error(grads.tensors[name], numeric_gradient(loss, tensor)))
        for name, tensor in params.tensors.items()
    ]
    checks.append(GradientCheck("network/input", relative_error(grads.input, numeric_gradient(loss, obs))))
    return checks


def check_lateral(seed):
    rng, expert, obs = _reduced_setup(seed)
    amn = network.init_params(expert.spec.with_head(6), derive_seed(seed, "gradcheck-amn"), dtype=np.float64)
    weight = rng.normal(size=(amn.spec.feature_width, expert.spec.head_width))
    params = lateral.LateralExpertParams(expert, amn, weight)
    out = lateral.forward(params, obs)
    c = rng.normal(size=out.q.shape)
    grads = lateral.backward(params, out.cache, c)

    def loss():
        return float(np.sum(c * lateral.forward(params, obs).q))

    return [
        GradientCheck("lateral/lateral.weight", relative_error(grads.tensors[lateral.LATERAL_WEIGHT], numeric_gradient(loss, weight))),
        GradientCheck("lateral/head.weight", relative_error(grads.tensors["head.weight"], numeric_gradient(loss, expert.tensors["head.weight"]))),
    ]


def check_huber(seed):
    rng = np.random.default_rng(derive_seed(seed, "gradcheck-huber"))
    q = rng.normal(0.0, 2.0, size=(5, 4))
    actions = rng.integers(0, 4, 5)
    targets = rng.normal(0.0, 2.0, 5)
    weights = rng.uniform(0.1, 1.0, 5)
    _, d_q, _ = huber_td_loss(q, actions, targets, weights)
    numeric = numeric_gradient(lambda: huber_td_loss(q, actions, targets, weights)[0], q)
    return [GradientCheck("loss/huber-td", relative_error(d_q, numeric))]


def check_policy_regression(seed):
    rng = np.random.default_rng(derive_seed(seed, "gradcheck-policy"))
    teacher = rng.normal(size=(4, 3))
    logits = rng.normal(size=(4, 3))
    weights = rng.uniform(0.1, 1.0, 4)
    temperature = float(rng.uniform(0.5, 2.0))
    _, d_logits = policy_regression_loss(teacher, logits, temperature, weights)
    numeric = numeric_gradient(lambda: policy_regression_loss(teacher, logits, temperature, weights)[0], logits)
    return [GradientCheck("loss/policy-regression", relative_error(d_logits, numeric))]


def check_feature_regression(seed):
    rng = np.random.default_rng(derive_seed(seed, "gradcheck-feature"))
    student = rng.normal(size=(4, 5))
    teacher = rng.normal(size=(4, 5))
    weights = rng.uniform(0.1, 1.0, 4)
    adapter = FeatureAdapter("check", rng.normal(size=(5, 5)), rng.normal(size=5))
    _, d_student, adapter_grads = feature_regression_loss(student, teacher, adapter, weights)

    def loss():
        return feature_regression_loss(student, teacher, adapter, weights)[0]

    return [
        GradientCheck("loss/feature-regression", relative_error(d_student, numeric_gradient(loss, student))),
        GradientCheck("loss/feature-adapter.weight", relative_error(adapter_grads["weight"], numeric_gradient(loss, adapter.weight))),
        GradientCheck("loss/feature-adapter.bias", relative_error(adapter_grads["bias"], numeric_gradient(loss, adapter.bias))),
    ]


CHECKS = (check_network, check_lateral, check_huber, check_policy_regression, check_feature_regression)


def run_gradient_checks(instances=20, seed=0):
    """All gradient checks over ``instances`` randomized instances"""
    results = []
    for instance in range(instances):
        instance_seed = derive_seed(seed, "instance", instance)
        for check in CHECKS:
            results.extend(check(instance_seed))
    return results
