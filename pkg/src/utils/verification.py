"""
Self-contained verification suites behind ``main.py verify``. None of them trains a network or
runs a game, so each finishes in well under a minute.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from ..errors import ConfigError
from ..models import lateral, network
from ..models.artifacts import AMNCheckpoint
from ..models.games import TASK_IDS, get_task
from ..models.losses import FeatureAdapter
from ..models.optim import AdamState, adam_step
from ..models.qfunction import q_values
from ..models.surgery import layer_subset_init, make_lateral, transplant
from .gradcheck import TOLERANCE, run_gradient_checks
from .logger import get_logger
from .replay import PrioritizedReplayBuffer, Transition
from .seeding import derive_seed

logger = get_logger(__name__)

SUITES = ("gradients", "replay", "surgery")
CHI_SQUARE_P = 0.01
EXACT_TOLERANCE = 1e-7


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class VerificationReport:
    suite: str
    checks: list = field(default_factory=list)

    @property
    def passed(self):
        return bool(self.checks) and all(c.passed for c in self.checks)

    def add(self, name, passed, detail=""):
        self.checks.append(CheckResult(name, bool(passed), detail))

    def failures(self):
        return [c for c in self.checks if not c.passed]


def verify_gradients(seed=0, instances=20):
    report = VerificationReport("gradients")
    worst = {}
    for check in run_gradient_checks(instances, seed):
        worst[check.name] = max(worst.get(check.name, 0.0), check.error)
    for name, error in worst.items():
        report.add(name, error < TOLERANCE, f"max relative error {error:.2e} over {instances} instances")
    return report


def verify_replay(seed=0, vectors=10, draws=100_000, size=50, batch=1_000):
    """Empirical sampling frequencies against p^alpha / sum p^alpha, by chi-square"""
    report = VerificationReport("replay")
    rng = np.random.default_rng(derive_seed(seed, "verify-replay"))
    blank = np.zeros((1,), dtype=np.uint8)
    for vector in range(vectors):
        priorities = rng.uniform(0.05, 5.0, size)
        alpha = float(rng.choice([0.0, 0.5, 0.6, 1.0]))
        buffer = PrioritizedReplayBuffer(size, obs_shape=(1,), alpha=alpha, seed=derive_seed(seed, "buffer", vector))
        for p in priorities:
            buffer.push(Transition(blank, 0, 0.0, blank, False), priority=p)

        counts = np.zeros(size, dtype=np.int64)
        for _ in range(draws // batch):
            np.add.at(counts, buffer.sample(batch).indices, 1)
        expected_probs = priorities**alpha / np.sum(priorities**alpha)
        expected = expected_probs * counts.sum()
        _, p_value = stats.chisquare(counts, expected)
        exact = np.allclose(buffer.probabilities(), expected_probs, rtol=1e-9, atol=0)
        report.add(
            f"replay/vector-{vector}",
            p_value > CHI_SQUARE_P and exact,
            f"alpha {alpha}, chi-square p = {p_value:.3f}, exact distribution {'ok' if exact else 'differs'}",
        )
    return report


def _random_amn(seed):
    rng = np.random.default_rng(derive_seed(seed, "verify-amn-biases"))
    params = network.init_params(network.NetworkSpec(), derive_seed(seed, "verify-amn"), dtype=np.float64)
    params = params.with_tensors(
        {
            name: rng.normal(0.0, 0.1, value.shape).astype(value.dtype)
            for name, value in params.tensors.items()
            if name.endswith(".bias")
        }
    )
    width = params.spec.feature_width
    adapters = {task: FeatureAdapter.identity(task, width) for task in TASK_IDS}
    return AMNCheckpoint(params, adapters, None)


def verify_surgery(seed=0, batch=8):
    report = VerificationReport("surgery")
    rng = np.random.default_rng(derive_seed(seed, "verify-surgery"))
    amn = _random_amn(seed)
    obs = (rng.random((batch, *amn.params.spec.input_shape)) < 0.3).astype(np.float32)
    amn_q = q_values(amn.params, obs)

    for task_id in TASK_IDS:
        task = get_task(task_id)
        expert = transplant(amn, task)
        diff = float(np.max(np.abs(q_values(expert, obs) - amn_q[:, list(task.action_subset)])))
        report.add(f"transplant/{task_id}", diff <= EXACT_TOLERANCE, f"max |dQ| {diff:.2e}")

        lateral_params = make_lateral(amn, task, derive_seed(seed, "lateral", task_id))
        zeroed = lateral_params.with_tensors({lateral.LATERAL_WEIGHT: np.zeros_like(lateral_params.lateral_weight)})
        diff = float(np.max(np.abs(lateral.forward(zeroed, obs).q - q_values(zeroed.expert, obs))))
        report.add(f"lateral-zero/{task_id}", diff <= EXACT_TOLERANCE, f"max |dQ| {diff:.2e}")

        out = lateral.forward(lateral_params, obs)
        grads = lateral.backward(lateral_params, out.cache, rng.normal(size=out.q.shape).astype(np.float32))
        before = {k: v.copy() for k, v in lateral_params.amn.tensors.items()}
        stepped, _ = adam_step(lateral_params, grads, AdamState.fresh(lateral_params.trainable_tensors(), 1e-3))
        frozen = all(np.array_equal(before[k], stepped.amn.tensors[k]) for k in before)
        report.add(f"frozen-trunk/{task_id}", frozen, "AMN tensors unchanged after a lateral update")

    task = get_task(TASK_IDS[0])
    for k in range(len(network.LAYER_NAMES) + 1):
        init_seed = derive_seed(seed, "layers", k)
        params = layer_subset_init(amn, k, task, init_seed)
        fresh = network.init_params(params.spec, init_seed, dtype=params.dtype)
        exact = True
        for index, layer in enumerate(network.LAYER_NAMES):
            for name in network.tensor_names(layer):
                if index < k:
                    source = amn.params.tensors[name]
                    if layer == "head":
                        source = source[..., list(task.action_subset)]
                    exact &= np.array_equal(params.tensors[name], source)
                else:
                    exact &= np.array_equal(params.tensors[name], fresh.tensors[name])
        report.add(f"layer-subset/k={k}", exact, "copied prefix and fresh suffix bit-exact")
    return report


def run_suite(suite, seed=0):
    runners = {"gradients": verify_gradients, "replay": verify_replay, "surgery": verify_surgery}
    if suite not in runners:
        raise ConfigError(f"Unknown verification suite '{suite}', expected one of {list(SUITES)}")
    report = runners[suite](seed)
    level = logger.info if report.passed else logger.error
    level(f"Verification suite '{suite}': {sum(c.passed for c in report.checks)}/{len(report.checks)} checks passed")
    return report
