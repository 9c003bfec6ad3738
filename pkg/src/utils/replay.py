"""
Proportional prioritized replay.

Priorities live in two array-backed binary trees over the slots: a sum tree of p_i^alpha used for
sampling and a max tree of raw p_i used for the default priority of new transitions.
"""

from dataclasses import dataclass

import numpy as np

from ..config import OBSERVATION_SHAPE, PRIORITY_ALPHA, PRIORITY_BETA_START, PRIORITY_FLOOR, REPLAY_CAPACITY
from ..errors import ReplayError


@dataclass
class Transition:
    obs: np.ndarray
    action: int  # global action id
    reward: float
    next_obs: np.ndarray
    done: bool


@dataclass
class SampledBatch:
    obs: np.ndarray
    actions: np.ndarray
    rewards: np.ndarray
    next_obs: np.ndarray
    dones: np.ndarray
    weights: np.ndarray
    indices: np.ndarray

    def __len__(self):
        return len(self.indices)


class SegmentTree:
    """
    Complete binary tree stored in one array, leaves padded to a power of two.
    Every parent is recomputed from its two children, never patched incrementally.
    """

    def __init__(self, capacity, operation):
        self.capacity = capacity
        self.leaves = 1 << max(0, (capacity - 1).bit_length())
        self.depth = self.leaves.bit_length() - 1
        self.operation = operation
        self.tree = np.zeros(2 * self.leaves - 1, dtype=np.float64)

    @property
    def root(self):
        return self.tree[0]

    def update(self, slots, values):
        nodes = np.asarray(slots, dtype=np.int64) + self.leaves - 1
        self.tree[nodes] = values
        nodes = np.unique(nodes)
        for _ in range(self.depth):
            nodes = np.unique((nodes - 1) // 2)
            self.tree[nodes] = self.operation(self.tree[2 * nodes + 1], self.tree[2 * nodes + 2])

    def rebuild(self, values):
        """Reset every leaf from ``values`` (length <= capacity) and recompute all parents"""
        start = self.leaves - 1
        self.tree[:] = 0.0
        self.tree[start : start + len(values)] = values
        for level in range(self.depth, 0, -1):
            first = (1 << level) - 1
            parents = np.arange((first - 1) // 2, first)
            self.tree[parents] = self.operation(self.tree[2 * parents + 1], self.tree[2 * parents + 2])

    def leaf_values(self, count):
        start = self.leaves - 1
        return self.tree[start : start + count]


class SumTree(SegmentTree):
    def __init__(self, capacity):
        super().__init__(capacity, np.add)

    @property
    def total(self):
        return self.root

    def find(self, values):
        """Slot whose cumulative-sum interval contains each value, for all values at once"""
        nodes = np.zeros(len(values), dtype=np.int64)
        remaining = np.asarray(values, dtype=np.float64).copy()
        for _ in range(self.depth):
            left = 2 * nodes + 1
            go_right = remaining > self.tree[left]
            remaining = np.where(go_right, remaining - self.tree[left], remaining)
            nodes = np.where(go_right, left + 1, left)
        return nodes - (self.leaves - 1)


class PrioritizedReplayBuffer:
    """
    Fixed-capacity ring of transitions with one priority per slot.

    Sampling follows P(i) = p_i^alpha / sum_j p_j^alpha. Observations are stored as uint8 since the
    game frames are binary; actions are stored as global action ids.
    """

    def __init__(
        self,
        capacity=REPLAY_CAPACITY,
        obs_shape=OBSERVATION_SHAPE,
        alpha=PRIORITY_ALPHA,
        floor=PRIORITY_FLOOR,
        seed=None,
    ):
        if capacity < 1:
            raise ReplayError(f"Replay capacity must be positive, got {capacity}")
        if alpha < 0:
            raise ReplayError(f"Priority exponent must be non-negative, got {alpha}")
        self.capacity = int(capacity)
        self.alpha = float(alpha)
        self.floor = float(floor)
        self.rng = np.random.default_rng(seed)

        self.obs = np.zeros((self.capacity, *obs_shape), dtype=np.uint8)
        self.next_obs = np.zeros((self.capacity, *obs_shape), dtype=np.uint8)
        self.actions = np.zeros(self.capacity, dtype=np.int64)
        self.rewards = np.zeros(self.capacity, dtype=np.float32)
        self.dones = np.zeros(self.capacity, dtype=bool)
        self.priorities = np.zeros(self.capacity, dtype=np.float64)

        self._sum_tree = SumTree(self.capacity)
        self._max_tree = SegmentTree(self.capacity, np.maximum)
        self.size = 0
        self.cursor = 0

    def __len__(self):
        return self.size

    @property
    def max_priority(self):
        """Largest stored priority, 1.0 for an empty buffer"""
        return float(self._max_tree.root) if self.size else 1.0

    def _set_priorities(self, slots, priorities):
        self.priorities[slots] = priorities
        self._sum_tree.update(slots, np.power(priorities, self.alpha))
        self._max_tree.update(slots, priorities)

    def push(self, transition, priority=None):
        """
        Store a transition, overwriting the oldest slot once full.
        @return The slot index written.
        """
        if priority is None:
            priority = self.max_priority
        priority = float(priority)
        if not np.isfinite(priority) or priority <= 0:
            raise ReplayError(f"Priority must be positive, got {priority}")

        slot = self.cursor
        self.obs[slot] = transition.obs
        self.next_obs[slot] = transition.next_obs
        self.actions[slot] = transition.action
        self.rewards[slot] = transition.reward
        self.dones[slot] = transition.done
        self._set_priorities(np.array([slot]), np.array([priority]))

        self.cursor = (self.cursor + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)
        return slot

    def get(self, index):
        self._check_indices([index])
        return Transition(
            self.obs[index].astype(np.float32),
            int(self.actions[index]),
            float(self.rewards[index]),
            self.next_obs[index].astype(np.float32),
            bool(self.dones[index]),
        )

    def set_alpha(self, alpha):
        if alpha < 0:
            raise ReplayError(f"Priority exponent must be non-negative, got {alpha}")
        if alpha != self.alpha:
            self.alpha = float(alpha)
            self._sum_tree.rebuild(np.power(self.priorities[: self.size], self.alpha))

    def probabilities(self, alpha=None):
        """Exact sampling distribution over the occupied slots"""
        if alpha is not None:
            self.set_alpha(alpha)
        scaled = self._sum_tree.leaf_values(self.size)
        return scaled / scaled.sum()

    def sample(self, batch_size, alpha=None, beta=PRIORITY_BETA_START, rng=None):
        """
        Stratified proportional sampling: the total priority mass is split into ``batch_size`` equal
        segments and one value is drawn uniformly inside each.

        @return SampledBatch with importance weights (N * P(i))^-beta divided by the batch maximum.
        """
        if batch_size < 1:
            raise ReplayError(f"Batch size must be positive, got {batch_size}")
        if self.size < batch_size:
            raise ReplayError(f"Buffer holds {self.size} transitions, cannot sample {batch_size}")
        if alpha is not None:
            self.set_alpha(alpha)
        rng = self.rng if rng is None else rng

        total = self._sum_tree.total
        segment = total / batch_size
        values = (np.arange(batch_size) + rng.random(batch_size)) * segment
        indices = np.minimum(self._sum_tree.find(values), self.size - 1)

        probs = self._sum_tree.tree[indices + self._sum_tree.leaves - 1] / total
        weights = np.power(self.size * probs, -beta)
        weights = (weights / weights.max()).astype(np.float32)

        return SampledBatch(
            obs=self.obs[indices].astype(np.float32),
            actions=self.actions[indices].copy(),
            rewards=self.rewards[indices].copy(),
            next_obs=self.next_obs[indices].astype(np.float32),
            dones=self.dones[indices].copy(),
            weights=weights,
            indices=indices,
        )

    def _check_indices(self, indices):
        indices = np.asarray(indices, dtype=np.int64)
        if indices.size and (indices.min() < 0 or indices.max() >= self.size):
            raise ReplayError(f"Replay index out of range [0, {self.size}): {indices.tolist()}")
        return indices

    def update_priorities(self, indices, priorities):
        """Store |priority| + floor for each index"""
        indices = self._check_indices(indices)
        priorities = np.asarray(priorities, dtype=np.float64)
        if priorities.shape != indices.shape:
            raise ReplayError(f"Got {priorities.size} priorities for {indices.size} indices")
        if not np.all(np.isfinite(priorities)) or np.any(priorities < 0):
            raise ReplayError("Priorities must be finite and non-negative")
        self._set_priorities(indices, priorities + self.floor)
