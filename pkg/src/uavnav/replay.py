"""Fixed-capacity experience buffer shared by all vehicles."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from uavnav.observation import Observation
from uavnav.world import ContractViolation

DEFAULT_CAPACITY = 20_000


@dataclass
class Transition:
    obs: Observation
    action: np.ndarray  # (3,) command actually executed, command units
    reward: float
    next_obs: Observation
    done: bool


class ReplayBuffer:
    """Ring buffer: oldest transition evicted first once full. Batches are
    drawn uniformly without replacement."""

    def __init__(self, capacity=DEFAULT_CAPACITY):
        if capacity < 1:
            raise ContractViolation(f"capacity must be >= 1, got {capacity}")
        self.capacity = int(capacity)
        self._slots = [None] * self.capacity
        self._next = 0
        self.insert_count = 0

    def __len__(self):
        return min(self.insert_count, self.capacity)

    def add(self, transition):
        if not np.isfinite(transition.reward):
            raise ContractViolation(f"non-finite reward {transition.reward}")
        self._slots[self._next] = transition
        self._next = (self._next + 1) % self.capacity
        self.insert_count += 1

    def sample(self, batch_size, rng):
        n = len(self)
        if batch_size > n:
            raise ContractViolation(f"batch {batch_size} larger than buffer size {n}")
        indices = rng.choice(n, size=batch_size, replace=False)
        return [self._slots[i] for i in indices]
