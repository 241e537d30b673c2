"""Rollout buffer for on-policy updates."""

import math
from dataclasses import dataclass

import numpy as np


@dataclass
class Transition:
    state: object          # SurrogateState as seen by the policy
    action: np.ndarray     # (n_nodes, n_types) in {-1, 0, +1}
    log_prob: float        # joint log-prob under the collecting policy
    reward: float
    value: float           # critic estimate at collection time
    done: bool

    def __post_init__(self):
        if not math.isfinite(self.log_prob):
            raise ValueError("log_prob must be finite")
        if not math.isfinite(self.reward):
            raise ValueError("reward must be finite")
        if not math.isfinite(self.value):
            raise ValueError("value must be finite")


class RolloutStorage:
    def __init__(self):
        self.transitions = []

    def add(self, transition):
        self.transitions.append(transition)

    def __len__(self):
        return len(self.transitions)

    def __iter__(self):
        return iter(self.transitions)

    def __getitem__(self, i):
        return self.transitions[i]

    def clear(self):
        self.transitions = []

    def rewards(self):
        return np.array([t.reward for t in self.transitions])

    def values(self):
        return np.array([t.value for t in self.transitions])

    def dones(self):
        return np.array([t.done for t in self.transitions], dtype=bool)
