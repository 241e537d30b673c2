"""Clipped-surrogate policy optimization over a rollout buffer.

The update recomputes log-probs for stored (state, action) pairs, forms the
probability ratio against the collection-time log-probs, and minimizes

    -min(ratio * A, clip(ratio, 1-eps, 1+eps) * A)
    + value_coef * (v - return)^2 - entropy_coef * H

with GAE advantages normalized over the whole buffer. After a successful
update the reference ("old") parameters are re-synced to the live ones and
the buffer is cleared.
"""

import math
from dataclasses import dataclass

import numpy as np

from prefnet.neural.optim import clip_grad_norm, zero_grad
from prefnet.neural.tensor import Tensor, minimum


class TrainingDiverged(RuntimeError):
    """A loss or gradient went non-finite; training cannot continue."""


@dataclass
class PpoConfig:
    lr: float = 3e-4
    i_update: int = 128        # environment steps between updates
    i_end: int = 50_000        # total environment steps
    clip_eps: float = 0.2
    gamma: float = 0.99
    gae_lambda: float = 0.95
    epochs: int = 4
    minibatch_size: int = 32
    entropy_coef: float = 0.01
    seed: int = 0
    episode_len: int = 32      # steps per episode (preference held constant)
    value_coef: float = 0.5
    max_grad_norm: float | None = 0.5
    normalize_adv: bool = True

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError("lr must be positive")
        if not (0.0 <= self.gamma < 1.0):
            raise ValueError("gamma must be in [0, 1)")
        if not (0.0 <= self.gae_lambda <= 1.0):
            raise ValueError("gae_lambda must be in [0, 1]")
        if not (0.0 < self.clip_eps < 1.0):
            raise ValueError("clip_eps must be in (0, 1)")
        for field in ("i_update", "i_end", "epochs", "minibatch_size", "episode_len"):
            if getattr(self, field) < 1:
                raise ValueError(f"{field} must be >= 1")
        if self.entropy_coef < 0 or self.value_coef < 0:
            raise ValueError("loss coefficients must be non-negative")


def compute_gae(rewards, values, dones, last_value, gamma, lam):
    """Generalized advantage estimates and value targets.

    `dones` truncates the recursion at episode boundaries; `last_value`
    bootstraps the tail when the buffer ends mid-episode.
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    dones = np.asarray(dones, dtype=bool)
    n = len(rewards)
    if not (len(values) == len(dones) == n):
        raise ValueError("rewards, values and dones must have equal length")
    adv = np.zeros(n)
    running = 0.0
    for t in range(n - 1, -1, -1):
        next_v = last_value if t == n - 1 else values[t + 1]
        cont = 0.0 if dones[t] else 1.0
        delta = rewards[t] + gamma * next_v * cont - values[t]
        running = delta + gamma * lam * cont * running
        adv[t] = running
    return adv, adv + values


def ppo_update(model, optimizer, storage, config, rng, last_value=0.0):
    """Run the configured epochs of minibatch updates over the buffer.

    Returns a report dict with mean losses. Raises TrainingDiverged if any
    loss evaluates non-finite; in that case old params and the buffer are
    left untouched for inspection.
    """
    n = len(storage)
    if n == 0:
        raise ValueError("rollout storage is empty")
    adv, returns = compute_gae(storage.rewards(), storage.values(),
                               storage.dones(), last_value,
                               config.gamma, config.gae_lambda)
    if config.normalize_adv:
        adv = (adv - adv.mean()) / (adv.std() + 1e-8)

    actor_losses, critic_losses, entropies = [], [], []
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        for lo in range(0, n, config.minibatch_size):
            batch = order[lo:lo + config.minibatch_size]
            zero_grad(model.params)
            actor_terms, critic_terms, entropy_terms = [], [], []
            for i in batch:
                tr = storage[i]
                try:
                    logp, entropy, value = model.evaluate_actions(tr.state, tr.action)
                    ratio = (logp - tr.log_prob).exp()
                    a = float(adv[i])
                    surr = minimum(ratio * a, ratio.clip(1.0 - config.clip_eps,
                                                         1.0 + config.clip_eps) * a)
                    actor_terms.append(-surr)
                    critic_terms.append((value - float(returns[i])) ** 2)
                    entropy_terms.append(entropy)
                except ValueError as exc:
                    raise TrainingDiverged(
                        f"non-finite value at epoch {epoch}, transition {i}: {exc}"
                    ) from exc
            scale = 1.0 / len(batch)
            actor = _mean(actor_terms, scale)
            critic = _mean(critic_terms, scale)
            entropy = _mean(entropy_terms, scale)
            loss = actor + config.value_coef * critic - config.entropy_coef * entropy
            if not math.isfinite(float(loss.data)):
                raise TrainingDiverged(f"non-finite loss at epoch {epoch}")
            loss.backward()
            if config.max_grad_norm is not None:
                clip_grad_norm(model.params, config.max_grad_norm)
            optimizer.step()
            actor_losses.append(float(actor.data))
            critic_losses.append(float(critic.data))
            entropies.append(float(entropy.data))

    model.sync_old()
    storage.clear()
    return {
        "actor_loss": float(np.mean(actor_losses)),
        "critic_loss": float(np.mean(critic_losses)),
        "entropy": float(np.mean(entropies)),
        "n_transitions": n,
    }


def _mean(terms, scale):
    total = terms[0]
    for t in terms[1:]:
        total = total + t
    return total * scale
