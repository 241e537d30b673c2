"""Training drivers.

`train` is the dynamic-preference loop: a fresh preference is drawn at every
episode start, appended (normalized) to the policy input, and used to shape
that episode's rewards. `train_static` is the fixed-preference pipeline used
for baseline agents and pre-experiment grids; it never touches the preference
RNG stream, so dynamic training with a point-mass distribution reproduces it
bit for bit under the same seed.

Randomness is split into independent streams (preference draws, action
sampling, update shuffling) spawned from the config seed, so changing how one
stream is consumed cannot shift the others.
"""

import json
from dataclasses import dataclass

import numpy as np

from prefnet.encoding import adjacency, assemble_state
from prefnet.neural.checkpoint import Agent, AgentMeta
from prefnet.neural.model import PolicyValueNet
from prefnet.neural.optim import Adam
from prefnet.prefdist import PreferenceDistribution
from prefnet.rl.reward import reward_as, reward_pm
from prefnet.rl.sampling import sample_action
from prefnet.rl.ppo import ppo_update
from prefnet.rl.storage import RolloutStorage, Transition


@dataclass
class TrainResult:
    agent: Agent
    reward_trace: list   # one reward per environment step
    log_rows: list       # one dict per update, mirrors the ndjson log


def _window_starts(n_records, episode_len):
    """Episode start indices: contiguous non-overlapping windows, cycled."""
    if n_records <= episode_len:
        return [0]
    return list(range(0, n_records - episode_len + 1, episode_len))


def _policy_and_value(model, state):
    logp, value = model.forward(state)
    n = state.n_nodes
    probs = np.exp(logp.data).reshape(n, model.n_types, 3)
    return probs, float(value.data)


def _step_reward(task, metrics, alpha, beta):
    pairs = [(r, 1.0) for r in metrics.delay_ratios]
    if task == "pm":
        return reward_pm(pairs, metrics.vnf_total, metrics.power_total, alpha, beta)
    return reward_as(pairs, metrics.vnf_total, alpha)


def _run(env, model, config, task, next_pref, log_path):
    """Common rollout/update loop. `next_pref(rng)` yields
    (alpha, beta, preference_arg, dist_arg) for the coming episode."""
    if task not in ("as", "pm"):
        raise ValueError("task must be 'as' or 'pm'")
    streams = np.random.SeedSequence(config.seed).spawn(3)
    pref_rng = np.random.default_rng(streams[0])
    action_rng = np.random.default_rng(streams[1])
    update_rng = np.random.default_rng(streams[2])

    optimizer = Adam(model.params, lr=config.lr)
    storage = RolloutStorage()
    starts = _window_starts(len(env.records), config.episode_len)
    reward_trace = []
    log_rows = []
    log_fh = open(log_path, "w") if log_path else None

    try:
        episode_over = True
        window = 0
        alpha = beta = None
        pref_arg = dist_arg = None
        adj = None
        episode_step = 0
        for i in range(1, config.i_end + 1):
            if episode_over:
                env.reset(starts[window % len(starts)])
                window += 1
                alpha, beta, pref_arg, dist_arg = next_pref(pref_rng)
                adj = adjacency(env.topology)
                episode_step = 0
                episode_over = False
            state = assemble_state(adj, env.requests(), env.deployment,
                                   pref_arg, dist_arg)
            probs, value = _policy_and_value(model, state)
            action, logp = sample_action(probs, action_rng)
            metrics = env.step(action)
            reward = _step_reward(task, metrics, alpha, beta)
            episode_step += 1
            done = episode_step >= config.episode_len or env.exhausted()
            storage.add(Transition(state=state, action=action, log_prob=logp,
                                   reward=reward, value=value, done=done))
            reward_trace.append(reward)
            episode_over = done

            if i % config.i_update == 0:
                if done:
                    last_value = 0.0
                else:
                    nxt = assemble_state(adj, env.requests(), env.deployment,
                                         pref_arg, dist_arg)
                    last_value = model.value_of(nxt)
                report = ppo_update(model, optimizer, storage, config,
                                    update_rng, last_value)
                row = {
                    "iter": i,
                    "mean_reward": float(np.mean(reward_trace[-config.i_update:])),
                    "actor_loss": report["actor_loss"],
                    "critic_loss": report["critic_loss"],
                    "alpha_sampled": float(alpha),
                }
                if task == "pm":
                    row["beta_sampled"] = float(beta)
                log_rows.append(row)
                if log_fh:
                    log_fh.write(json.dumps(row) + "\n")
                    log_fh.flush()
    finally:
        if log_fh:
            log_fh.close()
    return reward_trace, log_rows


def _check_model(model, task, dynamic):
    expected = (2 if task == "pm" else 1) if dynamic else None
    if dynamic and model.pref_dims != expected:
        raise ValueError(
            f"dynamic {task} training needs pref_dims={expected}, "
            f"model has {model.pref_dims}")


def train(env, dist, config, *, task="as", beta_dist=None, model=None,
          log_path=None, extra_meta=None):
    """Dynamic-preference training: per-episode preference draws from `dist`
    (and `beta_dist` for the power task) condition both policy input and
    reward. Returns a TrainResult whose agent records the distributions."""
    if task == "pm" and beta_dist is None:
        raise ValueError("power-management training requires beta_dist")
    if model is None:
        model = PolicyValueNet(pref_dims=2 if task == "pm" else 1,
                               seed=config.seed)
    _check_model(model, task, dynamic=True)

    if task == "pm":
        def next_pref(rng):
            a = dist.sample(rng)
            b = beta_dist.sample(rng)
            return a, b, (a, b), (dist, beta_dist)
    else:
        def next_pref(rng):
            a = dist.sample(rng)
            return a, None, a, dist

    trace, rows = _run(env, model, config, task, next_pref, log_path)
    meta = AgentMeta(
        task=task, topology=env.topology.name, model=model.config,
        alpha_dist=dist.spec(),
        beta_dist=beta_dist.spec() if beta_dist else None,
        extra={"seed": config.seed, "i_end": config.i_end, **(extra_meta or {})},
    )
    return TrainResult(agent=Agent(model=model, meta=meta),
                       reward_trace=trace, log_rows=rows)


def train_static(env, alpha, config, *, task="as", beta=None, model=None,
                 log_path=None, extra_meta=None):
    """Fixed-preference pipeline. With the default pref_dims=0 model this is
    the baseline-agent trainer; models with a preference input see the
    constant normalized value 1 in every state."""
    if task == "pm" and beta is None:
        raise ValueError("power-management training requires beta")
    if model is None:
        model = PolicyValueNet(pref_dims=0, seed=config.seed)

    if model.pref_dims == 0:
        pref_arg, dist_arg = None, None
    elif model.pref_dims == 1:
        pref_arg, dist_arg = alpha, PreferenceDistribution.point(alpha)
    else:
        pref_arg = (alpha, beta)
        dist_arg = (PreferenceDistribution.point(alpha),
                    PreferenceDistribution.point(beta))

    def next_pref(rng):
        return alpha, beta, pref_arg, dist_arg

    trace, rows = _run(env, model, config, task, next_pref, log_path)
    meta = AgentMeta(
        task=task, topology=env.topology.name, model=model.config,
        alpha_dist=PreferenceDistribution.point(alpha).spec(),
        beta_dist=(PreferenceDistribution.point(beta).spec()
                   if beta is not None else None),
        extra={"seed": config.seed, "i_end": config.i_end, **(extra_meta or {})},
    )
    return TrainResult(agent=Agent(model=model, meta=meta),
                       reward_trace=trace, log_rows=rows)
