"""Evaluation: fixed- and sampled-preference test runs, cross-agent reward
normalization, and event-driven scenario rollouts.

All evaluation is greedy: argmax per (node, type), ties resolving to the
lowest class index. `GreedyStepper` is the single stepping engine; the
interactive service drives the same code, which is what makes its telemetry
reproducible against `run_scenario` for a fixed control transcript.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from prefnet.encoding import adjacency, assemble_state
from prefnet.prefdist import PreferenceDistribution
from prefnet.rl.reward import reward_as, reward_pm
from prefnet.rl.sampling import greedy_action
from prefnet.sim.env import NetworkEnv


@dataclass
class MetricReport:
    mean_reward: float
    slav: float              # violated paths / total paths, pooled over steps
    mean_vnf: float
    mean_power: float        # normalized units (watts / p_max)
    episodes: list = field(default_factory=list)

    def __post_init__(self):
        for name in ("mean_reward", "slav", "mean_vnf", "mean_power"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if not (0.0 <= self.slav <= 1.0):
            raise ValueError("slav must lie in [0, 1]")

    def to_json(self):
        return {"mean_reward": self.mean_reward, "slav": self.slav,
                "mean_vnf": self.mean_vnf, "mean_power": self.mean_power,
                "episodes": self.episodes}


SCENARIO_KINDS = ("set_alpha", "set_beta", "node_down", "node_up")


@dataclass
class ScenarioEvent:
    t: int
    kind: str
    value: float | None = None   # set_alpha / set_beta
    node: int | None = None      # node_down / node_up

    def __post_init__(self):
        if self.kind not in SCENARIO_KINDS:
            raise ValueError(f"unknown scenario event kind '{self.kind}'")
        if self.t < 0:
            raise ValueError("event timestamps must be >= 0")
        if self.kind in ("set_alpha", "set_beta"):
            if self.value is None or not math.isfinite(self.value) or self.value < 0:
                raise ValueError(f"{self.kind} needs a finite value >= 0")
        elif self.node is None or self.node < 0:
            raise ValueError(f"{self.kind} needs a node id")

    def to_json(self):
        out = {"t": self.t, "kind": self.kind}
        if self.value is not None:
            out["value"] = self.value
        if self.node is not None:
            out["node"] = self.node
        return out

    @classmethod
    def from_json(cls, obj):
        return cls(t=int(obj["t"]), kind=obj["kind"],
                   value=obj.get("value"), node=obj.get("node"))


@dataclass
class Scenario:
    events: list

    def __post_init__(self):
        times = [e.t for e in self.events]
        if any(b < a for a, b in zip(times, times[1:])):
            raise ValueError("event timestamps must be nondecreasing")

    def to_json(self):
        return {"events": [e.to_json() for e in self.events]}

    @classmethod
    def from_json(cls, obj):
        return cls(events=[ScenarioEvent.from_json(e) for e in obj["events"]])

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_json(json.load(fh))

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=2, sort_keys=True)
            fh.write("\n")


# ---- stepping engine ----

class GreedyStepper:
    """Drives one environment with a trained agent under mutable preference
    and node status. One instance per environment; not shared."""

    def __init__(self, agent, env, alpha, beta=None):
        meta = agent.meta
        if meta.task == "pm" and beta is None:
            raise ValueError("power-management agents need a beta preference")
        self.agent = agent
        self.model = agent.model
        self.task = meta.task
        self.env = env
        self.alpha = float(alpha)
        self.beta = None if beta is None else float(beta)
        self._norm_dists = self._normalization(meta)
        self._adj = adjacency(env.topology)

    def _normalization(self, meta):
        p = self.model.pref_dims
        if p == 0:
            return None
        if meta.alpha_dist is None:
            raise ValueError("checkpoint lacks the training alpha distribution")
        alpha_dist = PreferenceDistribution.parse(meta.alpha_dist)
        if p == 1:
            return alpha_dist
        if meta.beta_dist is None:
            raise ValueError("checkpoint lacks the training beta distribution")
        return (alpha_dist, PreferenceDistribution.parse(meta.beta_dist))

    def _preference_arg(self):
        p = self.model.pref_dims
        if p == 0:
            return None
        if p == 1:
            return self.alpha
        return (self.alpha, self.beta)

    def set_alpha(self, value):
        if not math.isfinite(value) or value < 0:
            raise ValueError("alpha must be finite and >= 0")
        self.alpha = float(value)

    def set_beta(self, value):
        if not math.isfinite(value) or value < 0:
            raise ValueError("beta must be finite and >= 0")
        self.beta = float(value)

    def node_down(self, node):
        self.env.node_down(node)
        self._adj = adjacency(self.env.topology)

    def node_up(self, node):
        self.env.node_up(node)
        self._adj = adjacency(self.env.topology)

    def state(self):
        return assemble_state(self._adj, self.env.requests(),
                              self.env.deployment, self._preference_arg(),
                              self._norm_dists)

    def step(self):
        """Greedy action on the current state; returns (row, metrics) where
        row is the JSON-ready telemetry and metrics the full StepMetrics."""
        probs = self.model.policy_probs(self.state())
        action = greedy_action(probs)
        metrics = self.env.step(action)
        pairs = [(r, 1.0) for r in metrics.delay_ratios]
        if self.task == "pm":
            reward = reward_pm(pairs, metrics.vnf_total, metrics.power_total,
                               self.alpha, self.beta)
        else:
            reward = reward_as(pairs, metrics.vnf_total, self.alpha)
        row = {"alpha": self.alpha, "slav": metrics.slav,
               "vnf_total": metrics.vnf_total,
               "power_total": metrics.power_total, "reward": reward,
               "n_requests": len(metrics.delay_ratios)}
        if self.task == "pm":
            row["beta"] = self.beta
        return row, metrics


# ---- episode evaluation ----

def _window_starts(n_records, episode_len):
    if n_records <= episode_len:
        return [0]
    return list(range(0, n_records - episode_len + 1, episode_len))


def _check_preference(agent, preference):
    if agent.meta.task == "pm":
        if not (isinstance(preference, (tuple, list)) and len(preference) == 2):
            raise ValueError("power-management evaluation needs (alpha, beta)")
        return float(preference[0]), float(preference[1])
    if isinstance(preference, (tuple, list)):
        raise ValueError("auto-scaling evaluation takes a scalar alpha")
    return float(preference), None


def _eval(agent, dataset, split, episode_len, next_pref, max_episodes=None):
    records = dataset.slice(split)
    if not records:
        raise ValueError(f"split '{split}' holds no records")
    env = NetworkEnv(dataset.topology, records, dataset.meta.sla_ms)
    episodes = []
    rewards = []
    violated_w = 0.0
    total_paths = 0
    vnfs, powers = [], []
    starts = _window_starts(len(records), episode_len)
    if max_episodes is not None:
        starts = starts[:max_episodes]
    for start in starts:
        env.reset(start)
        alpha, beta = next_pref()
        stepper = GreedyStepper(agent, env, alpha, beta)
        ep_rows = []
        steps = min(episode_len, len(records) - start)
        for _ in range(steps):
            row, _m = stepper.step()
            ep_rows.append(row)
        ep_reward = float(np.mean([r["reward"] for r in ep_rows]))
        rewards.append(ep_reward)
        for r in ep_rows:
            violated_w += r["slav"] * r["n_requests"]
            total_paths += r["n_requests"]
        vnfs.extend(r["vnf_total"] for r in ep_rows)
        powers.extend(r["power_total"] for r in ep_rows)
        ep = {"start": start, "alpha": alpha, "mean_reward": ep_reward,
              "slav": (sum(r["slav"] * r["n_requests"] for r in ep_rows)
                       / max(1, sum(r["n_requests"] for r in ep_rows))),
              "mean_vnf": float(np.mean([r["vnf_total"] for r in ep_rows])),
              "mean_power": float(np.mean([r["power_total"] for r in ep_rows]))}
        if beta is not None:
            ep["beta"] = beta
        episodes.append(ep)
    return MetricReport(
        mean_reward=float(np.mean(rewards)),
        slav=violated_w / total_paths if total_paths else 0.0,
        mean_vnf=float(np.mean(vnfs)),
        mean_power=float(np.mean(powers)),
        episodes=episodes,
    )


def eval_static(agent, dataset, preference, split="test", episode_len=32,
                max_episodes=None):
    """Greedy rollout over the split with a fixed preference."""
    alpha, beta = _check_preference(agent, preference)
    return _eval(agent, dataset, split, episode_len,
                 lambda: (alpha, beta), max_episodes)


def eval_dynamic(agent, dataset, dist, seed, split="test", episode_len=32,
                 beta_dist=None, max_episodes=None):
    """Greedy rollout with the preference redrawn at each episode start.
    The sampled values are recorded in the per-episode traces."""
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    if agent.meta.task == "pm":
        if beta_dist is None:
            raise ValueError("power-management dynamic evaluation needs beta_dist")
        next_pref = lambda: (dist.sample(rng), beta_dist.sample(rng))
    else:
        next_pref = lambda: (dist.sample(rng), None)
    return _eval(agent, dataset, split, episode_len, next_pref, max_episodes)


# ---- cross-agent normalization ----

def normalize_rewards(rewards):
    """z-scores over an agent cohort evaluated on one identical setting,
    using the population standard deviation. Returns (z, degenerate): all
    zeros with degenerate=True when the cohort variance is 0."""
    values = np.array([r.mean_reward if isinstance(r, MetricReport) else float(r)
                       for r in rewards], dtype=np.float64)
    if len(values) < 2:
        raise ValueError("normalization needs at least two reports")
    std = values.std()
    if std == 0.0:
        return np.zeros_like(values), True
    return (values - values.mean()) / std, False


# ---- scenario rollouts ----

def run_scenario(agent, dataset, scenario, *, alpha0, beta0=None,
                 split="test", steps=None, collect_paths=False):
    """Apply timed events while stepping greedily from the start of a split.

    An event with timestamp t takes effect before the action of step t is
    selected. Returns one trajectory row per step: {t, alpha[, beta], slav,
    vnf_total, power_total, reward}.
    """
    records = dataset.slice(split)
    if not records:
        raise ValueError(f"split '{split}' holds no records")
    n_steps = len(records) if steps is None else min(steps, len(records))
    env = NetworkEnv(dataset.topology, records, dataset.meta.sla_ms)
    env.reset(0)
    stepper = GreedyStepper(agent, env, alpha0, beta0)
    events = sorted(scenario.events, key=lambda e: e.t)
    for e in events:
        if e.node is not None and not (0 <= e.node < dataset.topology.n_nodes):
            raise ValueError(f"scenario references missing node {e.node}")
    rows = []
    next_event = 0
    for t in range(n_steps):
        while next_event < len(events) and events[next_event].t <= t:
            _apply_event(stepper, events[next_event])
            next_event += 1
        row, metrics = stepper.step()
        row = {"t": t, **row}
        row.pop("n_requests")
        if collect_paths:
            row["paths"] = [None if p is None else list(p.nodes)
                            for p in metrics.paths]
        rows.append(row)
    return rows


def _apply_event(stepper, event):
    if event.kind == "set_alpha":
        stepper.set_alpha(event.value)
    elif event.kind == "set_beta":
        stepper.set_beta(event.value)
    elif event.kind == "node_down":
        stepper.node_down(event.node)
    else:
        stepper.node_up(event.node)


# ---- emitters ----

def save_report(report, path, context=None):
    """One JSON file per (agent, setting); `context` labels them."""
    payload = {**(context or {}), "report": report.to_json()}
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def comparison_csv(table, path=None):
    """CSV with one row per agent and one column per setting.
    `table` maps agent name -> {setting name -> value}."""
    if not table:
        raise ValueError("empty comparison table")
    settings = list(next(iter(table.values())))
    lines = ["agent," + ",".join(settings)]
    for agent, row in table.items():
        cells = [f"{row[s]:.6g}" if s in row else "" for s in settings]
        lines.append(agent + "," + ",".join(cells))
    text = "\n".join(lines) + "\n"
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    return text
