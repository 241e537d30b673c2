"""Preference distributions and the exponential effect-model fit.

Pre-experiments at a grid of fixed preferences yield effect samples
(average VNF count or average power, offset so the minimum is 0).  The
effect is modeled as V = v_max * exp(-lam * pref); requiring the effect of
the sampled preference to be uniform on [0, v_max] then makes the
preference density exponential with the same rate, p(x) = lam * exp(-lam*x).

Distribution spec strings (CLI/config/checkpoint metadata):

    exp:145.45                   exponential, rate lambda
    unif:0:0.05                  uniform on [lo, hi)
    point:0.0063                 degenerate point mass
    sched:0=0.0015,50=0.0317     step schedule keyed by tick
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class DegenerateFit(ValueError):
    """Effect samples carry no decay signal, so the rate is unidentifiable."""


# Quantile levels whose values under exp(lam) form the static preference grid.
GRID_QUANTILES = (0.2, 0.4, 0.6, 0.8, 0.99)


@dataclass(frozen=True)
class EffectSample:
    preference: float
    effect: float  # offset-subtracted, >= 0

    def __post_init__(self):
        if self.effect < 0:
            raise ValueError("effects must be offset-subtracted and non-negative")


@dataclass(frozen=True)
class ExponentialFit:
    lam: float
    v_max: float
    rss: float
    iterations: int

    def __post_init__(self):
        if not (math.isfinite(self.lam) and self.lam > 0):
            raise ValueError("rate must be finite and positive")
        if not (math.isfinite(self.v_max) and self.v_max > 0):
            raise ValueError("v_max must be finite and positive")

    def predict(self, pref):
        return self.v_max * math.exp(-self.lam * pref)

    def to_json(self):
        return {"lambda": self.lam, "v_max": self.v_max, "rss": self.rss, "iters": self.iterations}


class PreferenceDistribution:
    """Exponential / uniform / point / schedule preference source.

    Schedules are time-indexed control signals, not sampling distributions:
    they support value_at(step) and mean() but not sample/density/quantile.
    """

    KINDS = ("exponential", "uniform", "point", "schedule")

    def __init__(self, kind, **params):
        if kind not in self.KINDS:
            raise ValueError(f"unknown distribution kind {kind!r}")
        self.kind = kind
        if kind == "exponential":
            self.lam = float(params["lam"])
            if self.lam <= 0:
                raise ValueError("exponential rate must be positive")
        elif kind == "uniform":
            self.lo, self.hi = float(params["lo"]), float(params["hi"])
            if not (0 <= self.lo < self.hi):
                raise ValueError("uniform requires 0 <= lo < hi")
        elif kind == "point":
            self.value = float(params["value"])
            if self.value < 0:
                raise ValueError("point mass must be non-negative")
        else:
            pts = [(int(s), float(v)) for s, v in params["points"]]
            if not pts:
                raise ValueError("schedule needs at least one (step, value) pair")
            if any(b[0] <= a[0] for a, b in zip(pts, pts[1:])):
                raise ValueError("schedule steps must be strictly increasing")
            if any(v < 0 for _, v in pts):
                raise ValueError("schedule values must be non-negative")
            self.points = tuple(pts)

    # -- constructors ---------------------------------------------------

    @classmethod
    def exponential(cls, lam):
        return cls("exponential", lam=lam)

    @classmethod
    def uniform(cls, lo, hi):
        return cls("uniform", lo=lo, hi=hi)

    @classmethod
    def point(cls, value):
        return cls("point", value=value)

    @classmethod
    def schedule(cls, points):
        return cls("schedule", points=points)

    @classmethod
    def parse(cls, spec):
        """Build a distribution from its spec string."""
        kind, _, rest = spec.strip().partition(":")
        builders = {"exp": "exponential", "unif": "uniform", "point": "point", "sched": "schedule"}
        if kind not in builders:
            raise ValueError(f"unknown distribution spec {spec!r}")
        try:
            if kind == "exp":
                args = (float(rest),)
            elif kind == "unif":
                lo, hi = rest.split(":")
                args = (float(lo), float(hi))
            elif kind == "point":
                args = (float(rest),)
            else:
                pairs = [item.split("=") for item in rest.split(",")]
                args = ([(int(s), float(v)) for s, v in pairs],)
        except (ValueError, TypeError) as exc:
            raise ValueError(f"malformed distribution spec {spec!r}") from exc
        return getattr(cls, builders[kind])(*args)

    def spec(self):
        """Round-trippable spec string."""
        if self.kind == "exponential":
            return f"exp:{self.lam:g}"
        if self.kind == "uniform":
            return f"unif:{self.lo:g}:{self.hi:g}"
        if self.kind == "point":
            return f"point:{self.value:g}"
        return "sched:" + ",".join(f"{s}={v:g}" for s, v in self.points)

    def __repr__(self):
        return f"PreferenceDistribution({self.spec()!r})"

    def __eq__(self, other):
        return isinstance(other, PreferenceDistribution) and self.spec() == other.spec()

    # -- moments and evaluation -----------------------------------------

    def mean(self):
        if self.kind == "exponential":
            return 1.0 / self.lam
        if self.kind == "uniform":
            return (self.lo + self.hi) / 2.0
        if self.kind == "point":
            return self.value
        return sum(v for _, v in self.points) / len(self.points)

    def density(self, x):
        if self.kind == "exponential":
            return self.lam * math.exp(-self.lam * x) if x >= 0 else 0.0
        if self.kind == "uniform":
            return 1.0 / (self.hi - self.lo) if self.lo <= x < self.hi else 0.0
        raise ValueError(f"{self.kind} distribution has no density")

    def cdf(self, x):
        if self.kind == "exponential":
            return 1.0 - math.exp(-self.lam * x) if x >= 0 else 0.0
        if self.kind == "uniform":
            if x < self.lo:
                return 0.0
            return min(1.0, (x - self.lo) / (self.hi - self.lo))
        if self.kind == "point":
            return 1.0 if x >= self.value else 0.0
        raise ValueError("schedule has no cdf")

    def quantile(self, q):
        """Inverse CDF.  q in [0,1); q=1 allowed only for bounded support."""
        if not (0 <= q <= 1):
            raise ValueError("quantile level must lie in [0, 1]")
        if self.kind == "exponential":
            if q >= 1:
                raise ValueError("q=1 undefined for unbounded support")
            return -math.log1p(-q) / self.lam
        if self.kind == "uniform":
            return self.lo + q * (self.hi - self.lo)
        if self.kind == "point":
            return self.value
        raise ValueError("schedule has no quantile function")

    def sample(self, rng):
        """One draw via inverse-CDF.  Point masses consume no randomness."""
        if self.kind == "point":
            return self.value
        if self.kind == "exponential":
            return self.quantile(rng.random())
        if self.kind == "uniform":
            return self.quantile(rng.random())
        raise ValueError("schedules are stepped with value_at(), not sampled")

    def value_at(self, step):
        """Schedule value in effect at a tick (last entry at or before it)."""
        if self.kind != "schedule":
            return self.mean() if self.kind == "point" else self.quantile(0.5)
        current = self.points[0][1]
        for s, v in self.points:
            if s <= step:
                current = v
            else:
                break
        return current


# -- effect-model fitting -------------------------------------------------


def collect_effects(checkpoints, testset, effect_kind="vnf_count", episode_len=32,
                    fixed_alpha=None):
    """Evaluate one agent per grid preference and offset the effect metric.

    `checkpoints` are (preference, agent) pairs ordered by grid position.
    The effect is the test-set average of the chosen metric, minus the
    minimum across the grid, so the smallest effect is 0.  For a beta grid
    over power-management agents, `fixed_alpha` supplies the alpha half of
    the evaluation preference.
    """
    if effect_kind not in ("vnf_count", "power"):
        raise ValueError(f"unknown effect kind {effect_kind!r}")
    from prefnet import evaluate  # local import: evaluate depends on this module

    raw = []
    for pref, agent in checkpoints:
        if agent.meta.task == "pm":
            if fixed_alpha is None:
                raise ValueError("a beta grid needs fixed_alpha for evaluation")
            eval_pref = (fixed_alpha, pref)
        else:
            eval_pref = pref
        report = evaluate.eval_static(agent, testset, eval_pref,
                                      episode_len=episode_len)
        raw.append(report.mean_vnf if effect_kind == "vnf_count" else report.mean_power)
    return offset_effects([pref for pref, _ in checkpoints], raw)


def offset_effects(preferences, raw_values):
    """Turn raw per-preference averages into offset EffectSamples."""
    if len(preferences) != len(raw_values):
        raise ValueError("one raw value is required per preference")
    if not raw_values:
        raise ValueError("no effect observations")
    lo = min(raw_values)
    return [EffectSample(p, v - lo) for p, v in zip(preferences, raw_values)]


def fit_exponential(samples, lr=0.05, tol=1e-8, max_iter=100_000):
    """Least-squares fit of the decay rate; v_max is pinned to max effect.

    Gradient descent runs on log(lam) for conditioning (rates span orders
    of magnitude), with step halving when a move would increase the loss.
    Converged when the relative rate change drops below `tol`.
    """
    if len(samples) < 2:
        raise ValueError("need at least two effect samples")
    prefs = np.array([s.preference for s in samples])
    effects = np.array([s.effect for s in samples])
    if len(set(prefs.tolist())) < 2:
        raise ValueError("need at least two distinct preferences")
    v_max = float(effects.max())
    if v_max <= 0 or np.allclose(effects, effects[0]):
        raise DegenerateFit("all effects equal; no decay to fit")

    v = effects / v_max  # scale-free targets in [0, 1]
    lam = _initial_rate(prefs, v)
    u = math.log(lam)

    def loss_at(u_val):
        resid = np.exp(-math.exp(u_val) * prefs) - v
        return float((resid * resid).sum())

    loss = loss_at(u)
    iters = 0
    step = lr
    for iters in range(1, max_iter + 1):
        lam = math.exp(u)
        model = np.exp(-lam * prefs)
        # d loss / d u, with u = log(lam)
        grad = float((2.0 * (model - v) * model * (-lam * prefs)).sum())
        new_u = u - step * grad
        new_loss = loss_at(new_u)
        while new_loss > loss and step > 1e-12:
            step *= 0.5
            new_u = u - step * grad
            new_loss = loss_at(new_u)
        new_lam = math.exp(new_u)
        done = abs(new_lam - lam) / lam < tol
        u, loss = new_u, new_loss
        step = min(step * 1.3, 10.0)
        if done:
            break
    lam = math.exp(u)
    rss = loss * v_max * v_max
    return ExponentialFit(lam=lam, v_max=v_max, rss=rss, iterations=iters)


def _initial_rate(prefs, v):
    """Closed-form rate guess from the first strictly-decayed sample."""
    for p, val in sorted(zip(prefs, v)):
        if p > 0 and 0 < val < 1:
            return -math.log(val) / p
    positive = [p for p in prefs if p > 0]
    return 1.0 / min(positive) if positive else 1.0


# -- pushforward uniformity -------------------------------------------------


def ks_uniform(values, hi):
    """One-sample Kolmogorov-Smirnov distance of `values` to Unif[0, hi]."""
    x = np.sort(np.asarray(values, dtype=float)) / hi
    n = len(x)
    if n == 0:
        raise ValueError("no samples")
    grid = np.arange(1, n + 1) / n
    return float(max(np.max(grid - x), np.max(x - (grid - 1 / n))))


def pushforward_check(fit, n_samples, seed=0, lam_model=None):
    """KS distance of f(pref) to Unif[0, v_max] with pref ~ exp(fit.lam).

    The decay model uses the fitted rate unless `lam_model` overrides it; a
    rate mismatch between sampler and model shows up as a large distance.
    """
    rng = np.random.default_rng(seed)
    prefs = rng.exponential(1.0 / fit.lam, size=n_samples)
    lam = fit.lam if lam_model is None else lam_model
    effects = fit.v_max * np.exp(-lam * prefs)
    return ks_uniform(effects, fit.v_max)
