"""prefnet: a service-chain network simulator plus a dynamic-preference
multi-objective RL toolkit (preference-conditioned scaling agents, the
preference-distribution estimation pipeline, evaluation harness, and an
interactive steering service)."""

__version__ = "0.1.0"

from prefnet import datagen, encoding, evaluate, prefdist, sim
from prefnet.neural import (Agent, AgentMeta, PolicyValueNet, load_agent,
                            save_agent)
from prefnet.prefdist import PreferenceDistribution, fit_exponential
from prefnet.rl import PpoConfig, train, train_static

__all__ = [
    "__version__",
    "datagen", "encoding", "evaluate", "prefdist", "sim",
    "Agent", "AgentMeta", "PolicyValueNet", "load_agent", "save_agent",
    "PreferenceDistribution", "fit_exponential",
    "PpoConfig", "train", "train_static",
]
