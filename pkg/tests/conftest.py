import numpy as np
import pytest

from prefnet import datagen
from prefnet.neural.checkpoint import Agent, AgentMeta
from prefnet.neural.model import PolicyValueNet
from prefnet.prefdist import PreferenceDistribution
from prefnet.sim.catalog import DEFAULT_CATALOG, ServiceRequest
from prefnet.sim.deployment import Deployment
from prefnet.sim.env import NetworkEnv
from prefnet.sim.topology import Topology


def make_toy_topology():
    # 5 nodes, 6 edges; nodes 1-3 are the natural hosting spots
    return Topology(
        [800.0] * 5,
        [(0, 1, 9.5), (1, 2, 7.8), (2, 3, 8.4), (3, 4, 10.1), (0, 2, 11.7), (1, 3, 12.6)],
        name="toy5",
    )


@pytest.fixture
def toy_topology():
    return make_toy_topology()


@pytest.fixture(scope="session")
def toy_dataset():
    cfg = datagen.DatagenConfig(horizon=120, mean_flows=4.0)
    return datagen.generate_dataset(make_toy_topology(), 7, cfg)


@pytest.fixture
def toy_env(toy_dataset):
    return NetworkEnv(toy_dataset.topology, toy_dataset.slice("train"), toy_dataset.meta.sla_ms)


def make_agent(task="as", pref_dims=1, hidden=8, steps=2, seed=0, alpha_lam=20.0):
    """Untrained agent with coherent metadata, cheap enough for protocol tests."""
    model = PolicyValueNet(pref_dims=pref_dims, hidden=hidden, steps=steps, seed=seed)
    alpha = PreferenceDistribution.exponential(alpha_lam).spec()
    beta = PreferenceDistribution.exponential(42.51).spec() if pref_dims == 2 else None
    meta = AgentMeta(
        task=task,
        topology="toy5",
        model=dict(model.config),
        alpha_dist=alpha,
        beta_dist=beta,
    )
    return Agent(model=model, meta=meta)


@pytest.fixture
def toy_agent():
    return make_agent()


@pytest.fixture
def simple_requests():
    return [
        ServiceRequest(src=0, dst=4, bandwidth=40.0, service_type="NAT-proxy"),
        ServiceRequest(src=2, dst=0, bandwidth=25.0, service_type="NAT-firewall-IDS"),
    ]


def full_deployment(n_nodes, n_types=None, count=1):
    n_types = n_types or DEFAULT_CATALOG.n_types
    return Deployment(np.full((n_nodes, n_types), count, dtype=np.int64))
