"""Stepping environment over a dataset slice.

Each step consumes one dataset record: the agent's scale action is applied
to the evolving deployment, the record's requests are routed, and QoS /
resource / power metrics are returned.  Reward shaping is the caller's job
so the same rollout machinery serves both tasks.

An instance owns a private topology copy (node up/down state is local) and
is safe to drive from exactly one execution context.
"""
from __future__ import annotations

from dataclasses import dataclass

from prefnet.sim.catalog import DEFAULT_CATALOG
from prefnet.sim.deployment import Deployment, apply_action, total_vnf_count
from prefnet.sim.power import PowerModel, assigned_loads, node_power
from prefnet.sim.routing import RoutingError, path_delay, route_sfc

# Unroutable requests count as this multiple of the SLA in the QoS term.
UNROUTABLE_DELAY_FACTOR = 2.0


@dataclass
class StepMetrics:
    delay_ratios: list  # one entry per request, delay / SLA
    slav: float  # fraction of requests whose delay exceeds the SLA
    vnf_total: int
    power_watts: float
    power_total: float  # watts normalized by p_max ("equivalent busy nodes")
    node_watts: list  # per-node wattage, index = node id
    n_unroutable: int
    paths: list  # SfcPath or None (unroutable), one per request


class NetworkEnv:
    def __init__(self, topology, records, sla_ms, catalog=None, power_model=None):
        if sla_ms <= 0:
            raise ValueError("sla_ms must be positive")
        if not records:
            raise ValueError("environment needs at least one dataset record")
        self.topology = topology.copy()
        self.records = records
        self.sla_ms = float(sla_ms)
        self.catalog = catalog or DEFAULT_CATALOG
        self.power_model = power_model or PowerModel()
        self.deployment = None
        self.ptr = 0
        self.reset(0)

    def reset(self, start):
        """Start an episode at a record index; deployment comes from that record."""
        if not (0 <= start < len(self.records)):
            raise IndexError(f"record index {start} out of range")
        self.ptr = start
        self.deployment = Deployment(self.records[start].deployment).copy()
        self._zero_down_nodes()

    def _zero_down_nodes(self):
        for n in range(self.topology.n_nodes):
            if not self.topology.is_up(n):
                self.deployment.zero_node(n)

    def node_down(self, node):
        """Take a node down: removed from routing, instance counts zeroed."""
        self.topology.set_status(node, False)
        self.deployment.zero_node(node)

    def node_up(self, node):
        """Restore a node; its deployment stays empty until the agent rebuilds it."""
        self.topology.set_status(node, True)

    def requests(self):
        """Requests of the record the next step will consume."""
        return self.records[self.ptr].requests

    def exhausted(self):
        return self.ptr >= len(self.records)

    def measure(self):
        """Route the current record's requests against the current deployment."""
        reqs = self.requests()
        ratios = []
        paths = []
        unroutable = 0
        for req in reqs:
            try:
                p = route_sfc(self.topology, self.deployment, req, self.catalog)
            except RoutingError:
                # includes requests whose endpoints are currently down: no
                # feasible path exists, so they take the same penalty
                p = None
                unroutable += 1
                ratios.append(UNROUTABLE_DELAY_FACTOR)
            else:
                ratios.append(path_delay(self.topology, p) / self.sla_ms)
            paths.append(p)
        violated = sum(1 for r in ratios if r > 1.0)
        loads = assigned_loads(self.topology.n_nodes, paths, reqs)
        node_watts = [
            node_power(self.power_model, self.topology, self.deployment, n, float(loads[n]))
            for n in range(self.topology.n_nodes)
        ]
        watts = float(sum(node_watts))
        return StepMetrics(
            delay_ratios=ratios,
            slav=violated / len(reqs) if reqs else 0.0,
            vnf_total=total_vnf_count(self.deployment),
            power_watts=watts,
            power_total=watts / self.power_model.p_max,
            node_watts=node_watts,
            n_unroutable=unroutable,
            paths=paths,
        )

    def step(self, action):
        """Apply a scale action, measure the current record, advance the pointer."""
        if self.exhausted():
            raise IndexError("environment stepped past the end of its records")
        self.deployment = apply_action(self.deployment, action, self.topology)
        metrics = self.measure()
        self.ptr += 1
        return metrics
