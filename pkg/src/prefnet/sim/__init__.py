from prefnet.sim.topology import Topology, load_topology, fixture_path
from prefnet.sim.catalog import VnfCatalog, ServiceRequest, DEFAULT_CATALOG, SERVICE_CHAINS
from prefnet.sim.deployment import Deployment, apply_action, total_vnf_count
from prefnet.sim.routing import SfcPath, route_sfc, path_delay, Unroutable, NodeDown, validate_path
from prefnet.sim.power import PowerModel, node_power, total_power, assigned_loads
from prefnet.sim.env import NetworkEnv, StepMetrics

__all__ = [
    "Topology", "load_topology", "fixture_path",
    "VnfCatalog", "ServiceRequest", "DEFAULT_CATALOG", "SERVICE_CHAINS",
    "Deployment", "apply_action", "total_vnf_count",
    "SfcPath", "route_sfc", "path_delay", "Unroutable", "NodeDown", "validate_path",
    "PowerModel", "node_power", "total_power", "assigned_loads",
    "NetworkEnv", "StepMetrics",
]
