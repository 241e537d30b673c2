"""VNF catalog and service requests.

The five VNF types are fixed and ordered; the order indexes deployment
columns, annotation columns and embedding rows, so it must never change.
"""
from __future__ import annotations

from dataclasses import dataclass, field

VNF_TYPES = ("firewall", "IDS", "proxy", "NAT", "WANO")

# The four service chains, each an ordered VNF-type sequence.
SERVICE_CHAINS = {
    "NAT-firewall-IDS": ("NAT", "firewall", "IDS"),
    "NAT-proxy": ("NAT", "proxy"),
    "NAT-WANO": ("NAT", "WANO"),
    "NAT-firewall-WANO-IDS": ("NAT", "firewall", "WANO", "IDS"),
}

SERVICE_TYPES = tuple(SERVICE_CHAINS)


@dataclass(frozen=True)
class VnfCatalog:
    """Ordered VNF types plus per-instance processing capacity (bandwidth units)."""

    types: tuple = VNF_TYPES
    instance_capacity: float = 500.0
    chains: dict = field(default_factory=lambda: dict(SERVICE_CHAINS))

    def __post_init__(self):
        if len(self.types) != 5 or len(set(self.types)) != 5:
            raise ValueError("catalog must hold exactly the five distinct VNF types")

    @property
    def n_types(self):
        return len(self.types)

    def type_index(self, name):
        return self.types.index(name)

    def chain_indices(self, service_type):
        """Chain of a service type as VNF-type indexes, in required order."""
        try:
            chain = self.chains[service_type]
        except KeyError:
            raise ValueError(f"unknown service type {service_type!r}") from None
        return [self.types.index(t) for t in chain]


DEFAULT_CATALOG = VnfCatalog()


@dataclass(frozen=True)
class ServiceRequest:
    src: int
    dst: int
    bandwidth: float
    service_type: str
    sla_ms: float | None = None

    def __post_init__(self):
        if self.src == self.dst:
            raise ValueError("request src and dst must differ")
        if self.bandwidth <= 0:
            raise ValueError("bandwidth must be positive")
        if self.service_type not in SERVICE_CHAINS:
            raise ValueError(f"unknown service type {self.service_type!r}")

    def to_json(self):
        return {"src": self.src, "dst": self.dst, "bw": self.bandwidth, "type": self.service_type}

    @classmethod
    def from_json(cls, obj):
        return cls(src=obj["src"], dst=obj["dst"], bandwidth=obj["bw"], service_type=obj["type"])
