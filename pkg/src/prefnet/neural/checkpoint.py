"""Checkpoint container: one JSON header line, then raw float64 tensor data.

Layout:
    line 1  magic "PREFNET-CKPT-1"
    line 2  JSON: {"meta": {...}, "tensors": [{"name", "shape", "dtype"}, ...]}
    rest    concatenated little-endian float64 buffers, in table order

Weights round-trip bit for bit; the header restores the architecture and the
training context (task, topology, preference distributions) without loading
any code-level state.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from prefnet.neural.model import PolicyValueNet

MAGIC = b"PREFNET-CKPT-1"
DTYPE = "<f8"


class CheckpointError(ValueError):
    pass


@dataclass
class AgentMeta:
    task: str                      # "as" or "pm"
    topology: str                  # name or path the agent was trained on
    model: dict                    # PolicyValueNet constructor kwargs
    alpha_dist: str | None = None  # distribution spec, e.g. "exp:145.45"
    beta_dist: str | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.task not in ("as", "pm"):
            raise ValueError("task must be 'as' or 'pm'")

    def to_json(self):
        return {"task": self.task, "topology": self.topology,
                "model": dict(self.model), "alpha_dist": self.alpha_dist,
                "beta_dist": self.beta_dist, "extra": dict(self.extra)}

    @classmethod
    def from_json(cls, obj):
        return cls(task=obj["task"], topology=obj["topology"],
                   model=dict(obj["model"]), alpha_dist=obj.get("alpha_dist"),
                   beta_dist=obj.get("beta_dist"), extra=dict(obj.get("extra", {})))


@dataclass
class Agent:
    model: PolicyValueNet
    meta: AgentMeta


def save_agent(path, agent):
    arrays = agent.model.state_dict()
    table = [{"name": k, "shape": list(v.shape), "dtype": DTYPE}
             for k, v in arrays.items()]
    header = json.dumps({"meta": agent.meta.to_json(), "tensors": table},
                        sort_keys=True)
    with open(path, "wb") as fh:
        fh.write(MAGIC + b"\n")
        fh.write(header.encode("utf-8") + b"\n")
        for k, _ in ((t["name"], t) for t in table):
            fh.write(np.ascontiguousarray(arrays[k], dtype=DTYPE).tobytes())


def load_agent(path):
    with open(path, "rb") as fh:
        magic = fh.readline().rstrip(b"\n")
        if magic != MAGIC:
            raise CheckpointError("not a checkpoint file (bad magic)")
        try:
            header = json.loads(fh.readline().decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise CheckpointError(f"corrupt checkpoint header: {exc}") from exc
        meta = AgentMeta.from_json(header["meta"])
        arrays = {}
        for entry in header["tensors"]:
            shape = tuple(entry["shape"])
            n = int(np.prod(shape)) if shape else 1
            raw = fh.read(n * 8)
            if len(raw) != n * 8:
                raise CheckpointError("checkpoint truncated")
            arrays[entry["name"]] = np.frombuffer(raw, dtype=DTYPE).reshape(shape).copy()
        if fh.read(1):
            raise CheckpointError("trailing bytes after tensor data")
    model = PolicyValueNet(**meta.model)
    try:
        model.load_state_dict(arrays)
    except ValueError as exc:
        raise CheckpointError(str(exc)) from exc
    model.sync_old()
    return Agent(model=model, meta=meta)
