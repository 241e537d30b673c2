from prefnet.neural.tensor import Tensor, concat, repeat_interleave, tile_rows, minimum
from prefnet.neural.model import PolicyValueNet
from prefnet.neural.optim import Adam, Sgd, zero_grad, clip_grad_norm
from prefnet.neural.checkpoint import Agent, AgentMeta, save_agent, load_agent, CheckpointError

__all__ = [
    "Tensor", "concat", "repeat_interleave", "tile_rows", "minimum",
    "PolicyValueNet", "Adam", "Sgd", "zero_grad", "clip_grad_norm",
    "Agent", "AgentMeta", "save_agent", "load_agent", "CheckpointError",
]
