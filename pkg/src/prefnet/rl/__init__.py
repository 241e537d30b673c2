from prefnet.rl.reward import reward_as, reward_pm
from prefnet.rl.sampling import sample_action, greedy_action, action_log_prob
from prefnet.rl.storage import Transition, RolloutStorage
from prefnet.rl.ppo import PpoConfig, compute_gae, ppo_update, TrainingDiverged
from prefnet.rl.train import train, train_static, TrainResult

__all__ = [
    "reward_as", "reward_pm",
    "sample_action", "greedy_action", "action_log_prob",
    "Transition", "RolloutStorage",
    "PpoConfig", "compute_gae", "ppo_update", "TrainingDiverged",
    "train", "train_static", "TrainResult",
]
