from .model import (
    MultiViewRewardModel,
    RewardModelConfig,
    asset_to_tensor,
    image_to_tensor,
    load_checkpoint,
    save_checkpoint,
)
from .training import (
    PairDataset,
    TrainConfig,
    TrainReport,
    eval_pair_accuracy,
    make_modality_reversed_negative,
    modality_discrimination_accuracy,
    pairwise_loss,
    train_reward,
)

__all__ = [
    "MultiViewRewardModel",
    "PairDataset",
    "RewardModelConfig",
    "TrainConfig",
    "TrainReport",
    "asset_to_tensor",
    "eval_pair_accuracy",
    "image_to_tensor",
    "load_checkpoint",
    "make_modality_reversed_negative",
    "modality_discrimination_accuracy",
    "pairwise_loss",
    "save_checkpoint",
    "train_reward",
]
