from .loop import (
    combined_loss,
    TuningConfig,
    TuningHistory,
    mean_decoded_reward,
    reward_to_loss,
    sample_mid_step,
    tune,
    tuning_step,
)

__all__ = [
    "combined_loss",
    "TuningConfig",
    "TuningHistory",
    "mean_decoded_reward",
    "reward_to_loss",
    "sample_mid_step",
    "tune",
    "tuning_step",
]
