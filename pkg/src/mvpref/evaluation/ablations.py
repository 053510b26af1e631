"""Reward-model ablation runs: retrain named variants with a shared budget."""

from dataclasses import replace

from ..errors import ValidationError
from ..reward.model import MultiViewRewardModel, RewardModelConfig
from ..reward.training import (
    PairDataset,
    TrainConfig,
    eval_pair_accuracy,
    modality_discrimination_accuracy,
    train_reward,
)

VARIANTS = ("w/o backbone-init", "w/o mv self-attention", "w/o negatives")


def _variant_configs(name: str, model_cfg: RewardModelConfig, train_cfg: TrainConfig):
    if name == "w/o backbone-init":
        return replace(model_cfg, init_checkpoint=None), train_cfg
    if name == "w/o mv self-attention":
        return replace(model_cfg, use_mv_self_attention=False), train_cfg
    if name == "w/o negatives":
        return model_cfg, replace(train_cfg, negatives_enabled=False)
    raise ValidationError(f"unknown ablation variant {name!r}")


def run_ablations(model_cfg: RewardModelConfig, train_cfg: TrainConfig,
                  data: PairDataset, variants=(), heldout_asset_ids=()) -> dict:
    """Train the base config plus each variant with the same seed and budget.

    Returns {variant_name: {"pair_accuracy": ..., "modality_discrimination": ...}}
    with the base run under the key "full".
    """
    rows: dict = {}
    runs = [("full", model_cfg, train_cfg)]
    for name in variants:
        mc, tc = _variant_configs(name, model_cfg, train_cfg)
        runs.append((name, mc, tc))
    eval_pairs = data.test or data.val or data.train
    for name, mc, tc in runs:
        model = MultiViewRewardModel(mc, seed=tc.seed)
        model, _ = train_reward(model, data, tc)
        row = {"pair_accuracy": eval_pair_accuracy(model, eval_pairs, data)}
        if heldout_asset_ids:
            row["modality_discrimination"] = modality_discrimination_accuracy(
                model, heldout_asset_ids, data)
        rows[name] = row
    return rows
