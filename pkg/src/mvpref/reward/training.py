"""Pairwise preference training for the multi-view reward model.

The objective is the ranking cross-entropy -log sigmoid(r_winner - r_loser)
averaged over comparison pairs.  With negatives enabled, every sampled asset
also contributes a (original beats modality-reversed copy) pair, weighted by
`negative_weight`, which teaches the scorer that content must match its
domain slot.
"""

import math
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import torch
import torch.nn.functional as F

from ..errors import ValidationError
from ..rng import derive_seed, make_generator
from ..dataset.types import ComparisonPair, MultiViewAsset, ViewImage
from .model import MultiViewRewardModel, asset_to_tensor, image_to_tensor

_REVERSED_MARKER = "__modswap"


def pairwise_loss(r_w, r_l):
    """-log sigmoid(r_w - r_l); scalars return exact float64 values."""
    if isinstance(r_w, torch.Tensor) or isinstance(r_l, torch.Tensor):
        r_w, r_l = torch.as_tensor(r_w), torch.as_tensor(r_l)
        if not (torch.isfinite(r_w).all() and torch.isfinite(r_l).all()):
            raise ValidationError("pairwise_loss requires finite scores")
        return -F.logsigmoid(r_w - r_l)
    r_w, r_l = float(r_w), float(r_l)
    if not (math.isfinite(r_w) and math.isfinite(r_l)):
        raise ValidationError("pairwise_loss requires finite scores")
    d = r_w - r_l
    if d >= 0:
        return math.log1p(math.exp(-d))
    return -d + math.log1p(math.exp(d))


def make_modality_reversed_negative(asset: MultiViewAsset) -> MultiViewAsset:
    """Swap the RGB and normal content blocks, keeping slots canonical.

    Applying the operation twice returns the original (the id marker
    toggles).  Requires exactly the two standard domains.
    """
    asset.validate()
    if set(asset.domains) != {"rgb", "normal"}:
        raise ValidationError(
            f"modality reversal needs domains {{rgb, normal}}, got {asset.domains}"
        )
    other = {"rgb": "normal", "normal": "rgb"}
    views = []
    for v in asset.views:
        source = asset.view(other[v.domain], v.view_index)
        views.append(ViewImage(domain=v.domain, view_index=v.view_index,
                               image=source.image))
    new_id = (asset.id[:-len(_REVERSED_MARKER)]
              if asset.id.endswith(_REVERSED_MARKER)
              else asset.id + _REVERSED_MARKER)
    out = MultiViewAsset(
        id=new_id,
        prompt_id=asset.prompt_id,
        method_id=asset.method_id,
        inference_steps=asset.inference_steps,
        views=views,
    )
    out.validate()
    return out


def reverse_modality_views(views: torch.Tensor, n_views: int) -> torch.Tensor:
    """Tensor-level modality swap over the canonical view axis."""
    if views.shape[-4] != 2 * n_views:
        raise ValidationError(
            f"expected {2 * n_views} views on the view axis, got {views.shape[-4]}"
        )
    return torch.cat(
        [views[..., n_views:, :, :, :], views[..., :n_views, :, :, :]], dim=-4
    )


@dataclass
class TrainConfig:
    batch_size: int = 16
    learning_rate: float = 4e-5
    schedule: str = "cosine"
    epochs: int = 10
    seed: int = 0
    negatives_enabled: bool = True
    negative_weight: float = 1.0

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValidationError("batch_size must be >= 1")
        if self.learning_rate <= 0:
            raise ValidationError("learning_rate must be > 0")
        if self.schedule not in ("cosine", "constant"):
            raise ValidationError(f"unknown schedule {self.schedule!r}")

    def to_json(self) -> dict:
        return {
            "batch_size": self.batch_size,
            "learning_rate": self.learning_rate,
            "schedule": self.schedule,
            "epochs": self.epochs,
            "seed": self.seed,
            "negatives_enabled": self.negatives_enabled,
            "negative_weight": self.negative_weight,
        }


@dataclass
class TrainReport:
    train_loss: list = field(default_factory=list)
    val_accuracy: list = field(default_factory=list)
    test_accuracy: float | None = None
    wall_time_s: float = 0.0

    def to_json(self) -> dict:
        return {
            "train_loss": self.train_loss,
            "val_accuracy": self.val_accuracy,
            "test_accuracy": self.test_accuracy,
            "wall_time_s": self.wall_time_s,
        }


class PairDataset:
    """Comparison pairs plus the prompt/asset pixels they reference."""

    def __init__(self, prompt_images: dict, assets: dict,
                 train: Sequence[ComparisonPair],
                 val: Sequence[ComparisonPair] = (),
                 test: Sequence[ComparisonPair] = ()):
        self.prompt_images = prompt_images      # prompt_id -> HxWx3 array
        self.assets = assets                    # asset_id -> MultiViewAsset
        self.train = list(train)
        self.val = list(val)
        self.test = list(test)
        self._prompt_cache: dict = {}
        self._asset_cache: dict = {}
        self._dtype = None

    def _ensure_dtype(self, dtype):
        if self._dtype != dtype:
            self._prompt_cache.clear()
            self._asset_cache.clear()
            self._dtype = dtype

    def prompt_tensor(self, prompt_id: str, dtype) -> torch.Tensor:
        self._ensure_dtype(dtype)
        if prompt_id not in self._prompt_cache:
            self._prompt_cache[prompt_id] = image_to_tensor(
                self.prompt_images[prompt_id], dtype)
        return self._prompt_cache[prompt_id]

    def asset_tensor(self, asset_id: str, dtype) -> torch.Tensor:
        self._ensure_dtype(dtype)
        if asset_id not in self._asset_cache:
            self._asset_cache[asset_id] = asset_to_tensor(
                self.assets[asset_id], dtype)
        return self._asset_cache[asset_id]

    def batch_tensors(self, pairs: Sequence[ComparisonPair], dtype):
        prompts = torch.stack([self.prompt_tensor(p.prompt_id, dtype) for p in pairs])
        winners = torch.stack([self.asset_tensor(p.winner_asset_id, dtype) for p in pairs])
        losers = torch.stack([self.asset_tensor(p.loser_asset_id, dtype) for p in pairs])
        return prompts, winners, losers


def _lr_factor(step: int, total: int, schedule: str) -> float:
    if schedule == "constant" or total <= 1:
        return 1.0
    progress = step / max(total - 1, 1)
    return 0.5 * (1.0 + math.cos(math.pi * progress))


def train_reward(model: MultiViewRewardModel, data: PairDataset,
                 cfg: TrainConfig):
    """Fit the model on data.train; returns (model, TrainReport).

    Frozen parameters are excluded from the optimizer, so they receive no
    updates.  Deterministic for a fixed seed and thread count.
    """
    if not data.train:
        raise ValidationError("train split is empty")
    t0 = time.monotonic()
    torch.manual_seed(derive_seed("train-reward", cfg.seed))
    rng = make_generator("train-reward-shuffle", cfg.seed)
    dtype = next(model.parameters()).dtype
    n_views = model.cfg.n_views

    params = model.trainable_parameters()
    optimizer = torch.optim.AdamW(params, lr=cfg.learning_rate)
    n_batches = math.ceil(len(data.train) / cfg.batch_size)
    total_steps = max(cfg.epochs * n_batches, 1)

    report = TrainReport()
    step = 0
    for _ in range(cfg.epochs):
        model.train()
        order = rng.permutation(len(data.train))
        epoch_losses = []
        for start in range(0, len(order), cfg.batch_size):
            batch = [data.train[i] for i in order[start:start + cfg.batch_size]]
            prompts, winners, losers = data.batch_tensors(batch, dtype)
            for group in optimizer.param_groups:
                group["lr"] = cfg.learning_rate * _lr_factor(step, total_steps, cfg.schedule)

            r_w = model(prompts, winners)
            r_l = model(prompts, losers)
            loss = pairwise_loss(r_w, r_l).mean()
            if cfg.negatives_enabled:
                originals = torch.cat([winners, losers])
                reversed_ = reverse_modality_views(originals, n_views)
                both_prompts = torch.cat([prompts, prompts])
                r_orig = torch.cat([r_w, r_l])
                r_rev = model(both_prompts, reversed_)
                loss = loss + cfg.negative_weight * pairwise_loss(r_orig, r_rev).mean()

            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            epoch_losses.append(float(loss.detach()))
            step += 1
        report.train_loss.append(float(np.mean(epoch_losses)))
        report.val_accuracy.append(
            eval_pair_accuracy(model, data.val, data) if data.val else float("nan"))

    if data.test:
        report.test_accuracy = eval_pair_accuracy(model, data.test, data)
    report.wall_time_s = time.monotonic() - t0
    return model, report


@torch.no_grad()
def eval_pair_accuracy(model: MultiViewRewardModel, pairs: Sequence[ComparisonPair],
                       data: PairDataset, batch_size: int = 32) -> float:
    """Fraction of pairs ranked correctly; score ties count as failures."""
    if not pairs:
        raise ValidationError("no pairs to evaluate")
    model.eval()
    dtype = next(model.parameters()).dtype
    correct = 0
    for start in range(0, len(pairs), batch_size):
        batch = list(pairs[start:start + batch_size])
        prompts, winners, losers = data.batch_tensors(batch, dtype)
        r_w = model(prompts, winners)
        r_l = model(prompts, losers)
        correct += int((r_w > r_l).sum())
    return correct / len(pairs)


@torch.no_grad()
def modality_discrimination_accuracy(model: MultiViewRewardModel,
                                     asset_ids: Sequence[str],
                                     data: PairDataset,
                                     batch_size: int = 32) -> float:
    """Fraction of assets scored above their modality-reversed copy."""
    if not asset_ids:
        raise ValidationError("no assets to evaluate")
    model.eval()
    dtype = next(model.parameters()).dtype
    n_views = model.cfg.n_views
    correct = 0
    ids = list(asset_ids)
    for start in range(0, len(ids), batch_size):
        chunk = ids[start:start + batch_size]
        views = torch.stack([data.asset_tensor(a, dtype) for a in chunk])
        prompts = torch.stack([
            data.prompt_tensor(data.assets[a].prompt_id, dtype) for a in chunk])
        r_orig = model(prompts, views)
        r_rev = model(prompts, reverse_modality_views(views, n_views))
        correct += int((r_orig > r_rev).sum())
    return correct / len(ids)
