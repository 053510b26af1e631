"""Noise-prediction pretraining of the toy multi-view diffusion model."""

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import torch

from ..errors import ValidationError
from ..rng import derive_seed, make_generator
from ..dataset.types import ImagePrompt
from ..dataset.synthetic import SyntheticAssetConfig, generate_prompt_image, generate_synthetic_asset
from ..reward.model import asset_to_tensor, image_to_tensor
from .model import MultiViewDiffusion
from .scheduler import NoiseScheduler


def pretrain_loss(eps: torch.Tensor, eps_hat: torch.Tensor) -> torch.Tensor:
    """Mean squared error over every element of every view."""
    if eps.shape != eps_hat.shape:
        raise ValidationError(
            f"shape mismatch: eps {tuple(eps.shape)} vs eps_hat {tuple(eps_hat.shape)}"
        )
    return ((eps - eps_hat) ** 2).mean()


@dataclass
class DiffusionCorpus:
    """Paired (prompt image, ground-truth multi-view) tensors."""

    prompt_ids: list
    prompts: torch.Tensor   # (N, 3, H, W)
    views: torch.Tensor     # (N, V, 3, H, W)

    def __len__(self) -> int:
        return len(self.prompt_ids)


def make_synthetic_corpus(n_prompts: int, n_views: int, image_size: int,
                          seed: int, quality: float = 1.0,
                          dtype=torch.float32,
                          prefix: str = "dm") -> DiffusionCorpus:
    cfg = SyntheticAssetConfig(n_views=n_views, image_size=image_size)
    ids, prompts, views = [], [], []
    for i in range(n_prompts):
        pid = f"{prefix}{i:04d}"
        prompt = ImagePrompt(id=pid, source="generated", image_path=f"{pid}.png")
        img = generate_prompt_image(pid, image_size, seed)
        asset = generate_synthetic_asset(prompt, quality, seed, cfg, prompt_image=img)
        ids.append(pid)
        prompts.append(image_to_tensor(img, dtype))
        views.append(asset_to_tensor(asset, dtype))
    return DiffusionCorpus(ids, torch.stack(prompts), torch.stack(views))


@dataclass
class PretrainConfig:
    steps: int = 300
    batch_size: int = 8
    learning_rate: float = 1e-3
    seed: int = 0

    def to_json(self) -> dict:
        return {"steps": self.steps, "batch_size": self.batch_size,
                "learning_rate": self.learning_rate, "seed": self.seed}


@dataclass
class PretrainReport:
    losses: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {"losses": self.losses}


def pretrain(model: MultiViewDiffusion, scheduler: NoiseScheduler,
             corpus: DiffusionCorpus, cfg: PretrainConfig):
    """Minimize noise-prediction MSE; the model encodes images to latents
    itself, and one shared noise grid per example covers all views."""
    if not len(corpus):
        raise ValidationError("empty pretraining corpus")
    torch.manual_seed(derive_seed("pretrain", cfg.seed))
    rng = make_generator("pretrain-sampling", cfg.seed)
    dtype = next(model.denoiser.parameters()).dtype
    optimizer = torch.optim.AdamW(model.denoiser.parameters(), lr=cfg.learning_rate)
    latents_all = model.encode(corpus.views.to(dtype))

    report = PretrainReport()
    model.train()
    for _ in range(cfg.steps):
        idx = rng.choice(len(corpus), size=min(cfg.batch_size, len(corpus)),
                         replace=False)
        idx = torch.from_numpy(np.ascontiguousarray(idx))
        x0 = latents_all[idx]
        prompts = corpus.prompts[idx].to(dtype)
        t = int(rng.integers(0, scheduler.t_steps))
        eps = torch.randn(x0.shape[:1] + x0.shape[2:], dtype=dtype)
        x_t = scheduler.add_noise(x0, eps, t)
        eps_hat = model.denoiser(x_t, prompts, t)
        loss = pretrain_loss(eps.unsqueeze(1).expand_as(eps_hat), eps_hat)
        optimizer.zero_grad()
        loss.backward()
        optimizer.step()
        report.losses.append(float(loss.detach()))
    return model, report


@torch.no_grad()
def eval_pretrain_loss(model: MultiViewDiffusion, scheduler: NoiseScheduler,
                       corpus: DiffusionCorpus, seed: int = 0,
                       n_timesteps: int = 8) -> float:
    """Held-out noise-prediction loss under a fixed protocol.

    The noise draws and the timestep grid depend only on the seed, so two
    models evaluated with the same seed see identical inputs.
    """
    if not len(corpus):
        raise ValidationError("empty evaluation corpus")
    model.eval()
    dtype = next(model.denoiser.parameters()).dtype
    latents = model.encode(corpus.views.to(dtype))
    prompts = corpus.prompts.to(dtype)
    gen = torch.Generator().manual_seed(derive_seed("eval-pretrain", seed))
    eps = torch.randn(latents.shape[:1] + latents.shape[2:], generator=gen,
                      dtype=dtype)
    t_grid = [int(round(f * (scheduler.t_steps - 1)))
              for f in np.linspace(0.05, 0.95, n_timesteps)]
    losses = []
    for t in t_grid:
        x_t = scheduler.add_noise(latents, eps, t)
        eps_hat = model.denoiser(x_t, prompts, t)
        losses.append(float(pretrain_loss(eps.unsqueeze(1).expand_as(eps_hat), eps_hat)))
    return float(np.mean(losses))
