"""Toy multi-view denoising diffusion model.

The denoiser is a small conv net applied per view with two attention stages:
prompt conditioning (view feature tokens attend to a conv embedding of the
prompt image) and a cross-view stage where tokens of all views of one
example attend to each other.  Zeroing the cross-view output projection
makes every view's prediction independent of the others, which is the
ablation hook the tests rely on.

Latents are pixels by default (decode = clamp to [0, 1]); latent mode uses a
fixed 2x average-pool encoder and a 2-layer learned upsampler ending in a
sigmoid, so decoded values stay in [0, 1] and the path is smooth for
gradient checks.
"""

import math
from dataclasses import asdict, dataclass
from pathlib import Path

import torch
import torch.nn as nn
import torch.nn.functional as F

from ..errors import ValidationError
from ..rng import derive_seed
from ..dataset.types import DOMAINS
from .scheduler import NoiseScheduler

DIFFUSION_CHECKPOINT_VERSION = 1


@dataclass
class DiffusionConfig:
    n_views: int = 2
    domains: tuple = DOMAINS
    image_size: int = 16
    hidden: int = 16
    n_heads: int = 2
    latent_space: bool = False

    def __post_init__(self):
        self.domains = tuple(self.domains)
        if self.hidden % self.n_heads != 0:
            raise ValidationError("hidden must be divisible by n_heads")
        if self.image_size % 2 != 0:
            raise ValidationError("image_size must be even")

    @property
    def total_views(self) -> int:
        return self.n_views * len(self.domains)

    @property
    def latent_size(self) -> int:
        return self.image_size // 2 if self.latent_space else self.image_size

    def to_json(self) -> dict:
        d = asdict(self)
        d["domains"] = list(self.domains)
        return d

    @classmethod
    def from_json(cls, obj: dict) -> "DiffusionConfig":
        obj = dict(obj)
        obj["domains"] = tuple(obj.get("domains", DOMAINS))
        return cls(**obj)


def sinusoidal_embedding(t: float, dim: int, dtype, device) -> torch.Tensor:
    half = dim // 2
    freqs = torch.exp(
        -math.log(10000.0) * torch.arange(half, dtype=dtype, device=device) / max(half - 1, 1)
    )
    angles = t * freqs
    return torch.cat([torch.sin(angles), torch.cos(angles)])


class MultiViewDenoiser(nn.Module):
    """Predicts the added noise for every view of an example jointly."""

    def __init__(self, cfg: DiffusionConfig):
        super().__init__()
        self.cfg = cfg
        f = cfg.hidden
        self.time_mlp = nn.Sequential(nn.Linear(f, f), nn.GELU(), nn.Linear(f, f))
        self.enc1 = nn.Conv2d(3, f, 3, padding=1)
        self.enc2 = nn.Conv2d(f, f, 3, padding=1)
        self.prompt_embed = nn.Sequential(
            nn.Conv2d(3, f, 3, stride=2, padding=1), nn.GELU(),
            nn.Conv2d(f, f, 3, padding=1),
        )
        self.norm_q = nn.LayerNorm(f)
        self.norm_kv = nn.LayerNorm(f)
        self.prompt_attn = nn.MultiheadAttention(f, cfg.n_heads, batch_first=True)
        self.norm_cv = nn.LayerNorm(f)
        self.cross_view_attn = nn.MultiheadAttention(f, cfg.n_heads, batch_first=True)
        self.dec1 = nn.Conv2d(f, f, 3, padding=1)
        self.dec2 = nn.Conv2d(f, 3, 3, padding=1)

    def forward(self, x_t: torch.Tensor, prompt: torch.Tensor, t: int) -> torch.Tensor:
        squeeze = x_t.dim() == 4
        if squeeze:
            x_t, prompt = x_t[None], prompt[None]
        b, v, c, h, w = x_t.shape
        if v != self.cfg.total_views:
            raise ValidationError(
                f"expected {self.cfg.total_views} views, got {v}"
            )
        if c != 3 or h != self.cfg.latent_size or w != self.cfg.latent_size:
            raise ValidationError(
                f"expected latents (*, {self.cfg.total_views}, 3, {self.cfg.latent_size}, "
                f"{self.cfg.latent_size}), got {tuple(x_t.shape)}"
            )
        dtype = x_t.dtype
        f = self.cfg.hidden

        t_emb = self.time_mlp(
            sinusoidal_embedding(float(t), f, dtype, x_t.device))
        feat = F.gelu(self.enc1(x_t.reshape(b * v, c, h, w)))
        feat = F.gelu(self.enc2(feat) + t_emb[None, :, None, None])

        tokens = feat.reshape(b * v, f, h * w).transpose(1, 2)     # (b*v, hw, f)
        p_tok = self.prompt_embed(prompt)                          # (b, f, h', w')
        p_tok = p_tok.flatten(2).transpose(1, 2)                   # (b, hw', f)
        p_tok = self.norm_kv(p_tok).repeat_interleave(v, dim=0)
        tokens = tokens + self.prompt_attn(
            self.norm_q(tokens), p_tok, p_tok, need_weights=False)[0]

        joint = tokens.reshape(b, v * h * w, f)                    # all views attend
        normed = self.norm_cv(joint)
        joint = joint + self.cross_view_attn(normed, normed, normed,
                                             need_weights=False)[0]

        feat = joint.reshape(b * v, h * w, f).transpose(1, 2).reshape(b * v, f, h, w)
        out = self.dec2(F.gelu(self.dec1(feat))).reshape(b, v, c, h, w)
        return out[0] if squeeze else out


class PixelDecoder(nn.Module):
    """Identity decoder for pixel-space latents: clamp to the image range."""

    def forward(self, latent: torch.Tensor) -> torch.Tensor:
        return latent.clamp(0.0, 1.0)


class LearnedDecoder(nn.Module):
    """2-layer upsampler from half-resolution latents to images in (0, 1)."""

    def __init__(self, cfg: DiffusionConfig):
        super().__init__()
        self.up = nn.ConvTranspose2d(3, cfg.hidden, 4, stride=2, padding=1)
        self.out = nn.Conv2d(cfg.hidden, 3, 3, padding=1)

    def forward(self, latent: torch.Tensor) -> torch.Tensor:
        squeeze = latent.dim() == 4
        if squeeze:
            latent = latent[None]
        b, v, c, h, w = latent.shape
        x = self.out(F.gelu(self.up(latent.reshape(b * v, c, h, w))))
        x = torch.sigmoid(x).reshape(b, v, 3, 2 * h, 2 * w)
        return x[0] if squeeze else x


class MultiViewDiffusion(nn.Module):
    """Denoiser + decoder pair sharing one config."""

    def __init__(self, cfg: DiffusionConfig, seed: int | None = None):
        super().__init__()
        if seed is not None:
            torch.manual_seed(derive_seed("diffusion-init", seed))
        self.cfg = cfg
        self.denoiser = MultiViewDenoiser(cfg)
        self.decoder = LearnedDecoder(cfg) if cfg.latent_space else PixelDecoder()

    def encode(self, images: torch.Tensor) -> torch.Tensor:
        """Images -> latents (identity in pixel mode, 2x average pool otherwise)."""
        if not self.cfg.latent_space:
            return images
        squeeze = images.dim() == 4
        if squeeze:
            images = images[None]
        b, v, c, h, w = images.shape
        lat = F.avg_pool2d(images.reshape(b * v, c, h, w), 2).reshape(b, v, c, h // 2, w // 2)
        return lat[0] if squeeze else lat

    def decode(self, latent: torch.Tensor) -> torch.Tensor:
        expect = (3, self.cfg.latent_size, self.cfg.latent_size)
        if tuple(latent.shape[-3:]) != expect:
            raise ValidationError(
                f"latent grids must be {expect}, got {tuple(latent.shape[-3:])}"
            )
        return self.decoder(latent)

    @torch.no_grad()
    def sample(self, prompt: torch.Tensor, scheduler: NoiseScheduler,
               seed: int = 0) -> torch.Tensor:
        """Plain ancestral sampling with shared per-step noise, for demos."""
        self.eval()
        dtype = next(self.denoiser.parameters()).dtype
        gen = torch.Generator().manual_seed(derive_seed("sample", seed))
        v = self.cfg.total_views
        size = self.cfg.latent_size
        grid = lambda: torch.randn((3, size, size), generator=gen, dtype=dtype)
        x = grid().unsqueeze(0).repeat(v, 1, 1, 1)
        for t in range(scheduler.t_steps - 1, -1, -1):
            eps_hat = self.denoiser(x, prompt, t)
            alpha = float(scheduler.alphas[t])
            abar = float(scheduler.alpha_bar[t])
            x = (x - (1 - alpha) / math.sqrt(1 - abar) * eps_hat) / math.sqrt(alpha)
            if t > 0:
                sigma = math.sqrt(float(scheduler.betas[t]))
                x = x + sigma * grid().unsqueeze(0)
        return self.decode(x)


def save_diffusion_checkpoint(model: MultiViewDiffusion, scheduler: NoiseScheduler,
                              path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    torch.save({
        "format_version": DIFFUSION_CHECKPOINT_VERSION,
        "kind": "mv_diffusion",
        "config": model.cfg.to_json(),
        "scheduler": scheduler.to_json(),
        "state": model.state_dict(),
    }, path)


def load_diffusion_checkpoint(path: str | Path):
    payload = torch.load(path, map_location="cpu", weights_only=True)
    if payload.get("kind") != "mv_diffusion":
        raise ValidationError(f"{path} is not a diffusion checkpoint")
    if payload.get("format_version") != DIFFUSION_CHECKPOINT_VERSION:
        raise ValidationError(
            f"unsupported checkpoint version {payload.get('format_version')}"
        )
    model = MultiViewDiffusion(DiffusionConfig.from_json(payload["config"]))
    state = payload["state"]
    model.to(next(iter(state.values())).dtype)
    model.load_state_dict(state)
    scheduler = NoiseScheduler.from_json(payload["scheduler"])
    return model, scheduler
