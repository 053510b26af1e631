"""Multi-view preference scorer.

Pipeline per asset:
  1. a shared patch-token transformer trunk encodes the prompt image and
     every generated view independently (one parameter set for all views);
  2. per view, a cross-attention fusion stage integrates the view tokens
     (queries) with the prompt tokens (keys/values); a learned global token
     is prepended and summarizes the joint encoding;
  3. the global tokens form a sequence, one per (domain, view) slot in
     canonical asset order, which receives additive learned positional
     embeddings per slot, passes a multi-view self-attention block, and is
     concatenated into an MLP producing one scalar.

Stage 2 never sees the slot index, so parameter sharing is exact: the same
(prompt, view) pixels produce the same pre-positional tokens in any slot.
"""

import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import torch
import torch.nn as nn

from ..errors import ValidationError
from ..rng import derive_seed
from ..dataset.types import DOMAINS, MultiViewAsset

CHECKPOINT_VERSION = 1


@dataclass
class RewardModelConfig:
    n_views: int = 6
    domains: tuple = DOMAINS
    image_size: int = 32
    patch_size: int = 8
    token_dim: int = 32
    n_heads: int = 4
    encoder_depth: int = 2
    scorer_hidden_layers: int = 2
    freeze_fraction: float = 0.5
    use_mv_self_attention: bool = True
    use_positional_encoding: bool = True
    init_checkpoint: str | None = None

    def __post_init__(self):
        self.domains = tuple(self.domains)
        if self.token_dim % self.n_heads != 0:
            raise ValidationError("token_dim must be divisible by n_heads")
        if self.image_size % self.patch_size != 0:
            raise ValidationError("image_size must be divisible by patch_size")
        if not 0.0 <= self.freeze_fraction <= 1.0:
            raise ValidationError("freeze_fraction must be in [0, 1]")

    @property
    def sequence_length(self) -> int:
        return self.n_views * len(self.domains)

    def to_json(self) -> dict:
        d = asdict(self)
        d["domains"] = list(self.domains)
        return d

    @classmethod
    def from_json(cls, obj: dict) -> "RewardModelConfig":
        obj = dict(obj)
        obj["domains"] = tuple(obj.get("domains", DOMAINS))
        return cls(**obj)


class TransformerBlock(nn.Module):
    """Pre-norm self-attention + MLP block."""

    def __init__(self, dim: int, n_heads: int):
        super().__init__()
        self.norm1 = nn.LayerNorm(dim)
        self.attn = nn.MultiheadAttention(dim, n_heads, batch_first=True)
        self.norm2 = nn.LayerNorm(dim)
        self.mlp = nn.Sequential(
            nn.Linear(dim, 2 * dim), nn.GELU(), nn.Linear(2 * dim, dim)
        )

    def forward(self, x):
        h = self.norm1(x)
        x = x + self.attn(h, h, h, need_weights=False)[0]
        return x + self.mlp(self.norm2(x))


class ImageTrunk(nn.Module):
    """Shared patch-token encoder applied to prompts and views alike."""

    def __init__(self, cfg: RewardModelConfig):
        super().__init__()
        self.patch_size = cfg.patch_size
        self.image_size = cfg.image_size
        n_patches = (cfg.image_size // cfg.patch_size) ** 2
        self.patch_embed = nn.Linear(3 * cfg.patch_size ** 2, cfg.token_dim)
        self.patch_pos = nn.Parameter(torch.zeros(1, n_patches, cfg.token_dim))
        nn.init.trunc_normal_(self.patch_pos, std=0.02)
        self.blocks = nn.ModuleList(
            TransformerBlock(cfg.token_dim, cfg.n_heads) for _ in range(cfg.encoder_depth)
        )
        self.norm = nn.LayerNorm(cfg.token_dim)

    def patchify(self, images: torch.Tensor) -> torch.Tensor:
        b, c, h, w = images.shape
        if c != 3 or h != self.image_size or w != self.image_size:
            raise ValidationError(
                f"expected images of shape (*, 3, {self.image_size}, {self.image_size}), "
                f"got (*, {c}, {h}, {w})"
            )
        p = self.patch_size
        x = images.unfold(2, p, p).unfold(3, p, p)       # (b, 3, gh, gw, p, p)
        x = x.permute(0, 2, 3, 1, 4, 5).reshape(b, -1, 3 * p * p)
        return x

    def forward(self, images: torch.Tensor) -> torch.Tensor:
        x = self.patch_embed(self.patchify(images)) + self.patch_pos
        for block in self.blocks:
            x = block(x)
        return self.norm(x)

    def depth_ordered_groups(self):
        """(name, module) pairs from shallowest to deepest, for freezing."""
        groups = [("patch_embed", [self.patch_embed, self.patch_pos])]
        for i, block in enumerate(self.blocks):
            groups.append((f"block_{i}", [block]))
        groups.append(("norm", [self.norm]))
        return groups


class ViewPairFusion(nn.Module):
    """Joint encoding of one (prompt, view) token pair with a leading global token."""

    def __init__(self, cfg: RewardModelConfig):
        super().__init__()
        self.cls_token = nn.Parameter(torch.zeros(1, 1, cfg.token_dim))
        nn.init.trunc_normal_(self.cls_token, std=0.02)
        self.norm_q = nn.LayerNorm(cfg.token_dim)
        self.norm_kv = nn.LayerNorm(cfg.token_dim)
        self.cross_attn = nn.MultiheadAttention(cfg.token_dim, cfg.n_heads, batch_first=True)
        self.block = TransformerBlock(cfg.token_dim, cfg.n_heads)

    def forward(self, view_tokens: torch.Tensor, prompt_tokens: torch.Tensor) -> torch.Tensor:
        b = view_tokens.shape[0]
        x = torch.cat([self.cls_token.expand(b, -1, -1), view_tokens], dim=1)
        kv = self.norm_kv(prompt_tokens)
        x = x + self.cross_attn(self.norm_q(x), kv, kv, need_weights=False)[0]
        return self.block(x)


class Scorer(nn.Module):
    """Positional encoding + multi-view self-attention + MLP head."""

    def __init__(self, cfg: RewardModelConfig):
        super().__init__()
        self.cfg = cfg
        seq = cfg.sequence_length
        self.pos_embed = nn.Parameter(torch.zeros(1, seq, cfg.token_dim))
        nn.init.trunc_normal_(self.pos_embed, std=0.02)
        self.mv_block = TransformerBlock(cfg.token_dim, cfg.n_heads)
        layers: list = []
        width = seq * cfg.token_dim
        for _ in range(cfg.scorer_hidden_layers):
            layers += [nn.Linear(width, cfg.token_dim), nn.GELU()]
            width = cfg.token_dim
        layers.append(nn.Linear(width, 1))
        self.mlp = nn.Sequential(*layers)

    def add_positions(self, tokens: torch.Tensor) -> torch.Tensor:
        if tokens.shape[1] != self.cfg.sequence_length:
            raise ValidationError(
                f"expected {self.cfg.sequence_length} tokens, got {tokens.shape[1]}"
            )
        if not self.cfg.use_positional_encoding:
            return tokens
        return tokens + self.pos_embed

    def forward(self, tokens: torch.Tensor) -> torch.Tensor:
        x = self.add_positions(tokens)
        if self.cfg.use_mv_self_attention:
            x = self.mv_block(x)
        return self.mlp(x.flatten(1)).squeeze(-1)


class MultiViewRewardModel(nn.Module):
    def __init__(self, cfg: RewardModelConfig, seed: int | None = None):
        super().__init__()
        if seed is not None:
            torch.manual_seed(derive_seed("reward-model-init", seed))
        self.cfg = cfg
        self.trunk = ImageTrunk(cfg)
        self.fusion = ViewPairFusion(cfg)
        self.scorer = Scorer(cfg)
        self._frozen_names: set = set()
        if cfg.init_checkpoint:
            self.load_backbone_weights(cfg.init_checkpoint)
        if cfg.freeze_fraction > 0:
            self.apply_freeze()

    # -- encoding stages ----------------------------------------------------

    def encode_view_pair(self, prompt: torch.Tensor, view: torch.Tensor) -> torch.Tensor:
        """Joint token sequence for one view, global token first.

        Accepts (3, H, W) or batched (B, 3, H, W) tensors.  Slot-free: the
        same inputs give the same output whatever position the view will
        occupy in the asset.
        """
        squeeze = prompt.dim() == 3
        if squeeze:
            prompt, view = prompt[None], view[None]
        joint = self.fusion(self.trunk(view), self.trunk(prompt))
        return joint[0] if squeeze else joint

    def build_multiview_encoding(self, prompt: torch.Tensor, views: torch.Tensor) -> torch.Tensor:
        """Global token per view slot: (B, V, token_dim) in canonical order."""
        squeeze = views.dim() == 4
        if squeeze:
            prompt, views = prompt[None], views[None]
        b, v = views.shape[0], views.shape[1]
        if v != self.cfg.sequence_length:
            raise ValidationError(
                f"asset has {v} views, config expects {self.cfg.sequence_length}"
            )
        prompt_tokens = self.trunk(prompt)                       # (B, P, D)
        view_tokens = self.trunk(views.reshape(b * v, *views.shape[2:]))
        joint = self.fusion(view_tokens,
                            prompt_tokens.repeat_interleave(v, dim=0))
        cls = joint[:, 0].reshape(b, v, -1)
        return cls[0] if squeeze else cls

    def apply_positional_encoding(self, tokens: torch.Tensor) -> torch.Tensor:
        squeeze = tokens.dim() == 2
        out = self.scorer.add_positions(tokens[None] if squeeze else tokens)
        return out[0] if squeeze else out

    def forward(self, prompt: torch.Tensor, views: torch.Tensor) -> torch.Tensor:
        """Scalar preference score per asset: (B,) for batched input."""
        squeeze = views.dim() == 4
        if squeeze:
            prompt, views = prompt[None], views[None]
        tokens = self.build_multiview_encoding(prompt, views)
        scores = self.scorer(tokens)
        return scores[0] if squeeze else scores

    def score_asset(self, prompt_image: np.ndarray, asset: MultiViewAsset) -> float:
        """Score a domain-object asset in evaluation mode."""
        self.eval()
        dtype = next(self.parameters()).dtype
        with torch.no_grad():
            value = self(
                image_to_tensor(prompt_image, dtype),
                asset_to_tensor(asset, dtype),
            ).item()
        if not math.isfinite(value):
            raise ValidationError(f"non-finite reward score: {value}")
        return value

    # -- freezing -----------------------------------------------------------

    def apply_freeze(self) -> None:
        """Freeze the earliest trunk stages until the configured parameter
        fraction is reached."""
        groups = self.trunk.depth_ordered_groups()
        total = sum(p.numel() for p in self.trunk.parameters())
        target = self.cfg.freeze_fraction * total
        frozen = 0
        self._frozen_names = set()
        for name, members in groups:
            if frozen >= target:
                break
            for member in members:
                params = ([member] if isinstance(member, nn.Parameter)
                          else list(member.parameters()))
                for p in params:
                    p.requires_grad_(False)
                    frozen += p.numel()
            self._frozen_names.add(name)

    def frozen_parameter_names(self) -> set:
        """Fully qualified names of parameters excluded from training."""
        out = set()
        for name, p in self.named_parameters():
            if not p.requires_grad:
                out.add(name)
        return out

    def trainable_parameters(self):
        return [p for p in self.parameters() if p.requires_grad]

    # -- weight loading -----------------------------------------------------

    def load_backbone_weights(self, path: str | Path) -> None:
        """Optional hook: seed the shared trunk from a saved checkpoint."""
        payload = torch.load(path, map_location="cpu", weights_only=True)
        state = payload.get("state", payload)
        trunk_state = {k[len("trunk."):]: v for k, v in state.items()
                       if k.startswith("trunk.")}
        if not trunk_state:
            raise ValidationError(f"no trunk weights found in {path}")
        self.trunk.load_state_dict(trunk_state)


# -- tensor adapters ---------------------------------------------------------

def image_to_tensor(image: np.ndarray, dtype=torch.float32) -> torch.Tensor:
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValidationError(f"expected HxWx3 image, got shape {arr.shape}")
    return torch.from_numpy(arr.transpose(2, 0, 1).copy()).to(dtype)


def asset_to_tensor(asset: MultiViewAsset, dtype=torch.float32) -> torch.Tensor:
    asset.validate()
    return torch.stack([image_to_tensor(v.image, dtype) for v in asset.views])


# -- checkpoints --------------------------------------------------------------

def save_checkpoint(model: MultiViewRewardModel, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    torch.save({
        "format_version": CHECKPOINT_VERSION,
        "kind": "reward_model",
        "config": model.cfg.to_json(),
        "state": model.state_dict(),
    }, path)


def load_checkpoint(path: str | Path) -> MultiViewRewardModel:
    payload = torch.load(path, map_location="cpu", weights_only=True)
    if payload.get("kind") != "reward_model":
        raise ValidationError(f"{path} is not a reward model checkpoint")
    if payload.get("format_version") != CHECKPOINT_VERSION:
        raise ValidationError(
            f"unsupported checkpoint version {payload.get('format_version')}"
        )
    cfg_json = dict(payload["config"])
    cfg_json["init_checkpoint"] = None
    cfg = RewardModelConfig.from_json(cfg_json)
    model = MultiViewRewardModel(cfg)
    state = payload["state"]
    dtype = next(iter(state.values())).dtype
    model.to(dtype)
    model.load_state_dict(state)
    return model
