"""Reward-feedback fine-tuning of the toy multi-view diffusion model.

Each step noises the ground-truth views at a randomly chosen mid point of
the denoising trajectory, predicts the noise, and derives two losses from
the one prediction: the pretraining MSE, and a reward loss obtained by
one-step-estimating the origin, decoding it, and scoring it with the frozen
reward model.  The update minimizes lambda * L_pt + L_rm; pt-only mode drops
the reward term and reproduces plain continued pretraining.

The mid point is sampled on the denoising-progress axis (t counts noise
already removed), and converted to a scheduler index as T - 1 - t: late
progress means little remaining noise, where one-step origin estimates are
trustworthy enough to score.
"""

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import torch

from ..errors import ValidationError
from ..rng import derive_seed, make_generator
from ..diffusion.model import MultiViewDiffusion
from ..diffusion.pretrain import DiffusionCorpus, pretrain_loss
from ..diffusion.scheduler import NoiseScheduler
from ..reward.model import MultiViewRewardModel

PSI_CHOICES = ("negated", "softplus_negated")
MODES = ("mvp", "pt-only")

TRAINABLE_SCOPES = {
    "all": ("",),  # every denoiser parameter
    "attention": ("prompt_attn.", "cross_view_attn.", "norm_q.", "norm_kv.", "norm_cv."),
    "cross_view": ("cross_view_attn.", "norm_cv."),
    "output": ("dec1.", "dec2."),
}


def reward_to_loss(r, psi: str):
    """Map a reward to a minimizable loss; strictly decreasing in r."""
    if psi == "negated":
        return -r
    if psi == "softplus_negated":
        if isinstance(r, torch.Tensor):
            return torch.nn.functional.softplus(-r)
        return math.log1p(math.exp(-r)) if r >= 0 else -r + math.log1p(math.exp(r))
    raise ValidationError(f"unknown reward-to-loss map {psi!r}")


def sample_mid_step(t_steps: int, midstep_range, rng: np.random.Generator) -> int:
    """Uniform progress index in [floor(lo*T), ceil(hi*T)], clamped into range.

    The final progress step is excluded whenever the upper fraction is below
    one, so the fully-denoised endpoint is never scored.
    """
    if t_steps < 2:
        raise ValidationError("need at least two steps to pick a mid step")
    low, high = midstep_range
    if not 0 < low <= high < 1:
        raise ValidationError(f"midstep range must satisfy 0 < lo <= hi < 1, got {midstep_range}")
    lo = int(math.floor(low * t_steps))
    hi = min(int(math.ceil(high * t_steps)), t_steps - 2)
    lo = max(lo, 0)
    if lo > hi:
        raise ValidationError(
            f"empty mid-step window for T={t_steps}, range={midstep_range}"
        )
    return int(rng.integers(lo, hi + 1))


@dataclass
class TuningConfig:
    trainable_scope: str  # required: which denoiser submodules may move
    lambda_pt: float = 10.0
    psi: str = "softplus_negated"
    midstep_range: tuple = (0.75, 0.99)
    learning_rate: float = 5e-6
    warmup_steps: int = 10
    steps: int = 100
    batch_size: int = 4
    mode: str = "mvp"
    seed: int = 0
    checkpoint_every: int = 0  # 0 = no periodic checkpoints

    def __post_init__(self):
        if self.trainable_scope not in TRAINABLE_SCOPES:
            raise ValidationError(
                f"unknown trainable_scope {self.trainable_scope!r}; "
                f"choices: {sorted(TRAINABLE_SCOPES)}"
            )
        if self.lambda_pt <= 0:
            raise ValidationError("lambda must be > 0")
        if self.psi not in PSI_CHOICES:
            raise ValidationError(f"psi must be one of {PSI_CHOICES}")
        if self.mode not in MODES:
            raise ValidationError(f"mode must be one of {MODES}")
        low, high = self.midstep_range
        if not 0 < low <= high < 1:
            raise ValidationError("midstep_range must satisfy 0 < lo <= hi < 1")

    def to_json(self) -> dict:
        return {
            "trainable_scope": self.trainable_scope,
            "lambda": self.lambda_pt,
            "psi": self.psi,
            "midstep_range": list(self.midstep_range),
            "learning_rate": self.learning_rate,
            "warmup_steps": self.warmup_steps,
            "steps": self.steps,
            "batch_size": self.batch_size,
            "mode": self.mode,
            "seed": self.seed,
            "checkpoint_every": self.checkpoint_every,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "TuningConfig":
        obj = dict(obj)
        if "lambda" in obj:
            obj["lambda_pt"] = obj.pop("lambda")
        obj["midstep_range"] = tuple(obj.get("midstep_range", (0.75, 0.99)))
        return cls(**obj)


@dataclass
class TuningHistory:
    records: list = field(default_factory=list)
    checkpoint_steps: list = field(default_factory=list)

    def to_ndjson_records(self):
        return list(self.records)


def _check_compatible(model: MultiViewDiffusion, reward: MultiViewRewardModel) -> None:
    if (model.cfg.n_views, model.cfg.domains) != (reward.cfg.n_views, reward.cfg.domains):
        raise ValidationError(
            f"diffusion views {(model.cfg.n_views, model.cfg.domains)} incompatible "
            f"with reward model {(reward.cfg.n_views, reward.cfg.domains)}"
        )
    if model.cfg.image_size != reward.cfg.image_size:
        raise ValidationError(
            f"decoded image size {model.cfg.image_size} != reward input size "
            f"{reward.cfg.image_size}"
        )


def _select_trainable(model: MultiViewDiffusion, scope: str) -> list:
    prefixes = TRAINABLE_SCOPES[scope]
    trainable = []
    for name, p in model.denoiser.named_parameters():
        if any(name.startswith(pref) for pref in prefixes):
            p.requires_grad_(True)
            trainable.append(p)
        else:
            p.requires_grad_(False)
    for p in model.decoder.parameters():
        p.requires_grad_(False)
    if not trainable:
        raise ValidationError(f"trainable scope {scope!r} selects no parameters")
    return trainable


def combined_loss(model: MultiViewDiffusion, scheduler: NoiseScheduler,
                  reward_model: MultiViewRewardModel | None,
                  prompts: torch.Tensor, views: torch.Tensor,
                  cfg: TuningConfig, eps: torch.Tensor, timestep: int):
    """The per-step objective, with its reported parts.

    Returns (loss tensor, metrics).  In mvp mode the loss is
    lambda * L_pt + L_rm where L_rm scores the decoded one-step origin
    estimate; pt-only is plain L_pt.  Gradients flow through the decoder and
    origin estimate into the denoiser; the reward model only transmits them.
    """
    if cfg.mode == "mvp":
        if reward_model is None:
            raise ValidationError("mvp mode needs a reward model")
        _check_compatible(model, reward_model)

    x0 = model.encode(views)
    x_t = scheduler.add_noise(x0, eps, timestep)
    eps_hat = model.denoiser(x_t, prompts, timestep)
    loss_pt = pretrain_loss(eps.unsqueeze(1).expand_as(eps_hat), eps_hat)

    metrics = {"timestep": timestep, "loss_pt": float(loss_pt.detach()),
               "loss_rm": None, "mean_reward": None}
    if cfg.mode == "mvp":
        x0_est = scheduler.estimate_x0(x_t, eps_hat, timestep)
        decoded = model.decode(x0_est)
        reward_model.eval()
        rewards = reward_model(prompts, decoded)
        loss_rm = reward_to_loss(rewards, cfg.psi).mean()
        loss = cfg.lambda_pt * loss_pt + loss_rm
        metrics["loss_rm"] = float(loss_rm.detach())
        metrics["mean_reward"] = float(rewards.detach().mean())
        metrics["combined"] = cfg.lambda_pt * metrics["loss_pt"] + metrics["loss_rm"]
    else:
        loss = loss_pt
        metrics["combined"] = metrics["loss_pt"]
    return loss, metrics


def tuning_step(model: MultiViewDiffusion, scheduler: NoiseScheduler,
                reward_model: MultiViewRewardModel | None,
                prompts: torch.Tensor, views: torch.Tensor,
                cfg: TuningConfig, optimizer: torch.optim.Optimizer,
                rng: np.random.Generator) -> dict:
    """One combined-loss update; returns the step's reported metrics."""
    dtype = next(model.denoiser.parameters()).dtype
    progress = sample_mid_step(scheduler.t_steps, cfg.midstep_range, rng)
    timestep = scheduler.t_steps - 1 - progress
    s = model.cfg.latent_size
    shape = (views.shape[0], 3, s, s) if views.dim() == 5 else (3, s, s)
    eps = torch.from_numpy(rng.standard_normal(shape)).to(dtype)

    loss, metrics = combined_loss(model, scheduler, reward_model,
                                  prompts, views, cfg, eps, timestep)
    metrics["progress"] = progress
    optimizer.zero_grad()
    loss.backward()
    optimizer.step()
    return metrics


@torch.no_grad()
def mean_decoded_reward(model: MultiViewDiffusion, scheduler: NoiseScheduler,
                        reward_model: MultiViewRewardModel,
                        corpus: DiffusionCorpus, seed: int = 0,
                        midstep_range=(0.75, 0.99), n_draws: int = 4) -> float:
    """Fixed-protocol mean reward of decoded one-step estimates on a corpus."""
    _check_compatible(model, reward_model)
    model.eval()
    reward_model.eval()
    dtype = next(model.denoiser.parameters()).dtype
    rng = make_generator("mean-decoded-reward", seed)
    latents = model.encode(corpus.views.to(dtype))
    prompts = corpus.prompts.to(dtype)
    values = []
    for _ in range(n_draws):
        progress = sample_mid_step(scheduler.t_steps, midstep_range, rng)
        timestep = scheduler.t_steps - 1 - progress
        eps = torch.from_numpy(
            rng.standard_normal(latents.shape[:1] + latents.shape[2:])).to(dtype)
        x_t = scheduler.add_noise(latents, eps, timestep)
        eps_hat = model.denoiser(x_t, prompts, timestep)
        decoded = model.decode(scheduler.estimate_x0(x_t, eps_hat, timestep))
        values.append(float(reward_model(prompts, decoded).mean()))
    return float(np.mean(values))


def tune(model: MultiViewDiffusion, scheduler: NoiseScheduler,
         reward_model: MultiViewRewardModel | None,
         corpus: DiffusionCorpus, cfg: TuningConfig,
         checkpoint_dir=None):
    """Run the tuning loop; returns (model, TuningHistory).

    Only parameters inside cfg.trainable_scope move; the reward model (when
    present) is fully frozen.  Learning rate warms up linearly over
    cfg.warmup_steps and stays constant after.
    """
    if not len(corpus):
        raise ValidationError("empty tuning corpus")
    if cfg.mode == "mvp" and reward_model is None:
        raise ValidationError("mvp mode needs a reward model")
    torch.manual_seed(derive_seed("tune", cfg.seed))
    rng = make_generator("tune-sampling", cfg.seed)
    dtype = next(model.denoiser.parameters()).dtype
    if reward_model is not None:
        reward_model.requires_grad_(False)
        reward_model.eval()

    trainable = _select_trainable(model, cfg.trainable_scope)
    optimizer = torch.optim.AdamW(trainable, lr=cfg.learning_rate)
    history = TuningHistory()

    for step in range(cfg.steps):
        warm = min(1.0, (step + 1) / max(cfg.warmup_steps, 1))
        for group in optimizer.param_groups:
            group["lr"] = cfg.learning_rate * warm
        idx = rng.choice(len(corpus), size=min(cfg.batch_size, len(corpus)),
                         replace=False)
        idx = torch.from_numpy(np.ascontiguousarray(idx))
        metrics = tuning_step(
            model, scheduler, reward_model,
            corpus.prompts[idx].to(dtype), corpus.views[idx].to(dtype),
            cfg, optimizer, rng)
        metrics["step"] = step
        metrics["lr"] = cfg.learning_rate * warm
        history.records.append(metrics)
        if (checkpoint_dir is not None and cfg.checkpoint_every
                and (step + 1) % cfg.checkpoint_every == 0):
            from ..diffusion.model import save_diffusion_checkpoint

            save_diffusion_checkpoint(
                model, scheduler, f"{checkpoint_dir}/step_{step + 1:06d}.pt")
            history.checkpoint_steps.append(step + 1)
    return model, history
