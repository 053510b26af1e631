"""Variance-preserving noise schedule with exact one-step inversion.

Forward at step t:      x_t = sqrt(abar_t) x0 + sqrt(1 - abar_t) eps
One-step estimate:      x0' = (x_t - sqrt(1 - abar_t) eps_hat) / sqrt(abar_t)

abar is the cumulative product of (1 - beta) and is kept in float64, so the
round trip with the true noise is exact to ~1e-12 at every step.  One noise
grid is broadcast across all views and domains of an example: callers pass
eps without the view axis and the same sample lands on every view.
"""

import math

import numpy as np
import torch

from ..errors import ValidationError

ALPHA_BAR_FLOOR = 1e-12
COSINE_OFFSET = 0.008
MAX_BETA = 0.999


def _linear_betas(t_steps: int) -> np.ndarray:
    return np.linspace(1e-4, 0.02, t_steps, dtype=np.float64)


def _cosine_betas(t_steps: int) -> np.ndarray:
    def abar(u: float) -> float:
        return math.cos((u + COSINE_OFFSET) / (1 + COSINE_OFFSET) * math.pi / 2) ** 2

    betas = np.empty(t_steps, dtype=np.float64)
    for t in range(t_steps):
        betas[t] = min(1.0 - abar((t + 1) / t_steps) / abar(t / t_steps), MAX_BETA)
    return betas


class NoiseScheduler:
    SCHEDULES = ("linear", "cosine")

    def __init__(self, t_steps: int = 1000, schedule: str = "linear"):
        if t_steps < 1:
            raise ValidationError("need at least one diffusion step")
        if schedule not in self.SCHEDULES:
            raise ValidationError(f"unknown beta schedule {schedule!r}")
        self.t_steps = t_steps
        self.schedule = schedule
        self.betas = _linear_betas(t_steps) if schedule == "linear" else _cosine_betas(t_steps)
        self.alphas = 1.0 - self.betas
        self.alpha_bar = np.cumprod(self.alphas)

    def _check_t(self, t: int) -> int:
        t = int(t)
        if not 0 <= t < self.t_steps:
            raise ValidationError(f"t={t} outside [0, {self.t_steps})")
        return t

    def add_noise(self, x0: torch.Tensor, eps: torch.Tensor, t: int) -> torch.Tensor:
        """Noise all views of x0 with one shared grid.

        x0 is (..., V, C, H, W); eps is the same shape minus the view axis
        and is broadcast so every view receives the identical sample.
        """
        t = self._check_t(t)
        if eps.dim() != x0.dim() - 1 or eps.shape != x0.shape[:-4] + x0.shape[-3:]:
            raise ValidationError(
                f"eps must be one grid per example (shape {tuple(x0.shape[:-4] + x0.shape[-3:])}), "
                f"got {tuple(eps.shape)}"
            )
        abar = float(self.alpha_bar[t])
        return math.sqrt(abar) * x0 + math.sqrt(1.0 - abar) * eps.unsqueeze(-4)

    def estimate_x0(self, x_t: torch.Tensor, eps_hat: torch.Tensor, t: int) -> torch.Tensor:
        """One-step origin estimate from a noise prediction."""
        t = self._check_t(t)
        abar = float(self.alpha_bar[t])
        if abar < ALPHA_BAR_FLOOR:
            raise ValidationError(
                f"alpha_bar[{t}]={abar:.3e} below floor {ALPHA_BAR_FLOOR}; "
                "one-step estimate would amplify rounding error"
            )
        if eps_hat.shape == x_t.shape[:-4] + x_t.shape[-3:]:
            eps_hat = eps_hat.unsqueeze(-4)  # a shared grid, like add_noise
        elif eps_hat.shape != x_t.shape:
            raise ValidationError(
                f"eps_hat shape {tuple(eps_hat.shape)} != x_t shape {tuple(x_t.shape)}"
            )
        return (x_t - math.sqrt(1.0 - abar) * eps_hat) / math.sqrt(abar)

    def to_json(self) -> dict:
        return {"t_steps": self.t_steps, "schedule": self.schedule}

    @classmethod
    def from_json(cls, obj: dict) -> "NoiseScheduler":
        return cls(t_steps=obj["t_steps"], schedule=obj["schedule"])
