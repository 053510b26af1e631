"""Synthetic multi-view assets with a known quality ordering.

Stands in for real multi-view generation at desk scale: each view is the
prompt image under a per-view geometric transform, degraded by Gaussian
noise, box blur and a hue shift whose magnitudes are linear in (1 - quality).
Normal-map views come from an analytic height field (a Gaussian bump whose
center orbits with view index); their corruption perturbs the normal
directions and renormalizes, so every emitted normal map encodes exact unit
vectors regardless of quality.

Generation is a pure function of (prompt, quality, seed): repeated calls are
byte-identical.
"""

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from ..errors import ValidationError
from ..imageio import load_image
from ..rng import make_generator
from .types import DOMAINS, ImagePrompt, MultiViewAsset, ViewImage

NOISE_SIGMA_MAX = 0.25
NORMAL_NOISE_MAX = 0.8
HUE_MIX_MAX = 0.5
BLUR_STEPS_MAX = 2  # box blur half-width at quality 0


@dataclass(frozen=True)
class SyntheticAssetConfig:
    n_views: int = 6
    domains: tuple = DOMAINS
    image_size: int = 32
    bump_sigma: float = 0.35   # height-field width, fraction of half-image
    bump_radius: float = 0.25  # orbit radius of the bump center


def _blur_kernel_size(corruption: float) -> int:
    return 1 + 2 * int(round(BLUR_STEPS_MAX * corruption))


def _rgb_view(prompt_image: np.ndarray, k: int, n_views: int,
              corruption: float, rng: np.random.Generator) -> np.ndarray:
    h, w, _ = prompt_image.shape
    img = np.roll(prompt_image, shift=(k * w) // n_views, axis=1)
    size = _blur_kernel_size(corruption)
    if size > 1:
        img = ndimage.uniform_filter(img, size=(size, size, 1), mode="wrap")
    mix = HUE_MIX_MAX * corruption
    if mix > 0:
        img = (1 - mix) * img + mix * img[:, :, [1, 2, 0]]
    if corruption > 0:
        img = img + rng.normal(0.0, NOISE_SIGMA_MAX * corruption, size=img.shape)
    return np.clip(img, 0.0, 1.0)


def _normal_field(size: int, k: int, n_views: int, cfg: SyntheticAssetConfig) -> np.ndarray:
    """Unit normals of a Gaussian bump whose center orbits with the view index."""
    coords = np.linspace(-1.0, 1.0, size)
    y, x = np.meshgrid(coords, coords, indexing="ij")
    angle = 2.0 * np.pi * k / n_views
    cx = cfg.bump_radius * np.cos(angle)
    cy = cfg.bump_radius * np.sin(angle)
    sigma2 = cfg.bump_sigma ** 2
    height = np.exp(-((x - cx) ** 2 + (y - cy) ** 2) / (2 * sigma2))
    dhdx = -(x - cx) / sigma2 * height
    dhdy = -(y - cy) / sigma2 * height
    vec = np.stack([-dhdx, -dhdy, np.ones_like(height)], axis=2)
    return vec / np.linalg.norm(vec, axis=2, keepdims=True)


def _normal_view(size: int, k: int, cfg: SyntheticAssetConfig,
                 corruption: float, rng: np.random.Generator) -> np.ndarray:
    vec = _normal_field(size, k, cfg.n_views, cfg)
    if corruption > 0:
        vec = vec + rng.normal(0.0, NORMAL_NOISE_MAX * corruption, size=vec.shape)
        blur = _blur_kernel_size(corruption)
        if blur > 1:
            vec = ndimage.uniform_filter(vec, size=(blur, blur, 1), mode="nearest")
        norms = np.linalg.norm(vec, axis=2, keepdims=True)
        vec = vec / np.maximum(norms, 1e-9)
    return (vec + 1.0) / 2.0


def generate_synthetic_asset(
    prompt: ImagePrompt,
    quality: float,
    seed: int,
    config: SyntheticAssetConfig = SyntheticAssetConfig(),
    prompt_image: np.ndarray | None = None,
    asset_id: str | None = None,
    method_id: str = "synthetic",
    inference_steps: int = 20,
) -> MultiViewAsset:
    """Deterministic asset whose corruption decreases monotonically in quality."""
    if not 0.0 <= quality <= 1.0:
        raise ValidationError(f"quality must be in [0, 1], got {quality}")
    if prompt_image is None:
        prompt_image = load_image(prompt.image_path)
    prompt_image = np.asarray(prompt_image, dtype=np.float64)
    corruption = 1.0 - quality
    rng = make_generator("synth-asset", prompt.id, f"{quality:.6f}", seed, method_id)

    views = []
    size = prompt_image.shape[0]
    for domain in config.domains:
        for k in range(config.n_views):
            if domain == "rgb":
                img = _rgb_view(prompt_image, k, config.n_views, corruption, rng)
            else:
                img = _normal_view(size, k, config, corruption, rng)
            views.append(ViewImage(domain=domain, view_index=k, image=img))

    asset = MultiViewAsset(
        id=asset_id or f"{prompt.id}_{method_id}_q{quality:.3f}_s{seed}",
        prompt_id=prompt.id,
        method_id=method_id,
        inference_steps=inference_steps,
        views=views,
    )
    asset.validate()
    return asset


def generate_prompt_image(prompt_id: str, size: int, seed: int) -> np.ndarray:
    """A colorful deterministic test-card image standing in for a real prompt."""
    rng = make_generator("synth-prompt", prompt_id, seed)
    coords = np.linspace(0.0, 1.0, size)
    y, x = np.meshgrid(coords, coords, indexing="ij")
    freq = rng.uniform(1.5, 4.5, size=3)
    phase = rng.uniform(0.0, 2.0 * np.pi, size=3)
    rot = rng.uniform(0.0, np.pi)
    u = x * np.cos(rot) + y * np.sin(rot)
    v = -x * np.sin(rot) + y * np.cos(rot)
    channels = [
        0.5 + 0.5 * np.sin(2 * np.pi * freq[0] * u + phase[0]),
        0.5 + 0.5 * np.sin(2 * np.pi * freq[1] * v + phase[1]),
        0.5 + 0.5 * np.sin(2 * np.pi * freq[2] * (u + v) + phase[2]),
    ]
    return np.stack(channels, axis=2)
