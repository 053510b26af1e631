"""Prompt catalog loading: one manifest line per prompt, images on disk."""

from pathlib import Path
from typing import Sequence

from ..errors import CatalogError, ValidationError
from ..imageio import load_image
from ..ndjson import read_ndjson, write_ndjson
from .types import ImagePrompt


def load_prompt_catalog(path: str | Path, verify_images: bool = True) -> list:
    """Load prompts from a manifest file (or a directory holding prompts.ndjson).

    Ids must be unique; every referenced image must exist and decode to a
    3-channel grid.  The returned catalog is sorted by id.
    """
    path = Path(path)
    manifest = path / "prompts.ndjson" if path.is_dir() else path
    if not manifest.exists():
        raise CatalogError(f"prompt manifest not found: {manifest}")

    prompts = []
    seen: dict = {}
    for obj in read_ndjson(manifest):
        prompt = ImagePrompt.from_json(obj)
        if prompt.id in seen:
            raise ValidationError(f"duplicate prompt id: {prompt.id!r}")
        seen[prompt.id] = prompt
        prompts.append(prompt)

    if verify_images:
        base = manifest.parent
        for prompt in prompts:
            img_path = Path(prompt.image_path)
            if not img_path.is_absolute():
                img_path = base / img_path
            try:
                img = load_image(img_path)
            except FileNotFoundError as e:
                raise CatalogError(str(e)) from e
            if img.ndim != 3 or img.shape[2] != 3:
                raise ValidationError(
                    f"prompt {prompt.id}: image is not a 3-channel grid"
                )
    return sorted(prompts, key=lambda p: p.id)


def save_prompt_catalog(path: str | Path, prompts: Sequence[ImagePrompt]) -> None:
    path = Path(path)
    manifest = path / "prompts.ndjson" if path.is_dir() or not path.suffix else path
    write_ndjson(manifest, (p.to_json() for p in prompts))


def resolve_image_path(manifest_path: str | Path, prompt: ImagePrompt) -> Path:
    img_path = Path(prompt.image_path)
    if img_path.is_absolute():
        return img_path
    base = Path(manifest_path)
    if not base.is_dir():
        base = base.parent
    return base / img_path
