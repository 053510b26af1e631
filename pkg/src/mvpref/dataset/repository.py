"""On-disk corpus layout shared by the CLI and the annotation service.

    root/
      prompts.ndjson            one prompt per line
      prompt_images/<pid>.png
      assets.ndjson             asset metadata (views live as PNGs)
      views/<asset_id>/<k>_<domain>_<i>.png   k = canonical slot index
      asset_lists.ndjson        {asset_list_id, prompt_id, asset_ids}
      annotators.ndjson         {id, role}
"""

from pathlib import Path
from typing import Sequence

import numpy as np

from ..errors import CatalogError
from ..imageio import encode_png, load_image, save_image
from ..ndjson import read_ndjson, write_ndjson
from .types import ImagePrompt, MultiViewAsset, ViewImage, canonical_view_order


class AssetRepository:
    def __init__(self, root: str | Path):
        self.root = Path(root)

    # -- writing -------------------------------------------------------------

    def save_prompts(self, prompts: Sequence[ImagePrompt], images: dict) -> None:
        self.root.mkdir(parents=True, exist_ok=True)
        records = []
        for p in prompts:
            rel = f"prompt_images/{p.id}.png"
            save_image(self.root / rel, images[p.id])
            records.append({**p.to_json(), "image_path": rel})
        write_ndjson(self.root / "prompts.ndjson", records)

    def save_assets(self, assets: Sequence[MultiViewAsset], extra: dict | None = None) -> None:
        records = []
        for asset in assets:
            asset.validate()
            for k, view in enumerate(asset.views):
                save_image(self._view_path(asset.id, k, view.domain, view.view_index),
                           view.image)
            rec = {
                "id": asset.id,
                "prompt_id": asset.prompt_id,
                "method_id": asset.method_id,
                "inference_steps": asset.inference_steps,
                "n_views": asset.n_views,
                "domains": list(asset.domains),
            }
            if extra and asset.id in extra:
                rec.update(extra[asset.id])
            records.append(rec)
        write_ndjson(self.root / "assets.ndjson", records)

    def save_asset_lists(self, lists: Sequence[dict]) -> None:
        write_ndjson(self.root / "asset_lists.ndjson", lists)

    def save_annotators(self, annotators: Sequence[dict]) -> None:
        write_ndjson(self.root / "annotators.ndjson", annotators)

    def _view_path(self, asset_id: str, k: int, domain: str, view_index: int) -> Path:
        return self.root / "views" / asset_id / f"{k:02d}_{domain}_{view_index}.png"

    # -- reading -------------------------------------------------------------

    def prompts(self) -> dict:
        return {obj["id"]: ImagePrompt.from_json(obj)
                for obj in read_ndjson(self.root / "prompts.ndjson")}

    def prompt_image(self, prompt_id: str) -> np.ndarray:
        return load_image(self.root / "prompt_images" / f"{prompt_id}.png")

    def asset_metadata(self) -> dict:
        return {obj["id"]: obj for obj in read_ndjson(self.root / "assets.ndjson")}

    def load_asset(self, asset_id: str) -> MultiViewAsset:
        meta = self.asset_metadata().get(asset_id)
        if meta is None:
            raise CatalogError(f"unknown asset: {asset_id}")
        return self._load_asset(meta)

    def _load_asset(self, meta: dict) -> MultiViewAsset:
        views = []
        for k, (domain, idx) in enumerate(
                canonical_view_order(meta["n_views"], meta["domains"])):
            img = load_image(self._view_path(meta["id"], k, domain, idx))
            views.append(ViewImage(domain=domain, view_index=idx, image=img))
        asset = MultiViewAsset(
            id=meta["id"], prompt_id=meta["prompt_id"],
            method_id=meta["method_id"],
            inference_steps=meta["inference_steps"], views=views)
        asset.validate()
        return asset

    def load_all_assets(self) -> dict:
        return {aid: self._load_asset(meta)
                for aid, meta in self.asset_metadata().items()}

    def asset_lists(self) -> list:
        return list(read_ndjson(self.root / "asset_lists.ndjson"))

    def annotators(self) -> list:
        path = self.root / "annotators.ndjson"
        return list(read_ndjson(path)) if path.exists() else []

    def view_png_bytes(self, asset_id: str, k: int) -> bytes:
        meta = self.asset_metadata().get(asset_id)
        if meta is None:
            raise CatalogError(f"unknown asset: {asset_id}")
        order = canonical_view_order(meta["n_views"], meta["domains"])
        if not 0 <= k < len(order):
            raise CatalogError(f"asset {asset_id} has no view {k}")
        domain, idx = order[k]
        return encode_png(load_image(self._view_path(asset_id, k, domain, idx)))
