"""Test fixture: a live annotation service over a tiny generated corpus.

Usage: python3 fixture_server.py PORT DATA_DIR
Serves 3 asset lists of 4 assets each; annotator cap is 2 (test config).
"""

import sys
from pathlib import Path

import uvicorn

from mvpref.annotation import AnnotationStore, create_app
from mvpref.dataset.repository import AssetRepository
from mvpref.dataset.synthetic import (
    SyntheticAssetConfig,
    generate_prompt_image,
    generate_synthetic_asset,
)
from mvpref.dataset.types import ImagePrompt


def build_corpus(root: Path) -> AssetRepository:
    repo = AssetRepository(root)
    cfg = SyntheticAssetConfig(n_views=1, image_size=8)
    prompts, images, assets, lists = [], {}, [], []
    for i in range(3):
        pid = f"p{i}"
        prompt = ImagePrompt(id=pid, source="generated",
                             image_path=f"prompt_images/{pid}.png")
        prompts.append(prompt)
        images[pid] = generate_prompt_image(pid, 8, 0)
        ids = []
        for j, quality in enumerate((0.9, 0.7, 0.5, 0.3)):
            asset = generate_synthetic_asset(
                prompt, quality, 0, cfg, prompt_image=images[pid],
                method_id=f"m{j}", asset_id=f"{pid}_a{j}")
            assets.append(asset)
            ids.append(asset.id)
        lists.append({"asset_list_id": pid, "prompt_id": pid, "asset_ids": ids})
    repo.save_prompts(prompts, images)
    repo.save_assets(assets)
    repo.save_asset_lists(lists)
    repo.save_annotators([
        {"id": "u1", "role": "annotator"},
        {"id": "r1", "role": "researcher"},
    ])
    return repo


def main() -> None:
    port = int(sys.argv[1])
    root = Path(sys.argv[2])
    repo = build_corpus(root)
    store = AnnotationStore(repo.asset_lists(), repo.annotators(), cap=2, seed=0)
    uvicorn.run(create_app(store, repo=repo), host="127.0.0.1", port=port,
                log_level="warning")


if __name__ == "__main__":
    main()
