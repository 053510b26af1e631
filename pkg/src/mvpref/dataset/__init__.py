from .types import (
    DOMAINS,
    AggregatedRanking,
    ComparisonPair,
    ImagePrompt,
    MultiViewAsset,
    RankingRecord,
    ViewImage,
    canonical_view_order,
    validate_normal_view,
)
from .borda import borda_aggregate, extract_comparison_pairs
from .catalog import load_prompt_catalog, save_prompt_catalog
from .splits import split_dataset
from .synthetic import SyntheticAssetConfig, generate_synthetic_asset

__all__ = [
    "DOMAINS",
    "AggregatedRanking",
    "ComparisonPair",
    "ImagePrompt",
    "MultiViewAsset",
    "RankingRecord",
    "SyntheticAssetConfig",
    "ViewImage",
    "borda_aggregate",
    "canonical_view_order",
    "extract_comparison_pairs",
    "generate_synthetic_asset",
    "load_prompt_catalog",
    "save_prompt_catalog",
    "split_dataset",
    "validate_normal_view",
]
