"""Domain records for prompts, multi-view assets, rankings and pairs.

A multi-view asset is an ordered list of view images: the RGB block first,
then the normal block, each ordered by view index.  That order is canonical
everywhere: encoders, checkpoints and serialized files all rely on it.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from ..errors import ValidationError

DOMAINS = ("rgb", "normal")
PROMPT_SOURCES = ("generated", "rendered")
COMPLEXITY_TAGS = (
    "geometry_simple",
    "geometry_complex",
    "texture_simple",
    "texture_complex",
    "creative",
)


@dataclass(frozen=True)
class ImagePrompt:
    """One conditioning image: views are generated from it and judged against it."""

    id: str
    source: str
    image_path: str
    complexity_tags: frozenset = frozenset()

    def __post_init__(self):
        if self.source not in PROMPT_SOURCES:
            raise ValidationError(f"unknown prompt source {self.source!r}")
        bad = set(self.complexity_tags) - set(COMPLEXITY_TAGS)
        if bad:
            raise ValidationError(f"unknown complexity tags: {sorted(bad)}")

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "source": self.source,
            "image_path": self.image_path,
            "complexity_tags": sorted(self.complexity_tags),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ImagePrompt":
        return cls(
            id=obj["id"],
            source=obj["source"],
            image_path=obj["image_path"],
            complexity_tags=frozenset(obj.get("complexity_tags", [])),
        )


@dataclass
class ViewImage:
    """A single generated view: RGB or surface-normal pixels in [0, 1]."""

    domain: str
    view_index: int
    image: np.ndarray

    def __post_init__(self):
        if self.domain not in DOMAINS:
            raise ValidationError(f"unknown domain {self.domain!r}")
        if self.view_index < 0:
            raise ValidationError("view_index must be >= 0")
        img = np.asarray(self.image)
        if img.ndim != 3 or img.shape[2] != 3:
            raise ValidationError(f"view image must be HxWx3, got shape {img.shape}")


def validate_normal_view(view: ViewImage, eps_n: float = 0.15,
                         foreground_mask: np.ndarray | None = None) -> None:
    """Check that a normal-domain view encodes unit vectors.

    Pixels remapped to [-1, 1] must have Euclidean norm within eps_n of 1 on
    foreground pixels (all pixels when no mask is given; the synthetic
    generator emits unit-norm backgrounds too).
    """
    if view.domain != "normal":
        raise ValidationError("not a normal-domain view")
    vec = np.asarray(view.image, dtype=np.float64) * 2.0 - 1.0
    norms = np.linalg.norm(vec, axis=2)
    if foreground_mask is not None:
        norms = norms[foreground_mask]
    if norms.size and (norms.min() < 1 - eps_n or norms.max() > 1 + eps_n):
        raise ValidationError(
            f"normal norms outside [{1-eps_n:.3f}, {1+eps_n:.3f}]: "
            f"range [{norms.min():.3f}, {norms.max():.3f}]"
        )


def canonical_view_order(n_views: int, domains: Sequence[str] = DOMAINS):
    """(domain, view_index) slots in canonical order: rgb block, then normal block."""
    return [(d, k) for d in domains for k in range(n_views)]


@dataclass
class MultiViewAsset:
    """One generation result: all views of one object for one prompt."""

    id: str
    prompt_id: str
    method_id: str
    inference_steps: int
    views: list  # list[ViewImage] in canonical order

    @property
    def domains(self) -> tuple:
        seen = []
        for v in self.views:
            if v.domain not in seen:
                seen.append(v.domain)
        return tuple(seen)

    @property
    def n_views(self) -> int:
        return max((v.view_index for v in self.views), default=-1) + 1

    def validate(self) -> None:
        slots = [(v.domain, v.view_index) for v in self.views]
        expected = canonical_view_order(self.n_views, self.domains)
        if slots != expected:
            raise ValidationError(
                f"asset {self.id}: views not in canonical order: {slots}"
            )

    def view(self, domain: str, view_index: int) -> ViewImage:
        for v in self.views:
            if v.domain == domain and v.view_index == view_index:
                return v
        raise KeyError((domain, view_index))


@dataclass
class RankingRecord:
    """One annotator's ordered ranking of an asset list; a group is a tie."""

    annotator_id: str
    asset_list_id: str
    ranking: list  # list[set[str]], best group first

    def assets(self) -> set:
        out: set = set()
        for group in self.ranking:
            out |= set(group)
        return out

    def validate(self, asset_ids: Sequence[str] | None = None) -> None:
        seen: set = set()
        for group in self.ranking:
            if not group:
                raise ValidationError("empty rank group")
            dup = seen & set(group)
            if dup:
                raise ValidationError(f"assets in multiple groups: {sorted(dup)}")
            seen |= set(group)
        if asset_ids is not None:
            missing = set(asset_ids) - seen
            extra = seen - set(asset_ids)
            if missing or extra:
                raise ValidationError(
                    f"ranking does not cover the asset set exactly: "
                    f"missing={sorted(missing)} extra={sorted(extra)}"
                )

    def to_json(self) -> dict:
        return {
            "annotator_id": self.annotator_id,
            "asset_list_id": self.asset_list_id,
            "ranking": [sorted(g) for g in self.ranking],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "RankingRecord":
        return cls(
            annotator_id=obj["annotator_id"],
            asset_list_id=obj["asset_list_id"],
            ranking=[set(g) for g in obj["ranking"]],
        )


@dataclass
class AggregatedRanking:
    """Borda-merged consensus: groups ordered by strictly decreasing points."""

    asset_list_id: str
    consensus: list  # list[set[str]]
    borda_points: dict = field(default_factory=dict)  # asset_id -> Fraction

    def validate(self) -> None:
        group_points = []
        for group in self.consensus:
            pts = {self.borda_points[a] for a in group}
            if len(pts) != 1:
                raise ValidationError(f"group {sorted(group)} mixes point values")
            group_points.append(next(iter(pts)))
        if any(a >= b for a, b in zip(group_points[1:], group_points)):
            raise ValidationError("consensus groups not in strictly decreasing point order")

    def to_json(self) -> dict:
        return {
            "asset_list_id": self.asset_list_id,
            "consensus": [sorted(g) for g in self.consensus],
            "borda_points": {a: [p.numerator, p.denominator]
                             for a, p in self.borda_points.items()},
        }

    @classmethod
    def from_json(cls, obj: dict) -> "AggregatedRanking":
        return cls(
            asset_list_id=obj["asset_list_id"],
            consensus=[set(g) for g in obj["consensus"]],
            borda_points={a: Fraction(n, d)
                          for a, (n, d) in obj["borda_points"].items()},
        )


@dataclass(frozen=True)
class ComparisonPair:
    """An ordered (winner, loser) couple: the training atom of the pairwise loss."""

    prompt_id: str
    winner_asset_id: str
    loser_asset_id: str

    def __post_init__(self):
        if self.winner_asset_id == self.loser_asset_id:
            raise ValidationError("winner and loser must differ")

    def to_json(self) -> dict:
        return {
            "prompt_id": self.prompt_id,
            "winner_asset_id": self.winner_asset_id,
            "loser_asset_id": self.loser_asset_id,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ComparisonPair":
        return cls(
            prompt_id=obj["prompt_id"],
            winner_asset_id=obj["winner_asset_id"],
            loser_asset_id=obj["loser_asset_id"],
        )
