"""Simulated annotators for demo pipelines and corpus-scale tests.

Each simulated annotator ranks an asset list by its hidden quality plus
seeded judgment noise; qualities that land within a tie margin end up in one
group.  This gives the aggregation and training stages realistic, noisy but
quality-correlated rankings without a live service.
"""

from typing import Sequence

from ..rng import make_generator
from .types import RankingRecord


def simulate_rankings(asset_lists: Sequence[dict], qualities: dict,
                      n_annotators: int, seed: int,
                      judgment_noise: float = 0.08,
                      tie_margin: float = 0.04) -> list:
    """One RankingRecord per (simulated annotator, asset list)."""
    records = []
    for entry in asset_lists:
        list_id = entry["asset_list_id"]
        for a in range(n_annotators):
            annotator_id = f"sim{a:02d}"
            rng = make_generator("simulate-ranking", seed, annotator_id, list_id)
            scored = sorted(
                ((qualities[aid] + rng.normal(0.0, judgment_noise), aid)
                 for aid in entry["asset_ids"]),
                reverse=True,
            )
            groups, current = [], [scored[0][1]]
            for (prev_s, _), (s, aid) in zip(scored, scored[1:]):
                if prev_s - s <= tie_margin:
                    current.append(aid)
                else:
                    groups.append(set(current))
                    current = [aid]
            groups.append(set(current))
            records.append(RankingRecord(annotator_id=annotator_id,
                                         asset_list_id=list_id,
                                         ranking=groups))
    return records
