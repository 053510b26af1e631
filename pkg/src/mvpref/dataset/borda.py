"""Borda-count consensus over annotator rankings, with ties.

Within one ranking of m assets, the asset at position p (0-indexed from the
top) is worth m-1-p points.  A tie group spanning positions p..q gives each
member the average of {m-1-p, ..., m-1-q}, which preserves the total points
handed out per ranking.  Points are exact rationals so that "same points"
means the same group, with no floating-point tie breaks.
"""

from fractions import Fraction
from typing import Iterable, Sequence

from ..errors import ValidationError
from .types import AggregatedRanking, ComparisonPair, RankingRecord


def record_points(record: RankingRecord) -> dict:
    """Per-asset Borda points of a single ranking, as Fractions."""
    m = len(record.assets())
    points: dict = {}
    pos = 0
    for group in record.ranking:
        size = len(group)
        # positions pos .. pos+size-1 -> points m-1-pos .. m-1-(pos+size-1)
        total = sum(Fraction(m - 1 - (pos + i)) for i in range(size))
        share = total / size
        for asset in group:
            points[asset] = share
        pos += size
    return points


def borda_aggregate(records: Sequence[RankingRecord]) -> AggregatedRanking:
    """Merge rankings of one asset list into a consensus ordering.

    All records must cover the same asset set.  Groups in the result are
    formed by exact point equality and ordered by decreasing points.
    """
    if not records:
        raise ValidationError("no ranking records to aggregate")
    asset_set = records[0].assets()
    list_id = records[0].asset_list_id
    for rec in records:
        rec.validate(asset_ids=asset_set)
        if rec.assets() != asset_set:
            raise ValidationError(
                f"record by {rec.annotator_id} covers a different asset set"
            )

    totals: dict = {a: Fraction(0) for a in asset_set}
    for rec in records:
        for asset, pts in record_points(rec).items():
            totals[asset] += pts

    consensus = []
    for pts in sorted(set(totals.values()), reverse=True):
        consensus.append({a for a, p in totals.items() if p == pts})
    return AggregatedRanking(asset_list_id=list_id, consensus=consensus,
                             borda_points=totals)


def extract_comparison_pairs(agg: AggregatedRanking, prompt_id: str) -> list:
    """One (winner, loser) pair per cross-group couple; ties emit nothing."""
    agg.validate()
    pairs = []
    for i, winners in enumerate(agg.consensus):
        for losers in agg.consensus[i + 1:]:
            for w in sorted(winners):
                for l in sorted(losers):
                    pairs.append(ComparisonPair(
                        prompt_id=prompt_id,
                        winner_asset_id=w,
                        loser_asset_id=l,
                    ))
    return pairs


def aggregate_and_extract(records_by_list: dict, prompt_id_of: dict) -> list:
    """Aggregate each asset list and concatenate its pairs, in list-id order."""
    pairs: list = []
    for list_id in sorted(records_by_list):
        agg = borda_aggregate(records_by_list[list_id])
        pairs.extend(extract_comparison_pairs(agg, prompt_id_of[list_id]))
    return pairs


def group_records_by_list(records: Iterable[RankingRecord]) -> dict:
    grouped: dict = {}
    for rec in records:
        grouped.setdefault(rec.asset_list_id, []).append(rec)
    return grouped
