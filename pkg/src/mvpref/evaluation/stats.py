"""Ranking statistics: Spearman correlation, pairwise win rates, method tables."""

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from ..errors import ValidationError


def average_ranks(values: Sequence[float], higher_is_better: bool = True) -> list:
    """Rank values 1..n (1 = best); tied values share the average rank."""
    vals = [float(v) for v in values]
    order = sorted(range(len(vals)), key=lambda i: -vals[i] if higher_is_better else vals[i])
    ranks = [0.0] * len(vals)
    pos = 0
    while pos < len(order):
        end = pos
        while end + 1 < len(order) and vals[order[end + 1]] == vals[order[pos]]:
            end += 1
        avg = (pos + end) / 2.0 + 1.0
        for i in range(pos, end + 1):
            ranks[order[i]] = avg
        pos = end + 1
    return ranks


def _tie_adjusted(ranking: Sequence[float]) -> list:
    # re-rank the vector itself so tied entries get average positions
    return average_ranks(ranking, higher_is_better=False)


def spearman(rank_a: Sequence[float], rank_b: Sequence[float]) -> float:
    """Spearman rho between two rankings.

    Untied inputs use 1 - 6*sum(d^2)/(n(n^2-1)); ties are assigned average
    ranks and correlated with the Pearson formula.
    """
    if len(rank_a) != len(rank_b):
        raise ValidationError(
            f"rank vectors differ in length: {len(rank_a)} vs {len(rank_b)}"
        )
    n = len(rank_a)
    if n < 2:
        raise ValidationError("need at least two entries to correlate")
    a = _tie_adjusted(rank_a)
    b = _tie_adjusted(rank_b)
    untied = len(set(a)) == n and len(set(b)) == n
    if untied:
        d2 = sum((x - y) ** 2 for x, y in zip(a, b))
        return 1.0 - 6.0 * d2 / (n * (n * n - 1))
    av = np.asarray(a) - np.mean(a)
    bv = np.asarray(b) - np.mean(b)
    denom = float(np.sqrt(np.sum(av * av) * np.sum(bv * bv)))
    if denom == 0.0:
        raise ValidationError("degenerate ranking: zero rank variance")
    return float(np.sum(av * bv) / denom)


@dataclass
class WinRecord:
    """Win/tie/loss tally of one metric against an opponent, judged by humans."""

    wins: int = 0
    ties: int = 0
    losses: int = 0

    @property
    def total(self) -> int:
        return self.wins + self.ties + self.losses

    def to_json(self) -> dict:
        return {"wins": self.wins, "ties": self.ties, "losses": self.losses}


def compute_win_rates(metric_a: Mapping, metric_b: Mapping, human: Mapping) -> WinRecord:
    """Tally a's record versus b over per-comparison preferences.

    Per comparison: identical preferences are a tie; otherwise whichever
    metric matches the human choice scores a win against the other.  When
    neither matches (possible only with more than two candidate labels) the
    comparison counts as a tie, since neither side aligned.
    """
    keys = set(metric_a)
    if set(metric_b) != keys or set(human) != keys:
        raise ValidationError("preference maps do not cover the same comparison set")
    record = WinRecord()
    for key in keys:
        a, b, h = metric_a[key], metric_b[key], human[key]
        if a == b:
            record.ties += 1
        elif a == h:
            record.wins += 1
        elif b == h:
            record.losses += 1
        else:
            record.ties += 1
    return record


@dataclass
class MethodScoreTable:
    """Per-prompt scores of every method under one metric."""

    metric_id: str
    rows: dict  # method_id -> {prompt_id: score}
    higher_is_better: bool = True

    def validate(self) -> None:
        prompt_sets = {frozenset(scores) for scores in self.rows.values()}
        if len(prompt_sets) > 1:
            raise ValidationError(
                f"metric {self.metric_id}: rows cover differing prompt sets"
            )

    def mean_scores(self) -> dict:
        return {m: float(np.mean(list(s.values()))) for m, s in self.rows.items()}


@dataclass
class MetricRanking:
    metric_id: str
    higher_is_better: bool
    means: dict            # method_id -> mean score
    ranks: dict            # method_id -> rank (1 = best, ties averaged)
    spearman_to_human: float | None = None

    def to_json(self) -> dict:
        return {
            "metric_id": self.metric_id,
            "higher_is_better": self.higher_is_better,
            "means": self.means,
            "ranks": self.ranks,
            "spearman_to_human": self.spearman_to_human,
        }


@dataclass
class RankingReport:
    human_favor: dict      # method_id -> favor percentage, ingested verbatim
    human_ranks: dict      # method_id -> rank
    metrics: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "human_favor": self.human_favor,
            "human_ranks": self.human_ranks,
            "metrics": [m.to_json() for m in self.metrics],
        }


def rank_methods(tables: Sequence[MethodScoreTable], human_favor: Mapping) -> RankingReport:
    """Rank methods under each metric and correlate each ranking with humans.

    Direction-aware: metrics flagged lower-is-better rank ascending.  The
    human ranking comes from the favor percentages (higher favor = better).
    """
    methods = sorted(human_favor)
    favor_ranks = average_ranks([human_favor[m] for m in methods], higher_is_better=True)
    human_ranks = dict(zip(methods, favor_ranks))

    report = RankingReport(human_favor=dict(human_favor), human_ranks=human_ranks)
    for table in tables:
        table.validate()
        means = table.mean_scores()
        row_methods = sorted(means)
        ranks = dict(zip(row_methods, average_ranks(
            [means[m] for m in row_methods], higher_is_better=table.higher_is_better)))
        common = [m for m in methods if m in ranks]
        rho = None
        if len(common) >= 2:
            rho = spearman([human_ranks[m] for m in common],
                           [ranks[m] for m in common])
        report.metrics.append(MetricRanking(
            metric_id=table.metric_id,
            higher_is_better=table.higher_is_better,
            means=means,
            ranks=ranks,
            spearman_to_human=rho,
        ))
    return report
