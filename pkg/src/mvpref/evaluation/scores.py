"""Score-file ingestion and report rendering.

External metric scores (LPIPS, CLIP, BLIP, ...) are never computed here;
they arrive as line-delimited records and are ingested verbatim.
"""

from dataclasses import dataclass
from pathlib import Path

from ..errors import ValidationError
from ..ndjson import read_ndjson
from .stats import MethodScoreTable, RankingReport

DIRECTIONS = ("higher", "lower")


@dataclass(frozen=True)
class ScoreRow:
    metric_id: str
    method_id: str
    prompt_id: str
    score: float
    direction: str = "higher"

    def __post_init__(self):
        if self.direction not in DIRECTIONS:
            raise ValidationError(f"direction must be one of {DIRECTIONS}")


def load_score_rows(path: str | Path) -> list:
    rows = []
    for obj in read_ndjson(path):
        rows.append(ScoreRow(
            metric_id=obj["metric_id"],
            method_id=obj["method_id"],
            prompt_id=obj["prompt_id"],
            score=float(obj["score"]),
            direction=obj.get("direction", "higher"),
        ))
    return rows


def build_score_tables(rows) -> list:
    by_metric: dict = {}
    direction: dict = {}
    for row in rows:
        table = by_metric.setdefault(row.metric_id, {})
        table.setdefault(row.method_id, {})[row.prompt_id] = row.score
        prev = direction.setdefault(row.metric_id, row.direction)
        if prev != row.direction:
            raise ValidationError(
                f"metric {row.metric_id}: conflicting directions {prev}/{row.direction}"
            )
    tables = []
    for metric_id in sorted(by_metric):
        table = MethodScoreTable(
            metric_id=metric_id,
            rows=by_metric[metric_id],
            higher_is_better=direction[metric_id] == "higher",
        )
        table.validate()
        tables.append(table)
    return tables


def load_human_favor(path: str | Path) -> dict:
    favor = {}
    for obj in read_ndjson(path):
        favor[obj["method_id"]] = float(obj["favor"])
    return favor


def render_report_text(report: RankingReport) -> str:
    """Plain-text summary table: one row per method, one column per metric."""
    methods = sorted(report.human_ranks, key=lambda m: report.human_ranks[m])
    lines = []
    header = f"{'method':<24} {'human rank':>10} {'favor %':>8}"
    for metric in report.metrics:
        header += f" | {metric.metric_id:>14} (rank)"
    lines.append(header)
    lines.append("-" * len(header))
    for m in methods:
        line = (f"{m:<24} {report.human_ranks[m]:>10.4g} "
                f"{report.human_favor.get(m, float('nan')):>8.4g}")
        for metric in report.metrics:
            if m in metric.means:
                line += f" | {metric.means[m]:>14.4g} ({metric.ranks[m]:.4g})"
            else:
                line += f" | {'-':>14}       "
        lines.append(line)
    spear = f"{'Spearman to human':<24} {'':>10} {'':>8}"
    for metric in report.metrics:
        rho = metric.spearman_to_human
        spear += f" | {rho if rho is None else format(rho, '>14.2f')}       "
    lines.append("-" * len(header))
    lines.append(spear)
    return "\n".join(lines) + "\n"
