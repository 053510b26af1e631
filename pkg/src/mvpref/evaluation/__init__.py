from .stats import (
    MethodScoreTable,
    MetricRanking,
    RankingReport,
    WinRecord,
    average_ranks,
    compute_win_rates,
    rank_methods,
    spearman,
)
from .scores import (
    ScoreRow,
    build_score_tables,
    load_human_favor,
    load_score_rows,
    render_report_text,
)
from .ablations import run_ablations

__all__ = [
    "MethodScoreTable",
    "MetricRanking",
    "RankingReport",
    "ScoreRow",
    "WinRecord",
    "average_ranks",
    "build_score_tables",
    "compute_win_rates",
    "load_human_favor",
    "load_score_rows",
    "rank_methods",
    "render_report_text",
    "run_ablations",
    "spearman",
]
