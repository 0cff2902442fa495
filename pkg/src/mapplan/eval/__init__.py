"""Evaluation protocol: per-horizon metrics, leaderboard score and report files."""

from .metrics import (
    SCORE_TERMS,
    HorizonSpec,
    MetricsReport,
    collision_rate,
    evaluate_predictions,
    l2_metrics,
    leaderboard_score,
    offroad_rate,
)
from .report import emit_report, format_summary, format_table, parse_table, read_report
from .runner import evaluate_samples, read_predictions, run_predictions, write_predictions

__all__ = [
    "SCORE_TERMS",
    "HorizonSpec",
    "MetricsReport",
    "collision_rate",
    "emit_report",
    "evaluate_predictions",
    "evaluate_samples",
    "format_summary",
    "format_table",
    "l2_metrics",
    "leaderboard_score",
    "offroad_rate",
    "parse_table",
    "read_predictions",
    "read_report",
    "run_predictions",
    "write_predictions",
]
