"""Accuracy metrics, regime labels, model selection and comparison reports."""

from .metrics import MetricSet, metrics
from .regimes import REGIMES, RegimeLabel, feature_variance, regime_label, regime_labels
from .report import (
    REFERENCE_ROWS, comparison_report, day_trace, metrics_csv, regime_variance_table, write_columns,
    write_feature_csv, write_report,
)
from .selection import SELECTION_COLUMNS, model_selection_table, selection_csv, selection_text

__all__ = [
    "REFERENCE_ROWS", "REGIMES", "SELECTION_COLUMNS", "MetricSet", "RegimeLabel", "comparison_report",
    "day_trace", "feature_variance", "metrics", "metrics_csv", "model_selection_table", "regime_label",
    "regime_labels", "regime_variance_table", "selection_csv", "selection_text", "write_columns",
    "write_feature_csv", "write_report",
]
