"""Report writers: CSV, aligned text tables and JSON.

Undefined values render as "--" and infinite ones as "inf". Text tables
use six significant digits; CSV and JSON keep full precision. Nothing here
stamps times or hosts into a file, so a bundle depends only on its inputs.
"""
import csv
import json
import logging
import math
import os
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .algorithms import HyperparamConfig
from .metrics import METRIC_NAMES, MetricReport

logger = logging.getLogger("clusterselect.reports")

UNDEFINED = "--"


def format_value(v: Any) -> str:
    if v is None:
        return UNDEFINED
    if isinstance(v, (float, np.floating)):
        if math.isnan(v):
            return UNDEFINED
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return f"{float(v):.6g}"
    return str(v)


def csv_value(v: Any) -> str:
    if v is None:
        return UNDEFINED
    if isinstance(v, (float, np.floating)):
        if math.isnan(v):
            return UNDEFINED
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(float(v))
    return str(v)


def json_safe(obj: Any) -> Any:
    """Converts numpy scalars/arrays and non-finite floats into JSON-friendly values."""
    if isinstance(obj, dict):
        return {str(k): json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [json_safe(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return json_safe(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return None
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return obj


def aligned_table(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    cells = [list(header)] + [[format_value(v) for v in row] for row in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    lines = []
    for idx, row in enumerate(cells):
        first = row[0].ljust(widths[0])
        rest = [c.rjust(w) for c, w in zip(row[1:], widths[1:])]
        lines.append("  ".join([first] + rest).rstrip())
        if idx == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


class ReportWriter:
    """Writes the files of one output bundle into a directory."""

    def __init__(self, output_dir: Union[str, os.PathLike]):
        self.output_dir = str(output_dir)
        os.makedirs(self.output_dir, exist_ok=True)
        self.written: List[str] = []

    def path(self, name: str) -> str:
        return os.path.join(self.output_dir, name)

    def record(self, name: str) -> str:
        if name not in self.written:
            self.written.append(name)
        logger.debug("Wrote %s", self.path(name))
        return self.path(name)

    def format_csv(self, name: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
        with open(self.path(name), "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([csv_value(v) for v in row])
        return self.record(name)

    def format_text(self, name: str, text: str) -> str:
        with open(self.path(name), "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
        return self.record(name)

    def format_json(self, name: str, data: Any) -> str:
        with open(self.path(name), "w", encoding="utf-8", newline="\n") as f:
            json.dump(json_safe(data), f, indent=2, sort_keys=True)
            f.write("\n")
        return self.record(name)


# ----------------------------------------------------------------------------
# Table builders
# ----------------------------------------------------------------------------


def metric_rows(report: MetricReport) -> Tuple[List[str], List[List[Any]]]:
    header = ["config"] + list(METRIC_NAMES)
    return header, [[name] + [report.rows[name][m] for m in METRIC_NAMES] for name in report.names]


def varying_params(configs: Sequence[HyperparamConfig]) -> List[str]:
    """Parameters that take more than one value across configs, in schema order."""
    if not configs:
        return []
    names = list(configs[0].params)
    return [p for p in names if len({c.params.get(p) for c in configs}) > 1]


def grouped_metric_table(
    report: MetricReport,
    configs: Sequence[HyperparamConfig],
    column_param: str,
    group_param: Optional[str] = None,
    metrics: Sequence[str] = METRIC_NAMES,
) -> str:
    """Metrics as rows, one column per value of column_param, one block per value of group_param."""
    by_key: Dict[Tuple[Any, Any], str] = {}
    for c in configs:
        key = (c.params.get(group_param) if group_param else None, c.params[column_param])
        by_key[key] = c.display_name
    columns = list(dict.fromkeys(c.params[column_param] for c in configs))
    groups = list(dict.fromkeys(c.params.get(group_param) for c in configs)) if group_param else [None]

    blocks = []
    for g in groups:
        header = ["metric"] + [f"{column_param}={format_value(v)}" for v in columns]
        rows = []
        for m in metrics:
            row: List[Any] = [m]
            for v in columns:
                name = by_key.get((g, v))
                row.append(None if name is None or name not in report.rows else report.rows[name][m])
            rows.append(row)
        title = f"{group_param} = {format_value(g)}\n" if group_param else ""
        blocks.append(title + aligned_table(header, rows))
    return "\n".join(blocks)


def layout_metric_tables(report: MetricReport, configs: Sequence[HyperparamConfig]) -> str:
    """One grouped table per algorithm; flat when zero or more than two parameters vary."""
    parts = []
    for algo in dict.fromkeys(c.algorithm for c in configs):
        members = [c for c in configs if c.algorithm == algo and c.display_name in report.rows]
        if not members:
            continue
        varying = varying_params(members)
        if not varying or len(varying) > 2:
            sub = MetricReport()
            for c in members:
                sub.add(c.display_name, report.rows[c.display_name])
            header, rows = metric_rows(sub)
            parts.append(f"[{algo}]\n" + aligned_table(header, rows))
            continue
        group = varying[1] if len(varying) > 1 else None
        parts.append(f"[{algo}]\n" + grouped_metric_table(report, members, varying[0], group))
    return "\n".join(parts)


def maxima_rows(report: MetricReport) -> Tuple[List[str], List[List[Any]]]:
    rows = []
    for m in METRIC_NAMES:
        best = report.argmax(m)
        rows.append([m, None if best is None else best[0], None if best is None else best[1]])
    return ["metric", "best_config", "value"], rows
