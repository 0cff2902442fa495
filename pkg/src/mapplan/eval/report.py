"""Metrics table and human summary files.

``metrics.csv`` layout (version 1)::

    # mapplan-metrics 1
    metric,horizon,value
    l2,2.5s,<real>          one row per metric x horizon, then avg
    ...
    collision,avg,<real>
    offroad,avg,<real>
    score,all,<real>
    n_scenes,all,<int>

Metrics appear in the order l2, collision, offroad. Reals are written with
``repr`` so they read back bit-exactly; an absent value is written ``NA``.
``summary.txt`` holds the same numbers formatted for reading.
"""

from __future__ import annotations

import csv
import io
import os
from pathlib import Path

from ..errors import CheckpointError
from .metrics import MetricsReport

MAGIC = "# mapplan-metrics 1"
HEADER = ("metric", "horizon", "value")
METRICS = ("l2", "collision", "offroad")
TABLE_NAME = "metrics.csv"
SUMMARY_NAME = "summary.txt"
_UNITS = {"l2": "m", "collision": "%", "offroad": "%"}


def _num(v: float | None) -> str:
    return "NA" if v is None else repr(float(v))


def _parse_num(s: str) -> float | None:
    return None if s == "NA" else float(s)


def format_table(r: MetricsReport) -> str:
    buf = io.StringIO()
    buf.write(MAGIC + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(HEADER)
    for m in METRICS:
        for h, v in getattr(r, m).items():
            w.writerow((m, h, _num(v)))
    w.writerow(("score", "all", _num(r.score)))
    w.writerow(("n_scenes", "all", str(r.n_scenes)))
    return buf.getvalue()


def format_summary(r: MetricsReport) -> str:
    horizons = list(r.l2)
    lines = [f"scenes evaluated: {r.n_scenes}", "metric      " + "".join(f"{h:>10}" for h in horizons)]
    for m in METRICS:
        vals = getattr(r, m)
        cells = "".join(f"{'n/a' if vals[h] is None else format(vals[h], '.3f'):>10}" for h in horizons)
        lines.append(f"{m + ' (' + _UNITS[m] + ')':<12}{cells}")
    lines.append(f"score: {'n/a' if r.score is None else format(r.score, '.3f')}")
    return "\n".join(lines) + "\n"


def emit_report(r: MetricsReport, path: str | os.PathLike) -> tuple[Path, Path]:
    """Write ``metrics.csv`` and ``summary.txt`` into directory ``path``."""
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
        table = out / TABLE_NAME
        summary = out / SUMMARY_NAME
        table.write_text(format_table(r), encoding="utf-8")
        summary.write_text(format_summary(r), encoding="utf-8")
    except OSError as exc:
        raise CheckpointError(f"cannot write report to {out}: {exc.strerror or exc}") from None
    return table, summary


def parse_table(text: str, where: str = "<report>") -> MetricsReport:
    lines = text.splitlines()
    if not lines or lines[0] != MAGIC:
        raise CheckpointError(f"{where}: missing '{MAGIC}' header")
    rows = list(csv.reader(lines[1:]))
    if not rows or tuple(rows[0]) != HEADER:
        raise CheckpointError(f"{where}: expected column header {','.join(HEADER)}")
    vals: dict[str, dict[str, float | None]] = {m: {} for m in METRICS}
    score = n = None
    for i, row in enumerate(rows[1:], start=3):
        if len(row) != 3:
            raise CheckpointError(f"{where}: line {i}: expected 3 columns, got {len(row)}")
        metric, horizon, value = row
        try:
            if metric in vals:
                vals[metric][horizon] = _parse_num(value)
            elif metric == "score":
                score = _parse_num(value)
            elif metric == "n_scenes":
                n = int(value)
            else:
                raise CheckpointError(f"{where}: line {i}: unknown metric {metric!r}")
        except ValueError:
            raise CheckpointError(f"{where}: line {i}: bad value {value!r}") from None
    if n is None or any("avg" not in v for v in vals.values()):
        raise CheckpointError(f"{where}: incomplete report")
    return MetricsReport(vals["l2"], vals["collision"], vals["offroad"], n, score)


def read_report(path: str | os.PathLike) -> MetricsReport:
    """Read a report directory (or its ``metrics.csv``) back into a :class:`MetricsReport`."""
    p = Path(path)
    if p.is_dir():
        p = p / TABLE_NAME
    if not p.is_file():
        raise CheckpointError(f"report not found: {p}")
    return parse_table(p.read_text(encoding="utf-8"), str(p))
