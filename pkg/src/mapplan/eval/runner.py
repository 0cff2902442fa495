"""Scene-parallel model evaluation with an index-ordered reduction.

``predictions.csv`` layout (version 1)::

    # mapplan-predictions 1
    scene_id,step,pred_x,pred_y,gt_x,gt_y,valid

with one row per scene and 1-based future step, reals written with ``repr``.
"""

from __future__ import annotations

import csv
import io
import os
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Sequence

import numpy as np

from ..errors import CheckpointError
from .metrics import HorizonSpec, MetricsReport, evaluate_predictions

PRED_MAGIC = "# mapplan-predictions 1"
PRED_HEADER = ("scene_id", "step", "pred_x", "pred_y", "gt_x", "gt_y", "valid")
PRED_NAME = "predictions.csv"


def run_predictions(params, samples: Sequence, cfg, ablation=None, workers: int = 1) -> list[np.ndarray]:
    """Predicted waypoints per sample, in input order whatever ``workers`` is.

    Each forward pass is tape-free and reads the shared immutable weights
    only, so scenes can be evaluated concurrently.
    """
    from ..train import predict

    def one(s):
        return predict(params, s, cfg, ablation)

    if workers <= 1 or len(samples) < 2:
        return [one(s) for s in samples]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, samples))


def evaluate_samples(
    preds: Sequence[np.ndarray],
    samples: Sequence,
    h: HorizonSpec = HorizonSpec(),
    footprint: bool = False,
    ego_length: float | None = None,
    ego_width: float | None = None,
) -> MetricsReport:
    """Metrics for precomputed predictions on prepared samples (reusing their region rasters)."""
    kw = {}
    if ego_length is not None:
        kw["ego_length"] = ego_length
    if ego_width is not None:
        kw["ego_width"] = ego_width
    return evaluate_predictions(
        preds, [s.scene for s in samples], h, [s.regions for s in samples], footprint=footprint, **kw
    )


def format_predictions(samples: Sequence, preds: Sequence[np.ndarray]) -> str:
    buf = io.StringIO()
    buf.write(PRED_MAGIC + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(PRED_HEADER)
    for s, p in zip(samples, preds):
        sc = s.scene
        for i, ((gx, gy), (px, py), m) in enumerate(zip(sc.gt_trajectory, np.asarray(p), sc.validity), start=1):
            w.writerow((sc.scene_id, i, repr(float(px)), repr(float(py)), repr(float(gx)), repr(float(gy)), int(m)))
    return buf.getvalue()


def write_predictions(path: str | os.PathLike, samples: Sequence, preds: Sequence[np.ndarray]) -> Path:
    p = Path(path)
    try:
        p.write_text(format_predictions(samples, preds), encoding="utf-8")
    except OSError as exc:
        raise CheckpointError(f"cannot write predictions to {p}: {exc.strerror or exc}") from None
    return p


def read_predictions(path: str | os.PathLike) -> dict[str, tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """Map scene id to (pred (T, 2), gt (T, 2), valid (T,)) arrays."""
    p = Path(path)
    if p.is_dir():
        p = p / PRED_NAME
    if not p.is_file():
        raise CheckpointError(f"predictions not found: {p}")
    lines = p.read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != PRED_MAGIC:
        raise CheckpointError(f"{p}: missing '{PRED_MAGIC}' header")
    rows = list(csv.reader(lines[1:]))
    if not rows or tuple(rows[0]) != PRED_HEADER:
        raise CheckpointError(f"{p}: expected column header {','.join(PRED_HEADER)}")
    acc: dict[str, list] = {}
    for i, row in enumerate(rows[1:], start=3):
        try:
            sid, _, px, py, gx, gy, m = row
            acc.setdefault(sid, []).append((float(px), float(py), float(gx), float(gy), bool(int(m))))
        except ValueError:
            raise CheckpointError(f"{p}: line {i}: malformed row") from None
    out = {}
    for sid, recs in acc.items():
        a = np.array([r[:4] for r in recs], dtype=np.float64)
        out[sid] = (a[:, :2], a[:, 2:], np.array([r[4] for r in recs], dtype=bool))
    return out
