"""Mini-batch training of the full planner on prepared samples."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .config import RunConfig
from .data import Sample, prepare_sample
from .errors import TrainingError
from .mapping import mapping_loss
from .numerics import AdamState, SeededRng, Tape, Tensor, adam_step, backward, ops
from .planner import Ablation, forward_plan, init_model
from .losses import planning_loss
from .scenario import IntervalMode, Scene

log = logging.getLogger(__name__)

LOG_FIELDS = ("epoch", "mapping", "collision", "ade", "adaptive", "total", "val_ade", "seconds")


@dataclass
class EpochLog:
    epoch: int
    mapping: float
    collision: float
    ade: float
    adaptive: float
    total: float
    val_ade: float
    seconds: float = 0.0

    def row(self) -> list[str]:
        return [str(self.epoch)] + [repr(float(getattr(self, k))) for k in LOG_FIELDS[1:]]


@dataclass
class TrainResult:
    params: dict[str, Tensor]
    state: AdamState
    history: list[EpochLog] = field(default_factory=list)


def samples_for(scenes: Sequence[Scene], cfg: RunConfig) -> list[Sample]:
    """Prepare scenes with the grids, channel count and interval mode of ``cfg``."""
    mode = IntervalMode(cfg.interval_mode)
    return [prepare_sample(s, cfg.bev_channels, mode, cfg.bev_grid, cfg.region_grid) for s in scenes]


def sample_loss(params: dict[str, Tensor], s: Sample, cfg: RunConfig):
    """Forward pass and loss report for one sample (call inside a tape to train)."""
    out = forward_plan(s.bev, s.ego, params, cfg.dims, Ablation(cfg.ablation), encoder_aux=cfg.encoder_aux)
    m = None
    if out.seg is not None:
        m = mapping_loss(out.seg, s.targets, cfg.detection_weights, cfg.encoder_aux)
    return planning_loss(
        out.trajectory.waypoints,
        s.scene,
        s.regions,
        m,
        cfg.adaptive_weights,
        cfg.ego_length,
        cfg.ego_width,
        cfg.tau,
    )


def predict(params: dict[str, Tensor], s: Sample, cfg: RunConfig, ablation: Ablation | None = None) -> np.ndarray:
    out = forward_plan(s.bev, s.ego, params, cfg.dims, Ablation(ablation or cfg.ablation))
    return out.trajectory.points()


def validation_ade(params: dict[str, Tensor], samples: Sequence[Sample], cfg: RunConfig) -> float:
    """Mean over scenes of the masked per-scene ADE."""
    vals = []
    for s in samples:
        m = s.mask
        if not m.any():
            continue
        d = np.linalg.norm(predict(params, s, cfg) - s.gt, axis=1)
        vals.append(float(d[m].mean()))
    return float(np.mean(vals)) if vals else float("nan")


def train(
    cfg: RunConfig,
    train_set: Sequence[Sample],
    val_set: Sequence[Sample],
    params: dict[str, Tensor] | None = None,
    on_epoch: Callable[[EpochLog, dict[str, Tensor]], bool | None] | None = None,
) -> TrainResult:
    """Adam over mini-batches of summed per-scene losses (averaged over the batch).

    ``on_epoch(entry, params)`` runs after every epoch; a truthy return
    stops training early.

    Raises :class:`TrainingError` with the global step index as soon as a
    loss or gradient is not finite.
    """
    if not train_set:
        raise TrainingError("training set is empty")
    params = dict(params) if params is not None else init_model(cfg.seed, cfg.dims)
    names = sorted(params)
    state = AdamState()
    rng = SeededRng(cfg.seed).stream("batches")
    result = TrainResult(params, state)
    step = 0
    for epoch in range(1, cfg.epochs + 1):
        t0 = time.perf_counter()
        lr = cfg.lr * cfg.lr_decay ** (epoch - 1)
        order = rng.gen.permutation(len(train_set))
        sums = dict.fromkeys(("mapping", "collision", "ade", "adaptive", "total"), 0.0)
        for start in range(0, len(order), cfg.batch_size):
            batch = [train_set[i] for i in order[start : start + cfg.batch_size]]
            with Tape() as tape:
                reports = [sample_loss(params, s, cfg) for s in batch]
                loss = reports[0].tensor
                for r in reports[1:]:
                    loss = ops.add(loss, r.tensor)
                loss = ops.scale(loss, 1.0 / len(batch))
            if not math.isfinite(loss.item()):
                raise TrainingError(f"non-finite loss at step {step} (epoch {epoch})")
            g = backward(tape, loss, wrt=[params[n] for n in names])
            grads = {n: g[params[n]] for n in names}
            if not all(np.all(np.isfinite(v)) for v in grads.values()):
                raise TrainingError(f"non-finite gradient at step {step} (epoch {epoch})")
            params, state = adam_step(params, grads, state, lr, cfg.beta1, cfg.beta2, cfg.adam_eps)
            for r in reports:
                for k in sums:
                    sums[k] += getattr(r, k)
            step += 1
        n = len(train_set)
        entry = EpochLog(
            epoch,
            *(sums[k] / n for k in ("mapping", "collision", "ade", "adaptive", "total")),
            val_ade=validation_ade(params, val_set, cfg) if val_set else float("nan"),
            seconds=time.perf_counter() - t0,
        )
        result.history.append(entry)
        log.info(
            "epoch %d  total %.4f  ade %.4f  val_ade %.4f", epoch, entry.total, entry.ade, entry.val_ade
        )
        if on_epoch is not None and on_epoch(entry, params):
            break
    result.params, result.state = params, state
    return result
