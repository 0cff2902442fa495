"""Command-line entry point: ``mapplan generate|train|eval|score|plot``.

Every command exits 0 on success and prints a single ``mapplan: error:``
line to stderr with a nonzero status on failure. Nothing is written
outside ``--out``.

Scene directories hold ``<id>.scene`` files plus ``manifest.tsv``::

    # mapplan-manifest 1
    # params <key>=<value> ...
    id<TAB>seed

Scene ``i`` of a ``generate`` call uses seed ``--seed + i``.
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import os
import sys
from dataclasses import fields
from pathlib import Path

from .checkpoint import Checkpoint, check_compatible, load_checkpoint, save_checkpoint
from .config import CONFIG_ENV, RunConfig, field_map, load_config
from .errors import MapPlanError
from .eval import (
    HorizonSpec,
    emit_report,
    evaluate_samples,
    format_summary,
    leaderboard_score,
    read_predictions,
    read_report,
    run_predictions,
    write_predictions,
)
from .planner import Ablation, init_model
from .plot import render_svg
from .scenario import IntervalMode, ScenarioParams, generate_scenario, load_scenario, save_scenario, scene_regions


MANIFEST = "manifest.tsv"
MANIFEST_MAGIC = "# mapplan-manifest 1"
SOURCE_NAME = "source.txt"
CHECKPOINT_NAME = "checkpoint.ckpt"
TRAIN_LOG_NAME = "train_log.csv"
TRAIN_LOG_FIELDS = ("epoch", "mapping", "collision", "ade", "adaptive", "total", "val_ade")


class CliError(MapPlanError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.exit(2, f"mapplan {self.prog.split()[-1]}: error: {message}\n")


# ---- scene directories ---------------------------------------------------


def write_manifest(out: Path, rows: list[tuple[str, int]], params: ScenarioParams) -> Path:
    keys = ("n_obstacles", "road_width", "max_curvature", "timestamp_jitter", "p_intersection", "invalid_tail_prob")
    desc = " ".join(f"{k}={getattr(params, k)!r}".replace(" ", "") for k in keys)
    lines = [MANIFEST_MAGIC, f"# params {desc}", "id\tseed"] + [f"{i}\t{s}" for i, s in rows]
    path = out / MANIFEST
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def scene_files(directory: str | os.PathLike) -> list[Path]:
    """Scene files in manifest order (sorted file names when no manifest exists)."""
    d = Path(directory)
    if not d.is_dir():
        raise CliError(f"scene directory not found: {d}")
    man = d / MANIFEST
    if man.is_file():
        lines = man.read_text(encoding="utf-8").splitlines()
        if not lines or lines[0] != MANIFEST_MAGIC:
            raise CliError(f"{man}: missing '{MANIFEST_MAGIC}' header")
        rows = [l for l in lines[1:] if l and not l.startswith("#")][1:]
        files = [d / f"{r.split(chr(9))[0]}.scene" for r in rows]
        for f in files:
            if not f.is_file():
                raise CliError(f"{man}: listed scene {f.name} is missing")
        return files
    return sorted(d.glob("*.scene"))


def load_scenes(directory: str | os.PathLike):
    return [load_scenario(f) for f in scene_files(directory)]


def _split_dir(data: Path, split: str) -> Path:
    return data / split if (data / split).is_dir() else data


def _check_horizon(scenes, cfg: RunConfig) -> None:
    for s in scenes:
        if s.horizon != cfg.dims.horizon:
            raise CliError(f"scene {s.scene_id} has horizon {s.horizon}, the model decodes {cfg.dims.horizon} steps")


# ---- commands ------------------------------------------------------------


def cmd_generate(a) -> int:
    if a.count < 0:
        raise CliError(f"--count must be >= 0, got {a.count}")
    lo = a.n_obstacles_min if a.n_obstacles_min is not None else ScenarioParams.n_obstacles[0]
    hi = a.n_obstacles_max if a.n_obstacles_max is not None else max(lo, ScenarioParams.n_obstacles[1])
    overrides = {
        k: getattr(a, k)
        for k in ("road_width", "max_curvature", "timestamp_jitter", "p_intersection", "invalid_tail_prob")
        if getattr(a, k) is not None
    }
    params = ScenarioParams(n_obstacles=(lo, hi), **overrides)
    params.validate()
    out = Path(a.out) / a.split
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for i in range(a.count):
        seed = a.seed + i
        sid = f"{a.split}-{i:05d}"
        save_scenario(generate_scenario(seed, params, sid), out / f"{sid}.scene")
        rows.append((sid, seed))
    write_manifest(out, rows, params)
    print(f"wrote {a.count} scenes to {out}")
    return 0


def _config_from_args(a) -> RunConfig:
    overrides = {f.name: getattr(a, f.name, None) for f in fields(RunConfig)}
    return load_config(a.config, overrides)


def cmd_train(a) -> int:
    from .train import samples_for, train

    cfg = _config_from_args(a)
    data = Path(a.data) if a.data else None
    train_dir = Path(cfg.train_dir) if cfg.train_dir else (data / "train" if data else None)
    val_dir = Path(cfg.val_dir) if cfg.val_dir else (data / "val" if data else None)
    if train_dir is None:
        raise CliError("no training data: pass --data or set train_dir")
    train_scenes = load_scenes(train_dir)
    if not train_scenes:
        raise CliError(f"no scenes in {train_dir}")
    val_scenes = load_scenes(val_dir) if val_dir is not None and val_dir.is_dir() else []
    _check_horizon(train_scenes + val_scenes, cfg)
    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.ini").write_text(cfg.to_ini(), encoding="utf-8")
    log_path = out / TRAIN_LOG_NAME
    with log_path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRAIN_LOG_FIELDS)

        def on_epoch(e, _params):
            w.writerow(e.row()[: len(TRAIN_LOG_FIELDS)])
            fh.flush()
            print(f"epoch {e.epoch:3d}  total {e.total:.4f}  ade {e.ade:.4f}  val_ade {e.val_ade:.4f}  "
                  f"({e.seconds:.1f}s)")

        res = train(cfg, samples_for(train_scenes, cfg), samples_for(val_scenes, cfg), on_epoch=on_epoch)
    save_checkpoint(Checkpoint(res.params, res.state, cfg), out / CHECKPOINT_NAME)
    print(f"wrote {out / CHECKPOINT_NAME}")
    return 0


def _parse_horizons(text: str) -> HorizonSpec:
    try:
        steps = tuple(int(t) for t in text.split(","))
    except ValueError:
        raise CliError(f"--horizons expects comma-separated step indices, got {text!r}") from None
    return HorizonSpec(steps)


def cmd_eval(a) -> int:
    from .train import samples_for

    h = _parse_horizons(a.horizons)
    if a.checkpoint:
        ck = load_checkpoint(a.checkpoint)
        cfg = ck.config
        check_compatible(ck.params, init_model(cfg.seed, cfg.dims))
    elif a.gt_passthrough:
        ck, cfg = None, RunConfig()
    else:
        raise CliError("--checkpoint is required unless --gt-passthrough is given")
    changes = {}
    if a.ablation:
        changes["ablation"] = a.ablation
    if a.interval_mode:
        changes["interval_mode"] = a.interval_mode
    cfg = cfg.replace(**changes)
    data = _split_dir(Path(a.data), a.split)
    scenes = load_scenes(data)
    if not scenes:
        raise CliError(f"no scenes in {data}")
    for s in scenes:
        h.check(s.horizon)
    samples = samples_for(scenes, cfg)
    if a.gt_passthrough:
        preds = [s.gt for s in samples]
    else:
        _check_horizon(scenes, cfg)
        preds = run_predictions(ck.params, samples, cfg, Ablation(cfg.ablation), workers=a.workers)
    report = evaluate_samples(preds, samples, h, a.footprint, cfg.ego_length, cfg.ego_width)
    out = Path(a.out)
    emit_report(report, out)
    write_predictions(out / "predictions.csv", samples, preds)
    (out / SOURCE_NAME).write_text(f"{data}\n", encoding="utf-8")
    sys.stdout.write(format_summary(report))
    return 0


def cmd_score(a) -> int:
    vals = (a.l2, a.col, a.off)
    if not all(math.isfinite(v) for v in vals):
        raise CliError("score inputs must be finite numbers")
    print(f"{leaderboard_score(*vals):.3f}")
    return 0


def cmd_plot(a) -> int:
    report = Path(a.report)
    read_report(report)  # validates the report directory
    preds = read_predictions(report)
    if a.scene not in preds:
        raise CliError(f"scene {a.scene!r} is not in {report}")
    if a.data:
        data = Path(a.data)
    else:
        src = report / SOURCE_NAME
        if not src.is_file():
            raise CliError(f"{src} not found; pass --data")
        data = Path(src.read_text(encoding="utf-8").strip())
    path = data / f"{a.scene}.scene"
    if not path.is_file():
        raise CliError(f"scene file not found: {path}")
    scene = load_scenario(path)
    pred, gt, valid = preds[a.scene]
    svg = render_svg(scene, scene_regions(scene).drivable, pred, gt, valid, a.width, a.height)
    out = Path(a.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(svg, encoding="utf-8")
    print(f"wrote {out}")
    return 0


# ---- parser --------------------------------------------------------------


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("configuration overrides (flag > file > default)")
    for name, f in field_map().items():
        g.add_argument(f"--{name.replace('_', '-')}", dest=name, default=None, metavar="V",
                       help=f"{f.metadata['help']} [{f.metadata['section']}] (default {f.default})")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mapplan", description="Map-assisted planning on synthetic BEV scenes.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="write synthetic scenes and a manifest")
    g.add_argument("--seed", type=int, default=0, help="seed of the first scene")
    g.add_argument("--count", type=int, required=True)
    g.add_argument("--out", required=True, help="root directory; scenes go to <out>/<split>/")
    g.add_argument("--split", default="train")
    g.add_argument("--n-obstacles-min", type=int)
    g.add_argument("--n-obstacles-max", type=int)
    g.add_argument("--road-width", type=float)
    g.add_argument("--max-curvature", type=float)
    g.add_argument("--timestamp-jitter", type=float)
    g.add_argument("--p-intersection", type=float)
    g.add_argument("--invalid-tail-prob", type=float)
    g.set_defaults(func=cmd_generate)

    t = sub.add_parser("train", help="train a planner; writes checkpoint, loss log and config")
    t.add_argument("--config", help=f"INI config file (default ${CONFIG_ENV})")
    t.add_argument("--data", help="root holding train/ and optionally val/ scene directories")
    t.add_argument("--out", required=True)
    _add_config_flags(t)
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="evaluate a checkpoint; writes metrics.csv, summary.txt, predictions.csv")
    e.add_argument("--checkpoint")
    e.add_argument("--data", required=True, help="scene directory (or a root holding <split>/)")
    e.add_argument("--split", default="val")
    e.add_argument("--out", required=True)
    e.add_argument("--ablation", choices=[m.value for m in Ablation])
    e.add_argument("--interval-mode", choices=[m.value for m in IntervalMode])
    e.add_argument("--footprint", action="store_true", help="collision by ego-box overlap instead of the point test")
    e.add_argument("--gt-passthrough", action="store_true", help="score the ground truth as the prediction")
    e.add_argument("--horizons", default="5,7,9", help="1-based step indices (default 5,7,9)")
    e.add_argument("--workers", type=int, default=1, help="parallel scene evaluators")
    e.set_defaults(func=cmd_eval)

    s = sub.add_parser("score", help="leaderboard score of (L2 m, collision %%, off-road %%)")
    s.add_argument("--l2", type=float, required=True)
    s.add_argument("--col", type=float, required=True)
    s.add_argument("--off", type=float, required=True)
    s.set_defaults(func=cmd_score)

    pl = sub.add_parser("plot", help="SVG of one scene's prediction against ground truth")
    pl.add_argument("--report", required=True, help="eval output directory")
    pl.add_argument("--scene", required=True, help="scene id")
    pl.add_argument("--out", required=True, help="output .svg file")
    pl.add_argument("--data", help="scene directory (default: the one recorded by eval)")
    pl.add_argument("--width", type=int, default=480)
    pl.add_argument("--height", type=int, default=480)
    pl.set_defaults(func=cmd_plot)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (MapPlanError, OSError, ValueError) as exc:
        msg = " ".join(str(exc).split()) or type(exc).__name__
        print(f"mapplan: error: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
