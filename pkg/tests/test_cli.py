import filecmp
import re
import subprocess
import sys

import pytest

from mapplan.cli import main
from mapplan.eval import read_report

SMALL_FLAGS = ["--d-map", "8", "--d-model", "12", "--d-lin", "6", "--d-cmd", "4", "--n-layers", "2",
               "--n-thing-queries", "3", "--adapter-hidden", "8", "--epochs", "2", "--batch-size", "4"]


def run(*args):
    return main([str(a) for a in args])


@pytest.fixture(scope="module")
def data(tmp_path_factory):
    root = tmp_path_factory.mktemp("scenes")
    assert run("generate", "--seed", 0, "--count", 8, "--out", root) == 0
    assert run("generate", "--seed", 10000, "--count", 4, "--out", root, "--split", "val") == 0
    return root


@pytest.fixture(scope="module")
def trained(data, tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    assert run("train", "--data", data, "--out", out, *SMALL_FLAGS) == 0
    return out


def _err_line(capsys):
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 1
    return err[0]


# --- generate ----------------------------------------------------------------------------


def test_generate_count_and_manifest(tmp_path):
    assert run("generate", "--seed", 5, "--count", 10, "--out", tmp_path) == 0
    files = sorted(p.name for p in (tmp_path / "train").glob("*.scene"))
    assert len(files) == 10
    lines = (tmp_path / "train" / "manifest.tsv").read_text().splitlines()
    assert lines[0] == "# mapplan-manifest 1" and lines[2] == "id\tseed"
    assert lines[3] == "train-00000\t5" and len(lines) == 13


def test_generate_is_byte_identical(tmp_path):
    for d in ("a", "b"):
        assert run("generate", "--seed", 3, "--count", 4, "--out", tmp_path / d, "--timestamp-jitter", 0.05) == 0
    cmp = filecmp.dircmp(tmp_path / "a" / "train", tmp_path / "b" / "train")
    assert not cmp.diff_files and not cmp.left_only and len(cmp.same_files) == 5


def test_generate_zero_count(tmp_path):
    assert run("generate", "--count", 0, "--out", tmp_path) == 0
    assert (tmp_path / "train" / "manifest.tsv").read_text().splitlines()[-1] == "id\tseed"


def test_generate_invalid_params(tmp_path, capsys):
    assert run("generate", "--count", 1, "--out", tmp_path, "--road-width", 1.0) != 0
    assert "road width" in _err_line(capsys)


# --- train -------------------------------------------------------------------------------


def test_train_outputs(trained):
    log = (trained / "train_log.csv").read_text().splitlines()
    assert log[0] == "epoch,mapping,collision,ade,adaptive,total,val_ade"
    assert len(log) == 3
    assert (trained / "checkpoint.ckpt").read_bytes()[:8] == b"MPLNCKPT"
    assert "d_model = 12" in (trained / "config.ini").read_text()


def test_train_deterministic(data, trained, tmp_path):
    assert run("train", "--data", data, "--out", tmp_path, *SMALL_FLAGS) == 0
    assert (tmp_path / "checkpoint.ckpt").read_bytes() == (trained / "checkpoint.ckpt").read_bytes()
    assert (tmp_path / "train_log.csv").read_bytes() == (trained / "train_log.csv").read_bytes()


def test_train_no_ep_runs(data, tmp_path):
    assert run("train", "--data", data, "--out", tmp_path, *SMALL_FLAGS, "--ablation", "NO_EP", "--epochs", 1) == 0


def test_train_missing_data(tmp_path, capsys):
    assert run("train", "--data", tmp_path / "nowhere", "--out", tmp_path / "o") != 0
    assert "not found" in _err_line(capsys)


def test_train_config_file(data, tmp_path):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[run]\nepochs = 1\n[model]\nd_map = 8\nd_model = 8\nd_lin = 4\nd_cmd = 4\nn_layers = 2\n"
                   "n_thing_queries = 2\nadapter_hidden = 4\n")
    assert run("train", "--config", cfg, "--data", data, "--out", tmp_path / "o") == 0
    assert len((tmp_path / "o" / "train_log.csv").read_text().splitlines()) == 2


def test_train_bad_config_value(data, tmp_path, capsys):
    assert run("train", "--data", data, "--out", tmp_path, "--epochs", "lots") != 0
    assert "epochs" in _err_line(capsys)


# --- eval --------------------------------------------------------------------------------


def test_eval_gt_passthrough(data, tmp_path):
    assert run("eval", "--gt-passthrough", "--data", data, "--out", tmp_path) == 0
    r = read_report(tmp_path)
    assert r.l2["avg"] == 0.0 and r.collision["avg"] == 0.0 and r.offroad["avg"] == 0.0
    assert round(r.score, 3) == 2.333


def test_eval_ablations_distinct(data, trained, tmp_path):
    ck = trained / "checkpoint.ckpt"
    assert run("eval", "--checkpoint", ck, "--data", data, "--out", tmp_path / "full") == 0
    assert run("eval", "--checkpoint", ck, "--data", data, "--out", tmp_path / "nopom", "--ablation", "NO_POM") == 0
    a, b = read_report(tmp_path / "full"), read_report(tmp_path / "nopom")
    assert a != b and a.n_scenes == b.n_scenes == 4


def test_eval_bitwise_reproducible_any_workers(data, trained, tmp_path):
    ck = trained / "checkpoint.ckpt"
    for name, w in (("a", 1), ("b", 3)):
        assert run("eval", "--checkpoint", ck, "--data", data, "--out", tmp_path / name, "--workers", w) == 0
    for f in ("metrics.csv", "summary.txt", "predictions.csv"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_eval_interval_modes(trained, tmp_path):
    exact, jit = tmp_path / "exact", tmp_path / "jit"
    assert run("generate", "--seed", 50, "--count", 3, "--out", exact, "--split", "val") == 0
    assert run("generate", "--seed", 50, "--count", 3, "--out", jit, "--split", "val",
               "--timestamp-jitter", 0.1) == 0
    ck = trained / "checkpoint.ckpt"
    tables = {}
    for name, d in (("exact", exact), ("jit", jit)):
        for mode in ("actual", "fixed"):
            out = tmp_path / f"{name}-{mode}"
            assert run("eval", "--checkpoint", ck, "--data", d, "--out", out, "--interval-mode", mode) == 0
            tables[name, mode] = (out / "predictions.csv").read_bytes()
    assert tables["exact", "actual"] == tables["exact", "fixed"]
    assert tables["jit", "actual"] != tables["jit", "fixed"]


def test_eval_horizon_beyond_trajectory(data, capsys, tmp_path):
    assert run("eval", "--gt-passthrough", "--data", data, "--out", tmp_path, "--horizons", "5,7,12") != 0
    assert "outside 1..10" in _err_line(capsys)


def test_eval_requires_checkpoint(data, capsys, tmp_path):
    assert run("eval", "--data", data, "--out", tmp_path) != 0
    assert "--checkpoint" in _err_line(capsys)


def test_eval_corrupt_checkpoint(data, capsys, tmp_path):
    bad = tmp_path / "bad.ckpt"
    bad.write_bytes(b"garbage")
    assert run("eval", "--checkpoint", bad, "--data", data, "--out", tmp_path / "o") != 0
    assert "checkpoint" in _err_line(capsys)


def test_eval_truncated_scene(tmp_path, capsys):
    d = tmp_path / "val"
    assert run("generate", "--count", 1, "--out", tmp_path, "--split", "val") == 0
    f = next(d.glob("*.scene"))
    f.write_text(f.read_text()[:200])
    assert run("eval", "--gt-passthrough", "--data", tmp_path, "--out", tmp_path / "o") != 0
    _err_line(capsys)


# --- score -------------------------------------------------------------------------------


@pytest.mark.parametrize(
    "args, want", [((3.07, 0.71, 0.89), "0.591"), ((2.56, 0.96, 0.39), "0.854"), ((3.5, 2.0, 2.5), "0.000")]
)
def test_score(capsys, args, want):
    assert run("score", "--l2", args[0], "--col", args[1], "--off", args[2]) == 0
    assert capsys.readouterr().out.strip() == want


def test_score_non_numeric(capsys):
    with pytest.raises(SystemExit) as exc:
        run("score", "--l2", "abc", "--col", 1, "--off", 1)
    assert exc.value.code != 0
    assert "invalid float" in _err_line(capsys)


# --- plot --------------------------------------------------------------------------------


def test_plot_deterministic_and_sized(data, tmp_path):
    assert run("eval", "--gt-passthrough", "--data", data, "--out", tmp_path / "ev") == 0
    for name in ("a.svg", "b.svg"):
        assert run("plot", "--report", tmp_path / "ev", "--scene", "val-00001", "--out", tmp_path / name,
                   "--width", 320, "--height", 240) == 0
    a = (tmp_path / "a.svg").read_text()
    assert a == (tmp_path / "b.svg").read_text()
    assert 'width="320" height="240"' in a
    lines = re.findall(r'<polyline points="([^"]+)"', a)
    assert len(lines) == 2 and lines[0] == lines[1]


def test_plot_missing_scene(data, tmp_path, capsys):
    assert run("eval", "--gt-passthrough", "--data", data, "--out", tmp_path / "ev") == 0
    capsys.readouterr()
    assert run("plot", "--report", tmp_path / "ev", "--scene", "nope", "--out", tmp_path / "x.svg") != 0
    assert "nope" in _err_line(capsys)


def test_console_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "mapplan.cli", "score", "--l2", "2.67", "--col", "0.67",
                          "--off", "0.46"], capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.strip() == "0.841"
