import numpy as np
import pytest

from mapplan.checkpoint import (
    Checkpoint,
    check_compatible,
    from_bytes,
    load_checkpoint,
    save_checkpoint,
    to_bytes,
)
from mapplan.config import CONFIG_ENV, RunConfig, field_map, load_config
from mapplan.errors import CheckpointError, ConfigError
from mapplan.numerics import AdamState, parameter
from mapplan.planner import init_model

SMALL = dict(d_map=8, d_model=12, d_lin=6, d_cmd=4, n_layers=2, n_thing_queries=3, adapter_hidden=8)


def test_every_field_documented():
    for name, f in field_map().items():
        assert f.metadata["help"] and f.metadata["section"] in ("run", "model", "loss", "grid"), name


def test_defaults_match_documented_values():
    c = RunConfig()
    assert (c.d_model, c.d_lin, c.d_cmd, c.n_layers, c.adapter_hidden) == (64, 32, 16, 3, 64)
    assert c.bev_grid.rows == 64 and c.region_grid.rows == 192
    assert (c.w_l2, c.w_col, c.w_off) == (0.1, 1.0, 1.0)


def test_precedence_flag_over_file_over_default(tmp_path, monkeypatch):
    p = tmp_path / "run.ini"
    p.write_text("[run]\nepochs = 5\nlr = 0.01\n[model]\nd_model = 16\n")
    c = load_config(p, {"epochs": "7"})
    assert (c.epochs, c.lr, c.d_model, c.batch_size) == (7, 0.01, 16, RunConfig().batch_size)
    monkeypatch.setenv(CONFIG_ENV, str(p))
    assert load_config().epochs == 5


def test_ini_round_trip(tmp_path):
    c = RunConfig(seed=3, lr=0.0123, encoder_aux=True, ablation="NO_EP", interval_mode="fixed")
    p = tmp_path / "c.ini"
    p.write_text(c.to_ini())
    assert load_config(p) == c


@pytest.mark.parametrize(
    "text, match",
    [
        ("[run]\nepoch = 3\n", "unknown key"),
        ("[model]\nepochs = 3\n", "unknown key"),
        ("[run]\nepochs = many\n", "cannot parse"),
        ("[run]\nablation = HALF\n", "ablation"),
        ("[run]\nlr = -1\n", "lr"),
        ("[model]\nn_layers = 1\n", "2 layers"),
        ("[loss]\nw_col = -0.5\n", "w_col"),
    ],
)
def test_bad_config_rejected(tmp_path, text, match):
    p = tmp_path / "bad.ini"
    p.write_text(text)
    with pytest.raises(ConfigError, match=match):
        load_config(p)


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "nope.ini")


# --- checkpoint ------------------------------------------------------------------------


def _ck(seed=0):
    cfg = RunConfig(seed=seed, **SMALL)
    params = init_model(seed, cfg.dims)
    rng = np.random.default_rng(seed)
    m = {k: rng.normal(size=v.shape) for k, v in params.items()}
    v = {k: rng.uniform(size=t.shape) for k, t in params.items()}
    return Checkpoint(params, AdamState(17, m, v), cfg)


def test_checkpoint_round_trip_is_byte_stable(tmp_path):
    ck = _ck()
    p1 = save_checkpoint(ck, tmp_path / "a.ckpt")
    back = load_checkpoint(p1)
    p2 = save_checkpoint(back, tmp_path / "b.ckpt")
    assert p1.read_bytes() == p2.read_bytes()
    assert back.config == ck.config and back.state.step == 17
    for k, t in ck.params.items():
        assert np.array_equal(back.params[k].value, t.value)
        assert np.array_equal(back.state.m[k], ck.state.m[k])


def test_checkpoint_magic_and_version():
    data = to_bytes(_ck())
    assert data[:8] == b"MPLNCKPT"
    with pytest.raises(CheckpointError, match="magic"):
        from_bytes(b"XXXXXXXX" + data[8:])
    with pytest.raises(CheckpointError, match="version"):
        from_bytes(data[:8] + (99).to_bytes(4, "little") + data[12:])


def test_checkpoint_truncation_detected():
    data = to_bytes(_ck())
    for cut in (4, 30, len(data) - 8):
        with pytest.raises(CheckpointError):
            from_bytes(data[:cut])


def test_compatibility_check():
    ck = _ck()
    check_compatible(ck.params, init_model(0, ck.config.dims))
    other = RunConfig(**dict(SMALL, d_model=16)).dims
    with pytest.raises(CheckpointError, match="shape"):
        check_compatible(ck.params, init_model(0, other))
    partial = dict(ck.params)
    partial.pop("dec.W1")
    with pytest.raises(CheckpointError, match="missing"):
        check_compatible(partial, ck.params)


def test_params_are_trainable_after_load():
    back = from_bytes(to_bytes(_ck()))
    assert all(isinstance(t, type(parameter(np.zeros(1)))) and t.requires_grad for t in back.params.values())
