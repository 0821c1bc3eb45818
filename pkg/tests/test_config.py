from pathlib import Path

import pytest
import yaml

from salsa.config import RunConfig, build_run_config, load_run_config, run_config_from_dict
from salsa.exceptions import ConfigError, DataError
from salsa.io import get_params
from salsa.models import Mode
from salsa.nn import ArchitectureConfig


def write_yaml(path: Path, values) -> Path:
    path.write_text(yaml.safe_dump(values), encoding="utf-8")
    return path


def test_presets():
    desk = build_run_config()
    assert desk.preset == "desk" and desk.max_tokens == 19
    assert desk.arch == ArchitectureConfig()

    paper = build_run_config(preset="paper")
    assert paper.max_tokens == 50
    assert paper.arch.d_model == 304 and paper.arch.max_len == 50
    assert paper.arch.n_blocks_ae == 3 and paper.arch.n_blocks_gan == 3
    assert paper.train.lam == 20.0


def test_unknown_preset():
    with pytest.raises(ConfigError):
        build_run_config(preset="huge")


def test_file_values_override_preset(tmp_path):
    path = write_yaml(tmp_path / "run.yaml", {"preset": "paper", "d_model": 64, "mode": "arae", "epochs": 3,
                                              "corpus": "data/x.txt"})
    cfg = load_run_config(path)
    assert cfg.preset == "paper" and cfg.max_tokens == 50
    assert cfg.arch.d_model == 64 and cfg.train.mode is Mode.ARAE and cfg.train.epochs == 3
    assert cfg.corpus == Path("data/x.txt")


def test_flags_override_file(tmp_path):
    path = write_yaml(tmp_path / "run.yaml", {"preset": "paper", "seed": 4})
    cfg = load_run_config(path, preset="desk", seed=9)
    assert cfg.preset == "desk" and cfg.train.seed == 9 and cfg.max_tokens == 19


def test_unknown_keys_are_rejected(tmp_path):
    with pytest.raises(ConfigError, match="d_modle"):
        load_run_config(write_yaml(tmp_path / "run.yaml", {"d_modle": 64}))


def test_misspelled_mode(tmp_path):
    with pytest.raises(ConfigError):
        load_run_config(write_yaml(tmp_path / "run.yaml", {"mode": "aea"}))


def test_nested_values_are_rejected(tmp_path):
    with pytest.raises(ConfigError, match="nested"):
        load_run_config(write_yaml(tmp_path / "run.yaml", {"train": {"epochs": 2}}))


def test_top_level_must_be_a_mapping(tmp_path):
    with pytest.raises(ConfigError):
        load_run_config(write_yaml(tmp_path / "run.yaml", [1, 2]))


def test_coercion():
    cfg = build_run_config({"epochs": "4", "log_wall_time": "no", "lam": 5, "dropout_p": "0.2"})
    assert cfg.train.epochs == 4 and cfg.train.log_wall_time is False
    assert isinstance(cfg.train.lam, float) and cfg.arch.dropout_p == 0.2
    with pytest.raises(ConfigError):
        build_run_config({"epochs": 2.5})
    with pytest.raises(ConfigError):
        build_run_config({"epochs": True})
    with pytest.raises(ConfigError):
        build_run_config({"metric_hook": "maybe"})


def test_out_of_range_values():
    with pytest.raises(ConfigError):
        build_run_config({"n_heads": 3})
    with pytest.raises(ConfigError):
        build_run_config({"n_critic": 0})
    with pytest.raises(ConfigError):
        build_run_config({"max_tokens": 0})


def test_to_dict_round_trip():
    cfg = build_run_config({"mode": "arae", "corpus": "c.txt", "bpe": "b.txt", "n_critic": 2}, preset="paper", seed=5)
    values = cfg.to_dict()
    assert values["mode"] == "arae" and values["corpus"] == "c.txt"
    assert run_config_from_dict(values) == cfg


def test_default_run_config_is_valid():
    assert RunConfig().validate().checkpoint_dir == Path("runs/default")


def test_get_params(tmp_path):
    assert get_params(write_yaml(tmp_path / "a.yaml", {"epochs": 2})) == {"epochs": 2}
    (tmp_path / "empty.yaml").write_text("", encoding="utf-8")
    assert get_params(tmp_path / "empty.yaml") == {}
    with pytest.raises(DataError):
        get_params(tmp_path / "missing.yaml")
    (tmp_path / "bad.yaml").write_text("a: [1, 2\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        get_params(tmp_path / "bad.yaml")
