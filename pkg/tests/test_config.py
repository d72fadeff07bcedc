import pytest

from factqa.config import (Hyperparams, RunConfig, apply_setting,
                           load_config_file)
from factqa.errors import DataError


def test_defaults_match_published_settings():
    h = Hyperparams()
    assert h.embedding_dim == 300
    assert h.hidden_size == 256
    assert h.gamma_r == 0.1 and h.gamma_s == 0.1
    assert h.m_r == 1024 and h.m_s == 1024
    assert h.lr_relation == 0.02
    assert h.lr_typevec_encoder == 0.001
    assert h.momentum == 0.9
    assert h.batch_size == 256
    assert h.init_range == 0.08


def test_config_file_parsing(tmp_path):
    p = tmp_path / "run.conf"
    p.write_text(
        "# comment lines are skipped\n"
        "seed=42\n"
        "hidden_size=32\n"
        "entity_repr=random\n"
        "dropout=0.25\n"
        "\n",
        encoding="utf-8")
    config = load_config_file(p)
    assert config.seed == 42
    assert config.hyper.hidden_size == 32
    assert config.entity_repr == "random"
    assert config.hyper.dropout == 0.25


def test_unknown_key_rejected(tmp_path):
    p = tmp_path / "run.conf"
    p.write_text("no_such_key=1\n", encoding="utf-8")
    with pytest.raises(DataError, match="unknown config key"):
        load_config_file(p)


def test_bad_value_reports_line(tmp_path):
    p = tmp_path / "run.conf"
    p.write_text("seed=notanint\n", encoding="utf-8")
    with pytest.raises(DataError, match=":1:"):
        load_config_file(p)


def test_apply_setting_overrides():
    config = RunConfig()
    apply_setting(config, "workers", "4")
    apply_setting(config, "freeze_entities", "true")
    apply_setting(config, "gamma_r", "0.2")
    assert config.workers == 4
    assert config.freeze_entities is True
    assert config.hyper.gamma_r == 0.2


def test_validate_rejects_bad_modes():
    config = RunConfig(pruning="everything")
    with pytest.raises(DataError):
        config.validate()
    config = RunConfig()
    config.hyper.dropout = 1.5
    with pytest.raises(DataError):
        config.validate()


def test_require_paths(tmp_path):
    config = RunConfig()
    with pytest.raises(DataError, match="kb_triples"):
        config.require_paths("kb_triples")
    config.kb_triples = str(tmp_path / "missing.tsv")
    with pytest.raises(DataError, match="no such file"):
        config.require_paths("kb_triples")
