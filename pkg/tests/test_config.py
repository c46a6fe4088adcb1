import pytest

from muse.config import (KEY_MAP, build_train_config, coerce, config_to_dict,
                         parse_config_file)
from muse.errors import ConfigError
from muse.model import TrainConfig


class TestParse:
    def test_basic_file(self, tmp_path):
        p = tmp_path / "exp.cfg"
        p.write_text(
            "# experiment\n"
            "train.lr = 0.001\n"
            "train.epochs = 3  # short run\n"
            "\n"
            "model.variant = blstm\n")
        assert parse_config_file(p) == {
            "train.lr": "0.001", "train.epochs": "3", "model.variant": "blstm"}

    def test_missing_equals(self, tmp_path):
        p = tmp_path / "bad.cfg"
        p.write_text("train.lr 0.001\n")
        with pytest.raises(ConfigError, match="bad.cfg:1"):
            parse_config_file(p)


class TestCoerce:
    def test_types(self):
        assert coerce("epochs", "7") == 7
        assert coerce("lr", "1e-3") == 1e-3
        assert coerce("class_weights", "yes") is True
        assert coerce("class_weights", "off") is False
        assert coerce("class_weights", True) is True
        assert coerce("variant", "muse") == "muse"

    def test_bad_values(self):
        with pytest.raises(ConfigError):
            coerce("epochs", "three")
        with pytest.raises(ConfigError):
            coerce("lr", "fast")
        with pytest.raises(ConfigError):
            coerce("class_weights", "maybe")


class TestBuild:
    def test_defaults(self):
        cfg = build_train_config()
        assert cfg == TrainConfig()

    def test_file_overrides_defaults(self):
        cfg = build_train_config({"train.lr": "0.01", "lexical.hidden": "48"})
        assert cfg.lr == 0.01 and cfg.lexical_hidden == 48

    def test_flags_override_file(self):
        cfg = build_train_config({"train.epochs": "3"}, {"epochs": 9})
        assert cfg.epochs == 9

    def test_none_overrides_ignored(self):
        cfg = build_train_config({"train.epochs": "3"}, {"epochs": None})
        assert cfg.epochs == 3

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="train.momentum"):
            build_train_config({"train.momentum": "0.9"})

    def test_roundtrip_through_dict(self):
        cfg = TrainConfig(lr=0.005, epochs=4, variant="blstm", lstm_hidden=12)
        again = build_train_config(
            {k: str(v) for k, v in config_to_dict(cfg).items()})
        assert again == cfg

    def test_key_map_fields_exist(self):
        fields = set(TrainConfig.__dataclass_fields__)
        assert set(KEY_MAP.values()) <= fields
