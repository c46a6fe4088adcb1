"""Flat `section.key = value` experiment configuration.

CLI flags override file values; file values override TrainConfig
defaults.
"""

from .errors import ConfigError
from .model import TrainConfig

# config key -> TrainConfig field
KEY_MAP = {
    "train.lr": "lr",
    "train.dropout": "dropout",
    "train.epochs": "epochs",
    "train.seed": "seed",
    "train.batch_size": "batch_size",
    "train.class_weights": "class_weights",
    "train.warm_start_epochs": "warm_start_epochs",
    "model.variant": "variant",
    "model.blstm_layers": "blstm_layers",
    "lexical.layers": "lexical_layers",
    "lexical.hidden": "lexical_hidden",
    "lexical.heads": "lexical_heads",
    "lexical.ff_mult": "lexical_ff_mult",
    "lexical.max_len": "max_len",
    "lexical.dropout": "dropout",
    "fusion.mode": "fusion_mode",
    "fusion.d_k": "d_k",
    "acoustic.conv_kernel": "conv_kernel",
    "acoustic.conv_out": "conv_out",
    "acoustic.lstm_hidden": "lstm_hidden",
    "acoustic.feat_dim": "feat_dim",
}

_INT_FIELDS = {"epochs", "seed", "batch_size", "warm_start_epochs", "blstm_layers",
               "lexical_layers", "lexical_hidden", "lexical_heads",
               "lexical_ff_mult", "max_len", "d_k", "conv_kernel", "conv_out",
               "lstm_hidden", "feat_dim"}
_FLOAT_FIELDS = {"lr", "dropout"}
_BOOL_FIELDS = {"class_weights"}


def parse_config_file(path):
    values = {}
    with open(path) as f:
        for lineno, line in enumerate(f, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'section.key = value'")
            key, _, raw = line.partition("=")
            values[key.strip()] = raw.strip()
    return values


def coerce(field, raw):
    try:
        if field in _INT_FIELDS:
            return int(raw)
        if field in _FLOAT_FIELDS:
            return float(raw)
        if field in _BOOL_FIELDS:
            if isinstance(raw, bool):
                return raw
            low = str(raw).lower()
            if low in ("true", "1", "yes", "on"):
                return True
            if low in ("false", "0", "no", "off"):
                return False
            raise ValueError(raw)
    except ValueError:
        raise ConfigError(f"bad value {raw!r} for {field}")
    return raw


def build_train_config(file_values=None, overrides=None):
    """Resolve a TrainConfig from config-file values plus flag overrides."""
    kwargs = {}
    for key, raw in (file_values or {}).items():
        if key not in KEY_MAP:
            raise ConfigError(f"unknown config key {key!r}")
        f = KEY_MAP[key]
        kwargs[f] = coerce(f, raw)
    for f, v in (overrides or {}).items():
        if v is not None:
            kwargs[f] = coerce(f, v)
    return TrainConfig(**kwargs)


def config_to_dict(cfg):
    out = {}
    for key, f in KEY_MAP.items():
        out[key] = getattr(cfg, f)
    return out
