"""Frame-level acoustic features and the conv + unidirectional LSTM adapter.

Features are precomputed constants (the frozen base); only the conv and
LSTM adapter weights learn.
"""

import numpy as np

from . import autodiff as ad
from .autodiff import Parameter
from .errors import ConfigError, DataError, ParseError, ShapeError

FEATURE_DIMS = {"pitch": 4, "melspec": 80, "wav2vec": 512}


class FrameFeatures:
    def __init__(self, matrix, kind="synthetic", frame_shift_ms=10.0):
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.ndim != 2 or matrix.shape[0] < 1:
            raise DataError(f"feature matrix must be T x d with T >= 1, got {matrix.shape}")
        if kind in FEATURE_DIMS and matrix.shape[1] != FEATURE_DIMS[kind]:
            raise DataError(
                f"kind {kind!r} requires d={FEATURE_DIMS[kind]}, got {matrix.shape[1]}")
        if not np.isfinite(matrix).all():
            raise DataError("non-finite value in feature matrix")
        self.matrix = matrix
        self.kind = kind
        self.frame_shift_ms = frame_shift_ms

    @property
    def n_frames(self):
        return self.matrix.shape[0]

    @property
    def dim(self):
        return self.matrix.shape[1]


class AcousticConfig:
    def __init__(self, input_dim, conv_kernel=5, conv_out=32, stride=1,
                 lstm_hidden=32, causal=False):
        if conv_kernel % 2 == 0:
            raise ConfigError(f"conv kernel width must be odd, got {conv_kernel}")
        if stride not in (1, 2):
            raise ConfigError(f"stride must be 1 or 2, got {stride}")
        self.input_dim = input_dim
        self.conv_kernel = conv_kernel
        self.conv_out = conv_out
        self.stride = stride
        self.lstm_hidden = lstm_hidden
        self.causal = causal


class AcousticEncoder:
    """conv1d (same padding) -> ReLU -> left-to-right LSTM from zero state."""

    def __init__(self, cfg, rng):
        self.cfg = cfg
        fan = cfg.conv_kernel * cfg.input_dim
        bound = np.sqrt(1.0 / fan)
        self.conv_kernel = Parameter(
            rng.uniform(-bound, bound, size=(cfg.conv_kernel, cfg.input_dim, cfg.conv_out)),
            name="ac.conv")
        h = cfg.lstm_hidden
        b_in = np.sqrt(1.0 / cfg.conv_out)
        b_h = np.sqrt(1.0 / h)
        self.wx = Parameter(rng.uniform(-b_in, b_in, size=(cfg.conv_out, 4 * h)), name="ac.wx")
        self.wh = Parameter(rng.uniform(-b_h, b_h, size=(h, 4 * h)), name="ac.wh")
        self.b = Parameter(np.zeros(4 * h), name="ac.b")

    def parameters(self):
        return [self.conv_kernel, self.wx, self.wh, self.b]

    def encode_frames(self, feats):
        """Frame states, one row per (possibly strided) frame."""
        if feats.dim != self.cfg.input_dim:
            raise ShapeError(
                f"feature dim {feats.dim} != configured input dim {self.cfg.input_dim}")
        x = ad.Tensor(feats.matrix)
        conv = ad.conv1d(x, self.conv_kernel, self.cfg.stride,
                         causal=self.cfg.causal)
        return ad.lstm_sequence(ad.relu(conv), self.wx, self.wh, self.b)


def save_features(path, feats):
    with open(path, "w") as f:
        f.write(f"#feat {feats.kind} {feats.n_frames} {feats.dim} "
                f"{fmt_num(feats.frame_shift_ms)}\n")
        for row in feats.matrix:
            f.write(" ".join(fmt_num(v) for v in row) + "\n")


def fmt_num(v):
    return repr(float(v))


def load_features(path):
    with open(path) as f:
        header = f.readline().rstrip("\n")
        fields = header.split()
        if len(fields) != 5 or fields[0] != "#feat":
            raise ParseError(f"{path}: bad feature header {header!r}")
        kind = fields[1]
        try:
            t, d = int(fields[2]), int(fields[3])
            shift = float(fields[4])
        except ValueError:
            raise ParseError(f"{path}: non-numeric field in header {header!r}")
        if kind in FEATURE_DIMS and d != FEATURE_DIMS[kind]:
            raise ParseError(
                f"{path}: kind {kind!r} requires d={FEATURE_DIMS[kind]}, header says {d}")
        rows = []
        for i, line in enumerate(f):
            vals = line.split()
            if len(vals) != d:
                raise ParseError(f"{path}: row {i} has {len(vals)} values, expected {d}")
            try:
                row = [float(v) for v in vals]
            except ValueError:
                raise ParseError(f"{path}: row {i} has a non-numeric value")
            if not all(np.isfinite(row)):
                raise ParseError(f"{path}: row {i} has a non-finite value")
            rows.append(row)
        if len(rows) != t:
            raise ParseError(f"{path}: header says T={t}, found {len(rows)} rows")
    return FrameFeatures(np.array(rows), kind=kind, frame_shift_ms=shift)
