"""Transformer encoder over subword ids.

Pre-norm blocks with sinusoidal positions; an upper-triangular -inf
attention mask gives the causal (streaming) variant. Multi-head
attention is realized by column-slicing the fused Q/K/V projections.
"""

import numpy as np

from . import autodiff as ad
from .autodiff import Parameter
from .errors import ConfigError, DataError, LengthError


class LexicalConfig:
    def __init__(self, vocab_size, layers=2, hidden=64, heads=4, ff_mult=4,
                 dropout=0.1, max_len=512):
        if hidden % heads != 0:
            raise ConfigError(f"hidden {hidden} not divisible by heads {heads}")
        if layers < 1:
            raise ConfigError("layers must be >= 1")
        self.vocab_size = vocab_size
        self.layers = layers
        self.hidden = hidden
        self.heads = heads
        self.ff_mult = ff_mult
        self.dropout = dropout
        self.max_len = max_len


def init_param(rng, shape, name, fan_in=None):
    fan = fan_in if fan_in is not None else shape[0]
    bound = np.sqrt(1.0 / max(fan, 1))
    return Parameter(rng.uniform(-bound, bound, size=shape), name=name)


def sinusoidal_positions(n, d):
    pos = np.arange(n)[:, None].astype(np.float64)
    dim = np.arange(d // 2)[None, :].astype(np.float64)
    angle = pos / np.power(10000.0, 2.0 * dim / d)
    pe = np.zeros((n, d))
    pe[:, 0::2] = np.sin(angle)
    pe[:, 1::2] = np.cos(angle[:, : d - d // 2])
    return pe


class LexicalEncoder:
    def __init__(self, cfg, rng):
        self.cfg = cfg
        h = cfg.hidden
        self.embedding = init_param(rng, (cfg.vocab_size, h), "lex.embed", fan_in=h)
        self.blocks = []
        for li in range(cfg.layers):
            p = f"lex.block{li}"
            blk = {
                "wq": init_param(rng, (h, h), f"{p}.wq"),
                "wk": init_param(rng, (h, h), f"{p}.wk"),
                "wv": init_param(rng, (h, h), f"{p}.wv"),
                "wo": init_param(rng, (h, h), f"{p}.wo"),
                "ln1_g": Parameter(np.ones(h), name=f"{p}.ln1_g"),
                "ln1_b": Parameter(np.zeros(h), name=f"{p}.ln1_b"),
                "w1": init_param(rng, (h, h * cfg.ff_mult), f"{p}.w1"),
                "b1": Parameter(np.zeros(h * cfg.ff_mult), name=f"{p}.b1"),
                "w2": init_param(rng, (h * cfg.ff_mult, h), f"{p}.w2"),
                "b2": Parameter(np.zeros(h), name=f"{p}.b2"),
                "ln2_g": Parameter(np.ones(h), name=f"{p}.ln2_g"),
                "ln2_b": Parameter(np.zeros(h), name=f"{p}.ln2_b"),
            }
            self.blocks.append(blk)
        self.ln_f_g = Parameter(np.ones(h), name="lex.ln_f_g")
        self.ln_f_b = Parameter(np.zeros(h), name="lex.ln_f_b")

    def parameters(self):
        out = [self.embedding]
        for blk in self.blocks:
            out.extend(blk.values())
        out.extend([self.ln_f_g, self.ln_f_b])
        return out

    def encode(self, tok, causal=False, training=False, rng=None):
        """Contextual representations, one row per subword."""
        n = len(tok.subword_ids)
        if n == 0:
            raise DataError("cannot encode an empty utterance")
        if n > self.cfg.max_len:
            raise LengthError(f"sequence length {n} > max_len {self.cfg.max_len}")
        mask = causal_mask(n) if causal else None
        x = ad.gather_rows(self.embedding, tok.subword_ids)
        x = ad.add(x, ad.Tensor(sinusoidal_positions(n, self.cfg.hidden)))
        drop = self.cfg.dropout if training else 0.0
        for blk in self.blocks:
            normed = ad.layer_norm(x, blk["ln1_g"], blk["ln1_b"])
            att = self_attention(normed, blk, self.cfg.heads, mask)
            att = ad.dropout(att, drop, rng, training)
            x = ad.add(x, att)
            normed = ad.layer_norm(x, blk["ln2_g"], blk["ln2_b"])
            ff = ad.matmul(normed, blk["w1"])
            ff = ad.add(ff, blk["b1"])
            ff = ad.relu(ff)
            ff = ad.matmul(ff, blk["w2"])
            ff = ad.add(ff, blk["b2"])
            ff = ad.dropout(ff, drop, rng, training)
            x = ad.add(x, ff)
        return ad.layer_norm(x, self.ln_f_g, self.ln_f_b)


def causal_mask(n):
    m = np.zeros((n, n))
    m[np.triu_indices(n, k=1)] = -np.inf
    return m


def self_attention(x, blk, heads, mask):
    """Multi-head scaled dot-product self-attention.

    mask is an n x n array of 0 / -inf or None.
    """
    h = x.data.shape[1]
    d_head = h // heads
    q = ad.matmul(x, blk["wq"])
    k = ad.matmul(x, blk["wk"])
    v = ad.matmul(x, blk["wv"])
    outs = []
    for hi in range(heads):
        a, b = hi * d_head, (hi + 1) * d_head
        qh = ad.slice_cols(q, a, b)
        kh = ad.slice_cols(k, a, b)
        vh = ad.slice_cols(v, a, b)
        logits = ad.scale(ad.matmul(qh, ad.transpose(kh)), 1.0 / np.sqrt(d_head))
        weights = ad.softmax_rows(logits, mask=mask)
        outs.append(ad.matmul(weights, vh))
    return ad.matmul(ad.concat_cols(outs), blk["wo"])
