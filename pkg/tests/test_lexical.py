import numpy as np
import pytest

from muse import autodiff as ad
from muse.autodiff import Tensor
from muse.errors import DataError, LengthError
from muse.lexical import (LexicalConfig, LexicalEncoder, causal_mask,
                          self_attention, sinusoidal_positions)
from muse.tokenizer import TokenizedUtterance, WordpieceVocab, build_vocab, tokenize


def make_encoder(seed=0, **kw):
    cfg = LexicalConfig(vocab_size=30, layers=kw.pop("layers", 2),
                        hidden=kw.pop("hidden", 16), heads=kw.pop("heads", 2),
                        **kw)
    return LexicalEncoder(cfg, np.random.default_rng(seed))


def make_tok(ids):
    n = len(ids)
    return TokenizedUtterance(list(ids), ["x"] * n, list(range(n)), [True] * n)


def test_config_validation():
    from muse.errors import ConfigError
    with pytest.raises(ConfigError):
        LexicalConfig(vocab_size=10, hidden=10, heads=4)
    with pytest.raises(ConfigError):
        LexicalConfig(vocab_size=10, layers=0)


def test_single_token_causal_equals_noncausal():
    enc = make_encoder()
    tok = make_tok([3])
    a = enc.encode(tok, causal=False).data
    b = enc.encode(tok, causal=True).data
    assert a.shape == (1, 16)
    assert np.array_equal(a, b)


def test_causal_prefix_invariance_exact():
    enc = make_encoder(seed=3)
    ids = [1, 5, 9, 2, 7, 4, 11, 3]
    full = enc.encode(make_tok(ids), causal=True).data
    for k in range(1, len(ids)):
        prefix = enc.encode(make_tok(ids[:k]), causal=True).data
        assert np.array_equal(prefix, full[:k])


def test_noncausal_shape_and_finiteness_only():
    enc = make_encoder(seed=4)
    out = enc.encode(make_tok([2, 4, 6, 8]), causal=False).data
    assert out.shape == (4, 16)
    assert np.isfinite(out).all()


def test_empty_and_overlong_inputs():
    enc = make_encoder(max_len=4)
    with pytest.raises(DataError):
        enc.encode(make_tok([]))
    with pytest.raises(LengthError):
        enc.encode(make_tok([1, 2, 3, 4, 5]))


def _zero_block(hidden):
    from muse.autodiff import Parameter
    return {k: Parameter(np.zeros((hidden, hidden)), name=k)
            for k in ("wq", "wk", "wv", "wo")}


def test_zero_projections_give_uniform_attention():
    # zero logits -> uniform weights over unmasked positions
    rng = np.random.default_rng(5)
    x = Tensor(rng.standard_normal((5, 8)))
    blk = _zero_block(8)
    out = self_attention(x, blk, heads=2, mask=None)
    assert np.array_equal(out.data, np.zeros((5, 8)))  # wv = 0 -> values 0


def test_causal_first_position_attends_only_to_itself():
    rng = np.random.default_rng(6)
    hidden = 8
    x = rng.standard_normal((4, hidden))
    wq = rng.standard_normal((hidden, hidden))
    wk = rng.standard_normal((hidden, hidden))
    q = x @ wq
    k = x @ wk
    logits = (q @ k.T) / np.sqrt(hidden) + causal_mask(4)
    w = ad.softmax_rows(Tensor(logits)).data
    assert np.array_equal(w[0], [1.0, 0.0, 0.0, 0.0])


def test_identical_rows_give_identical_outputs():
    rng = np.random.default_rng(7)
    row = rng.standard_normal(8)
    x = Tensor(np.stack([row, row]))
    enc = make_encoder(seed=8, hidden=8)
    blk = enc.blocks[0]
    out = self_attention(x, blk, heads=2, mask=None)
    assert np.allclose(out.data[0], out.data[1], atol=1e-12)


def test_attention_matches_nested_loop_reference():
    rng = np.random.default_rng(9)
    hidden, heads, n = 8, 2, 5
    enc = make_encoder(seed=10, hidden=hidden, heads=heads)
    blk = enc.blocks[0]
    x = rng.standard_normal((n, hidden))
    out = self_attention(Tensor(x), blk, heads=heads, mask=None).data

    d_head = hidden // heads
    q = x @ blk["wq"].data
    k = x @ blk["wk"].data
    v = x @ blk["wv"].data
    ref = np.zeros((n, hidden))
    for h in range(heads):
        sl = slice(h * d_head, (h + 1) * d_head)
        for i in range(n):
            logits = np.array([q[i, sl] @ k[j, sl] for j in range(n)]) / np.sqrt(d_head)
            e = np.exp(logits - logits.max())
            w = e / e.sum()
            for j in range(n):
                ref[i, sl] += w[j] * v[j, sl]
    ref = ref @ blk["wo"].data
    assert np.abs(out - ref).max() < 1e-10


def test_attention_weight_rows_sum_to_one():
    rng = np.random.default_rng(11)
    x = rng.standard_normal((6, 4))
    logits = Tensor(x @ x.T)
    for mask in (None, causal_mask(6)):
        w = ad.softmax_rows(logits, mask=mask).data
        assert np.abs(w.sum(axis=1) - 1.0).max() < 1e-9


def test_sinusoidal_positions_shape_and_range():
    pe = sinusoidal_positions(12, 16)
    assert pe.shape == (12, 16)
    assert np.abs(pe).max() <= 1.0


def test_encode_on_real_tokenization():
    vocab = build_vocab(["hello", "world", "how", "are", "you"] * 2, 40)
    enc = LexicalEncoder(LexicalConfig(vocab_size=len(vocab), layers=1,
                                       hidden=8, heads=2),
                         np.random.default_rng(12))
    tok = tokenize(["hello", "world"], vocab)
    out = enc.encode(tok)
    assert out.data.shape == (tok.n_subwords, 8)
