"""Finite-difference verification suite over every differentiable
primitive and the full multimodal forward graph."""

import numpy as np

from . import autodiff as ad
from .autodiff import Parameter
from .data import gen_synthetic
from .gradcheck import check_gradients, max_rel_err
from .model import MuSeModel, TrainConfig
from .tokenizer import build_vocab


def _p(rng, *shape, name="p"):
    return Parameter(rng.standard_normal(shape) * 0.5, name=name)


def op_checks(seed):
    """Yield (name, build_loss, params) triples for one seed."""
    rng = np.random.default_rng(seed)

    a = _p(rng, 3, 4, name="a")
    b = _p(rng, 4, 5, name="b")
    yield "matmul", (lambda: ad.mean_all(ad.matmul(a, b))), [a, b]

    x = _p(rng, 4, 6, name="x")
    wsm = ad.Tensor(rng.standard_normal((4, 6)))
    yield "softmax_rows", (lambda: ad.mean_all(
        ad.mul(ad.softmax_rows(x), wsm))), [x]

    xc = _p(rng, 9, 3, name="xc")
    k = _p(rng, 5, 3, 2, name="k")
    w = ad.Tensor(np.random.default_rng(seed + 50).standard_normal((9, 2)))
    yield "conv1d_s1", (lambda: ad.mean_all(ad.mul(ad.conv1d(xc, k, 1), w))), [xc, k]
    w2 = ad.Tensor(np.random.default_rng(seed + 51).standard_normal((5, 2)))
    yield "conv1d_s2", (lambda: ad.mean_all(ad.mul(ad.conv1d(xc, k, 2), w2))), [xc, k]
    yield "conv1d_causal", (lambda: ad.mean_all(ad.mul(ad.conv1d(xc, k, 1, causal=True), w))), [xc, k]

    xs = _p(rng, 1, 3, name="xs")
    hs = _p(rng, 1, 4, name="hs")
    cs = _p(rng, 1, 4, name="cs")
    wx = _p(rng, 3, 16, name="wx")
    wh = _p(rng, 4, 16, name="wh")
    bb = _p(rng, 16, name="bb")

    def lstm_step_loss():
        h2, c2 = ad.lstm_step(xs, hs, cs, wx, wh, bb)
        return ad.add(ad.mean_all(h2), ad.mean_all(c2))

    yield "lstm_step", lstm_step_loss, [xs, hs, cs, wx, wh, bb]

    xq = _p(rng, 6, 3, name="xq")
    wsel = ad.Tensor(np.random.default_rng(seed + 52).standard_normal((6, 4)))
    yield "lstm_sequence", (lambda: ad.mean_all(
        ad.mul(ad.lstm_sequence(xq, wx, wh, bb), wsel))), [xq, wx, wh, bb]

    logits = _p(rng, 5, 4, name="logits")
    targets = np.random.default_rng(seed + 53).integers(0, 4, size=5)
    yield "cross_entropy", (lambda: ad.cross_entropy(
        ad.softmax_rows(logits), targets)), [logits]

    g = _p(rng, 6, name="gain")
    bi = _p(rng, 6, name="bias")
    xl = _p(rng, 4, 6, name="xl")
    wl = ad.Tensor(np.random.default_rng(seed + 54).standard_normal((4, 6)))
    yield "layer_norm", (lambda: ad.mean_all(
        ad.mul(ad.layer_norm(xl, g, bi), wl))), [xl, g, bi]

    yield "tanh_sigmoid_relu", (lambda: ad.mean_all(
        ad.relu(ad.add(ad.tanh(a), ad.sigmoid(a))))), [a]


def model_check(seed, fusion_mode="fa"):
    """Full forward graph gradcheck on one tiny utterance."""
    sc = gen_synthetic(seed, 1, feat_dim=4)
    utt = sc.corpus[0]
    vocab = build_vocab(utt.words, target_size=120)
    cfg = TrainConfig(seed=seed, variant="muse", fusion_mode=fusion_mode,
                      feat_dim=4, lexical_layers=1, lexical_hidden=8,
                      lexical_heads=2, lexical_ff_mult=2, conv_out=4,
                      lstm_hidden=4, d_k=4, dropout=0.0)
    model = MuSeModel(vocab, cfg)
    params = model.parameters()

    def build_loss():
        loss, _ = model.loss([utt])
        return loss

    return build_loss, params


def run_suite(seeds=range(10), h=1e-5, rtol=1e-4, include_model=True):
    """Returns a list of (name, seed, max_rel_err, passed)."""
    results = []
    for seed in seeds:
        for name, build_loss, params in op_checks(seed):
            res = check_gradients(build_loss, params, h=h)
            err = max_rel_err(res)
            results.append((name, seed, err, err < rtol))
    if include_model:
        for seed in list(seeds)[:2]:
            for mode in ("fa", "att"):
                build_loss, params = model_check(seed, fusion_mode=mode)
                res = check_gradients(build_loss, params, h=h)
                err = max_rel_err(res)
                results.append((f"muse_forward_{mode}", seed, err, err < rtol))
    return results
