"""End-to-end punctuator variants and the training loop.

Variants: "muse" (transformer lexical encoder + acoustic adapter +
fusion), "bert_like_lexical" (lexical only), "blstm" (bidirectional
LSTM over learned embeddings), "lstm_stream" (causal muse with
forced-alignment fusion, the streaming configuration).
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from . import tokenizer as tok_mod
from .acoustic import AcousticConfig, AcousticEncoder
from .autodiff import Parameter
from .data import N_CLASSES, class_stats, LABEL_NAMES
from .errors import ConfigError, DataError, ModeError, TrainingError
from .fusion import AttentionFusionParams, attention_fuse, forced_alignment_fuse
from .lexical import LexicalConfig, LexicalEncoder, init_param

VARIANTS = ("muse", "bert_like_lexical", "blstm", "lstm_stream")
CLI_VARIANTS = {"muse": "muse", "lex": "bert_like_lexical", "blstm": "blstm",
                "stream": "lstm_stream"}


@dataclass
class TrainConfig:
    lr: float = 0.00002
    dropout: float = 0.1
    epochs: int = 10
    seed: int = 0
    batch_size: int = 8
    variant: str = "muse"
    fusion_mode: str = "fa"          # fa | att
    d_k: int = 32
    feat_dim: int = 8
    lexical_layers: int = 2
    lexical_hidden: int = 64
    lexical_heads: int = 4
    lexical_ff_mult: int = 4
    max_len: int = 512
    conv_kernel: int = 5
    conv_out: int = 32
    lstm_hidden: int = 32
    blstm_layers: int = 2
    class_weights: bool = False
    warm_start_epochs: int = 0
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.lr <= 0:
            raise ConfigError(f"lr must be > 0, got {self.lr}")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant {self.variant!r}")
        if self.fusion_mode not in ("fa", "att"):
            raise ConfigError(f"fusion mode must be fa or att, got {self.fusion_mode!r}")


class MuSeModel:
    """Lexical encoder (+ optional fused acoustic stream) -> linear+softmax head."""

    def __init__(self, vocab, cfg):
        self.vocab = vocab
        self.cfg = cfg
        self.variant = cfg.variant
        self.causal = cfg.variant == "lstm_stream"
        self.fusion_mode = "fa" if self.causal else cfg.fusion_mode
        self.multimodal = cfg.variant in ("muse", "lstm_stream")
        rng = np.random.default_rng(cfg.seed)
        self._dropout_rng = np.random.default_rng(cfg.seed + 1)

        head_in = 0
        self.lexical = None
        self.acoustic = None
        self.fusion_params = None
        self.blstm = None
        if cfg.variant == "blstm":
            self._build_blstm(rng)
            head_in = 2 * cfg.lstm_hidden
        else:
            lex_cfg = LexicalConfig(
                vocab_size=len(vocab), layers=cfg.lexical_layers,
                hidden=cfg.lexical_hidden, heads=cfg.lexical_heads,
                ff_mult=cfg.lexical_ff_mult, dropout=cfg.dropout,
                max_len=cfg.max_len)
            self.lexical = LexicalEncoder(lex_cfg, rng)
            head_in = cfg.lexical_hidden
            if self.multimodal:
                stride = 1 if self.fusion_mode == "fa" else 2
                ac_cfg = AcousticConfig(
                    input_dim=cfg.feat_dim, conv_kernel=cfg.conv_kernel,
                    conv_out=cfg.conv_out, stride=stride,
                    lstm_hidden=cfg.lstm_hidden, causal=self.causal)
                self.acoustic = AcousticEncoder(ac_cfg, rng)
                head_in += cfg.lstm_hidden
                if self.fusion_mode == "att":
                    self.fusion_params = AttentionFusionParams(
                        cfg.lstm_hidden, cfg.d_k, rng,
                        query_dim=cfg.lexical_hidden)
        self.head_w = init_param(rng, (head_in, N_CLASSES), "head.w")
        self.head_b = Parameter(np.zeros(N_CLASSES), name="head.b")

    def _build_blstm(self, rng):
        cfg = self.cfg
        h = cfg.lstm_hidden
        emb_bound = math.sqrt(1.0 / cfg.lexical_hidden)
        self.blstm_embed = Parameter(
            rng.uniform(-emb_bound, emb_bound, size=(len(self.vocab), cfg.lexical_hidden)),
            name="blstm.embed")
        self.blstm = []
        d_in = cfg.lexical_hidden
        for li in range(cfg.blstm_layers):
            layer = {}
            for direction in ("fwd", "bwd"):
                bi = math.sqrt(1.0 / d_in)
                bh = math.sqrt(1.0 / h)
                layer[direction] = {
                    "wx": Parameter(rng.uniform(-bi, bi, size=(d_in, 4 * h)),
                                    name=f"blstm.{li}.{direction}.wx"),
                    "wh": Parameter(rng.uniform(-bh, bh, size=(h, 4 * h)),
                                    name=f"blstm.{li}.{direction}.wh"),
                    "b": Parameter(np.zeros(4 * h), name=f"blstm.{li}.{direction}.b"),
                }
            self.blstm.append(layer)
            d_in = 2 * h

    def parameters(self):
        out = []
        if self.lexical is not None:
            out.extend(self.lexical.parameters())
        if self.acoustic is not None:
            out.extend(self.acoustic.parameters())
        if self.fusion_params is not None:
            out.extend(self.fusion_params.parameters())
        if self.blstm is not None:
            out.append(self.blstm_embed)
            for layer in self.blstm:
                for d in layer.values():
                    out.extend(d.values())
        out.extend([self.head_w, self.head_b])
        return out

    # -- forward ----------------------------------------------------------

    def forward(self, utt, training=False, allow_missing_acoustic=False):
        """Per-subword class distributions; returns (probs, tokenized)."""
        tok = tok_mod.tokenize(utt.words, self.vocab)
        if self.variant == "blstm":
            feats = self._blstm_states(tok, training)
        else:
            rng = self._dropout_rng if training else None
            h_lex = self.lexical.encode(tok, causal=self.causal,
                                        training=training, rng=rng)
            feats = h_lex
            if self.multimodal:
                h_ac = self._fused_acoustic(utt, tok, h_lex, allow_missing_acoustic)
                feats = ad.concat_cols([h_lex, h_ac])
        logits = ad.add(ad.matmul(feats, self.head_w), self.head_b)
        return ad.softmax_rows(logits), tok

    def _fused_acoustic(self, utt, tok, h_lex, allow_missing):
        if utt.frames is None or (self.fusion_mode == "fa" and utt.boundaries is None):
            if allow_missing:
                zeros = np.zeros((tok.n_subwords, self.cfg.lstm_hidden))
                return ad.Tensor(zeros)
            raise DataError(
                f"{utt.id}: multimodal variant needs frames"
                + (" and boundaries" if self.fusion_mode == "fa" else ""))
        states = self.acoustic.encode_frames(utt.frames)
        if self.fusion_mode == "fa":
            bounds = utt.boundaries.scaled(self.acoustic.cfg.stride)
            return forced_alignment_fuse(states, bounds, tok)
        return attention_fuse(h_lex, states, self.fusion_params)

    def _blstm_states(self, tok, training):
        x = ad.gather_rows(self.blstm_embed, tok.subword_ids)
        rng = self._dropout_rng
        for layer in self.blstm:
            f = layer["fwd"]
            fwd = ad.lstm_sequence(x, f["wx"], f["wh"], f["b"])
            b = layer["bwd"]
            rev = ad.gather_rows(x, list(range(x.data.shape[0] - 1, -1, -1)))
            bwd = ad.lstm_sequence(rev, b["wx"], b["wh"], b["b"])
            bwd = ad.gather_rows(bwd, list(range(x.data.shape[0] - 1, -1, -1)))
            x = ad.concat_cols([fwd, bwd])
            x = ad.dropout(x, self.cfg.dropout if training else 0.0, rng, training)
        return x

    def loss(self, utterances, training=False, class_weight_vec=None):
        """Mean cross-entropy over all subword positions in the batch."""
        terms = []
        total = 0
        for utt in utterances:
            probs, tok = self.forward(utt, training=training)
            targets = tok_mod.project_labels_to_subwords(utt.labels, tok)
            if class_weight_vec is None:
                ce = ad.cross_entropy(probs, targets)
            else:
                ce = _weighted_cross_entropy(probs, targets, class_weight_vec)
            n = tok.n_subwords
            terms.append(ad.scale(ce, float(n)))
            total += n
        if not terms:
            raise DataError("loss over an empty batch")
        acc = terms[0]
        for t in terms[1:]:
            acc = ad.add(acc, t)
        return ad.scale(acc, 1.0 / total), total

    # -- prediction -------------------------------------------------------

    def predict_word_labels(self, utt):
        probs, tok = self.forward(utt, allow_missing_acoustic=True)
        sub_preds = list(np.argmax(probs.data, axis=1))
        return tok_mod.collapse_predictions(sub_preds, tok)

    def predict_streaming(self, utt):
        """Causal prediction over the full utterance."""
        if not self.causal:
            raise ModeError("predict_streaming requires a causal (stream) model")
        probs, _ = self.forward(utt)
        return probs

    def predict_streaming_incremental(self, utt):
        """Word-by-word replay; returns the same rows as predict_streaming."""
        if not self.causal:
            raise ModeError("predict_streaming requires a causal (stream) model")
        from .data import Utterance
        rows = []
        seen = 0
        for k in range(1, utt.n_words + 1):
            prefix = Utterance(
                id=utt.id, words=utt.words[:k], labels=utt.labels[:k],
                frames=utt.frames,
                boundaries=_prefix_bounds(utt.boundaries, k))
            probs, tok = self.forward(prefix)
            rows.append(probs.data[seen:])
            seen = probs.data.shape[0]
        return np.concatenate(rows, axis=0)


def _prefix_bounds(bounds, k):
    if bounds is None:
        return None
    from .fusion import WordBoundaries
    return WordBoundaries(bounds.intervals[:k])


def _weighted_cross_entropy(probs, targets, weights):
    """Inverse-frequency weighting variant of the loss (flag-controlled)."""
    t = np.asarray(targets)
    w = weights[t]
    eps = 1e-12
    picked = probs.data[np.arange(len(t)), t]
    clamped = np.maximum(picked, eps)
    loss = float((-np.log(clamped) * w).sum() / w.sum()) if len(t) else 0.0

    def bw(g):
        gp = np.zeros_like(probs.data)
        live = picked > eps
        gp[np.arange(len(t)), t] = np.where(
            live, -w / (clamped * w.sum()), 0.0) * float(g)
        return [(probs, gp)]

    return ad._node(np.asarray(loss), [probs], bw)


# ---------------------------------------------------------------------------
# training


def train(corpus, cfg, vocab=None, dev=None, log=None):
    """Train a model; deterministic given cfg.seed.

    Returns (model, per-epoch mean training loss). When a dev corpus is
    given the returned parameters are the best dev macro-F1 snapshot.
    """
    from .metrics import evaluate_reference
    from .optim import Adam

    if not corpus:
        raise DataError("cannot train on an empty corpus")
    if vocab is None:
        words = [w for utt in corpus for w in utt.words]
        vocab = tok_mod.build_vocab(words, target_size=200)
    model = MuSeModel(vocab, cfg)
    params = model.parameters()
    opt = Adam(params, lr=cfg.lr)
    order_rng = np.random.default_rng(cfg.seed + 2)

    weight_vec = None
    if cfg.class_weights:
        stats = class_stats(corpus)
        counts = np.array([max(stats.counts[n], 1) for n in LABEL_NAMES], dtype=float)
        weight_vec = counts.sum() / (len(counts) * counts)

    if cfg.warm_start_epochs > 0 and model.lexical is not None:
        _masked_token_warm_start(model, corpus, cfg)

    curve = []
    best_f1 = -1.0
    best_snapshot = None
    step = 0
    for epoch in range(cfg.epochs):
        idx = order_rng.permutation(len(corpus))
        epoch_loss = 0.0
        epoch_pos = 0
        for start in range(0, len(corpus), cfg.batch_size):
            batch = [corpus[i] for i in idx[start:start + cfg.batch_size]]
            opt.zero_grad()
            loss, n_pos = model.loss(batch, training=True,
                                     class_weight_vec=weight_vec)
            step += 1
            if not np.isfinite(loss.data):
                raise TrainingError(f"non-finite loss at step {step} "
                                    f"(epoch {epoch + 1})")
            loss.backward()
            opt.step()
            epoch_loss += float(loss.data) * n_pos
            epoch_pos += n_pos
        curve.append(epoch_loss / epoch_pos)
        if log:
            log(f"epoch {epoch + 1}/{cfg.epochs} loss {curve[-1]:.4f}")
        if dev:
            f1 = evaluate_reference(model, dev).macro_f1()
            if f1 > best_f1:
                best_f1 = f1
                best_snapshot = [p.data.copy() for p in params]
    if best_snapshot is not None:
        for p, snap in zip(params, best_snapshot):
            p.data = snap
    return model, curve


def _masked_token_warm_start(model, corpus, cfg):
    """Masked-token reconstruction warm start for the lexical encoder."""
    from .optim import Adam
    rng = np.random.default_rng(cfg.seed + 3)
    vocab = model.vocab
    recon = init_param(np.random.default_rng(cfg.seed + 4),
                       (cfg.lexical_hidden, len(vocab)), "warm.recon")
    params = model.lexical.parameters() + [recon]
    opt = Adam(params, lr=cfg.lr)
    for _ in range(cfg.warm_start_epochs):
        for utt in corpus:
            tok = tok_mod.tokenize(utt.words, vocab)
            masked = list(tok.subword_ids)
            targets, positions = [], []
            for i, sid in enumerate(masked):
                if rng.random() < 0.15:
                    targets.append(sid)
                    positions.append(i)
                    masked[i] = vocab.unk_id
            if not positions:
                continue
            mtok = tok_mod.TokenizedUtterance(
                masked, tok.pieces, tok.word_index, tok.is_word_final)
            h = model.lexical.encode(mtok, causal=model.causal)
            logits = ad.matmul(ad.gather_rows(h, positions), recon)
            loss = ad.cross_entropy(ad.softmax_rows(logits), targets)
            opt.zero_grad()
            loss.backward()
            opt.step()
