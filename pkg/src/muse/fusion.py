"""Aligning frame-rate acoustic states to the subword-rate lexical sequence.

Two mechanisms: forced-alignment gathering (each word takes the LSTM
state at its last frame, duplicated across its subwords) and single-head
scaled dot-product attention with lexical queries over projected keys.
"""

import numpy as np

from . import autodiff as ad
from .autodiff import Parameter
from .errors import AlignmentError, DataError


class WordBoundaries:
    """Per word, a [start_frame, end_frame) interval; non-overlapping, ordered."""

    def __init__(self, intervals):
        prev_end = 0
        for s, e in intervals:
            if not (0 <= s < e):
                raise AlignmentError(f"bad interval [{s}, {e})")
            if s < prev_end:
                raise AlignmentError(f"interval [{s}, {e}) overlaps its predecessor")
            prev_end = e
        self.intervals = [(int(s), int(e)) for s, e in intervals]

    def __len__(self):
        return len(self.intervals)

    def __iter__(self):
        return iter(self.intervals)

    def scaled(self, stride):
        if stride == 1:
            return self
        return WordBoundaries([(s // stride, max(e // stride, s // stride + 1))
                               for s, e in self.intervals])


class AttentionFusionParams:
    def __init__(self, lstm_hidden, d_k, rng, query_dim=None):
        if d_k < 1:
            raise DataError(f"d_k must be >= 1, got {d_k}")
        bound = np.sqrt(1.0 / lstm_hidden)
        self.d_k = d_k
        self.w_key = Parameter(rng.uniform(-bound, bound, size=(lstm_hidden, d_k)),
                               name="fuse.w_key")
        # queries are projected only when the lexical width differs from d_k
        self.w_query = None
        if query_dim is not None and query_dim != d_k:
            qb = np.sqrt(1.0 / query_dim)
            self.w_query = Parameter(rng.uniform(-qb, qb, size=(query_dim, d_k)),
                                     name="fuse.w_query")

    def parameters(self):
        out = [self.w_key]
        if self.w_query is not None:
            out.append(self.w_query)
        return out


def forced_alignment_fuse(states, bounds, tok):
    """Each subword receives the state at its word's last frame."""
    n_frames = states.data.shape[0]
    if len(bounds) != tok.n_words:
        raise DataError(f"{len(bounds)} boundaries for {tok.n_words} words")
    ends = [e for _, e in bounds]
    if ends and max(ends) > n_frames:
        raise AlignmentError(
            f"boundary end {max(ends)} exceeds frame count {n_frames}")
    idx = [ends[wi] - 1 for wi in tok.word_index]
    return ad.gather_rows(states, idx)


def _attention_weight_matrix(q, k):
    if k.data.shape[0] == 0:
        raise DataError("attention over an empty key sequence")
    d_k = k.data.shape[1]
    logits = ad.scale(ad.matmul(q, ad.transpose(k)), 1.0 / np.sqrt(d_k))
    return ad.softmax_rows(logits)


def scaled_dot_attention(q, k, v):
    """softmax(q k^T / sqrt(d_k)) v, rows of q as queries."""
    return ad.matmul(_attention_weight_matrix(q, k), v)


def _project_query(h_lex, params):
    if params.w_query is not None:
        return ad.matmul(h_lex, params.w_query)
    return h_lex


def attention_fuse(h_lex, states, params):
    """Lexical rows query projected acoustic keys; values stay unprojected."""
    keys = ad.matmul(states, params.w_key)
    return scaled_dot_attention(_project_query(h_lex, params), keys, states)


def attention_weights(h_lex, states, params):
    """The attention matrix itself, for inspection and tests."""
    keys = ad.matmul(states, params.w_key)
    return _attention_weight_matrix(_project_query(h_lex, params), keys)
