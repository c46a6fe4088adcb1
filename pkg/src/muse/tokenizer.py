"""Wordpiece tokenization with an explicit word <-> subword index map.

Vocabulary learning uses deterministic frequency merges over adjacent
pieces (likelihood merging buys nothing at this scale). Continuation
pieces carry the "##" prefix; a word containing a character absent from
the vocabulary tokenizes to a single [UNK].
"""

import string
from dataclasses import dataclass, field

from .errors import ConfigError, DataError

PAD = "[PAD]"
UNK = "[UNK]"
RESERVED = (PAD, UNK)

NO_PUNCT = 0  # label id used for continuation subwords


@dataclass
class WordpieceVocab:
    tokens: list
    index: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.index:
            self.index = {t: i for i, t in enumerate(self.tokens)}
        if len(self.index) != len(self.tokens):
            raise DataError("duplicate tokens in vocabulary")

    @property
    def pad_id(self):
        return self.index[PAD]

    @property
    def unk_id(self):
        return self.index[UNK]

    def __len__(self):
        return len(self.tokens)

    def save(self, path):
        with open(path, "w") as f:
            f.write("\n".join(self.tokens) + "\n")

    @classmethod
    def load(cls, path):
        with open(path) as f:
            tokens = [line.rstrip("\n") for line in f if line.rstrip("\n")]
        return cls(tokens)


@dataclass
class TokenizedUtterance:
    subword_ids: list
    pieces: list
    word_index: list    # subword position -> source word index
    is_word_final: list

    @property
    def n_subwords(self):
        return len(self.subword_ids)

    @property
    def n_words(self):
        return self.word_index[-1] + 1 if self.word_index else 0


def normalize_word(word):
    """Lowercase and strip punctuation characters; punctuation lives in labels."""
    w = word.lower().strip(string.punctuation)
    return w if w else word.lower()


def build_vocab(corpus_words, target_size):
    """Learn a vocabulary by greedy frequency merges of adjacent pieces."""
    words = [normalize_word(w) for w in corpus_words]
    words = [w for w in words if w]
    if not words:
        raise DataError("cannot build a vocabulary from an empty corpus")
    alphabet = sorted({c for w in words for c in w})
    base = list(RESERVED) + alphabet + ["##" + c for c in alphabet]
    # base singles are the floor: below it some words become untokenizable
    if target_size < len(base):
        raise ConfigError(
            f"target_size {target_size} < {len(base)} required for "
            f"alphabet of {len(alphabet)} characters plus reserved tokens")

    from collections import Counter
    word_freq = Counter(words)
    # each distinct word as its current piece sequence
    split = {w: [w[0]] + ["##" + c for c in w[1:]] for w in word_freq}
    vocab = list(base)
    present = set(vocab)
    while len(vocab) < target_size:
        pair_freq = Counter()
        for w, pieces in split.items():
            f = word_freq[w]
            for a, b in zip(pieces, pieces[1:]):
                pair_freq[(a, b)] += f
        if not pair_freq:
            break
        # deterministic: highest frequency, then lexicographic pair
        best = min(pair_freq.items(), key=lambda kv: (-kv[1], kv[0]))[0]
        merged = best[0] + best[1][2:]
        if merged not in present:
            vocab.append(merged)
            present.add(merged)
        for w, pieces in split.items():
            out = []
            i = 0
            while i < len(pieces):
                if i + 1 < len(pieces) and (pieces[i], pieces[i + 1]) == best:
                    out.append(merged)
                    i += 2
                else:
                    out.append(pieces[i])
                    i += 1
            split[w] = out
        if all(len(p) == 1 for p in split.values()):
            break
    return WordpieceVocab(vocab)


def tokenize(words, vocab):
    """Greedy longest-match wordpiece split of each word."""
    if not words:
        raise DataError("tokenize called with an empty word list")
    ids, pieces, word_index, is_final = [], [], [], []
    for wi, raw in enumerate(words):
        word = normalize_word(raw)
        word_pieces = _split_word(word, vocab)
        for k, piece in enumerate(word_pieces):
            ids.append(vocab.index[piece])
            pieces.append(piece)
            word_index.append(wi)
            is_final.append(k == len(word_pieces) - 1)
    return TokenizedUtterance(ids, pieces, word_index, is_final)


def _split_word(word, vocab):
    pieces = []
    start = 0
    while start < len(word):
        end = len(word)
        found = None
        while end > start:
            cand = word[start:end]
            if start > 0:
                cand = "##" + cand
            if cand in vocab.index:
                found = cand
                break
            end -= 1
        if found is None:
            return [UNK]
        pieces.append(found)
        start = end
    return pieces


def project_labels_to_subwords(word_labels, tok):
    """Place each word's label on its final subword; others get NO_PUNCT."""
    if len(word_labels) != tok.n_words:
        raise DataError(
            f"{len(word_labels)} labels for {tok.n_words} words")
    out = []
    for wi, final in zip(tok.word_index, tok.is_word_final):
        out.append(word_labels[wi] if final else NO_PUNCT)
    return out


def collapse_predictions(subword_preds, tok):
    """Word prediction = prediction at the word's final subword."""
    if len(subword_preds) != tok.n_subwords:
        raise DataError(
            f"{len(subword_preds)} predictions for {tok.n_subwords} subwords")
    return [p for p, final in zip(subword_preds, tok.is_word_final) if final]


def detokenize(pieces):
    words = []
    for p in pieces:
        if p.startswith("##") and words:
            words[-1] += p[2:]
        else:
            words.append(p)
    return words
