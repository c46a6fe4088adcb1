"""Corpus handling: labels, utterances, edit-distance punctuation
restoration, N-best augmentation, class statistics, and a seeded
synthetic generator with controllable lexical/acoustic cues."""

import json
import os
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .acoustic import FrameFeatures, load_features, save_features
from .errors import ConfigError, DataError
from .fusion import WordBoundaries

# punctuation label codes; NP must stay 0 (continuation-subword filler)
NP, COMMA, FULLSTOP, QUESTION = 0, 1, 2, 3
LABEL_NAMES = ["NP", "COMMA", "FULLSTOP", "QUESTION"]
LABEL_IDS = {n: i for i, n in enumerate(LABEL_NAMES)}
LABEL_MARKS = ["", ",", ".", "?"]
N_CLASSES = 4

MATCH, SUB, INS, DEL = "MATCH", "SUB", "INS", "DEL"


@dataclass
class Utterance:
    id: str
    words: list
    labels: list
    frames: FrameFeatures = None
    boundaries: WordBoundaries = None
    feat_path: str = None

    def __post_init__(self):
        if len(self.labels) != len(self.words):
            raise DataError(
                f"{self.id}: {len(self.labels)} labels for {len(self.words)} words")
        if self.boundaries is not None:
            if len(self.boundaries) != len(self.words):
                raise DataError(f"{self.id}: boundary count != word count")
            if self.frames is not None:
                last_end = max(e for _, e in self.boundaries)
                if last_end > self.frames.n_frames:
                    raise DataError(f"{self.id}: boundary exceeds frame count")

    @property
    def n_words(self):
        return len(self.words)


@dataclass
class ClassDistribution:
    counts: dict
    total: int

    @property
    def percentages(self):
        if self.total == 0:
            return {n: 0.0 for n in LABEL_NAMES}
        return {n: 100.0 * self.counts[n] / self.total for n in LABEL_NAMES}


# ---------------------------------------------------------------------------
# edit-distance alignment and punctuation restoration


def align_edit_distance(ref_words, hyp_words):
    """Minimum-cost Levenshtein alignment with fixed tie-breaking.

    Returns a list of (op, ref_index, hyp_index); absent side is None.
    Ties prefer MATCH/SUB over DEL over INS during backtrace.
    """
    m, n = len(ref_words), len(hyp_words)
    cost = [list(range(n + 1))] + [[i] + [0] * n for i in range(1, m + 1)]
    for i in range(1, m + 1):
        prev = cost[i - 1]
        cur = cost[i]
        rw = ref_words[i - 1]
        for j in range(1, n + 1):
            sub = prev[j - 1] + (rw != hyp_words[j - 1])
            dele = prev[j] + 1
            ins = cur[j - 1] + 1
            cur[j] = sub if sub <= dele and sub <= ins else min(dele, ins)
    ops = []
    i, j = m, n
    while i > 0 or j > 0:
        if i > 0 and j > 0:
            same = ref_words[i - 1] == hyp_words[j - 1]
            if cost[i - 1][j - 1] + (not same) == cost[i][j]:
                ops.append((MATCH if same else SUB, i - 1, j - 1))
                i, j = i - 1, j - 1
                continue
        if i > 0 and cost[i - 1][j] + 1 == cost[i][j]:
            ops.append((DEL, i - 1, None))
            i -= 1
            continue
        ops.append((INS, None, j - 1))
        j -= 1
    ops.reverse()
    return ops


def alignment_cost(ops, ref_words, hyp_words):
    c = 0
    for op, _, _ in ops:
        if op != MATCH:
            c += 1
    return c


def restore_punctuation(ref, hyp_words):
    """Transfer ref labels onto a hypothesis via edit-distance alignment.

    Matched/substituted hypothesis words copy the aligned reference label;
    a deleted punctuated reference word moves its label onto the most
    recent emitted hypothesis word (overwriting whatever was there); a
    deletion before any hypothesis word drops the label; inserted words
    get NP.
    """
    if not hyp_words:
        return Utterance(id=ref.id, words=[], labels=[])
    ops = align_edit_distance(ref.words, hyp_words)
    labels = [NP] * len(hyp_words)
    last_emitted = -1
    for op, ri, hi in ops:
        if op in (MATCH, SUB):
            labels[hi] = ref.labels[ri]
            last_emitted = hi
        elif op == DEL:
            if ref.labels[ri] != NP and last_emitted >= 0:
                labels[last_emitted] = ref.labels[ri]
        else:  # INS
            labels[hi] = NP
            last_emitted = hi
    return Utterance(id=ref.id, words=list(hyp_words), labels=labels)


def augment_with_nbest(corpus, nbest_map, n, reuse_boundaries=False):
    """Original corpus plus restored top-n hypotheses per utterance.

    Hypothesis utterances carry no acoustic stream unless
    reuse_boundaries is set and the word counts match.
    Returns (augmented_corpus, n_skipped).
    """
    if n < 1:
        raise ConfigError(f"n must be >= 1, got {n}")
    out = list(corpus)
    skipped = 0
    for utt in corpus:
        hyps = nbest_map.get(utt.id)
        if not hyps:
            skipped += 1
            continue
        for k, hyp in enumerate(hyps[:n]):
            restored = restore_punctuation(utt, hyp)
            if not restored.words:
                continue
            restored.id = f"{utt.id}-hyp{k}"
            if reuse_boundaries and utt.frames is not None \
                    and len(restored.words) == utt.n_words:
                restored.frames = utt.frames
                restored.boundaries = utt.boundaries
                restored.feat_path = utt.feat_path
            out.append(restored)
    return out, skipped


def class_stats(corpus):
    counts = Counter()
    total = 0
    for utt in corpus:
        for lab in utt.labels:
            counts[LABEL_NAMES[lab]] += 1
            total += 1
    return ClassDistribution(
        counts={n: counts.get(n, 0) for n in LABEL_NAMES}, total=total)


def filter_min_length(corpus, min_words=6):
    return [u for u in corpus if u.n_words >= min_words]


# ---------------------------------------------------------------------------
# corpus files (JSON Lines)


def save_corpus(corpus, path, feats_dir=None):
    """Write JSONL; frame features go to feats_dir as one file per utterance."""
    base = os.path.dirname(os.path.abspath(path))
    with open(path, "w") as f:
        for utt in corpus:
            rec = {"id": utt.id, "words": utt.words,
                   "labels": [LABEL_NAMES[x] for x in utt.labels]}
            if utt.frames is not None:
                if feats_dir is None:
                    raise ConfigError("corpus has frames but no feats_dir given")
                os.makedirs(feats_dir, exist_ok=True)
                feat_path = os.path.join(feats_dir, f"{utt.id}.feat")
                save_features(feat_path, utt.frames)
                rec["feat_path"] = os.path.relpath(feat_path, base)
            elif utt.feat_path:
                rec["feat_path"] = utt.feat_path
            if utt.boundaries is not None:
                rec["boundaries"] = [[s, e] for s, e in utt.boundaries]
            f.write(json.dumps(rec, sort_keys=True) + "\n")


def load_corpus(path, load_frames=True):
    base = os.path.dirname(os.path.abspath(path))
    corpus = []
    with open(path) as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as e:
                raise DataError(f"{path}:{lineno}: bad JSON ({e})")
            try:
                labels = [LABEL_IDS[x] for x in rec["labels"]]
            except KeyError as e:
                raise DataError(f"{path}:{lineno}: unknown label {e}")
            frames = None
            feat_path = rec.get("feat_path")
            if feat_path and load_frames:
                frames = load_features(os.path.join(base, feat_path))
            bounds = None
            if "boundaries" in rec:
                bounds = WordBoundaries(rec["boundaries"])
            corpus.append(Utterance(
                id=rec["id"], words=rec["words"], labels=labels,
                frames=frames, boundaries=bounds, feat_path=feat_path))
    return corpus


def save_nbest(nbest_map, path):
    with open(path, "w") as f:
        for uid in sorted(nbest_map):
            f.write(json.dumps({"id": uid, "hyps": nbest_map[uid]},
                               sort_keys=True) + "\n")


def load_nbest(path):
    out = {}
    with open(path) as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            if not rec.get("hyps"):
                raise DataError(f"nbest entry {rec.get('id')!r} has no hypotheses")
            out[rec["id"]] = rec["hyps"]
    return out


# ---------------------------------------------------------------------------
# synthetic corpus generator

FILLERS = ["well", "so", "yeah", "okay", "right"]

# clause bodies; the terminal punctuation is chosen independently so a
# question is lexically indistinguishable from a statement under the
# acoustic-only-question profile
CLAUSE_TEMPLATES = [
    ("you", "know", "what", "i", "mean"),
    ("we", "talked", "about", "that", "stuff"),
    ("they", "really", "like", "this", "thing"),
    ("people", "keep", "saying", "that"),
    ("it", "was", "kind", "of", "strange"),
    ("that", "makes", "sense", "to", "me"),
    ("you", "saw", "the", "game", "yesterday"),
    ("things", "have", "been", "busy", "lately"),
]

QUESTION_CUES = ["did", "would", "could"]

PROFILES = ("default", "acoustic-only-question")

QUESTION_PROB = 0.35
WORD_POOL = sorted({w for t in CLAUSE_TEMPLATES for w in t} | set(FILLERS))


@dataclass
class SyntheticCorpus:
    corpus: list
    nbest_map: dict
    tally: dict = field(default_factory=dict)


def gen_synthetic(seed, count, cue_profile="acoustic-only-question",
                  n_hyps=3, sub_rate=0.2, del_rate=0.1, feat_dim=8):
    """Deterministic synthetic corpus with injected punctuation cues.

    Acoustic cues: a terminal pitch rise in feature dim 0 marks
    questions; a long trailing pause (dim 1 dip) marks full stops.
    Under "acoustic-only-question" the word sequence carries no question
    cue; under "default" questions start with an interrogative cue word.
    """
    if count < 1:
        raise DataError(f"count must be >= 1, got {count}")
    if cue_profile not in PROFILES:
        raise ConfigError(f"unknown cue profile {cue_profile!r}; "
                          f"expected one of {PROFILES}")
    rng = np.random.default_rng(seed)
    corpus = []
    nbest_map = {}
    tally = Counter({n: 0 for n in LABEL_NAMES})
    for u in range(count):
        words, labels = [], []
        segments = []  # (n_frames_of_word, pitch_rise, pause_frames) per word
        n_clauses = int(rng.integers(1, 4))
        for ci in range(n_clauses):
            clause_words, clause_labels = [], []
            if rng.random() < 0.5:
                clause_words.append(FILLERS[int(rng.integers(len(FILLERS)))])
                clause_labels.append(COMMA)
            body = CLAUSE_TEMPLATES[int(rng.integers(len(CLAUSE_TEMPLATES)))]
            is_question = rng.random() < QUESTION_PROB
            if is_question and cue_profile == "default":
                clause_words.append(QUESTION_CUES[int(rng.integers(len(QUESTION_CUES)))])
                clause_labels.append(NP)
            clause_words.extend(body)
            clause_labels.extend([NP] * (len(body) - 1))
            clause_labels.append(QUESTION if is_question else FULLSTOP)
            words.extend(clause_words)
            labels.extend(clause_labels)
        # at least six words per utterance (minimum-length convention)
        while len(words) < 6:
            words.insert(0, FILLERS[int(rng.integers(len(FILLERS)))])
            labels.insert(0, COMMA)
        for lab in labels:
            nf = int(rng.integers(3, 7))
            rise = lab == QUESTION
            pause = {NP: 0, COMMA: 2, FULLSTOP: 6, QUESTION: 6}[lab]
            segments.append((nf, rise, pause))
        frames, bounds = _render_frames(segments, feat_dim, rng)
        for lab in labels:
            tally[LABEL_NAMES[lab]] += 1
        uid = f"u{u:05d}"
        corpus.append(Utterance(id=uid, words=words, labels=labels,
                                frames=frames, boundaries=bounds))
        nbest_map[uid] = _corrupt(words, n_hyps, sub_rate, del_rate, rng)
    return SyntheticCorpus(corpus, nbest_map, dict(tally))


def _render_frames(segments, feat_dim, rng):
    rows = []
    intervals = []
    t = 0
    for nf, rise, pause in segments:
        block = rng.normal(0.0, 0.1, size=(nf + pause, feat_dim))
        if rise:
            block[:nf, 0] += np.linspace(0.5, 3.0, nf)
        if pause:
            block[nf:, 1] -= 1.5  # energy dip over the trailing pause
        rows.append(block)
        intervals.append((t, t + nf + pause))
        t += nf + pause
    matrix = np.concatenate(rows, axis=0)
    return FrameFeatures(matrix, kind="synthetic"), WordBoundaries(intervals)


def _corrupt(words, n_hyps, sub_rate, del_rate, rng):
    hyps = []
    for _ in range(n_hyps):
        hyp = []
        for w in words:
            r = rng.random()
            if r < del_rate:
                continue
            if r < del_rate + sub_rate:
                hyp.append(WORD_POOL[int(rng.integers(len(WORD_POOL)))])
            else:
                hyp.append(w)
        if not hyp:
            hyp = [words[0]]
        hyps.append(hyp)
    return hyps
