"""Per-class precision/recall/F1 at word granularity."""

import json
from dataclasses import dataclass

from .data import LABEL_NAMES, NP, restore_punctuation
from .errors import DataError


@dataclass
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int
    tp: int = 0
    fp: int = 0
    fn: int = 0


class EvalReport:
    def __init__(self, per_class, total, skipped=0):
        self.per_class = per_class  # {label name: ClassMetrics}
        self.total = total
        self.skipped = skipped

    def macro_f1(self, include_np=False):
        """Macro average over punctuation classes; NP excluded by default
        (it dominates and would mask everything else)."""
        names = [n for n in LABEL_NAMES if include_np or n != "NP"]
        vals = [self.per_class[n].f1 for n in names if self.per_class[n].support > 0]
        return sum(vals) / len(vals) if vals else 0.0

    def micro_accuracy(self):
        tp = sum(m.tp for m in self.per_class.values())
        return tp / self.total if self.total else 0.0

    def to_dict(self):
        return {
            "total": self.total,
            "skipped": self.skipped,
            "macro_f1_punct": self.macro_f1(),
            "classes": {
                n: {"precision": m.precision, "recall": m.recall, "f1": m.f1,
                    "support": m.support}
                for n, m in self.per_class.items()
            },
        }

    def to_table(self):
        lines = [f"{'class':<10} {'prec':>7} {'recall':>7} {'f1':>7} {'support':>8}"]
        for n in LABEL_NAMES:
            m = self.per_class[n]
            lines.append(f"{n:<10} {m.precision:>7.4f} {m.recall:>7.4f} "
                         f"{m.f1:>7.4f} {m.support:>8d}")
        lines.append(f"macro-F1 (punct classes): {self.macro_f1():.4f}")
        if self.skipped:
            lines.append(f"skipped utterances: {self.skipped}")
        return "\n".join(lines)

    def to_jsonl(self):
        rows = []
        for n in LABEL_NAMES:
            m = self.per_class[n]
            rows.append(json.dumps(
                {"class": n, "precision": m.precision, "recall": m.recall,
                 "f1": m.f1, "support": m.support}, sort_keys=True))
        rows.append(json.dumps(
            {"macro_f1_punct": self.macro_f1(), "total": self.total,
             "skipped": self.skipped}, sort_keys=True))
        return "\n".join(rows)


def confusion_counts(preds, refs, n_classes=4):
    if len(preds) != len(refs):
        raise DataError(f"{len(preds)} predictions vs {len(refs)} references")
    counts = [[0, 0, 0] for _ in range(n_classes)]  # tp, fp, fn per class
    support = [0] * n_classes
    for p, r in zip(preds, refs):
        support[r] += 1
        if p == r:
            counts[r][0] += 1
        else:
            counts[p][1] += 1
            counts[r][2] += 1
    return counts, support


def f1_per_class(preds, refs, skipped=0):
    """One-vs-rest precision/recall/F1 per punctuation class."""
    counts, support = confusion_counts(preds, refs)
    per_class = {}
    for c, name in enumerate(LABEL_NAMES):
        tp, fp, fn = counts[c]
        prec = tp / (tp + fp) if tp + fp else 0.0
        rec = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * prec * rec / (prec + rec) if prec + rec else 0.0
        per_class[name] = ClassMetrics(prec, rec, f1, support[c], tp, fp, fn)
    return EvalReport(per_class, total=len(refs), skipped=skipped)


def evaluate_reference(model, corpus):
    """Reference-side evaluation: predictions vs the gold word labels."""
    preds, refs = [], []
    for utt in corpus:
        preds.extend(model.predict_word_labels(utt))
        refs.extend(utt.labels)
    return f1_per_class(preds, refs)


def evaluate_on_asr(model, corpus, nbest_map):
    """ASR-side evaluation against restored 1-best targets."""
    preds, refs = [], []
    skipped = 0
    for utt in corpus:
        hyps = nbest_map.get(utt.id)
        if not hyps:
            skipped += 1
            continue
        target = restore_punctuation(utt, hyps[0])
        if not target.words:
            skipped += 1
            continue
        preds.extend(model.predict_word_labels(target))
        refs.extend(target.labels)
    return f1_per_class(preds, refs, skipped=skipped)
