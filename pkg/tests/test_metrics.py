import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from muse.data import (COMMA, FULLSTOP, LABEL_NAMES, NP, QUESTION, Utterance,
                       gen_synthetic)
from muse.errors import DataError
from muse.metrics import (confusion_counts, evaluate_on_asr,
                          evaluate_reference, f1_per_class)

labels = st.lists(st.integers(0, 3), min_size=1, max_size=40)


class TestF1PerClass:
    def test_worked_example(self):
        # FULLSTOP: 1 tp, 1 fp, 0 fn -> P=0.5, R=1, F1=2/3
        refs = [NP, FULLSTOP, NP]
        preds = [FULLSTOP, FULLSTOP, NP]
        rep = f1_per_class(preds, refs)
        fs = rep.per_class["FULLSTOP"]
        assert fs.precision == 0.5 and fs.recall == 1.0
        assert abs(fs.f1 - 2 / 3) < 1e-12
        assert fs.support == 1

    def test_perfect_predictions(self):
        refs = [NP, COMMA, FULLSTOP, QUESTION, NP]
        rep = f1_per_class(refs, refs)
        assert rep.macro_f1() == 1.0
        assert rep.micro_accuracy() == 1.0

    def test_always_np_has_zero_punct_recall(self):
        refs = [NP, COMMA, FULLSTOP, QUESTION]
        rep = f1_per_class([NP] * 4, refs)
        for name in ("COMMA", "FULLSTOP", "QUESTION"):
            assert rep.per_class[name].recall == 0.0
            assert rep.per_class[name].f1 == 0.0
        assert rep.macro_f1() == 0.0
        assert rep.micro_accuracy() == 0.25

    def test_absent_class_excluded_from_macro(self):
        refs = [NP, COMMA]
        rep = f1_per_class([NP, COMMA], refs)
        # FULLSTOP/QUESTION have zero support; macro over present classes only
        assert rep.macro_f1() == 1.0

    def test_length_mismatch(self):
        with pytest.raises(DataError):
            f1_per_class([NP], [NP, NP])

    @given(labels, st.data())
    @settings(max_examples=100, deadline=None)
    def test_confusion_identities(self, refs, data):
        preds = data.draw(st.lists(st.integers(0, 3), min_size=len(refs),
                                   max_size=len(refs)))
        counts, support = confusion_counts(preds, refs)
        n = len(refs)
        assert sum(support) == n
        # tp + fn per class equals support; total fp equals total fn
        for c in range(4):
            assert counts[c][0] + counts[c][2] == support[c]
        assert sum(c[1] for c in counts) == sum(c[2] for c in counts)
        rep = f1_per_class(preds, refs)
        acc = sum(p == r for p, r in zip(preds, refs)) / n
        assert abs(rep.micro_accuracy() - acc) < 1e-12

    @given(labels, st.data())
    @settings(max_examples=50, deadline=None)
    def test_matches_naive_one_vs_rest(self, refs, data):
        preds = data.draw(st.lists(st.integers(0, 3), min_size=len(refs),
                                   max_size=len(refs)))
        rep = f1_per_class(preds, refs)
        for c, name in enumerate(LABEL_NAMES):
            tp = sum(p == c and r == c for p, r in zip(preds, refs))
            fp = sum(p == c and r != c for p, r in zip(preds, refs))
            fn = sum(p != c and r == c for p, r in zip(preds, refs))
            m = rep.per_class[name]
            assert (m.tp, m.fp, m.fn) == (tp, fp, fn)


class TestReportFormats:
    def _report(self):
        return f1_per_class([NP, FULLSTOP, COMMA], [NP, FULLSTOP, FULLSTOP])

    def test_to_dict_structure(self):
        d = self._report().to_dict()
        assert d["total"] == 3
        assert set(d["classes"]) == set(LABEL_NAMES)
        json.dumps(d)  # serializable

    def test_to_table_mentions_all_classes(self):
        table = self._report().to_table()
        for name in LABEL_NAMES:
            assert name in table

    def test_to_jsonl_parses(self):
        lines = self._report().to_jsonl().splitlines()
        assert len(lines) == 5
        rows = [json.loads(line) for line in lines]
        assert rows[-1]["total"] == 3


class _OracleModel:
    """Fake model returning labels from a lookup keyed by the word sequence."""

    def __init__(self, table):
        self.table = table

    def predict_word_labels(self, utt):
        return self.table[tuple(utt.words)]


class TestEvaluate:
    def test_reference_concatenates_utterances(self):
        corpus = [Utterance("a", ["x", "y"], [NP, FULLSTOP]),
                  Utterance("b", ["z"], [QUESTION])]
        model = _OracleModel({("x", "y"): [NP, FULLSTOP], ("z",): [FULLSTOP]})
        rep = evaluate_reference(model, corpus)
        assert rep.total == 3
        assert rep.per_class["QUESTION"].recall == 0.0
        # FULLSTOP: tp=1 ("y"), fp=1 ("z") -> P=0.5, R=1
        assert rep.per_class["FULLSTOP"].precision == 0.5
        assert rep.per_class["FULLSTOP"].recall == 1.0

    def test_asr_with_verbatim_hyps_equals_reference(self):
        corpus = [Utterance("a", ["x", "y"], [NP, FULLSTOP]),
                  Utterance("b", ["z"], [QUESTION])]
        model = _OracleModel({("x", "y"): [FULLSTOP, FULLSTOP], ("z",): [QUESTION]})
        nbest = {"a": [["x", "y"]], "b": [["z"]]}
        ref_rep = evaluate_reference(model, corpus)
        asr_rep = evaluate_on_asr(model, corpus, nbest)
        assert asr_rep.to_dict() == ref_rep.to_dict()

    def test_asr_targets_are_restored(self):
        # hyp drops "y"; its FULLSTOP migrates to "x"
        corpus = [Utterance("a", ["x", "y"], [NP, FULLSTOP])]
        model = _OracleModel({("x",): [FULLSTOP]})
        rep = evaluate_on_asr(model, corpus, {"a": [["x"]]})
        assert rep.total == 1
        assert rep.per_class["FULLSTOP"].f1 == 1.0

    def test_missing_hyps_skipped(self):
        corpus = [Utterance("a", ["x"], [NP]), Utterance("b", ["y"], [NP])]
        model = _OracleModel({("x",): [NP]})
        rep = evaluate_on_asr(model, corpus, {"a": [["x"]]})
        assert rep.skipped == 1 and rep.total == 1

    def test_trained_model_self_eval(self):
        from muse.model import TrainConfig, train
        sc = gen_synthetic(21, 30)
        cfg = TrainConfig(lr=3e-3, epochs=25, seed=21, variant="muse",
                          fusion_mode="fa", feat_dim=8, lexical_layers=2,
                          lexical_hidden=32, lexical_heads=4, lstm_hidden=16,
                          conv_out=16, batch_size=8)
        model, _ = train(sc.corpus, cfg)
        rep = evaluate_reference(model, sc.corpus)
        assert rep.macro_f1() > 0.95
