import io
import json
import os

import pytest

from muse.cli import build_parser, main
from muse.data import load_corpus, load_nbest


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("data") / "synth"
    rc = main(["synth", "--seed", "3", "--count", "12", "--out", str(out)])
    assert rc == 0
    return out


@pytest.fixture(scope="module")
def trained(tmp_path_factory, synth_dir):
    ckpt = tmp_path_factory.mktemp("run") / "model.ckpt"
    rc = main(["train", "--corpus", str(synth_dir / "corpus.jsonl"),
               "--out", str(ckpt), "--seed", "3", "--epochs", "2",
               "--lr", "0.003", "--variant", "muse", "--fusion", "fa"])
    assert rc == 0
    return ckpt


class TestParser:
    def test_requires_command(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args([])

    def test_common_flags_on_every_command(self):
        ap = build_parser()
        for cmd in ("synth", "stats", "train", "eval", "eval-asr", "augment",
                    "predict", "gradcheck"):
            extra = ["--ckpt", "x"] if cmd in ("eval", "eval-asr", "predict") else []
            args = ap.parse_args(
                [cmd, "--config", "c", "--seed", "1", "--corpus", "c.jsonl",
                 "--nbest", "n.jsonl", "--out", "o", "--variant", "muse",
                 "--fusion", "att", "--features", "pitch", "--n-best", "3",
                 "--epochs", "2"] + extra)
            assert args.seed == 1 and args.n_best == 3

    def test_variant_choices(self):
        ap = build_parser()
        for v in ("muse", "lex", "blstm", "stream"):
            assert ap.parse_args(["train", "--variant", v]).variant == v
        with pytest.raises(SystemExit):
            ap.parse_args(["train", "--variant", "bert"])


class TestSynth:
    def test_outputs(self, synth_dir):
        corpus = load_corpus(synth_dir / "corpus.jsonl")
        assert len(corpus) == 12
        nbest = load_nbest(synth_dir / "nbest.jsonl")
        assert set(nbest) == {u.id for u in corpus}
        manifest = json.loads((synth_dir / "manifest.json").read_text())
        assert manifest["seed"] == 3
        assert manifest["kernel_backend"] in ("python", "cython")
        assert "config_hash" in manifest

    def test_missing_out_is_an_error(self, capsys):
        assert main(["synth"]) == 2
        assert "error:" in capsys.readouterr().err


class TestStats:
    def test_table_and_jsonl(self, synth_dir, tmp_path, capsys):
        out = tmp_path / "stats.jsonl"
        rc = main(["stats", "--corpus", str(synth_dir / "corpus.jsonl"),
                   "--out", str(out)])
        assert rc == 0
        text = capsys.readouterr().out
        for name in ("NP", "COMMA", "FULLSTOP", "QUESTION", "total"):
            assert name in text
        rows = [json.loads(line) for line in out.read_text().splitlines()]
        assert len(rows) == 4


class TestTrainEval:
    def test_artifacts(self, trained):
        for suffix in ("", ".vocab", ".json", ".manifest.json"):
            assert os.path.exists(str(trained) + suffix)

    def test_eval(self, synth_dir, trained, tmp_path, capsys):
        out = tmp_path / "report.jsonl"
        rc = main(["eval", "--corpus", str(synth_dir / "corpus.jsonl"),
                   "--ckpt", str(trained), "--out", str(out)])
        assert rc == 0
        assert "macro-F1" in capsys.readouterr().out
        rows = [json.loads(line) for line in out.read_text().splitlines()]
        assert "macro_f1_punct" in rows[-1]

    def test_eval_asr(self, synth_dir, trained, capsys):
        rc = main(["eval-asr", "--corpus", str(synth_dir / "corpus.jsonl"),
                   "--nbest", str(synth_dir / "nbest.jsonl"),
                   "--ckpt", str(trained)])
        assert rc == 0
        assert "macro-F1" in capsys.readouterr().out

    def test_config_file_with_flag_override(self, synth_dir, tmp_path):
        cfg = tmp_path / "exp.cfg"
        cfg.write_text("train.epochs = 50\nlexical.hidden = 16\n"
                       "lexical.heads = 2\nacoustic.lstm_hidden = 8\n"
                       "acoustic.conv_out = 8\ntrain.lr = 0.003\n")
        ckpt = tmp_path / "m.ckpt"
        rc = main(["train", "--config", str(cfg), "--epochs", "1",
                   "--corpus", str(synth_dir / "corpus.jsonl"),
                   "--out", str(ckpt), "--seed", "0"])
        assert rc == 0
        saved = json.loads((tmp_path / "m.ckpt.json").read_text())
        assert saved["train.epochs"] == 1          # flag wins
        assert saved["lexical.hidden"] == 16       # file wins over default

    def test_train_determinism(self, synth_dir, tmp_path):
        outs = []
        for i in range(2):
            ckpt = tmp_path / f"d{i}.ckpt"
            rc = main(["train", "--corpus", str(synth_dir / "corpus.jsonl"),
                       "--out", str(ckpt), "--seed", "7", "--epochs", "1",
                       "--lr", "0.003"])
            assert rc == 0
            outs.append(ckpt.read_bytes())
        assert outs[0] == outs[1]


class TestAugment:
    def test_roundtrip(self, synth_dir, tmp_path, capsys):
        out = tmp_path / "aug.jsonl"
        rc = main(["augment", "--corpus", str(synth_dir / "corpus.jsonl"),
                   "--nbest", str(synth_dir / "nbest.jsonl"),
                   "--n-best", "2", "--out", str(out)])
        assert rc == 0
        aug = load_corpus(out, load_frames=False)
        assert len(aug) == 12 * 3
        assert "wrote 36 utterances" in capsys.readouterr().out


class TestPredict:
    def test_stdin_lines(self, trained, capsys, monkeypatch):
        monkeypatch.setattr("sys.stdin",
                            io.StringIO("they like this thing\n\n"))
        rc = main(["predict", "--ckpt", str(trained)])
        assert rc == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert len(lines) == 1
        assert lines[0].replace(",", "").replace(".", "").replace("?", "") == \
            "they like this thing"


class TestGradcheck:
    def test_one_seed(self, capsys):
        rc = main(["gradcheck", "--seeds", "1"])
        assert rc == 0
        out = capsys.readouterr().out
        assert "checks passed" in out and "FAIL" not in out
