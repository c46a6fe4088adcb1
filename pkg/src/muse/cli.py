"""Command-line surface: synth / stats / train / eval / eval-asr /
augment / predict / gradcheck."""

import argparse
import hashlib
import json
import os
import platform
import sys

import numpy as np

from . import __version__, kernels
from . import data as data_mod
from . import tokenizer as tok_mod
from .checkpoint import load_checkpoint, restore_into, save_checkpoint
from .config import build_train_config, config_to_dict, parse_config_file
from .errors import MuseError
from .metrics import evaluate_on_asr, evaluate_reference
from .model import CLI_VARIANTS, MuSeModel, TrainConfig, train


def _add_common(p):
    p.add_argument("--config", metavar="PATH", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--corpus", metavar="PATH", default=None)
    p.add_argument("--nbest", metavar="PATH", default=None)
    p.add_argument("--out", metavar="PATH", default=None)
    p.add_argument("--variant", choices=sorted(CLI_VARIANTS), default=None)
    p.add_argument("--fusion", choices=["fa", "att"], default=None)
    p.add_argument("--features", choices=["pitch", "melspec", "wav2vec", "synthetic"],
                   default=None)
    p.add_argument("--n-best", type=int, default=None)
    p.add_argument("--epochs", type=int, default=None)


def build_parser():
    ap = argparse.ArgumentParser(prog="muse", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic corpus + N-best lists")
    _add_common(p)
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--profile", choices=data_mod.PROFILES,
                   default="acoustic-only-question")
    p.add_argument("--feat-dim", type=int, default=8)

    p = sub.add_parser("stats", help="class distribution of a corpus")
    _add_common(p)

    p = sub.add_parser("train", help="train a punctuation model")
    _add_common(p)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--dev", metavar="PATH", default=None)

    for name in ("eval", "eval-asr"):
        p = sub.add_parser(name, help=f"{name} a trained model on a corpus")
        _add_common(p)
        p.add_argument("--ckpt", metavar="PATH", required=True)

    p = sub.add_parser("augment", help="append restored N-best hypotheses")
    _add_common(p)
    p.add_argument("--reuse-boundaries", action="store_true")

    p = sub.add_parser("predict", help="punctuate words read from stdin")
    _add_common(p)
    p.add_argument("--ckpt", metavar="PATH", required=True)

    p = sub.add_parser("gradcheck", help="finite-difference gradient verification")
    _add_common(p)
    p.add_argument("--seeds", type=int, default=10)
    return ap


def _manifest(path, cfg_dict, seed):
    payload = json.dumps(cfg_dict, sort_keys=True)
    manifest = {
        "seed": seed,
        "config_hash": hashlib.sha256(payload.encode()).hexdigest(),
        "config": cfg_dict,
        "package_version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "kernel_backend": kernels.BACKEND,
    }
    with open(path, "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")


def _resolve_cfg(args):
    file_values = parse_config_file(args.config) if args.config else {}
    overrides = {
        "seed": args.seed,
        "epochs": args.epochs,
        "fusion_mode": args.fusion,
        "lr": getattr(args, "lr", None),
    }
    if args.variant:
        overrides["variant"] = CLI_VARIANTS[args.variant]
    return build_train_config(file_values, overrides)


def _load_model(args):
    ckpt = args.ckpt
    try:
        with open(ckpt + ".json") as f:
            cfg_dict = json.load(f)
    except OSError as e:
        raise MuseError(f"cannot read {ckpt}.json ({e}); "
                        "expected the sidecar written by `muse train`")
    cfg = build_train_config(cfg_dict)
    vocab = tok_mod.WordpieceVocab.load(ckpt + ".vocab")
    model = MuSeModel(vocab, cfg)
    restore_into(ckpt, model.parameters())
    return model


def _require(args, *names):
    for n in names:
        if getattr(args, n.replace("-", "_")) is None:
            raise MuseError(f"--{n} is required for this command")


def cmd_synth(args):
    _require(args, "out")
    seed = args.seed if args.seed is not None else 0
    sc = data_mod.gen_synthetic(seed, args.count, cue_profile=args.profile,
                                feat_dim=args.feat_dim)
    os.makedirs(args.out, exist_ok=True)
    corpus_path = os.path.join(args.out, "corpus.jsonl")
    data_mod.save_corpus(sc.corpus, corpus_path,
                         feats_dir=os.path.join(args.out, "feats"))
    data_mod.save_nbest(sc.nbest_map, os.path.join(args.out, "nbest.jsonl"))
    _manifest(os.path.join(args.out, "manifest.json"),
              {"command": "synth", "count": args.count, "profile": args.profile,
               "feat_dim": args.feat_dim}, seed)
    print(f"wrote {len(sc.corpus)} utterances to {corpus_path}")
    return 0


def cmd_stats(args):
    _require(args, "corpus")
    corpus = data_mod.load_corpus(args.corpus, load_frames=False)
    dist = data_mod.class_stats(corpus)
    print(f"{'class':<10} {'count':>10} {'percent':>8}")
    for name in data_mod.LABEL_NAMES:
        print(f"{name:<10} {dist.counts[name]:>10d} {dist.percentages[name]:>8.2f}")
    print(f"{'total':<10} {dist.total:>10d}")
    if args.out:
        with open(args.out, "w") as f:
            for name in data_mod.LABEL_NAMES:
                f.write(json.dumps({"class": name, "count": dist.counts[name],
                                    "percent": dist.percentages[name]},
                                   sort_keys=True) + "\n")
    return 0


def cmd_train(args):
    _require(args, "corpus", "out")
    cfg = _resolve_cfg(args)
    corpus = data_mod.load_corpus(args.corpus)
    if args.features:
        for utt in corpus:
            if utt.frames is not None and utt.frames.kind != args.features:
                raise MuseError(
                    f"--features {args.features} but corpus has {utt.frames.kind}")
    for utt in corpus:
        if utt.frames is not None:
            cfg.feat_dim = utt.frames.dim
            break
    dev = data_mod.load_corpus(args.dev) if args.dev else None
    model, curve = train(corpus, cfg, dev=dev, log=print)
    save_checkpoint(args.out, model.parameters())
    model.vocab.save(args.out + ".vocab")
    with open(args.out + ".json", "w") as f:
        json.dump(config_to_dict(cfg), f, indent=2, sort_keys=True)
        f.write("\n")
    _manifest(args.out + ".manifest.json", config_to_dict(cfg), cfg.seed)
    print(f"final loss {curve[-1]:.4f}; checkpoint at {args.out}")
    return 0


def _emit_report(report, out):
    print(report.to_table())
    if out:
        with open(out, "w") as f:
            f.write(report.to_jsonl() + "\n")


def cmd_eval(args):
    _require(args, "corpus")
    model = _load_model(args)
    corpus = data_mod.load_corpus(args.corpus)
    _emit_report(evaluate_reference(model, corpus), args.out)
    return 0


def cmd_eval_asr(args):
    _require(args, "corpus", "nbest")
    model = _load_model(args)
    corpus = data_mod.load_corpus(args.corpus)
    nbest = data_mod.load_nbest(args.nbest)
    _emit_report(evaluate_on_asr(model, corpus, nbest), args.out)
    return 0


def cmd_augment(args):
    _require(args, "corpus", "nbest", "out")
    corpus = data_mod.load_corpus(args.corpus, load_frames=False)
    nbest = data_mod.load_nbest(args.nbest)
    n = args.n_best if args.n_best is not None else 1
    augmented, skipped = data_mod.augment_with_nbest(
        corpus, nbest, n, reuse_boundaries=args.reuse_boundaries)
    data_mod.save_corpus(augmented, args.out)
    print(f"wrote {len(augmented)} utterances ({skipped} without N-best skipped)")
    return 0


def cmd_predict(args):
    model = _load_model(args)
    for line in sys.stdin:
        words = line.split()
        if not words:
            continue
        utt = data_mod.Utterance(id="stdin", words=words,
                                 labels=[data_mod.NP] * len(words))
        preds = model.predict_word_labels(utt)
        print(" ".join(w + data_mod.LABEL_MARKS[p] for w, p in zip(words, preds)))
    return 0


def cmd_gradcheck(args):
    from .verify import run_suite
    results = run_suite(seeds=range(args.seeds))
    failed = 0
    for name, seed, err, ok in results:
        status = "ok" if ok else "FAIL"
        print(f"{status:<5} {name:<20} seed={seed:<3} max_rel_err={err:.3e}")
        failed += not ok
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return 1 if failed else 0


COMMANDS = {
    "synth": cmd_synth,
    "stats": cmd_stats,
    "train": cmd_train,
    "eval": cmd_eval,
    "eval-asr": cmd_eval_asr,
    "augment": cmd_augment,
    "predict": cmd_predict,
    "gradcheck": cmd_gradcheck,
}


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except MuseError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
