"""Command-line interface.

Subcommands:
  eval-cv        cross-validated counting-model evaluation -> CSV (+ JSON detail)
  ann-train      train one network on a whole corpus -> net JSON
  ann-eval       cross-validated network evaluation -> CSV (+ JSON detail)
  profile-train  EM-train a profile model on raw sequences -> profile JSON
  profile-score  log-probability of sequences under a saved profile
  corpus-summary per-record lengths and structure-class counts as JSON
  run            full comparison grid from a JSON config (CSV/JSON/SVG/log)

Global flags: --version, --seed (overrides config/default seeds), --threads,
and --dump-encoding to print the binary code tables and exit.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, ann, harness, profile, seqstruct
from .dataset import (
    RESIDUES,
    STRUCTURE_CLASSES,
    encoding_table_text,
    corpus_summary,
    load_bundled_corpus,
    make_folds,
    parse_corpus,
)
from .errors import SeqHmmError
from .seqstruct import ModelDirection


def _read_corpus(path: str | None, strict: bool = True):
    if path is None:
        return load_bundled_corpus()
    return parse_corpus(Path(path).read_text(), strict=strict)


def _read_sequences(path: str) -> list[str]:
    lines = [ln.strip() for ln in Path(path).read_text().splitlines()]
    seqs = [ln for ln in lines if ln and not ln.startswith("#")]
    if not seqs:
        raise SeqHmmError(f"no sequences found in {path}")
    return seqs


def _resolve_alphabet(name: str) -> tuple[str, ...]:
    if name == "residues":
        return tuple(RESIDUES)
    if name == "structures":
        return tuple(STRUCTURE_CLASSES)
    if len(set(name)) != len(name) or not name:
        raise SeqHmmError(f"custom alphabet {name!r} must have unique symbols")
    return tuple(name)


def _directions(arg: str) -> list[ModelDirection]:
    if arg == "both":
        return [ModelDirection.STRUCTURE_HIDDEN, ModelDirection.SEQUENCE_HIDDEN]
    return [ModelDirection.parse(arg)]


def _parse_hidden(arg: str) -> tuple[int, ...]:
    arg = arg.strip()
    if not arg:
        return ()
    return tuple(int(tok) for tok in arg.split(","))


def _classes_mode(arg: str) -> str:
    mode = {"8": "eight", "eight": "eight", "3": "three", "three": "three"}.get(arg)
    if mode is None:
        raise argparse.ArgumentTypeError(f"classes must be 8 or 3, got {arg!r}")
    return mode


def _write_eval_reports(reports, out_path: str, json_path: str | None, method: str | None):
    cols = ["fold_index", "train_span", "test_span", "direction", "mean_q3", "n_test"]
    if method is not None:
        cols = ["method"] + cols
    lines = [",".join(cols)]
    for r in reports:
        row = [str(r.fold_index), r.train_span, r.test_span, r.direction.value,
               f"{r.mean_q3:.4f}", str(r.n_test)]
        if method is not None:
            row = [method] + row
        lines.append(",".join(row))
    Path(out_path).write_text("\n".join(lines) + "\n")
    detail = json_path or str(Path(out_path).with_suffix(".json"))
    Path(detail).write_text(seqstruct.eval_reports_to_json(reports) + "\n")


def cmd_eval_cv(args) -> int:
    corpus = _read_corpus(args.corpus, strict=not args.lenient)
    folds = make_folds(len(corpus), args.folds)
    reports = [
        seqstruct.evaluate_fold(corpus, fold, direction, decoder=args.decoder,
                                pseudocount=args.pseudocount, classes=args.classes)
        for direction in _directions(args.direction)
        for fold in folds
    ]
    _write_eval_reports(reports, args.out, args.json, method=None)
    for r in reports:
        print(f"fold {r.fold_index} {r.direction.value}: mean Q3 = {r.mean_q3:.4f}")
    return 0


def cmd_ann_train(args) -> int:
    corpus = _read_corpus(args.corpus, strict=not args.lenient)
    direction = ModelDirection.parse(args.direction)
    window = ann.WindowConfig(direction, args.window)
    cfg = ann.TrainConfig(learning_rate=args.lr, iterations_per_position=args.iters,
                          epochs=args.epochs, seed=args.seed, hidden=_parse_hidden(args.hidden),
                          shuffled=args.shuffled)
    net = ann.train_ann(list(corpus), window, cfg)
    Path(args.out).write_text(ann.net_to_json(net, window, cfg) + "\n")
    print(f"trained net {net.layer_sizes} on {len(corpus)} pairs -> {args.out}")
    return 0


def cmd_ann_eval(args) -> int:
    corpus = _read_corpus(args.corpus, strict=not args.lenient)
    folds = make_folds(len(corpus), args.folds)
    reports = []
    for direction in _directions(args.direction):
        window = ann.WindowConfig(direction, args.window)
        classes = args.classes if direction is ModelDirection.STRUCTURE_HIDDEN else "eight"
        for fold in folds:
            cfg = ann.TrainConfig(learning_rate=args.lr, iterations_per_position=args.iters,
                                  epochs=args.epochs, seed=args.seed + fold.fold_index,
                                  hidden=_parse_hidden(args.hidden))
            train = [corpus[i - 1] for i in sorted(fold.train_ids)]
            net = ann.train_ann(train, window, cfg)
            per = []
            for i in sorted(fold.test_ids):
                pair = corpus[i - 1]
                hidden, observed = direction.split_pair(pair)
                pred = ann.predict_ann(net, observed, window)
                per.append((pair.id, seqstruct.q3_score(pred, hidden, classes)))
            reports.append(seqstruct.EvalReport(
                fold_index=fold.fold_index, direction=direction, decoder="ann",
                classes=classes, pseudocount=0.0, train_span=fold.train_span,
                test_span=fold.test_span, per_pair=tuple(per),
                mean_q3=float(np.mean([q for _, q in per])),
            ))
    _write_eval_reports(reports, args.out, args.json, method="ann")
    for r in reports:
        print(f"fold {r.fold_index} {r.direction.value}: mean Q3 = {r.mean_q3:.4f}")
    return 0


def cmd_profile_train(args) -> int:
    alphabet = _resolve_alphabet(args.alphabet)
    seqs = _read_sequences(args.seqs)
    index = {ch: k for k, ch in enumerate(alphabet)}
    try:
        xs = [[index[ch] for ch in s] for s in seqs]
    except KeyError as exc:
        raise SeqHmmError(f"sequence symbol {exc.args[0]!r} not in alphabet") from None
    length = args.length or max(len(s) for s in seqs)
    start = profile.init_profile(length, alphabet, seed=args.seed, kind=args.init)
    report = profile.profile_baum_welch(start, xs, max_iter=args.max_iter,
                                        thresh=args.thresh, pseudocount=args.pseudocount)
    Path(args.out).write_text(profile.profile_to_json(report.final_profile) + "\n")
    trace = ", ".join(f"{v:.4f}" for v in report.loglik_trace)
    print(f"profile length {length} trained for {report.iterations} iterations "
          f"(converged={report.converged}); loglik trace: {trace}")
    return 0


def cmd_profile_score(args) -> int:
    p = profile.profile_from_json(Path(args.profile).read_text())
    seqs = _read_sequences(args.seqs)
    rows = []
    for k, s in enumerate(seqs):
        x = p.indices(s)
        space = args.space
        if space == "auto":
            space = "log" if len(s) > 200 else "prob"
        dp = profile.profile_forward(p, x, space=space)
        rows.append((k, len(s), dp.log_prob))
        print(f"seq {k} len {len(s)} log_prob {dp.log_prob:.6f}")
    if args.out:
        Path(args.out).write_text(
            "index,length,log_prob\n"
            + "\n".join(f"{k},{n},{lp:.6f}" for k, n, lp in rows) + "\n")
    return 0


def cmd_corpus_summary(args) -> int:
    corpus = _read_corpus(args.corpus, strict=not args.lenient)
    text = json.dumps(corpus_summary(corpus), indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return 0


def cmd_run(args, seed: int | None, threads: int | None) -> int:
    cfg = harness.config_from_json(Path(args.config).read_text())
    if seed is not None:
        cfg = dataclasses.replace(cfg, seed=seed)
    if threads is not None:
        cfg = dataclasses.replace(cfg, threads=threads)
    out_dir = args.out_dir or cfg.out_dir or "."
    cfg = dataclasses.replace(cfg, out_dir=out_dir)
    report = harness.run_experiment(cfg)
    for c in report.cells:
        status = f"{c.mean_q3:.4f}" if c.mean_q3 is not None else f"FAILED: {c.error}"
        print(f"{c.method} {c.direction} fold {c.fold}: {status}")
    names = ("report.csv", "report.json", "comparison.svg", "run.log")
    print("wrote " + ", ".join(str(Path(out_dir) / n) for n in names))
    return 1 if report.n_failed else 0


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="seqhmm", description=__doc__,
                                  formatter_class=argparse.RawDescriptionHelpFormatter)
    top.add_argument("--version", action="version", version=f"seqhmm {__version__}")
    top.add_argument("--seed", type=int, default=None, dest="global_seed",
                     help="override seeds")
    top.add_argument("--threads", type=int, default=None, dest="global_threads",
                     help="worker threads for run")
    top.add_argument("--dump-encoding", action="store_true",
                     help="print the binary code tables and exit")
    sub = top.add_subparsers(dest="command")

    def common(p, needs_direction=True):
        p.add_argument("--corpus", default=None, help="corpus file (default: bundled sample)")
        p.add_argument("--lenient", action="store_true", help="skip malformed records")
        if needs_direction:
            p.add_argument("--direction", default="both",
                           choices=["model1", "model2", "both"])

    p = sub.add_parser("eval-cv", help="cross-validated counting-model evaluation")
    common(p)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--decoder", default="posterior", choices=["posterior", "viterbi"])
    p.add_argument("--pseudocount", type=float, default=1.0)
    p.add_argument("--classes", default="eight", type=_classes_mode,
                   help="8 (default) or 3 grouped classes")
    p.add_argument("--out", default="report.csv")
    p.add_argument("--json", default=None, help="companion per-pair JSON path")

    p = sub.add_parser("ann-train", help="train one network on a corpus")
    common(p, needs_direction=False)
    p.add_argument("--direction", required=True, choices=["model1", "model2"])
    p.add_argument("--window", type=int, default=13)
    p.add_argument("--hidden", default="", help="comma-separated hidden sizes, empty for none")
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--iters", type=int, default=200)
    p.add_argument("--epochs", type=int, default=1)
    p.add_argument("--shuffled-sgd", action="store_true", dest="shuffled",
                   help="shuffled full passes instead of per-position repetition")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default="net.json")

    p = sub.add_parser("ann-eval", help="cross-validated network evaluation")
    common(p)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--classes", default="eight", type=_classes_mode,
                   help="8 (default) or 3 grouped classes")
    p.add_argument("--window", type=int, default=13)
    p.add_argument("--hidden", default="")
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--iters", type=int, default=200)
    p.add_argument("--epochs", type=int, default=1)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default="report.csv")
    p.add_argument("--json", default=None)

    p = sub.add_parser("profile-train", help="EM-train a profile model")
    p.add_argument("--seqs", required=True, help="text file, one sequence per line")
    p.add_argument("--alphabet", default="residues",
                   help="'residues', 'structures', or a literal symbol string")
    p.add_argument("--length", type=int, default=None,
                   help="profile length (default: longest sequence)")
    p.add_argument("--max-iter", type=int, default=15)
    p.add_argument("--thresh", type=float, default=1e-4)
    p.add_argument("--pseudocount", type=float, default=0.0)
    p.add_argument("--init", default="random", choices=["random", "uniform"])
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default="profile.json")

    p = sub.add_parser("profile-score", help="score sequences under a saved profile")
    p.add_argument("--profile", required=True)
    p.add_argument("--seqs", required=True)
    p.add_argument("--space", default="auto", choices=["auto", "prob", "log"])
    p.add_argument("--out", default=None, help="optional CSV output path")

    p = sub.add_parser("corpus-summary", help="per-record summary as JSON")
    common(p, needs_direction=False)
    p.add_argument("--out", default=None)

    p = sub.add_parser("run", help="full comparison grid from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", default=None)
    return top


def main(argv=None) -> int:
    top = build_parser()
    args = top.parse_args(argv)
    if args.dump_encoding:
        print(encoding_table_text())
        return 0
    if args.command is None:
        top.print_help()
        return 1
    # subcommand --seed wins over the global flag; default is 0
    if hasattr(args, "seed"):
        if args.seed is None:
            args.seed = args.global_seed if args.global_seed is not None else 0
    try:
        if args.command == "eval-cv":
            return cmd_eval_cv(args)
        if args.command == "ann-train":
            return cmd_ann_train(args)
        if args.command == "ann-eval":
            return cmd_ann_eval(args)
        if args.command == "profile-train":
            return cmd_profile_train(args)
        if args.command == "profile-score":
            return cmd_profile_score(args)
        if args.command == "corpus-summary":
            return cmd_corpus_summary(args)
        if args.command == "run":
            return cmd_run(args, args.global_seed, args.global_threads)
    except (SeqHmmError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 1


if __name__ == "__main__":
    sys.exit(main())
