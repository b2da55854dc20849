"""Cross-validated comparison runs: HMM and ANN, both directions, all folds.

A run is a grid of cells (method x direction x fold).  Cells are
independent; a failing cell is recorded with its error message and the
remaining cells still run (the CLI then exits nonzero).  Outputs land in
one directory:

* ``report.csv``    - one row per cell, header
                      ``method,direction,fold,train_span,test_span,mean_q3``,
                      Q3 written with 4 decimals.  Byte-identical across
                      reruns with the same config and seed.
* ``report.json``   - config echo, per-pair detail, cell errors, and a
                      per-(method, direction) summary (grand mean, std).
* ``comparison.svg``- grouped bar chart of mean Q3 per cell, y axis 0-100.
* ``run.log``       - config echo, per-cell timing, failures.
"""

from __future__ import annotations

import dataclasses
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import ann as ann_mod
from . import seqstruct
from .dataset import Corpus, load_bundled_corpus, make_folds, parse_corpus
from .seqstruct import ModelDirection

METHODS = ("hmm", "ann")


@dataclass(frozen=True)
class ExperimentConfig:
    corpus_path: str | None = None   # None -> bundled sample corpus
    methods: tuple[str, ...] = ("hmm",)
    directions: tuple[str, ...] = ("model1", "model2")
    n_folds: int = 5
    decoder: str = "posterior"
    pseudocount: float = 1.0
    classes: str = "eight"
    window: int = 13
    hidden: tuple[int, ...] = ()
    learning_rate: float = 0.1
    iterations_per_position: int = 200
    epochs: int = 1
    seed: int = 0
    threads: int = 1
    out_dir: str | None = None       # None -> in-memory report only

    def __post_init__(self):
        if not self.methods or not self.directions:
            raise ValueError("methods and directions must be nonempty")
        for m in self.methods:
            if m not in METHODS:
                raise ValueError(f"unknown method {m!r}")
        for d in self.directions:
            ModelDirection.parse(d)
        if self.n_folds < 2:
            raise ValueError("need at least 2 folds so train and test are both nonempty")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")


def config_to_json(cfg: ExperimentConfig) -> str:
    return json.dumps(dataclasses.asdict(cfg), indent=2)


def config_from_json(text: str) -> ExperimentConfig:
    doc = json.loads(text)
    known = {f.name for f in dataclasses.fields(ExperimentConfig)}
    unknown = set(doc) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    for key in ("methods", "directions", "hidden"):
        if key in doc:
            doc[key] = tuple(doc[key])
    return ExperimentConfig(**doc)


@dataclass
class CellResult:
    method: str
    direction: str
    fold: int
    train_span: str
    test_span: str
    mean_q3: float | None
    per_pair: tuple[tuple[int, float], ...] = ()
    error: str | None = None
    seconds: float = 0.0


@dataclass
class ComparisonReport:
    config: ExperimentConfig
    cells: tuple[CellResult, ...]

    @property
    def n_failed(self) -> int:
        return sum(1 for c in self.cells if c.error is not None)

    @property
    def summary(self) -> tuple[dict, ...]:
        """Grand mean and population std of fold means per (method, direction)."""
        rows = []
        for m in self.config.methods:
            for d in self.config.directions:
                q3s = [c.mean_q3 for c in self.cells
                       if c.method == m and c.direction == d and c.mean_q3 is not None]
                if q3s:
                    mean = sum(q3s) / len(q3s)
                    std = (sum((q - mean) ** 2 for q in q3s) / len(q3s)) ** 0.5
                else:
                    mean = std = None
                rows.append({"method": m, "direction": d, "n_folds": len(q3s),
                             "grand_mean_q3": mean, "std_q3": std})
        return tuple(rows)


def _load_corpus(cfg: ExperimentConfig) -> Corpus:
    if cfg.corpus_path is None:
        return load_bundled_corpus()
    return parse_corpus(Path(cfg.corpus_path).read_text())


def _run_cell(corpus: Corpus, cfg: ExperimentConfig, method: str, direction_name: str, fold) -> CellResult:
    start = time.perf_counter()
    direction = ModelDirection.parse(direction_name)
    try:
        if method == "hmm":
            rep = seqstruct.evaluate_fold(
                corpus, fold, direction,
                decoder=cfg.decoder, pseudocount=cfg.pseudocount, classes=cfg.classes,
            )
            per_pair, mean_q3 = rep.per_pair, rep.mean_q3
        else:
            window = ann_mod.WindowConfig(direction, cfg.window)
            train_cfg = ann_mod.TrainConfig(
                learning_rate=cfg.learning_rate,
                iterations_per_position=cfg.iterations_per_position,
                epochs=cfg.epochs,
                seed=cfg.seed + fold.fold_index,  # distinct but reproducible per fold
                hidden=cfg.hidden,
            )
            train = [corpus[i - 1] for i in sorted(fold.train_ids)]
            net = ann_mod.train_ann(train, window, train_cfg)
            # three-class grouping is defined for structure strings only
            classes = cfg.classes if direction is ModelDirection.STRUCTURE_HIDDEN else "eight"
            per = []
            for i in sorted(fold.test_ids):
                pair = corpus[i - 1]
                hidden, observed = direction.split_pair(pair)
                pred = ann_mod.predict_ann(net, observed, window)
                per.append((pair.id, seqstruct.q3_score(pred, hidden, classes)))
            per_pair = tuple(per)
            mean_q3 = sum(q for _, q in per) / len(per)
        return CellResult(method, direction_name, fold.fold_index, fold.train_span,
                          fold.test_span, mean_q3, per_pair,
                          seconds=time.perf_counter() - start)
    except Exception as exc:  # isolate the cell; the run carries on
        return CellResult(method, direction_name, fold.fold_index, fold.train_span,
                          fold.test_span, None, (), error=f"{type(exc).__name__}: {exc}",
                          seconds=time.perf_counter() - start)


def run_experiment(cfg: ExperimentConfig) -> ComparisonReport:
    """Evaluate every (method, direction, fold) cell; never aborts mid-grid.

    With ``out_dir`` set, all artifacts are written there as well.
    """
    corpus = _load_corpus(cfg)
    folds = make_folds(len(corpus), cfg.n_folds)
    grid = [(m, d, f) for m in cfg.methods for d in cfg.directions for f in folds]
    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            cells = list(pool.map(lambda args: _run_cell(corpus, cfg, *args), grid))
    else:
        cells = [_run_cell(corpus, cfg, *args) for args in grid]
    report = ComparisonReport(cfg, tuple(cells))
    if cfg.out_dir is not None:
        write_outputs(report, cfg.out_dir)
    return report


def emit_csv(report: ComparisonReport, path) -> None:
    """Fixed-order, fixed-format rows so reruns are byte-identical."""
    lines = ["method,direction,fold,train_span,test_span,mean_q3"]
    for c in report.cells:
        q3 = f"{c.mean_q3:.4f}" if c.mean_q3 is not None else ""
        lines.append(f"{c.method},{c.direction},{c.fold},{c.train_span},{c.test_span},{q3}")
    Path(path).write_text("\n".join(lines) + "\n")


def emit_json(report: ComparisonReport, path) -> None:
    doc = {
        "config": dataclasses.asdict(report.config),
        "n_failed": report.n_failed,
        "summary": list(report.summary),
        "cells": [
            {
                "method": c.method,
                "direction": c.direction,
                "fold": c.fold,
                "train_span": c.train_span,
                "test_span": c.test_span,
                "mean_q3": c.mean_q3,
                "per_pair": [{"id": i, "q3": q} for i, q in c.per_pair],
                "error": c.error,
                "seconds": c.seconds,
            }
            for c in report.cells
        ],
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def emit_svg_comparison(report: ComparisonReport, path) -> None:
    """Grouped bar chart: one bar per (method, direction) in each fold group."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "seqhmm"   # content-derived ids, stable reruns
    plt.rcParams["svg.fonttype"] = "none"     # keep labels as searchable text
    folds = sorted({c.fold for c in report.cells})
    series = []
    for m in report.config.methods:
        for d in report.config.directions:
            by_fold = {c.fold: c.mean_q3 for c in report.cells
                       if c.method == m and c.direction == d}
            series.append((f"{m} {d}", [by_fold.get(f) or 0.0 for f in folds]))

    fig, ax = plt.subplots(figsize=(8, 4.5))
    width = 0.8 / max(1, len(series))
    for k, (label, values) in enumerate(series):
        xs = [f + (k - (len(series) - 1) / 2) * width for f in folds]
        ax.bar(xs, values, width=width, label=label)
    ax.set_xticks(folds)
    ax.set_xticklabels([str(f) for f in folds])
    ax.set_xlabel("Fold")
    ax.set_ylabel("Efficiency (Q3 %)")
    ax.set_ylim(0, 100)
    ax.legend(loc="upper right", fontsize="small")
    fig.tight_layout()
    fig.savefig(path, metadata={"Date": None} if str(path).endswith(".svg") else None)
    plt.close(fig)


def write_outputs(report: ComparisonReport, out_dir) -> dict[str, Path]:
    """Emit report.csv / report.json / comparison.svg / run.log into out_dir."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "csv": out / "report.csv",
        "json": out / "report.json",
        "svg": out / "comparison.svg",
        "log": out / "run.log",
    }
    emit_csv(report, paths["csv"])
    emit_json(report, paths["json"])
    emit_svg_comparison(report, paths["svg"])

    lines = ["config: " + json.dumps(dataclasses.asdict(report.config))]
    for c in report.cells:
        status = f"mean_q3={c.mean_q3:.4f}" if c.mean_q3 is not None else f"FAILED ({c.error})"
        lines.append(f"cell method={c.method} direction={c.direction} fold={c.fold} "
                     f"{status} elapsed={c.seconds:.3f}s")
    for row in report.summary:
        mean = f"{row['grand_mean_q3']:.4f}" if row["grand_mean_q3"] is not None else "n/a"
        std = f"{row['std_q3']:.4f}" if row["std_q3"] is not None else "n/a"
        lines.append(f"summary method={row['method']} direction={row['direction']} "
                     f"grand_mean_q3={mean} std_q3={std}")
    lines.append(f"done: {len(report.cells)} cells, {report.n_failed} failed")
    paths["log"].write_text("\n".join(lines) + "\n")
    return paths
