"""Supervised sequence/structure models estimated by counting.

Two directions share one estimator:

* ``STRUCTURE_HIDDEN`` (model1): hidden states are the 8 structure classes,
  observations the 20 residues; predicting the hidden string is secondary
  structure prediction.
* ``SEQUENCE_HIDDEN`` (model2): hidden states are the 20 residues,
  observations the 8 structure classes; predicting the hidden string asks
  which residues a known structure came from.

Counting uses only within-pair adjacencies (no transition across record
boundaries).  A pseudocount (default 1.0) is added to every count cell
before normalization so that unseen events keep nonzero probability;
with pseudocount 0 the estimates are the exact count ratios.

Q3 is the percentage of positions whose predicted label matches the actual
one.  Eight-class mode compares labels directly; three-class mode first
groups H, G, I -> Helix, E, B -> Strand, T, S, U -> Coil.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass

import numpy as np

from . import hmm
from .errors import EmptyTrainingSet, IllegalSymbol, LengthMismatch
from .dataset import (
    CLASS3,
    RESIDUE_ALPHABET,
    STRUCTURE_ALPHABET,
    Alphabet,
    Corpus,
    FoldSpec,
    sequence_to_index_vector,
)


class ModelDirection(enum.Enum):
    STRUCTURE_HIDDEN = "model1"
    SEQUENCE_HIDDEN = "model2"

    @property
    def hidden_alphabet(self) -> Alphabet:
        return (STRUCTURE_ALPHABET if self is ModelDirection.STRUCTURE_HIDDEN
                else RESIDUE_ALPHABET)

    @property
    def observed_alphabet(self) -> Alphabet:
        return (RESIDUE_ALPHABET if self is ModelDirection.STRUCTURE_HIDDEN
                else STRUCTURE_ALPHABET)

    def split_pair(self, pair) -> tuple[str, str]:
        """(hidden string, observed string) for one labeled pair."""
        if self is ModelDirection.STRUCTURE_HIDDEN:
            return pair.structure, pair.sequence
        return pair.sequence, pair.structure

    @classmethod
    def parse(cls, name: str) -> "ModelDirection":
        return cls(name.lower())


@dataclass
class CountingEstimate:
    """Raw counts plus the normalized model they produce."""

    model: hmm.DiscreteHmm
    start_counts: np.ndarray   # (N,)
    trans_counts: np.ndarray   # (N, N)
    emit_counts: np.ndarray    # (N, M)
    pseudocount: float
    direction: ModelDirection


def _normalize_rows(counts: np.ndarray, pseudocount: float) -> np.ndarray:
    padded = counts + pseudocount
    sums = padded.sum(axis=-1, keepdims=True)
    uniform = np.full_like(padded, 1.0 / padded.shape[-1])
    with np.errstate(invalid="ignore"):
        rows = np.where(sums > 0, padded / np.where(sums > 0, sums, 1.0), uniform)
    return rows


def estimate_by_counting(pairs, direction: ModelDirection, pseudocount: float = 1.0) -> CountingEstimate:
    """Maximum-likelihood model from labeled pairs by direct counting.

    start_counts[i] counts pairs whose hidden string begins in state i;
    trans_counts[i, j] counts within-pair adjacent hidden transitions;
    emit_counts[i, k] counts aligned (hidden, observed) positions.
    """
    hid, obs = direction.hidden_alphabet, direction.observed_alphabet
    n, m = len(hid), len(obs)
    start = np.zeros(n)
    trans = np.zeros((n, n))
    emitc = np.zeros((n, m))
    n_pairs = 0
    for pair in pairs:
        h = sequence_to_index_vector(direction.split_pair(pair)[0], hid)
        o = sequence_to_index_vector(direction.split_pair(pair)[1], obs)
        start[h[0]] += 1
        np.add.at(trans, (h[:-1], h[1:]), 1)
        np.add.at(emitc, (h, o), 1)
        n_pairs += 1
    if n_pairs == 0:
        raise EmptyTrainingSet("estimate_by_counting needs at least one pair")
    model = hmm.DiscreteHmm(
        pi=_normalize_rows(start, pseudocount),
        trans=_normalize_rows(trans, pseudocount),
        emit=_normalize_rows(emitc, pseudocount),
        state_labels=tuple(hid.symbols),
        symbol_labels=tuple(obs.symbols),
    )
    return CountingEstimate(model, start, trans, emitc, pseudocount, direction)


def predict_hidden(model: hmm.DiscreteHmm, observed: str, direction: ModelDirection,
                   decoder: str = "posterior") -> str:
    """Predicted hidden string for one observed string.

    ``posterior`` takes the per-position argmax of the state posterior;
    ``viterbi`` returns the single best joint path.
    """
    o = sequence_to_index_vector(observed, direction.observed_alphabet)
    if decoder == "posterior":
        states = hmm.decode_posterior(model, o)
    elif decoder == "viterbi":
        states = hmm.viterbi(model, o).path
    else:
        raise ValueError(f"unknown decoder {decoder!r}")
    symbols = direction.hidden_alphabet.symbols
    return "".join(symbols[i] for i in states)


def q3_score(predicted: str, actual: str, classes: str = "eight") -> float:
    """Percentage of matching positions, optionally after three-class grouping.

    Three-class mode groups structure symbols (Helix/Strand/Coil) and is
    undefined for other alphabets; eight-class mode compares any symbols
    directly.
    """
    if len(predicted) != len(actual) or not actual:
        raise LengthMismatch("predicted and actual must be equal-length and non-empty")
    if classes == "three":
        try:
            pred = [CLASS3[c] for c in predicted]
            act = [CLASS3[c] for c in actual]
        except KeyError as exc:
            raise IllegalSymbol(
                f"symbol {exc.args[0]!r} has no three-class grouping") from None
    elif classes == "eight":
        pred, act = list(predicted), list(actual)
    else:
        raise ValueError(f"unknown class mode {classes!r}")
    matches = sum(p == a for p, a in zip(pred, act))
    return 100.0 * matches / len(act)


@dataclass
class EvalReport:
    """Per-fold evaluation: one Q3 per test pair plus their unweighted mean."""

    fold_index: int
    direction: ModelDirection
    decoder: str
    classes: str
    pseudocount: float
    train_span: str
    test_span: str
    per_pair: tuple[tuple[int, float], ...]  # (pair id, q3)
    mean_q3: float

    @property
    def n_test(self) -> int:
        return len(self.per_pair)

    def to_dict(self) -> dict:
        return {
            "fold_index": self.fold_index,
            "direction": self.direction.value,
            "decoder": self.decoder,
            "classes": self.classes,
            "pseudocount": self.pseudocount,
            "train_span": self.train_span,
            "test_span": self.test_span,
            "per_pair": [{"id": i, "q3": q} for i, q in self.per_pair],
            "mean_q3": self.mean_q3,
            "n_test": self.n_test,
        }


def evaluate_fold(corpus: Corpus, fold: FoldSpec, direction: ModelDirection,
                  decoder: str = "posterior", pseudocount: float = 1.0,
                  classes: str = "eight") -> EvalReport:
    """Train on the fold's training records, score Q3 on its test records.

    Fold ids are 1-based positions in corpus order.  Three-class grouping
    only applies when the hidden strings are structure classes; residue
    predictions always compare directly.
    """
    if direction is not ModelDirection.STRUCTURE_HIDDEN:
        classes = "eight"
    train = [corpus[i - 1] for i in sorted(fold.train_ids)]
    test = [corpus[i - 1] for i in sorted(fold.test_ids)]
    est = estimate_by_counting(train, direction, pseudocount)
    per_pair = []
    for pair in test:
        actual, observed = direction.split_pair(pair)
        pred = predict_hidden(est.model, observed, direction, decoder)
        per_pair.append((pair.id, q3_score(pred, actual, classes)))
    mean = float(np.mean([q for _, q in per_pair]))
    return EvalReport(
        fold_index=fold.fold_index,
        direction=direction,
        decoder=decoder,
        classes=classes,
        pseudocount=pseudocount,
        train_span=fold.train_span,
        test_span=fold.test_span,
        per_pair=tuple(per_pair),
        mean_q3=mean,
    )


def eval_reports_to_json(reports) -> str:
    return json.dumps([r.to_dict() for r in reports], indent=2)
