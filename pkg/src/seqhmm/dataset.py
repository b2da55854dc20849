"""Corpus handling: alphabets, labeled pairs, folds, and sparse binary codes.

Two input formats are accepted by :func:`parse_corpus`:

1. Cell-assignment format (the format of the bundled sample corpus)::

       seq{1}='TTCCPSIVARSNFNVCRLPGTPEAICATYTGCIIIPGATCPGDYAN'
       str{1}='UUEEUHHHHHHHHHHHHHUUUUUUHHHHHHHHUEEUUUUUUUUUUU'

   Payload strings may wrap across lines; whitespace inside the quotes is
   ignored and letters are upper-cased.

2. Plain records: a ``>id`` header line followed by one sequence line and
   one structure line.

Residues use the 20 one-letter amino-acid codes.  Structure labels use the
eight classes H, G, I, E, B, T, S plus U for positions left unassigned by
the labeling program (blank in its raw output).

Sparse binary codes: each residue is a 5-bit big-endian code, each structure
label a 3-bit code.  Code values are index + 1 in alphabet order, so that
A -> 00001 and H -> 001; the eight structure values wrap modulo 8, which
places U at 000.  The all-zero pattern also pads windows that overhang the
ends of a sequence (see :mod:`seqhmm.ann`).
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .errors import (
    CorpusError,
    CorpusWarning,
    IllegalSymbol,
    InvalidFoldCount,
    LengthMismatch,
    MissingPartner,
    SymbolNotInAlphabet,
)

RESIDUES = "ACDEFGHIKLMNPQRSTVWY"
STRUCTURE_CLASSES = "HGIEBTSU"

# Three-class grouping of the eight structure labels.
CLASS3 = {
    "H": "Helix", "G": "Helix", "I": "Helix",
    "E": "Strand", "B": "Strand",
    "T": "Coil", "S": "Coil", "U": "Coil",
}


@dataclass(frozen=True)
class Alphabet:
    """An ordered symbol set with a fixed sparse binary code assignment."""

    name: str
    symbols: str
    code_width: int
    wrap_codes: bool  # code values are (index + 1) mod 2**code_width

    def __post_init__(self):
        if len(set(self.symbols)) != len(self.symbols):
            raise ValueError("alphabet symbols must be unique")

    def __len__(self) -> int:
        return len(self.symbols)

    def index(self, symbol: str) -> int:
        i = self.symbols.find(symbol)
        if i < 0:
            raise SymbolNotInAlphabet(f"{symbol!r} is not in alphabet {self.name}")
        return i

    def code_value(self, symbol: str) -> int:
        v = self.index(symbol) + 1
        return v % (1 << self.code_width) if self.wrap_codes else v


RESIDUE_ALPHABET = Alphabet("residues", RESIDUES, code_width=5, wrap_codes=False)
STRUCTURE_ALPHABET = Alphabet("structures", STRUCTURE_CLASSES, code_width=3, wrap_codes=True)


@dataclass(frozen=True)
class LabeledPair:
    """One protein record: residue sequence plus aligned structure string."""

    id: int
    sequence: str
    structure: str

    def __post_init__(self):
        if self.id < 1:
            raise CorpusError(f"record id must be >= 1, got {self.id}")
        if len(self.sequence) != len(self.structure):
            raise LengthMismatch(
                f"record {self.id}: len(seq)={len(self.sequence)} "
                f"!= len(str)={len(self.structure)}"
            )
        if not self.sequence:
            raise CorpusError(f"record {self.id} is empty")
        for pos, ch in enumerate(self.sequence, start=1):
            if ch not in RESIDUES:
                raise IllegalSymbol(
                    f"record {self.id}: illegal residue {ch!r} at position {pos}")
        for pos, ch in enumerate(self.structure, start=1):
            if ch not in STRUCTURE_CLASSES:
                raise IllegalSymbol(
                    f"record {self.id}: illegal structure label {ch!r} at position {pos}")

    def __len__(self) -> int:
        return len(self.sequence)


@dataclass(frozen=True)
class Corpus:
    """An ordered collection of labeled pairs with unique increasing ids."""

    pairs: tuple[LabeledPair, ...]

    def __post_init__(self):
        ids = [p.id for p in self.pairs]
        if sorted(set(ids)) != ids:
            raise CorpusError("corpus ids must be unique and strictly increasing")

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def __getitem__(self, i):
        return self.pairs[i]


_CELL_RE = re.compile(r"(seq|str)\s*\{\s*(\d+)\s*\}\s*=\s*'([^']*)'", re.S)


def _clean(payload: str) -> str:
    return "".join(payload.split()).upper()


def _pairs_from_records(records: dict[int, dict[str, str]], strict: bool) -> Corpus:
    pairs = []
    for rid in sorted(records):
        rec = records[rid]
        try:
            if "seq" not in rec or "str" not in rec:
                missing = "structure" if "seq" in rec else "sequence"
                raise MissingPartner(f"record {rid} has no {missing} string")
            pairs.append(LabeledPair(rid, rec["seq"], rec["str"]))
        except CorpusError as exc:
            if strict:
                raise
            warnings.warn(f"skipping record {rid}: {exc}", CorpusWarning, stacklevel=3)
    return Corpus(tuple(pairs))


def parse_corpus(text: str, strict: bool = True) -> Corpus:
    """Parse corpus text in either supported format.

    Strict mode raises on the first malformed record; lenient mode skips
    malformed records with a :class:`CorpusWarning` so that partially
    damaged corpora remain usable.
    """
    stripped = text.lstrip()
    if stripped.startswith(">"):
        return _parse_plain(text, strict)

    records: dict[int, dict[str, str]] = {}
    for kind, num, payload in _CELL_RE.findall(text):
        rid = int(num)
        slot = records.setdefault(rid, {})
        if kind in slot:
            if strict:
                raise CorpusError(f"duplicate {kind} string for record {rid}")
            warnings.warn(f"duplicate {kind} for record {rid}; keeping first",
                          CorpusWarning, stacklevel=2)
            continue
        slot[kind] = _clean(payload)
    if not records:
        raise CorpusError("no records found in corpus text")
    return _pairs_from_records(records, strict)


def _parse_plain(text: str, strict: bool) -> Corpus:
    records: dict[int, dict[str, str]] = {}
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    i = 0
    while i < len(lines):
        header = lines[i]
        if not header.startswith(">"):
            raise CorpusError(f"expected '>' header, got {header!r}")
        try:
            rid = int(header[1:].split()[0])
        except (ValueError, IndexError):
            raise CorpusError(f"cannot read record id from header {header!r}") from None
        rec = records.setdefault(rid, {})
        if i + 1 < len(lines) and not lines[i + 1].startswith(">"):
            rec["seq"] = _clean(lines[i + 1])
            i += 1
        if i + 1 < len(lines) and not lines[i + 1].startswith(">"):
            rec["str"] = _clean(lines[i + 1])
            i += 1
        i += 1
    if not records:
        raise CorpusError("no records found in corpus text")
    return _pairs_from_records(records, strict)


def format_corpus(corpus: Corpus) -> str:
    """Serialize a corpus in the cell-assignment format (parse round-trips)."""
    chunks = []
    for p in corpus:
        chunks.append(f"seq{{{p.id}}}='{p.sequence}'\n")
        chunks.append(f"str{{{p.id}}}='{p.structure}'\n")
    return "".join(chunks)


def load_bundled_corpus() -> Corpus:
    """Load the 20-protein sample corpus shipped with the package."""
    text = resources.files("seqhmm.data").joinpath("sample_corpus.txt").read_text()
    return parse_corpus(text)


def corpus_summary(corpus: Corpus) -> list[dict]:
    """Per-record id, length, and structure-class counts (JSON-friendly)."""
    out = []
    for p in corpus:
        counts = {c: p.structure.count(c) for c in STRUCTURE_CLASSES}
        out.append({"id": p.id, "length": len(p), "structure_counts": counts})
    return out


# ---------------------------------------------------------------------------
# Cross-validation folds
# ---------------------------------------------------------------------------

def _spans(ids) -> str:
    """Render a set of ids as contiguous runs: {1..4, 9..20} -> '1-4+9-20'."""
    ids = sorted(ids)
    runs = []
    start = prev = ids[0]
    for i in ids[1:]:
        if i == prev + 1:
            prev = i
            continue
        runs.append((start, prev))
        start = prev = i
    runs.append((start, prev))
    return "+".join(f"{a}-{b}" if a != b else f"{a}" for a, b in runs)


@dataclass(frozen=True)
class FoldSpec:
    """One cross-validation cell: disjoint train/test id sets.

    Ids are 1-based record positions in corpus order.
    """

    fold_index: int
    train_ids: frozenset[int]
    test_ids: frozenset[int]

    def __post_init__(self):
        if self.train_ids & self.test_ids:
            raise InvalidFoldCount("train and test ids overlap")
        if not self.train_ids or not self.test_ids:
            raise InvalidFoldCount("folds need non-empty train and test sets")

    @property
    def train_span(self) -> str:
        return _spans(self.train_ids)

    @property
    def test_span(self) -> str:
        return _spans(self.test_ids)


def make_folds(corpus_size: int, n_folds: int) -> list[FoldSpec]:
    """Contiguous-block cross-validation folds over ids 1..corpus_size.

    When the corpus holds at least 100 * n_folds records, each test block is
    exactly 100 records (fold f tests ids 100f+1 .. 100(f+1)); any remainder
    beyond the last block is always trained on.  Otherwise test blocks are
    floor(corpus_size / n_folds) records, the last fold absorbing the
    remainder.  Training ids are all ids outside the fold's test block.
    """
    if n_folds < 1 or n_folds > corpus_size:
        raise InvalidFoldCount(f"cannot split {corpus_size} records into {n_folds} folds")
    all_ids = frozenset(range(1, corpus_size + 1))
    if corpus_size >= 100 * n_folds:
        block = 100
        bounds = [(100 * f + 1, 100 * (f + 1)) for f in range(n_folds)]
    else:
        block = corpus_size // n_folds
        if block == 0 or (n_folds == 1 and block == corpus_size):
            raise InvalidFoldCount(f"cannot split {corpus_size} records into {n_folds} folds")
        bounds = [(block * f + 1, block * (f + 1)) for f in range(n_folds)]
        bounds[-1] = (bounds[-1][0], corpus_size)
    folds = []
    for f, (lo, hi) in enumerate(bounds):
        test = frozenset(range(lo, hi + 1))
        folds.append(FoldSpec(f, all_ids - test, test))
    return folds


# ---------------------------------------------------------------------------
# Index vectors and sparse binary codes
# ---------------------------------------------------------------------------

def sequence_to_index_vector(s: str, alphabet: Alphabet) -> np.ndarray:
    """Map a string to 0-based alphabet indices, e.g. ('HU', structures) -> [0, 7]."""
    out = np.zeros(len(s), dtype=np.int64)
    for pos, ch in enumerate(s):
        try:
            out[pos] = alphabet.index(ch)
        except SymbolNotInAlphabet:
            raise SymbolNotInAlphabet(
                f"{ch!r} at position {pos + 1} is not in alphabet {alphabet.name}") from None
    return out


def encode_symbol_binary(symbol: str, alphabet: Alphabet, width: int | None = None) -> tuple[int, ...]:
    """Fixed-width big-endian binary code for one symbol.

    Code values are index + 1 (structures wrap modulo 8), giving A -> 00001
    and H -> 001 at the default widths.  The all-zero pattern is reserved
    for window padding; no residue code collides with it.
    """
    if width is None:
        width = alphabet.code_width
    if width < alphabet.code_width:
        raise ValueError(f"width {width} too small for alphabet {alphabet.name}")
    v = alphabet.code_value(symbol)
    return tuple((v >> (width - 1 - b)) & 1 for b in range(width))


def pad_code(width: int) -> tuple[int, ...]:
    """All-zero code used for window positions outside the sequence."""
    return (0,) * width


def code_table(alphabet: Alphabet) -> dict[str, tuple[int, ...]]:
    """Symbol -> binary code mapping at the alphabet's native width."""
    return {ch: encode_symbol_binary(ch, alphabet) for ch in alphabet.symbols}


def encoding_table_text() -> str:
    """Human-readable dump of both code tables (for the --dump-encoding flag)."""
    lines = []
    for alph in (RESIDUE_ALPHABET, STRUCTURE_ALPHABET):
        lines.append(f"{alph.name} ({alph.code_width} bits, pad = {'0' * alph.code_width}):")
        for ch, bits in code_table(alph).items():
            lines.append(f"  {ch}  {''.join(map(str, bits))}")
    return "\n".join(lines)
