"""Profile hidden Markov models over match/insert/delete columns.

Topology: columns 1..L each hold a match state M_j and a delete state D_j;
insert states I_0..I_L sit between columns.  Begin is a silent column-0
match state (M_0) and End a silent column-(L+1) match state.  Every state
at column j feeds exactly three successors: M_{j+1} (End when j == L),
I_j, and D_{j+1} (absent when j == L).  D_0 does not exist.

Transition storage: ``trans[j, s, u]`` is the probability from source
s in (M, I, D) = (0, 1, 2) at column j to target u in (next match / End,
same-column insert, next delete) = (0, 1, 2).  Structurally absent slots
(the D source row at j == 0, the delete target column at j == L) are
pinned to zero.

Dynamic-programming tables index (i, j) = (symbols consumed, column), so
``fM[i, j]`` is the total probability of emitting the first i symbols and
sitting in M_j, with fM[0, 0] = 1 for Begin.  Plain probability space is
the default at desk scale; ``space="log"`` runs the same recursions in
log space for sequences long enough to underflow (beyond roughly 200
symbols).
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateColumnWarning, ZeroSequenceProbability

M, I, D = 0, 1, 2
_TOL = 1e-9


def _feasible_sources(length: int, j: int) -> tuple[int, ...]:
    return (M, I) if j == 0 else (M, I, D)


@dataclass
class ProfileHmm:
    """Profile model: per-column emissions and three-way transition bundles."""

    alphabet: tuple[str, ...]
    match_emit: np.ndarray    # (L, K), row j-1 = emissions of M_j
    insert_emit: np.ndarray   # (L+1, K), row j = emissions of I_j
    trans: np.ndarray         # (L+1, 3, 3), see module docstring

    def __post_init__(self):
        self.alphabet = tuple(self.alphabet)
        self.match_emit = np.asarray(self.match_emit, dtype=float)
        self.insert_emit = np.asarray(self.insert_emit, dtype=float)
        self.trans = np.asarray(self.trans, dtype=float)
        L, K = self.length, len(self.alphabet)
        if len(set(self.alphabet)) != K or K < 1:
            raise ValueError("alphabet symbols must be unique and non-empty")
        if self.match_emit.shape != (L, K):
            raise ValueError(f"match_emit must be ({L}, {K})")
        if self.insert_emit.shape != (L + 1, K):
            raise ValueError(f"insert_emit must be ({L + 1}, {K})")
        if self.trans.shape != (L + 1, 3, 3):
            raise ValueError(f"trans must be ({L + 1}, 3, 3)")
        if np.any(self.match_emit < 0) or np.any(self.insert_emit < 0) or np.any(self.trans < 0):
            raise ValueError("probabilities must be non-negative")
        for mat, name in ((self.match_emit, "match_emit"), (self.insert_emit, "insert_emit")):
            if not np.allclose(mat.sum(axis=1), 1.0, rtol=0, atol=_TOL):
                raise ValueError(f"{name} rows must sum to 1")
        if np.any(self.trans[0, D] != 0):
            raise ValueError("column 0 has no delete state; trans[0, D, :] must be 0")
        if np.any(self.trans[L, :, D] != 0):
            raise ValueError(f"column {L} has no next delete state; trans[{L}, :, D] must be 0")
        for j in range(L + 1):
            for s in _feasible_sources(L, j):
                total = self.trans[j, s].sum()
                if abs(total - 1.0) > _TOL:
                    raise ValueError(f"transition bundle (column {j}, source {s}) sums to {total}")

    @property
    def length(self) -> int:
        return self.match_emit.shape[0]

    def indices(self, s: str) -> np.ndarray:
        idx = {ch: k for k, ch in enumerate(self.alphabet)}
        try:
            return np.array([idx[ch] for ch in s], dtype=np.int64)
        except KeyError as exc:
            raise ValueError(f"symbol {exc.args[0]!r} not in profile alphabet") from None


@dataclass
class ProfileDp:
    """Forward (or backward) tables, shape (m+1, L+1) each, plus log P(X)."""

    fM: np.ndarray
    fI: np.ndarray
    fD: np.ndarray
    log_prob: float
    space: str

    @property
    def prob(self) -> float:
        return math.exp(self.log_prob) if self.log_prob > -np.inf else 0.0


def _ops(space: str):
    """(zero, one, mul, add, to_space) for the requested arithmetic."""
    if space == "prob":
        return 0.0, 1.0, lambda a, b: a * b, lambda a, b: a + b, lambda p: p
    if space == "log":
        with np.errstate(divide="ignore"):
            return (-np.inf, 0.0, lambda a, b: a + b, np.logaddexp,
                    lambda p: float(np.log(p)) if p > 0 else -np.inf)
    raise ValueError(f"unknown space {space!r}")


def profile_forward(p: ProfileHmm, x, space: str = "prob") -> ProfileDp:
    """Fill fM/fI/fD and the total sequence probability.

    x is an index vector into the profile alphabet (see
    :meth:`ProfileHmm.indices`).
    """
    x = np.asarray(x, dtype=np.int64)
    zero, one, mul, add, conv = _ops(space)
    L, m = p.length, len(x)
    t = np.vectorize(conv)(p.trans) if space == "log" else p.trans
    em = np.vectorize(conv)(p.match_emit) if space == "log" else p.match_emit
    ei = np.vectorize(conv)(p.insert_emit) if space == "log" else p.insert_emit

    fM = np.full((m + 1, L + 1), zero)
    fI = np.full((m + 1, L + 1), zero)
    fD = np.full((m + 1, L + 1), zero)
    fM[0, 0] = one
    for i in range(m + 1):
        for j in range(L + 1):
            if i > 0 and j > 0:
                fM[i, j] = mul(em[j - 1, x[i - 1]],
                               add(add(mul(fM[i - 1, j - 1], t[j - 1, M, M]),
                                       mul(fI[i - 1, j - 1], t[j - 1, I, M])),
                                   mul(fD[i - 1, j - 1], t[j - 1, D, M])))
            if i > 0:
                fI[i, j] = mul(ei[j, x[i - 1]],
                               add(add(mul(fM[i - 1, j], t[j, M, I]),
                                       mul(fI[i - 1, j], t[j, I, I])),
                                   mul(fD[i - 1, j], t[j, D, I])))
            if j > 0:
                fD[i, j] = add(add(mul(fM[i, j - 1], t[j - 1, M, D]),
                                   mul(fI[i, j - 1], t[j - 1, I, D])),
                               mul(fD[i, j - 1], t[j - 1, D, D]))
    total = add(add(mul(fM[m, L], t[L, M, M]), mul(fI[m, L], t[L, I, M])),
                mul(fD[m, L], t[L, D, M]))
    log_prob = float(total) if space == "log" else (float(np.log(total)) if total > 0 else -np.inf)
    return ProfileDp(fM, fI, fD, log_prob, space)


def profile_backward(p: ProfileHmm, x, space: str = "prob") -> ProfileDp:
    """Backward tables: bX[i, j] = P(emit x_{i+1}..x_m and reach End | at X_j).

    bM[0, 0] equals the total sequence probability (everything from Begin).
    """
    x = np.asarray(x, dtype=np.int64)
    zero, one, mul, add, conv = _ops(space)
    L, m = p.length, len(x)
    t = np.vectorize(conv)(p.trans) if space == "log" else p.trans
    em = np.vectorize(conv)(p.match_emit) if space == "log" else p.match_emit
    ei = np.vectorize(conv)(p.insert_emit) if space == "log" else p.insert_emit

    bM = np.full((m + 1, L + 1), zero)
    bI = np.full((m + 1, L + 1), zero)
    bD = np.full((m + 1, L + 1), zero)
    bM[m, L], bI[m, L], bD[m, L] = t[L, M, M], t[L, I, M], t[L, D, M]
    for i in range(m, -1, -1):
        for j in range(L, -1, -1):
            if i == m and j == L:
                continue
            for s, table in ((M, bM), (I, bI), (D, bD)):
                acc = zero
                if i < m and j < L:
                    acc = add(acc, mul(t[j, s, M], mul(em[j, x[i]], bM[i + 1, j + 1])))
                if i < m:
                    acc = add(acc, mul(t[j, s, I], mul(ei[j, x[i]], bI[i + 1, j])))
                if j < L:
                    acc = add(acc, mul(t[j, s, D], bD[i, j + 1]))
                table[i, j] = acc
    return ProfileDp(bM, bI, bD, float(bM[0, 0]) if space == "log"
                     else (float(np.log(bM[0, 0])) if bM[0, 0] > 0 else -np.inf), space)


def check_reconstruction(p: ProfileHmm, x, atol: float = 1e-12) -> bool:
    """At every i, summing fX * bX over emitting states reconstructs P(X).

    Delete states are excluded: a path sits in exactly one emitting state
    right after consuming symbol i, but may pass through several deletes.
    """
    x = np.asarray(x, dtype=np.int64)
    fwd = profile_forward(p, x)
    bwd = profile_backward(p, x)
    total = math.exp(fwd.log_prob) if fwd.log_prob > -np.inf else 0.0
    for i in range(len(x) + 1):
        recon = float((fwd.fM[i] * bwd.fM[i]).sum() + (fwd.fI[i] * bwd.fI[i]).sum())
        if abs(recon - total) > atol * max(1.0, abs(total)):
            return False
    return True


@dataclass
class ExpectedCounts:
    """Posterior-weighted usage counts accumulated over a sequence batch."""

    match_emit: np.ndarray    # (L, K)
    insert_emit: np.ndarray   # (L+1, K)
    trans: np.ndarray         # (L+1, 3, 3); slot [L, s, M] holds End transitions
    loglik: float
    n_sequences: int


def profile_expected_counts(p: ProfileHmm, sequences) -> ExpectedCounts:
    """E-step quantities: emission counts E(a) and transition counts A.

    Each contribution is a forward-backward product divided by the sequence
    probability.  Probability space only (desk scale).
    """
    L, K = p.length, len(p.alphabet)
    em_c = np.zeros((L, K))
    ei_c = np.zeros((L + 1, K))
    tr_c = np.zeros((L + 1, 3, 3))
    loglik = 0.0
    count = 0
    for x in sequences:
        x = np.asarray(x, dtype=np.int64)
        m = len(x)
        fwd = profile_forward(p, x)
        bwd = profile_backward(p, x)
        total = fwd.prob
        if total == 0.0:
            raise ZeroSequenceProbability("sequence has zero probability under the profile")
        loglik += fwd.log_prob
        count += 1

        wM = fwd.fM * bwd.fM / total
        wI = fwd.fI * bwd.fI / total
        np.add.at(em_c.T, x, wM[1:, 1:])
        np.add.at(ei_c.T, x, wI[1:, :])

        f = {M: fwd.fM, I: fwd.fI, D: fwd.fD}
        for s in (M, I, D):
            # rows 0..m-1 pair with the symbol emitted next (x[i]) and the
            # backward value after consuming it
            tr_c[:-1, s, M] += (f[s][:m, :L] * p.trans[:-1, s, M]
                                * p.match_emit[np.arange(L)[None, :], x[:, None]]
                                * bwd.fM[1:, 1:]).sum(axis=0) / total
            tr_c[:, s, I] += (f[s][:m, :] * p.trans[:, s, I]
                              * p.insert_emit[np.arange(L + 1)[None, :], x[:, None]]
                              * bwd.fI[1:, :]).sum(axis=0) / total
            tr_c[:-1, s, D] += (f[s][:, :L] * p.trans[:-1, s, D]
                                * bwd.fD[:, 1:]).sum(axis=0) / total
            # transitions into End happen exactly at (m, L)
            tr_c[L, s, M] += f[s][m, L] * p.trans[L, s, M] / total
    return ExpectedCounts(em_c, ei_c, tr_c, loglik, count)


@dataclass
class ProfileEmReport:
    loglik_trace: tuple[float, ...]
    iterations: int
    converged: bool
    final_profile: ProfileHmm
    degenerate_columns: tuple[int, ...] = ()


def profile_baum_welch(
    p: ProfileHmm,
    sequences,
    max_iter: int = 15,
    thresh: float = 1e-4,
    pseudocount: float = 0.0,
) -> ProfileEmReport:
    """EM re-estimation of a profile from unaligned sequences.

    The pseudocount is added to every structurally feasible count cell.
    Zero-mass rows become uniform over their feasible slots with a
    :class:`DegenerateColumnWarning`.  Convergence mirrors the plain-chain
    EM: |LL - LL_prev| / (1 + |LL|) < thresh.
    """
    seqs = [np.asarray(s, dtype=np.int64) for s in sequences]
    L = p.length
    trace: list[float] = []
    converged = False
    degenerate: set[int] = set()
    it = 0
    while it < max_iter and not converged:
        counts = profile_expected_counts(p, seqs)
        trace.append(counts.loglik)

        em_c = counts.match_emit + pseudocount
        ei_c = counts.insert_emit + pseudocount
        for name, mat, col0 in (("match", em_c, 1), ("insert", ei_c, 0)):
            sums = mat.sum(axis=1)
            for r in np.flatnonzero(sums == 0):
                mat[r] = 1.0
                sums[r] = mat.shape[1]
                degenerate.add(int(r + col0))
                warnings.warn(f"{name} emissions at column {r + col0} have zero mass; reset to uniform",
                              DegenerateColumnWarning, stacklevel=2)
            mat /= sums[:, None]

        tr = np.zeros((L + 1, 3, 3))
        for j in range(L + 1):
            feasible_targets = (M, I) if j == L else (M, I, D)
            for s in _feasible_sources(L, j):
                row = np.zeros(3)
                for u in feasible_targets:
                    row[u] = counts.trans[j, s, u] + pseudocount
                total = row.sum()
                if total == 0:
                    row[list(feasible_targets)] = 1.0 / len(feasible_targets)
                    degenerate.add(j)
                    warnings.warn(f"transition bundle (column {j}, source {s}) has zero mass; reset to uniform",
                                  DegenerateColumnWarning, stacklevel=2)
                else:
                    row /= total
                tr[j, s] = row

        p = ProfileHmm(p.alphabet, em_c, ei_c, tr)
        it += 1
        if len(trace) >= 2:
            converged = abs(trace[-1] - trace[-2]) / (1.0 + abs(trace[-1])) < thresh
    return ProfileEmReport(tuple(trace), it, converged, p, tuple(sorted(degenerate)))


def init_profile(length: int, alphabet, seed: int | None = None, kind: str = "random") -> ProfileHmm:
    """Uniform or seeded-random starting profile with the required topology."""
    alphabet = tuple(alphabet)
    K = len(alphabet)
    if length < 1 or K < 1:
        raise ValueError("length and alphabet size must be >= 1")
    rng = np.random.default_rng(seed)

    def rows(shape):
        if kind == "uniform":
            r = np.ones(shape)
        elif kind == "random":
            r = rng.random(shape) + 1e-3
        else:
            raise ValueError(f"unknown init kind {kind!r}")
        return r / r.sum(axis=-1, keepdims=True)

    em = rows((length, K))
    ei = rows((length + 1, K))
    tr = np.zeros((length + 1, 3, 3))
    for j in range(length + 1):
        n_targets = 2 if j == length else 3
        for s in _feasible_sources(length, j):
            row = rows((n_targets,))
            tr[j, s, :n_targets] = row
    return ProfileHmm(alphabet, em, ei, tr)


# ---------------------------------------------------------------------------
# JSON round-trip
# ---------------------------------------------------------------------------

def profile_to_json(p: ProfileHmm) -> str:
    doc = {
        "length": p.length,
        "alphabet": list(p.alphabet),
        "match_emit": p.match_emit.tolist(),
        "insert_emit": p.insert_emit.tolist(),
        # per column: three target slots [next match (End at the last column),
        # same-column insert, next delete]
        "transitions": [
            {"match": p.trans[j, M].tolist(),
             "insert": p.trans[j, I].tolist(),
             "delete": p.trans[j, D].tolist()}
            for j in range(p.length + 1)
        ],
    }
    return json.dumps(doc, indent=2)


def profile_from_json(text: str) -> ProfileHmm:
    doc = json.loads(text)
    L = doc["length"]
    tr = np.zeros((L + 1, 3, 3))
    for j, bundle in enumerate(doc["transitions"]):
        tr[j, M] = bundle["match"]
        tr[j, I] = bundle["insert"]
        tr[j, D] = bundle["delete"]
    p = ProfileHmm(
        alphabet=tuple(doc["alphabet"]),
        match_emit=np.array(doc["match_emit"], dtype=float),
        insert_emit=np.array(doc["insert_emit"], dtype=float),
        trans=tr,
    )
    if p.length != L:
        raise ValueError("declared length does not match match_emit shape")
    return p
