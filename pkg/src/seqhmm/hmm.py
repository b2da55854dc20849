"""Discrete hidden Markov models: likelihood, decoding, sampling, EM.

A model is the triple (pi, trans, emit) over N hidden states and M observed
symbols.  All observation sequences are 0-based index vectors (see
:func:`seqhmm.dataset.sequence_to_index_vector`).

Numerics: the forward pass normalizes each time step and accumulates
log scale(t), where scale(t) = P(o_t | o_1..o_{t-1}), so log-likelihood is
the sum of the log normalizers.  The backward pass, when given the forward
normalizers, divides step t by scale(t+1); with that convention
sum_i alpha_hat[t, i] * beta_hat[t, i] == 1 at every t and the state
posterior is their renormalized product.  Viterbi runs in log space with
log 0 = -inf.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AllPathsZero,
    DegenerateModelWarning,
    InstanceTooLarge,
    ZeroProbabilityObservation,
)

_ROW_TOL = 1e-9


def _check_rows(name: str, m: np.ndarray):
    if np.any(m < 0):
        raise ValueError(f"{name} has negative entries")
    if not np.allclose(m.sum(axis=-1), 1.0, rtol=0, atol=_ROW_TOL):
        raise ValueError(f"{name} rows must sum to 1 within {_ROW_TOL}")


@dataclass
class DiscreteHmm:
    """Model parameters: start distribution, transition and emission matrices."""

    pi: np.ndarray    # (N,)
    trans: np.ndarray  # (N, N), row i -> next-state distribution
    emit: np.ndarray   # (N, M), row i -> symbol distribution
    state_labels: tuple[str, ...] | None = None
    symbol_labels: tuple[str, ...] | None = None

    def __post_init__(self):
        self.pi = np.asarray(self.pi, dtype=float)
        self.trans = np.asarray(self.trans, dtype=float)
        self.emit = np.asarray(self.emit, dtype=float)
        n = self.pi.shape[0]
        if self.trans.shape != (n, n):
            raise ValueError(f"trans must be ({n}, {n}), got {self.trans.shape}")
        if self.emit.ndim != 2 or self.emit.shape[0] != n:
            raise ValueError(f"emit must have {n} rows, got {self.emit.shape}")
        _check_rows("pi", self.pi)
        _check_rows("trans", self.trans)
        _check_rows("emit", self.emit)
        if self.state_labels is not None and len(self.state_labels) != n:
            raise ValueError("state_labels length mismatch")
        if self.symbol_labels is not None and len(self.symbol_labels) != self.n_symbols:
            raise ValueError("symbol_labels length mismatch")

    @property
    def n_states(self) -> int:
        return self.pi.shape[0]

    @property
    def n_symbols(self) -> int:
        return self.emit.shape[1]


@dataclass
class PosteriorTable:
    """Forward/backward working tables for one observation sequence.

    ``alpha`` rows are normalized when scaled; ``scale[t]`` holds the
    pre-normalization mass.  ``beta`` and ``gamma`` are filled by
    :func:`posterior`.  ``zero_at`` records the first position where all
    forward mass vanished (loglik is then -inf).
    """

    alpha: np.ndarray
    scale: np.ndarray
    loglik: float
    beta: np.ndarray | None = None
    gamma: np.ndarray | None = None
    zero_at: int | None = None


@dataclass
class ViterbiResult:
    path: np.ndarray        # (T,) state indices
    log_prob: float
    delta: np.ndarray       # (T, N) best log joint prob ending in each state
    backpointers: np.ndarray  # (T, N) argmax predecessors (row 0 unused)


@dataclass
class EmReport:
    """Outcome of one Baum-Welch run."""

    loglik_trace: tuple[float, ...]
    iterations: int
    converged: bool
    final_model: DiscreteHmm
    degenerate_states: tuple[int, ...] = ()


def _obs_array(model: DiscreteHmm, obs) -> np.ndarray:
    o = np.asarray(obs, dtype=np.int64)
    if o.ndim != 1 or o.shape[0] < 1:
        raise ValueError("obs must be a non-empty 1-D index vector")
    if o.min() < 0 or o.max() >= model.n_symbols:
        raise ValueError("obs contains symbol indices outside [0, n_symbols)")
    return o


def forward(model: DiscreteHmm, obs, scaled: bool = True) -> PosteriorTable:
    """Forward pass; returns alpha, per-step normalizers, and log-likelihood.

    Scaled mode keeps every alpha row summing to 1 and reports
    loglik = sum_t log scale(t).  If the mass at some step is exactly 0 the
    table carries loglik = -inf and ``zero_at`` marks the offending step.
    """
    o = _obs_array(model, obs)
    T, n = o.shape[0], model.n_states
    alpha = np.zeros((T, n))
    scale = np.ones(T)
    zero_at = None
    row = model.pi * model.emit[:, o[0]]
    for t in range(T):
        if t > 0:
            row = (alpha[t - 1] @ model.trans) * model.emit[:, o[t]]
        mass = row.sum()
        if mass == 0.0:
            zero_at = t
            scale[t:] = 0.0
            break
        if scaled:
            scale[t] = mass
            alpha[t] = row / mass
        else:
            alpha[t] = row
    if zero_at is not None:
        loglik = -np.inf
    elif scaled:
        loglik = float(np.log(scale).sum())
    else:
        total = alpha[-1].sum()
        loglik = float(np.log(total)) if total > 0 else -np.inf
    return PosteriorTable(alpha=alpha, scale=scale, loglik=loglik, zero_at=zero_at)


def backward(model: DiscreteHmm, obs, scale: np.ndarray | None = None) -> np.ndarray:
    """Backward pass.  With ``scale`` from a scaled forward run, step t is
    divided by scale(t+1), keeping magnitudes O(1); without it the exact
    (unscaled) beta values are returned.
    """
    o = _obs_array(model, obs)
    T, n = o.shape[0], model.n_states
    if scale is not None and len(scale) != T:
        raise ValueError("scale length must equal len(obs)")
    beta = np.zeros((T, n))
    beta[T - 1] = 1.0
    for t in range(T - 2, -1, -1):
        row = model.trans @ (model.emit[:, o[t + 1]] * beta[t + 1])
        if scale is not None:
            s = scale[t + 1]
            row = row / s if s > 0 else np.zeros(n)
        beta[t] = row
    return beta


def posterior(model: DiscreteHmm, obs) -> PosteriorTable:
    """Scaled forward-backward with per-state posteriors gamma (rows sum to 1)."""
    table = forward(model, obs, scaled=True)
    if table.zero_at is not None:
        raise ZeroProbabilityObservation(table.zero_at)
    table.beta = backward(model, obs, scale=table.scale)
    g = table.alpha * table.beta
    g /= g.sum(axis=1, keepdims=True)
    table.gamma = g
    return table


def decode_posterior(model: DiscreteHmm, obs) -> np.ndarray:
    """Most probable state per position (argmax of gamma, ties -> lowest index)."""
    return np.argmax(posterior(model, obs).gamma, axis=1)


def viterbi(model: DiscreteHmm, obs) -> ViterbiResult:
    """Single best state path in log space.

    When several paths attain the maximum joint probability the
    lexicographically least one is returned (ties at every choice point go
    to the lowest state index).
    """
    o = _obs_array(model, obs)
    T, n = o.shape[0], model.n_states
    with np.errstate(divide="ignore"):
        lp = np.log(model.pi)
        la = np.log(model.trans)
        lb = np.log(model.emit)

    delta = np.full((T, n), -np.inf)
    psi = np.zeros((T, n), dtype=np.int64)
    delta[0] = lp + lb[:, o[0]]
    for t in range(1, T):
        cand = delta[t - 1][:, None] + la  # (from, to)
        psi[t] = np.argmax(cand, axis=0)
        delta[t] = cand[psi[t], np.arange(n)] + lb[:, o[t]]
    log_prob = float(delta[T - 1].max())
    if log_prob == -np.inf:
        raise AllPathsZero("no state path has positive probability")

    # Best achievable completion from each (t, state); selecting forward
    # against it yields the lexicographically least optimal path, which a
    # plain backpointer walk does not guarantee.
    suffix = np.zeros((T, n))
    for t in range(T - 2, -1, -1):
        suffix[t] = np.max(la + (lb[:, o[t + 1]] + suffix[t + 1])[None, :], axis=1)

    path = np.zeros(T, dtype=np.int64)
    tol = 1e-10 * max(1.0, abs(log_prob))
    scores = lp + lb[:, o[0]] + suffix[0]
    path[0] = int(np.flatnonzero(scores >= scores.max() - tol)[0])
    for t in range(1, T):
        scores = la[path[t - 1]] + lb[:, o[t]] + suffix[t]
        path[t] = int(np.flatnonzero(scores >= scores.max() - tol)[0])
    return ViterbiResult(path=path, log_prob=log_prob, delta=delta, backpointers=psi)


def sample(model: DiscreteHmm, T: int, n_sequences: int = 1, seed: int | None = None):
    """Draw hidden paths and observations; deterministic for a given seed."""
    if T < 1 or n_sequences < 1:
        raise ValueError("T and n_sequences must be >= 1")
    rng = np.random.default_rng(seed)
    states = np.zeros((n_sequences, T), dtype=np.int64)
    obs = np.zeros((n_sequences, T), dtype=np.int64)
    n, m = model.n_states, model.n_symbols
    for k in range(n_sequences):
        s = rng.choice(n, p=model.pi)
        for t in range(T):
            if t > 0:
                s = rng.choice(n, p=model.trans[s])
            states[k, t] = s
            obs[k, t] = rng.choice(m, p=model.emit[s])
    return states, obs


def brute_force_prob(model: DiscreteHmm, obs, limit: int = 10**7) -> float:
    """Exact P(O | model) by summing the probability of every hidden path.

    Keeps one product per path (no forward-style marginalization), so it is
    an independent check on :func:`forward`.  Refuses instances with more
    than ``limit`` paths.
    """
    o = _obs_array(model, obs)
    T, n = o.shape[0], model.n_states
    if n ** T > limit:
        raise InstanceTooLarge(f"{n}**{T} paths exceed limit {limit}")
    probs = model.pi * model.emit[:, o[0]]  # one entry per length-1 path
    for t in range(1, T):
        # expand every path by every next state; path index is base-n, so the
        # last state of partial path k is k % n
        last = np.arange(probs.shape[0]) % n
        probs = (probs[:, None] * model.trans[last, :] * model.emit[None, :, o[t]]).ravel()
    return float(probs.sum())


def baum_welch(
    model: DiscreteHmm,
    sequences,
    max_iter: int = 15,
    thresh: float = 1e-4,
    pseudocount: float = 0.0,
) -> EmReport:
    """Baum-Welch re-estimation over one or more observation sequences.

    The log-likelihood trace records the value under the parameters entering
    each iteration (so it is non-decreasing).  ``pseudocount`` seeds every
    emission count cell.  Stops after ``max_iter`` iterations or when
    |LL - LL_prev| / (1 + |LL|) < thresh.  States with zero expected mass
    get uniform rows and a :class:`DegenerateModelWarning`.
    """
    seqs = [_obs_array(model, s) for s in (sequences if isinstance(sequences, (list, tuple)) else [sequences])]
    n, m = model.n_states, model.n_symbols
    pi, trans, emit = model.pi.copy(), model.trans.copy(), model.emit.copy()
    trace: list[float] = []
    converged = False
    degenerate: set[int] = set()
    it = 0
    while it < max_iter and not converged:
        cur = DiscreteHmm(pi, trans, emit, model.state_labels, model.symbol_labels)
        visits1 = np.zeros(n)
        num_trans = np.zeros((n, n))
        num_emit = np.full((n, m), float(pseudocount))
        total_ll = 0.0
        for o in seqs:
            table = forward(cur, o, scaled=True)
            if table.zero_at is not None:
                raise ZeroProbabilityObservation(table.zero_at)
            beta = backward(cur, o, scale=table.scale)
            g = table.alpha * beta
            g /= g.sum(axis=1, keepdims=True)
            total_ll += table.loglik
            visits1 += g[0]
            np.add.at(num_emit.T, o, g)
            for t in range(len(o) - 1):
                w = table.alpha[t][:, None] * trans * (emit[:, o[t + 1]] * beta[t + 1])[None, :]
                s = w.sum()
                if s > 0:
                    num_trans += w / s
        trace.append(total_ll)

        pi = visits1 / visits1.sum()
        for name, counts in (("trans", num_trans), ("emit", num_emit)):
            sums = counts.sum(axis=1)
            dead = np.flatnonzero(sums == 0)
            for i in dead:
                counts[i] = 1.0
                sums[i] = counts.shape[1]
                degenerate.add(int(i))
                warnings.warn(
                    f"state {i} has zero expected {name} mass; row reset to uniform",
                    DegenerateModelWarning, stacklevel=2,
                )
            counts /= sums[:, None]
        trans, emit = num_trans, num_emit

        it += 1
        if len(trace) >= 2:
            converged = abs(trace[-1] - trace[-2]) / (1.0 + abs(trace[-1])) < thresh

    final = DiscreteHmm(pi, trans, emit, model.state_labels, model.symbol_labels)
    return EmReport(
        loglik_trace=tuple(trace),
        iterations=it,
        converged=converged,
        final_model=final,
        degenerate_states=tuple(sorted(degenerate)),
    )


def init_model(
    n_states: int,
    n_symbols: int,
    seed: int | None = None,
    kind: str = "diagonal",
    dominance: float = 0.67,
) -> DiscreteHmm:
    """Starting points for EM: a diagonal-dominant chain or random rows.

    Diagonal mode puts ``dominance`` on each self-transition and spreads the
    rest evenly; start and emission rows are drawn uniform-random and
    normalized.  Random mode draws all rows uniformly and normalizes.
    Identical seeds give identical models.
    """
    if n_states < 1 or n_symbols < 1:
        raise ValueError("n_states and n_symbols must be >= 1")
    if not 0.0 < dominance < 1.0:
        raise ValueError("dominance must be in (0, 1)")
    rng = np.random.default_rng(seed)

    def draw(shape):
        r = rng.random(shape) + 1e-3
        return r / r.sum(axis=-1, keepdims=True)

    if kind == "diagonal":
        if n_states == 1:
            trans = np.ones((1, 1))
        else:
            off = (1.0 - dominance) / (n_states - 1)
            trans = np.full((n_states, n_states), off)
            np.fill_diagonal(trans, dominance)
        pi = draw(n_states)
        emit = draw((n_states, n_symbols))
    elif kind == "random":
        pi = draw(n_states)
        trans = draw((n_states, n_states))
        emit = draw((n_states, n_symbols))
    else:
        raise ValueError(f"unknown init kind {kind!r}")
    return DiscreteHmm(pi, trans, emit)


# ---------------------------------------------------------------------------
# JSON round-trip
# ---------------------------------------------------------------------------

def model_to_json(model: DiscreteHmm) -> str:
    doc = {
        "n_states": model.n_states,
        "n_symbols": model.n_symbols,
        "pi": model.pi.tolist(),
        "trans": model.trans.tolist(),
        "emit": model.emit.tolist(),
        "state_labels": list(model.state_labels) if model.state_labels else None,
        "symbol_labels": list(model.symbol_labels) if model.symbol_labels else None,
    }
    return json.dumps(doc, indent=2)


def model_from_json(text: str) -> DiscreteHmm:
    doc = json.loads(text)
    model = DiscreteHmm(
        pi=np.array(doc["pi"], dtype=float),
        trans=np.array(doc["trans"], dtype=float),
        emit=np.array(doc["emit"], dtype=float),
        state_labels=tuple(doc["state_labels"]) if doc.get("state_labels") else None,
        symbol_labels=tuple(doc["symbol_labels"]) if doc.get("symbol_labels") else None,
    )
    if model.n_states != doc["n_states"] or model.n_symbols != doc["n_symbols"]:
        raise ValueError("declared shape does not match matrix shapes")
    return model


def em_report_to_json(report: EmReport) -> str:
    doc = {
        "loglik_trace": list(report.loglik_trace),
        "iterations": report.iterations,
        "converged": report.converged,
        "degenerate_states": list(report.degenerate_states),
        "final_model": json.loads(model_to_json(report.final_model)),
    }
    return json.dumps(doc, indent=2)
