"""Independent oracles for the test suite.

Everything here recomputes quantities from first principles (explicit path
enumeration, exact rational arithmetic, finite differences) without calling
the package's own recursions, so agreement is evidence rather than tautology.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np


# ---------------------------------------------------------------------------
# Flat-HMM path enumeration
# ---------------------------------------------------------------------------

def all_paths(n_states: int, length: int) -> np.ndarray:
    """Every state path of the given length, one row each, lexicographic order."""
    grids = np.meshgrid(*([np.arange(n_states)] * length), indexing="ij")
    return np.stack(grids, axis=-1).reshape(-1, length)


def path_joint_probs(pi, trans, emit, obs) -> tuple[np.ndarray, np.ndarray]:
    """(paths, joint probabilities) over every path for the observation."""
    pi = np.asarray(pi, dtype=float)
    trans = np.asarray(trans, dtype=float)
    emit = np.asarray(emit, dtype=float)
    o = np.asarray(obs, dtype=int)
    paths = all_paths(pi.shape[0], len(o))
    p = pi[paths[:, 0]] * emit[paths[:, 0], o[0]]
    for t in range(1, len(o)):
        p = p * trans[paths[:, t - 1], paths[:, t]] * emit[paths[:, t], o[t]]
    return paths, p


def enum_seq_prob(pi, trans, emit, obs) -> float:
    """P(observations) as the plain sum over all path joint probabilities."""
    _, p = path_joint_probs(pi, trans, emit, obs)
    return float(p.sum())


def enum_gamma(pi, trans, emit, obs) -> np.ndarray:
    """State posteriors per position, accumulated path by path."""
    paths, p = path_joint_probs(pi, trans, emit, obs)
    T = paths.shape[1]
    n = np.asarray(pi).shape[0]
    g = np.zeros((T, n))
    for t in range(T):
        np.add.at(g, (t, paths[:, t]), p)
    total = p.sum()
    if total <= 0:
        raise ZeroDivisionError("observation has zero probability")
    return g / total


def enum_best_path(pi, trans, emit, obs, rel_tol: float = 1e-12):
    """(max joint probability, lexicographically least argmax path).

    Paths within rel_tol of the maximum count as ties; enumeration order is
    lexicographic, so the first qualifying row is the least.
    """
    paths, p = path_joint_probs(pi, trans, emit, obs)
    best = float(p.max())
    tied = np.flatnonzero(p >= best * (1.0 - rel_tol))
    return best, [int(s) for s in paths[tied[0]]]


# ---------------------------------------------------------------------------
# Profile-HMM path enumeration (depth-first over the state graph)
# ---------------------------------------------------------------------------

def profile_paths(length, match_emit, insert_emit, trans, x):
    """All complete Begin-to-End paths emitting exactly x, with probabilities.

    States are ('M', j) for j = 0..L (j = 0 is the silent Begin), ('I', j)
    for j = 0..L, and ('D', j) for j = 1..L; End is reached from column L
    through the bundle's match slot.  Yields (steps, prob) where steps is the
    visited state list excluding Begin and End.
    """
    L = length
    match_emit = np.asarray(match_emit, dtype=float)
    insert_emit = np.asarray(insert_emit, dtype=float)
    trans = np.asarray(trans, dtype=float)
    x = list(x)
    m = len(x)
    kind_index = {"M": 0, "I": 1, "D": 2}
    out = []

    def walk(kind, j, i, prob, steps):
        if prob == 0.0:
            return
        if kind == "END":
            if i == m:
                out.append((list(steps), prob))
            return
        if kind == "M" and j > 0:
            if i >= m:
                return
            prob *= match_emit[j - 1, x[i]]
            i += 1
            if prob == 0.0:
                return
        elif kind == "I":
            if i >= m:
                return
            prob *= insert_emit[j, x[i]]
            i += 1
            if prob == 0.0:
                return
        if kind != "M" or j > 0:
            steps = steps + [(kind, j)]
        row = trans[j, kind_index[kind]]
        if j == L:
            walk("END", L + 1, i, prob * row[0], steps)
        else:
            walk("M", j + 1, i, prob * row[0], steps)
            walk("D", j + 1, i, prob * row[2], steps)
        walk("I", j, i, prob * row[1], steps)

    walk("M", 0, 0, 1.0, [])
    return out


def enum_profile_prob(length, match_emit, insert_emit, trans, x) -> float:
    return float(sum(p for _, p in
                     profile_paths(length, match_emit, insert_emit, trans, x)))


def enum_profile_counts(length, n_symbols, match_emit, insert_emit, trans, x):
    """Posterior-weighted event counts from explicit path enumeration.

    Returns (match_counts (L, K), insert_counts (L+1, K), transition_counts
    (L+1, 3, 3)); transitions into End are tallied in the match slot of the
    final column, mirroring the bundle layout.
    """
    paths = profile_paths(length, match_emit, insert_emit, trans, x)
    total = sum(p for _, p in paths)
    if total <= 0:
        raise ZeroDivisionError("sequence has zero probability")
    kind_index = {"M": 0, "I": 1, "D": 2}
    em = np.zeros((length, n_symbols))
    ie = np.zeros((length + 1, n_symbols))
    tr = np.zeros((length + 1, 3, 3))
    x = list(x)
    for steps, p in paths:
        w = p / total
        i = 0
        for kind, j in steps:
            if kind == "M":
                em[j - 1, x[i]] += w
                i += 1
            elif kind == "I":
                ie[j, x[i]] += w
                i += 1
        full = [("M", 0)] + steps + [("M", length + 1)]
        for (k1, j1), (k2, j2) in zip(full, full[1:]):
            tr[j1, kind_index[k1], kind_index[k2] if j2 == j1 else
               (0 if k2 == "M" else 2)] += w
    return em, ie, tr


# ---------------------------------------------------------------------------
# Exact rational counting
# ---------------------------------------------------------------------------

def recount_ratios(pairs, hidden_symbols, observed_symbols, pseudocount=0):
    """Start/transition/emission probabilities as exact Fractions.

    pairs are (hidden string, observed string) tuples; counting matches the
    estimator's definition (within-pair adjacency only) but runs on Python
    integers and Fractions so every ratio is exact.
    """
    hi = {c: k for k, c in enumerate(hidden_symbols)}
    oi = {c: k for k, c in enumerate(observed_symbols)}
    n, m = len(hidden_symbols), len(observed_symbols)
    start = [0] * n
    trans = [[0] * n for _ in range(n)]
    emit = [[0] * m for _ in range(n)]
    for hidden, observed in pairs:
        h = [hi[c] for c in hidden]
        o = [oi[c] for c in observed]
        start[h[0]] += 1
        for a, b in zip(h, h[1:]):
            trans[a][b] += 1
        for a, b in zip(h, o):
            emit[a][b] += 1

    # exact for integer and dyadic pseudocounts, which is all the tests use
    pc = Fraction(pseudocount)

    def rows(counts):
        out = []
        for row in counts:
            tot = sum(row) + pc * len(row)
            if tot == 0:
                out.append([Fraction(1, len(row))] * len(row))
            else:
                out.append([(c + pc) / tot for c in row])
        return out

    return rows([start])[0], rows(trans), rows(emit)


# ---------------------------------------------------------------------------
# Network oracles
# ---------------------------------------------------------------------------

def chain_error(weights, x, target) -> float:
    """0.5 * sum((output - target)^2) via a plain affine + sigmoid chain."""
    a = np.asarray(x, dtype=float)
    for w in weights:
        w = np.asarray(w, dtype=float)
        a = 1.0 / (1.0 + np.exp(-(w[:, :-1] @ a + w[:, -1])))
    return 0.5 * float(((a - np.asarray(target, dtype=float)) ** 2).sum())


def fd_gradients(weights, x, target, h: float = 1e-5):
    """Central finite-difference gradient of chain_error per weight matrix."""
    grads = []
    for k, w in enumerate(weights):
        g = np.zeros_like(w)
        for idx in np.ndindex(w.shape):
            perturbed = [wk.copy() for wk in weights]
            perturbed[k][idx] = w[idx] + h
            up = chain_error(perturbed, x, target)
            perturbed[k][idx] = w[idx] - h
            down = chain_error(perturbed, x, target)
            g[idx] = (up - down) / (2.0 * h)
        grads.append(g)
    return grads


# ---------------------------------------------------------------------------
# Random instance factories
# ---------------------------------------------------------------------------

def random_stochastic(rng, shape) -> np.ndarray:
    """Row-stochastic matrix with strictly positive entries."""
    raw = rng.uniform(0.05, 1.0, size=shape)
    return raw / raw.sum(axis=-1, keepdims=True)


def random_hmm_params(rng, n_states, n_symbols):
    pi = random_stochastic(rng, (n_states,))
    trans = random_stochastic(rng, (n_states, n_states))
    emit = random_stochastic(rng, (n_states, n_symbols))
    return pi, trans, emit


def random_profile_params(rng, length, n_symbols):
    """Profile parameter arrays honoring the structural zeros.

    Column 0 has no delete source; the final column has no delete target.
    """
    L = length
    match_emit = random_stochastic(rng, (L, n_symbols))
    insert_emit = random_stochastic(rng, (L + 1, n_symbols))
    trans = rng.uniform(0.05, 1.0, size=(L + 1, 3, 3))
    trans[0, 2, :] = 0.0
    trans[L, :, 2] = 0.0
    sums = trans.sum(axis=2, keepdims=True)
    sums[sums == 0.0] = 1.0
    trans /= sums
    trans[0, 2, :] = 0.0
    return match_emit, insert_emit, trans
