"""Feed-forward sigmoid networks over sparse binary sequence windows.

Architecture: fully connected layers with a fixed bias unit (1.0 appended
to every layer input), sigmoid activation everywhere, trained by gradient
descent on half the summed squared error, so the output delta is
(y - t) * y * (1 - y).  The default network is a single-layer perceptron
(no hidden layers).

Windowing: a size-n window (n odd) slides over the observed string; each
position contributes one training example whose input is the n symbol
codes around it (all-zero padding past the ends) and whose target is the
center position's hidden-symbol code.  With the 5-bit residue and 3-bit
structure codes this gives 65 inputs / 3 outputs when structure is hidden
and 39 inputs / 5 outputs when sequence is hidden (window 13).

Training order is literal: for every pair in corpus order and every
position in sequence order, the same example is presented
``iterations_per_position`` times (default 200) before moving on.

Decoding: a real-valued output vector maps to the alphabet symbol whose
binary code is nearest in Euclidean distance, ties going to the lowest
alphabet index (an all-0.5 output therefore decodes to index 0).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .dataset import encode_symbol_binary, pad_code
from .errors import EmptyTrainingSet, ShapeMismatch
from .seqstruct import ModelDirection


def _sigmoid(z: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        return 1.0 / (1.0 + np.exp(-z))


@dataclass
class FeedForwardNet:
    """Weights per non-input layer, shape (n_units, n_prev + 1); last column is bias."""

    layer_sizes: tuple[int, ...]
    weights: list[np.ndarray]

    def __post_init__(self):
        self.layer_sizes = tuple(int(s) for s in self.layer_sizes)
        if len(self.layer_sizes) < 2 or any(s < 1 for s in self.layer_sizes):
            raise ValueError("need at least input and output layers of size >= 1")
        if len(self.weights) != len(self.layer_sizes) - 1:
            raise ValueError("one weight matrix per non-input layer")
        self.weights = [np.asarray(w, dtype=float) for w in self.weights]
        for k, w in enumerate(self.weights):
            want = (self.layer_sizes[k + 1], self.layer_sizes[k] + 1)
            if w.shape != want:
                raise ValueError(f"weights[{k}] must be {want}, got {w.shape}")

    @property
    def n_inputs(self) -> int:
        return self.layer_sizes[0]

    @property
    def n_outputs(self) -> int:
        return self.layer_sizes[-1]


def init_net(layer_sizes, seed: int | None = None, init_scale: float = 0.1) -> FeedForwardNet:
    """Weights drawn uniformly from [-init_scale, +init_scale]."""
    rng = np.random.default_rng(seed)
    sizes = tuple(layer_sizes)
    weights = [rng.uniform(-init_scale, init_scale, size=(sizes[k + 1], sizes[k] + 1))
               for k in range(len(sizes) - 1)]
    return FeedForwardNet(sizes, weights)


def net_forward(net: FeedForwardNet, x) -> tuple[np.ndarray, list[np.ndarray]]:
    """Output vector plus per-layer activations (activations[0] is the input)."""
    a = np.asarray(x, dtype=float)
    if a.shape != (net.n_inputs,):
        raise ShapeMismatch(f"input must have shape ({net.n_inputs},), got {a.shape}")
    acts = [a]
    for w in net.weights:
        a = _sigmoid(w[:, :-1] @ a + w[:, -1])
        acts.append(a)
    return a, acts


def backprop_step(net: FeedForwardNet, x, target, learning_rate: float) -> float:
    """One gradient-descent update on a single example; returns pre-update error.

    Error is 0.5 * sum((y - t)^2); with learning_rate 0 the net is unchanged.
    """
    t = np.asarray(target, dtype=float)
    y, acts = net_forward(net, x)
    if t.shape != y.shape:
        raise ShapeMismatch(f"target must have shape {y.shape}, got {t.shape}")
    err = 0.5 * float(((y - t) ** 2).sum())
    if learning_rate == 0.0:
        return err
    delta = (y - t) * y * (1.0 - y)
    for k in range(len(net.weights) - 1, -1, -1):
        prev = acts[k]
        w = net.weights[k]
        if k > 0:
            delta_prev = (w[:, :-1].T @ delta) * prev * (1.0 - prev)
        w[:, :-1] -= learning_rate * np.outer(delta, prev)
        w[:, -1] -= learning_rate * delta
        if k > 0:
            delta = delta_prev
    return err


@dataclass(frozen=True)
class WindowConfig:
    """Odd window size plus the direction that fixes input/output codes."""

    direction: ModelDirection
    size: int = 13

    def __post_init__(self):
        if self.size < 1 or self.size % 2 == 0:
            raise ValueError("window size must be odd and >= 1")

    @property
    def in_alphabet(self):
        return self.direction.observed_alphabet

    @property
    def out_alphabet(self):
        return self.direction.hidden_alphabet

    @property
    def n_inputs(self) -> int:
        return self.size * self.in_alphabet.code_width

    @property
    def n_outputs(self) -> int:
        return self.out_alphabet.code_width


def _code_matrix(alphabet) -> np.ndarray:
    return np.array([encode_symbol_binary(ch, alphabet) for ch in alphabet.symbols],
                    dtype=float)


def encode_windows(observed: str, cfg: WindowConfig) -> np.ndarray:
    """One input row per position: the coded size-n window centered there."""
    width = cfg.in_alphabet.code_width
    pad = np.array(pad_code(width), dtype=float)
    codes = _code_matrix(cfg.in_alphabet)
    coded = np.array([codes[cfg.in_alphabet.index(ch)] for ch in observed])
    half = cfg.size // 2
    T = len(observed)
    X = np.zeros((T, cfg.n_inputs))
    for t in range(T):
        cells = []
        for off in range(-half, half + 1):
            u = t + off
            cells.append(coded[u] if 0 <= u < T else pad)
        X[t] = np.concatenate(cells)
    return X


def build_windows(pair, cfg: WindowConfig) -> tuple[np.ndarray, np.ndarray]:
    """(inputs, targets) for one labeled pair under the window config."""
    hidden, observed = cfg.direction.split_pair(pair)
    X = encode_windows(observed, cfg)
    out_codes = _code_matrix(cfg.out_alphabet)
    Y = np.array([out_codes[cfg.out_alphabet.index(ch)] for ch in hidden])
    return X, Y


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.1
    iterations_per_position: int = 200
    epochs: int = 1
    seed: int = 0
    init_scale: float = 0.1
    hidden: tuple[int, ...] = ()
    shuffled: bool = False

    def __post_init__(self):
        if self.iterations_per_position < 0 or self.epochs < 0:
            raise ValueError("iterations_per_position and epochs must be >= 0")


def train_ann(pairs, window: WindowConfig, cfg: TrainConfig = TrainConfig()) -> FeedForwardNet:
    """Train a fresh net over the pairs; deterministic for a given seed.

    Default order is literal: each position's example is presented
    ``iterations_per_position`` times in a row.  ``shuffled`` replaces that
    with the same number of full passes over all examples, each pass in a
    fresh random order (same total update count, for experimentation).
    """
    pairs = list(pairs)
    if not pairs:
        raise EmptyTrainingSet("train_ann needs at least one pair")
    sizes = (window.n_inputs, *cfg.hidden, window.n_outputs)
    net = init_net(sizes, seed=cfg.seed, init_scale=cfg.init_scale)
    if cfg.shuffled:
        built = [build_windows(pair, window) for pair in pairs]
        X = np.concatenate([x for x, _ in built])
        Y = np.concatenate([y for _, y in built])
        order = np.arange(X.shape[0])
        rng = np.random.default_rng([cfg.seed, 1])
        for _ in range(cfg.epochs):
            for _ in range(cfg.iterations_per_position):
                rng.shuffle(order)
                for t in order:
                    backprop_step(net, X[t], Y[t], cfg.learning_rate)
        return net
    for _ in range(cfg.epochs):
        for pair in pairs:
            X, Y = build_windows(pair, window)
            for t in range(X.shape[0]):
                x, y = X[t], Y[t]
                for _ in range(cfg.iterations_per_position):
                    backprop_step(net, x, y, cfg.learning_rate)
    return net


def decode_output(vec, alphabet) -> str:
    """Symbol whose code is nearest in Euclidean distance (ties: lowest index)."""
    codes = _code_matrix(alphabet)
    d = ((codes - np.asarray(vec, dtype=float)) ** 2).sum(axis=1)
    return alphabet.symbols[int(np.argmin(d))]


def predict_ann(net: FeedForwardNet, observed: str, window: WindowConfig) -> str:
    """Predicted hidden string: forward pass + nearest-code decode per position."""
    X = encode_windows(observed, window)
    out = []
    for t in range(X.shape[0]):
        y, _ = net_forward(net, X[t])
        out.append(decode_output(y, window.out_alphabet))
    return "".join(out)


# ---------------------------------------------------------------------------
# JSON round-trip
# ---------------------------------------------------------------------------

def net_to_json(net: FeedForwardNet, window: WindowConfig, cfg: TrainConfig | None = None) -> str:
    doc = {
        "layer_sizes": list(net.layer_sizes),
        "weights": [w.tolist() for w in net.weights],
        "window_size": window.size,
        "direction": window.direction.value,
    }
    if cfg is not None:
        doc["train_config"] = {
            "learning_rate": cfg.learning_rate,
            "iterations_per_position": cfg.iterations_per_position,
            "epochs": cfg.epochs,
            "seed": cfg.seed,
            "init_scale": cfg.init_scale,
            "hidden": list(cfg.hidden),
            "shuffled": cfg.shuffled,
        }
    return json.dumps(doc, indent=2)


def net_from_json(text: str) -> tuple[FeedForwardNet, WindowConfig]:
    doc = json.loads(text)
    net = FeedForwardNet(tuple(doc["layer_sizes"]), [np.array(w) for w in doc["weights"]])
    window = WindowConfig(ModelDirection.parse(doc["direction"]), doc["window_size"])
    if net.n_inputs != window.n_inputs or net.n_outputs != window.n_outputs:
        raise ValueError("net shape does not match window config")
    return net, window
