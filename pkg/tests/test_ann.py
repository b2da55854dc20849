import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from seqhmm import ann
from seqhmm.dataset import LabeledPair, RESIDUES, STRUCTURE_CLASSES
from seqhmm.errors import EmptyTrainingSet, ShapeMismatch
from seqhmm.seqstruct import ModelDirection, q3_score

M1 = ModelDirection.STRUCTURE_HIDDEN
M2 = ModelDirection.SEQUENCE_HIDDEN


# ---------------------------------------------------------------------------
# Net construction and forward pass
# ---------------------------------------------------------------------------

def test_net_shape_validation():
    with pytest.raises(ValueError):
        ann.FeedForwardNet((3,), [])
    with pytest.raises(ValueError):
        ann.FeedForwardNet((3, 2), [np.zeros((2, 3))])  # bias column missing
    net = ann.FeedForwardNet((3, 2), [np.zeros((2, 4))])
    assert net.n_inputs == 3 and net.n_outputs == 2


def test_forward_zero_weights_gives_half():
    net = ann.FeedForwardNet((4, 3), [np.zeros((3, 5))])
    y, acts = ann.net_forward(net, [1.0, 0.0, 1.0, 0.0])
    assert np.allclose(y, 0.5)
    assert len(acts) == 2
    assert acts[0].tolist() == [1.0, 0.0, 1.0, 0.0]


def test_forward_bias_only_unit():
    w = np.array([[0.0, 2.0]])  # one input weight 0, bias 2
    net = ann.FeedForwardNet((1, 1), [w])
    y, _ = ann.net_forward(net, [123.0])
    assert y[0] == pytest.approx(1.0 / (1.0 + np.exp(-2.0)), rel=1e-15)


def test_forward_matches_plain_chain():
    net = ann.init_net((5, 4, 3), seed=2)
    x = np.random.default_rng(3).uniform(size=5)
    y, _ = ann.net_forward(net, x)
    a = x
    for w in net.weights:
        a = 1.0 / (1.0 + np.exp(-(w[:, :-1] @ a + w[:, -1])))
    assert np.allclose(y, a, atol=1e-12)


def test_forward_shape_mismatch():
    net = ann.init_net((4, 2), seed=0)
    with pytest.raises(ShapeMismatch):
        ann.net_forward(net, [1.0, 2.0])


def test_init_net_bounds_and_determinism():
    a = ann.init_net((6, 4, 2), seed=11, init_scale=0.05)
    b = ann.init_net((6, 4, 2), seed=11, init_scale=0.05)
    for wa, wb in zip(a.weights, b.weights):
        assert np.array_equal(wa, wb)
        assert np.abs(wa).max() <= 0.05


# ---------------------------------------------------------------------------
# Backprop
# ---------------------------------------------------------------------------

def test_backprop_zero_rate_returns_error_unchanged():
    net = ann.init_net((3, 2), seed=4)
    before = [w.copy() for w in net.weights]
    x = [1.0, 0.5, 0.0]
    t = [1.0, 0.0]
    y, _ = ann.net_forward(net, x)
    err = ann.backprop_step(net, x, t, 0.0)
    assert err == pytest.approx(0.5 * float(((y - np.array(t)) ** 2).sum()), rel=1e-15)
    for w, b in zip(net.weights, before):
        assert np.array_equal(w, b)


def test_backprop_target_shape_mismatch():
    net = ann.init_net((3, 2), seed=4)
    with pytest.raises(ShapeMismatch):
        ann.backprop_step(net, [0.0, 0.0, 0.0], [1.0], 0.1)


def test_backprop_gradient_matches_finite_differences():
    rng = np.random.default_rng(12)
    lr = 0.01
    worst = 0.0
    for trial in range(30):
        sizes = (int(rng.integers(2, 5)), int(rng.integers(2, 4)))
        if trial % 2:
            sizes = (sizes[0], int(rng.integers(2, 4)), sizes[1])
        net = ann.init_net(sizes, seed=trial, init_scale=0.5)
        before = [w.copy() for w in net.weights]
        x = rng.uniform(-1, 1, size=sizes[0])
        t = rng.integers(0, 2, size=sizes[-1]).astype(float)
        ann.backprop_step(net, x, t, lr)
        analytic = [(b - a) / lr for b, a in zip(before, net.weights)]
        fd = oracles.fd_gradients(before, x, t)
        for g, f in zip(analytic, fd):
            scale = max(1e-8, float(np.abs(f).max()))
            worst = max(worst, float(np.abs(g - f).max()) / scale)
    assert worst <= 1e-4


def test_backprop_single_pattern_error_decreases_to_zero():
    # saturation makes the squared error decay like C / steps at rate 0.5,
    # so the 1e-6 level arrives near step 251000 for this net
    net = ann.init_net((4, 2), seed=9)
    x = [1.0, 0.0, 1.0, 1.0]
    t = [1.0, 0.0]
    prev = np.inf
    for step in range(300000):
        err = ann.backprop_step(net, x, t, 0.5)
        assert err <= prev + 1e-12
        prev = err
        if err < 1e-6:
            break
    assert prev < 1e-6


def test_backprop_monotone_with_hidden_layer():
    rng = np.random.default_rng(31)
    for trial in range(5):
        net = ann.init_net((5, 3, 2), seed=trial)
        x = rng.uniform(-1, 1, size=5)
        t = rng.integers(0, 2, size=2).astype(float)
        prev = np.inf
        for _ in range(200):
            err = ann.backprop_step(net, x, t, 0.5)
            assert err <= prev + 1e-12
            prev = err


# ---------------------------------------------------------------------------
# Windows
# ---------------------------------------------------------------------------

def test_window_config_shapes():
    w1 = ann.WindowConfig(M1, 13)
    assert (w1.n_inputs, w1.n_outputs) == (65, 3)
    w2 = ann.WindowConfig(M2, 13)
    assert (w2.n_inputs, w2.n_outputs) == (39, 5)


def test_window_size_must_be_odd():
    with pytest.raises(ValueError):
        ann.WindowConfig(M1, 12)
    with pytest.raises(ValueError):
        ann.WindowConfig(M1, 0)


def test_build_windows_counts_one_example_per_position():
    pair = LabeledPair(1, "ACDEFGHIKL", "HHHHEEEETT")
    X, Y = ann.build_windows(pair, ann.WindowConfig(M1, 13))
    assert X.shape == (10, 65)
    assert Y.shape == (10, 3)


def test_build_windows_pads_singleton_with_zeros():
    pair = LabeledPair(1, "A", "H")
    X, Y = ann.build_windows(pair, ann.WindowConfig(M1, 13))
    assert X.shape == (1, 65)
    assert np.all(X[0, :30] == 0)              # six 5-bit pad codes
    assert X[0, 30:35].tolist() == [0, 0, 0, 0, 1]  # code of A at the center
    assert np.all(X[0, 35:] == 0)
    assert Y[0].tolist() == [0, 0, 1]          # code of H


def test_build_windows_model2_swaps_roles():
    pair = LabeledPair(1, "ACD", "HHE")
    X, Y = ann.build_windows(pair, ann.WindowConfig(M2, 3))
    assert X.shape == (3, 9)   # 3-bit structure codes in
    assert Y.shape == (3, 5)   # 5-bit residue codes out
    assert X[0, :3].tolist() == [0, 0, 0]      # left pad
    assert X[0, 3:6].tolist() == [0, 0, 1]     # H
    assert Y[0].tolist() == [0, 0, 0, 0, 1]    # A


def test_window_one_is_positionwise():
    pair = LabeledPair(1, "AC", "HE")
    X, Y = ann.build_windows(pair, ann.WindowConfig(M1, 1))
    assert X.shape == (2, 5)
    assert X[0].tolist() == [0, 0, 0, 0, 1]
    assert X[1].tolist() == [0, 0, 0, 1, 0]


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------

def test_train_step_count_is_positions_times_iterations(monkeypatch):
    calls = []
    real = ann.backprop_step

    def counting(net, x, t, lr):
        calls.append(1)
        return real(net, x, t, lr)

    monkeypatch.setattr(ann, "backprop_step", counting)
    seq = ("ACDE" * 10)[:40]
    stc = ("HHEE" * 10)[:40]
    pair = LabeledPair(1, seq, stc)
    cfg = ann.TrainConfig(iterations_per_position=200, epochs=1, seed=0)
    ann.train_ann([pair], ann.WindowConfig(M1, 13), cfg)
    assert len(calls) == 40 * 200


def test_train_zero_iterations_returns_initial_net():
    pair = LabeledPair(1, "ACDE", "HHEE")
    window = ann.WindowConfig(M1, 5)
    cfg = ann.TrainConfig(iterations_per_position=0, seed=3)
    net = ann.train_ann([pair], window, cfg)
    init = ann.init_net((window.n_inputs, window.n_outputs), seed=3)
    for w, b in zip(net.weights, init.weights):
        assert np.array_equal(w, b)


def test_train_deterministic_given_seed():
    pair = LabeledPair(1, "ACDEFG", "HHEETT")
    window = ann.WindowConfig(M1, 3)
    cfg = ann.TrainConfig(iterations_per_position=5, seed=21)
    a = ann.train_ann([pair], window, cfg)
    b = ann.train_ann([pair], window, cfg)
    for wa, wb in zip(a.weights, b.weights):
        assert np.array_equal(wa, wb)


def test_train_empty_corpus_raises():
    with pytest.raises(EmptyTrainingSet):
        ann.train_ann([], ann.WindowConfig(M1, 3), ann.TrainConfig())


def test_train_shuffled_mode_differs_but_is_deterministic():
    pairs = [LabeledPair(1, "ACDEFG", "HHEETT"), LabeledPair(2, "GFEDCA", "TTEEHH")]
    window = ann.WindowConfig(M1, 3)
    literal = ann.TrainConfig(iterations_per_position=4, seed=5)
    shuffled = ann.TrainConfig(iterations_per_position=4, seed=5, shuffled=True)
    lit = ann.train_ann(pairs, window, literal)
    sh1 = ann.train_ann(pairs, window, shuffled)
    sh2 = ann.train_ann(pairs, window, shuffled)
    for a, b in zip(sh1.weights, sh2.weights):
        assert np.array_equal(a, b)
    assert any(not np.array_equal(a, b) for a, b in zip(lit.weights, sh1.weights))


def test_train_separable_window_one_reaches_perfect_decode():
    # four residues with disjoint one-hot codes map to four structures, so a
    # single-layer net under the default budget must learn the lookup exactly
    pair = LabeledPair(1, "ACEI" * 10, "HGET" * 10)
    window = ann.WindowConfig(M1, 1)
    cfg = ann.TrainConfig(seed=0)
    net = ann.train_ann([pair], window, cfg)
    pred = ann.predict_ann(net, pair.sequence, window)
    assert q3_score(pred, pair.structure) == 100.0


# ---------------------------------------------------------------------------
# Decoding and prediction
# ---------------------------------------------------------------------------

def test_decode_output_nearest_code():
    from seqhmm.dataset import STRUCTURE_ALPHABET
    assert ann.decode_output([0.1, 0.1, 0.9], STRUCTURE_ALPHABET) == "H"
    assert ann.decode_output([0.9, 0.9, 0.1], STRUCTURE_ALPHABET) == "T"  # 110


def test_decode_output_all_half_ties_to_lowest_index():
    from seqhmm.dataset import RESIDUE_ALPHABET, STRUCTURE_ALPHABET
    assert ann.decode_output([0.5] * 3, STRUCTURE_ALPHABET) == "H"
    assert ann.decode_output([0.5] * 5, RESIDUE_ALPHABET) == "A"


def test_predict_rigged_net_outputs_constant_symbol():
    window = ann.WindowConfig(M1, 3)
    w = np.zeros((3, window.n_inputs + 1))
    w[:, -1] = [-20.0, -20.0, 20.0]  # saturate at the code of H
    net = ann.FeedForwardNet((window.n_inputs, 3), [w])
    assert ann.predict_ann(net, "ACDEFG", window) == "HHHHHH"


def test_predict_preserves_length_and_alphabet():
    rng = np.random.default_rng(8)
    window = ann.WindowConfig(M1, 13)
    net = ann.init_net((window.n_inputs, window.n_outputs), seed=1)
    for _ in range(50):
        n = int(rng.integers(1, 60))
        s = "".join(rng.choice(list(RESIDUES), size=n))
        pred = ann.predict_ann(net, s, window)
        assert len(pred) == n
        assert set(pred) <= set(STRUCTURE_CLASSES)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def test_net_json_roundtrip():
    window = ann.WindowConfig(M2, 5)
    cfg = ann.TrainConfig(seed=7, hidden=(4,))
    net = ann.init_net((window.n_inputs, 4, window.n_outputs), seed=7)
    text = ann.net_to_json(net, window, cfg)
    back, back_window = ann.net_from_json(text)
    assert back.layer_sizes == net.layer_sizes
    for a, b in zip(back.weights, net.weights):
        assert np.array_equal(a, b)
    assert back_window == window
    doc = json.loads(text)
    assert doc["direction"] == "model2"
    assert doc["train_config"]["hidden"] == [4]


def test_net_json_rejects_mismatched_window():
    window = ann.WindowConfig(M1, 3)
    net = ann.init_net((window.n_inputs, window.n_outputs), seed=0)
    doc = json.loads(ann.net_to_json(net, window))
    doc["window_size"] = 13
    with pytest.raises(ValueError):
        ann.net_from_json(json.dumps(doc))


# ---------------------------------------------------------------------------
# Properties
# ---------------------------------------------------------------------------

@given(st.integers(0, 10**6))
@settings(max_examples=30, deadline=None)
def test_forward_outputs_in_open_unit_interval(seed):
    rng = np.random.default_rng(seed)
    net = ann.init_net((3, 2), seed=seed, init_scale=2.0)
    y, _ = ann.net_forward(net, rng.uniform(-2, 2, size=3))
    assert np.all(y > 0.0) and np.all(y < 1.0)
