import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from liquidstate.frames import PostureLabel
from liquidstate.readout import (
    ReadoutModel,
    TrainConfig,
    loss_and_grad,
    predict,
    softmax,
    train_readout,
)


def two_blobs(seed=0, n=40):
    rng = np.random.default_rng(seed)
    a = rng.normal([-2.0, 1.0], 0.5, size=(n, 2))
    b = rng.normal([2.0, -1.0], 0.5, size=(n, 2))
    return np.vstack([a, b]), np.array([0] * n + [1] * n)


def separable_by_some_line(X, y):
    # brute-force oracle: try lines through pairs of points (shifted slightly)
    for i, j in itertools.combinations(range(len(X)), 2):
        d = X[j] - X[i]
        normal = np.array([-d[1], d[0]])
        for off in (-1e-6, 1e-6):
            s = (X - X[i]) @ normal + off
            if np.all((s > 0) == (y == 1)) or np.all((s > 0) == (y == 0)):
                return True
    return False


def test_separable_classes_are_learned():
    X, y = two_blobs()
    assert separable_by_some_line(X, y)
    model = train_readout(X, y, n_classes=2)
    assert (model.predict_ids(X) == y).all()


def test_constant_features_recover_priors():
    X = np.ones((100, 3))
    y = np.array([0] * 50 + [1] * 30 + [2] * 20)
    model = train_readout(X, y, TrainConfig(max_epochs=2000, batch_size=100, convergence_tol=1e-12), n_classes=3)
    np.testing.assert_allclose(model.predict_proba(X[:1])[0], [0.5, 0.3, 0.2], atol=1e-4)


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(12, 5))
    y = rng.integers(0, 4, size=12)
    W = rng.normal(size=(4, 5))
    b = rng.normal(size=4)
    _, gW, gb = loss_and_grad(W, b, X, y, 0.1)
    num_W = np.zeros_like(W)
    h = 1e-6
    for idx in np.ndindex(W.shape):
        Wp, Wm = W.copy(), W.copy()
        Wp[idx] += h
        Wm[idx] -= h
        num_W[idx] = (loss_and_grad(Wp, b, X, y, 0.1)[0] - loss_and_grad(Wm, b, X, y, 0.1)[0]) / (2 * h)
    num_b = np.zeros_like(b)
    for k in range(4):
        bp, bm = b.copy(), b.copy()
        bp[k] += h
        bm[k] -= h
        num_b[k] = (loss_and_grad(W, bp, X, y, 0.1)[0] - loss_and_grad(W, bm, X, y, 0.1)[0]) / (2 * h)
    assert np.linalg.norm(gW - num_W) / np.linalg.norm(num_W) <= 1e-5
    assert np.linalg.norm(gb - num_b) / np.linalg.norm(num_b) <= 1e-5


def test_zero_weights_are_uniform():
    model = ReadoutModel(np.zeros((15, 4)), np.zeros(15), np.zeros(4), np.ones(4))
    label, proba = predict(model, np.arange(4.0))
    assert label == PostureLabel.from_id(0)
    np.testing.assert_allclose(proba, np.full(15, 1 / 15))


@given(arrays(np.float64, (3, 6), elements=st.floats(-500, 500)), st.floats(-1e3, 1e3))
def test_softmax_is_a_distribution(z, shift):
    p = softmax(z)
    assert (p >= 0).all()
    np.testing.assert_allclose(p.sum(axis=1), 1.0)
    np.testing.assert_allclose(softmax(z + shift), p, atol=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 1000))
def test_probabilities_sum_to_one(seed):
    X, y = two_blobs(seed, n=10)
    model = train_readout(X, y, TrainConfig(max_epochs=5), n_classes=3)
    p = model.predict_proba(np.random.default_rng(seed).normal(size=(7, 2)) * 10)
    np.testing.assert_allclose(p.sum(axis=1), 1.0)


def test_same_seed_same_model():
    X, y = two_blobs(1)
    a = train_readout(X, y, n_classes=2)
    b = train_readout(X, y, n_classes=2)
    np.testing.assert_array_equal(a.W, b.W)
    np.testing.assert_array_equal(a.b, b.b)
    assert a.loss_history == b.loss_history


def test_loss_decreases():
    rng = np.random.default_rng(4)
    X = rng.normal(size=(200, 6))
    y = (X[:, 0] + 0.5 * X[:, 1] > 0).astype(int) + 2 * (X[:, 2] > 0.5)
    hist = np.array(train_readout(X, y, TrainConfig(learning_rate=0.05), n_classes=4).loss_history)
    assert hist[-1] < hist[0]
    assert (np.diff(hist) <= 1e-3).all()


def test_labels_may_be_posture_objects():
    X, y = two_blobs(2)
    labels = [PostureLabel.from_id(int(k) + 3) for k in y]
    model = train_readout(X, labels)
    label, _ = predict(model, X[0])
    assert label.id == 3


@pytest.mark.parametrize(
    "features, labels, match",
    [
        ([], [], "no training"),
        ([[1.0], [2.0]], [0], "labels"),
        ([[1.0], [2.0, 3.0]], [0, 1], "differing"),
        ([[1.0], [2.0]], [1, 1], "two classes"),
        ([[1.0], [2.0]], [0, 15], "lie in"),
    ],
)
def test_training_errors(features, labels, match):
    with pytest.raises(ValueError, match=match):
        train_readout(features, labels)


def test_feature_length_mismatch():
    X, y = two_blobs()
    model = train_readout(X, y, n_classes=2)
    with pytest.raises(ValueError, match="feature length"):
        model.predict_ids(np.zeros((1, 3)))
    with pytest.raises(ValueError):
        predict(model, np.zeros((2, 2)))


def test_json_round_trip(tmp_path):
    X, y = two_blobs()
    model = train_readout(X, y, n_classes=2, trained_on="raw_frame", meta={"trial": "LR-raw"})
    path = tmp_path / "m.json"
    model.save(path)
    back = ReadoutModel.load(path)
    np.testing.assert_array_equal(back.W, model.W)
    np.testing.assert_array_equal(back.scale, model.scale)
    assert back.trained_on == "raw_frame"
    assert back.meta == {"trial": "LR-raw"}
    assert back.train_config == model.train_config
    np.testing.assert_array_equal(back.predict_proba(X), model.predict_proba(X))


def test_bad_model_fields():
    with pytest.raises(ValueError):
        ReadoutModel(np.zeros((2, 3)), np.zeros(2), np.zeros(2), np.ones(2))
    with pytest.raises(ValueError):
        ReadoutModel(np.zeros((2, 2)), np.zeros(2), np.zeros(2), np.ones(2), trained_on="pixels")
