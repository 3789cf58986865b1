import numpy as np
import pytest

from conftest import blobs, max_rel_grad_error
from dltune.nn import DivergenceError, TrainConfig, TrainingError, accuracy, ffnn_fit, ffnn_predict, ffnn_train
from dltune.nn.common import StoppingCriterion, encode_labels
from dltune.nn.ffnn import FeedForwardModel, init_ffnn, loss_and_grads
from dltune.splits import holdout

XOR_X = np.array([[0, 0], [0, 1], [1, 0], [1, 1]], dtype=float)
XOR_Y = np.array([0, 1, 1, 0])


@pytest.mark.parametrize("seed", range(10))
@pytest.mark.parametrize("activation", ["sigmoid", "tanh"])
def test_gradients_match_finite_differences(seed, activation):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(7, 4))
    y = rng.integers(0, 3, size=7)
    params = [p.copy() for p in init_ffnn(4, (5,), np.arange(3), activation, rng).params]
    params = [p + rng.normal(scale=0.1, size=p.shape) for p in params]
    _, grads = loss_and_grads(params, activation, X, y)
    err = max_rel_grad_error(lambda ps: loss_and_grads(ps, activation, X, y)[0], params, grads)
    assert err < 1e-4


def test_gradients_with_dropout_masks_and_two_layers():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(6, 3))
    y = rng.integers(0, 2, size=6)
    params = [p.copy() for p in init_ffnn(3, (4, 3), np.arange(2), "sigmoid", rng).params]
    masks = [None, (rng.random((6, 4)) > 0.3) / 0.7, (rng.random((6, 3)) > 0.3) / 0.7]
    _, grads = loss_and_grads(params, "sigmoid", X, y, masks)
    assert max_rel_grad_error(lambda ps: loss_and_grads(ps, "sigmoid", X, y, masks)[0], params, grads) < 1e-4


@pytest.mark.parametrize("seed", range(3))
def test_xor_is_learned(seed):
    cfg = TrainConfig(learning_rate=0.5, batch_size=4, epochs=5000, hidden_dims=(4,), seed=seed,
                      stopping=StoppingCriterion(5000, 1e-9, 200))
    model, trace = ffnn_fit(XOR_X, XOR_Y, cfg)
    assert accuracy(ffnn_predict(model, XOR_X)[0], XOR_Y) == 1.0
    assert trace[-1] < trace[0]


def test_same_seed_same_model():
    t = blobs()
    plan = holdout(t.n_instances, 0)
    cfg = TrainConfig(epochs=5, seed=11)
    a, _ = ffnn_train(t, plan, cfg)
    b, _ = ffnn_train(t, plan, cfg)
    for x, y in zip(a.params, b.params):
        np.testing.assert_array_equal(x, y)


def test_predictions_carry_original_labels():
    t = blobs()
    model, _ = ffnn_train(t, holdout(t.n_instances, 0), TrainConfig(epochs=30, learning_rate=0.5))
    labels, probs = ffnn_predict(model, t.features)
    assert set(labels) <= {1.0, 2.0}
    np.testing.assert_allclose(probs.sum(axis=1), 1.0)
    assert accuracy(labels, t.labels) > 0.8


def test_hidden_dropout_trains_and_eval_is_deterministic():
    t = blobs()
    cfg = TrainConfig(epochs=20, learning_rate=0.5, hidden_dropout=0.3, hidden_dims=(8,))
    model, _ = ffnn_train(t, holdout(t.n_instances, 0), cfg)
    p1 = ffnn_predict(model, t.features)[1]
    np.testing.assert_array_equal(p1, ffnn_predict(model, t.features)[1])


def test_visible_dropout_not_available_for_ffnn():
    t = blobs()
    with pytest.raises(TrainingError, match="visible_dropout"):
        ffnn_train(t, holdout(t.n_instances, 0), TrainConfig(visible_dropout=0.2))


def test_divergence_is_reported():
    X = np.array([[1e150, -1e150], [-1e150, 1e150], [1e150, 1e150]])
    with pytest.raises(DivergenceError) as err:
        ffnn_fit(X, np.array([0, 1, 0]), TrainConfig(learning_rate=50.0, batch_size=1, epochs=3, activation="relu"))
    assert err.value.epoch >= 1


def test_batch_larger_than_data_rejected():
    with pytest.raises(TrainingError, match="batch_size"):
        ffnn_fit(XOR_X, XOR_Y, TrainConfig(batch_size=5))


def test_config_validation():
    with pytest.raises(TrainingError):
        TrainConfig(learning_rate=0)
    with pytest.raises(TrainingError):
        TrainConfig(hidden_dropout=1.0)
    with pytest.raises(TrainingError):
        TrainConfig(activation="swish")


def test_plateau_stopping():
    crit = StoppingCriterion(100, min_loss_delta=0.01, patience=2)
    assert not crit.should_stop([1.0, 0.5, 0.4])
    assert crit.should_stop([1.0, 0.5, 0.499, 0.498])
    assert StoppingCriterion(3).should_stop([1, 1, 1])


def test_model_shape_checks():
    with pytest.raises(TrainingError):
        FeedForwardModel((np.zeros((2, 3)),), (np.zeros(2),), "sigmoid", np.arange(3))
    model = init_ffnn(2, (3,), np.arange(2), "sigmoid", np.random.default_rng(0))
    with pytest.raises(TrainingError):
        ffnn_predict(model, np.zeros((1, 5)))


def test_single_class_training_keeps_two_outputs():
    codes, classes = encode_labels([4, 4, 4])
    assert list(codes) == [0, 0, 0] and len(classes) == 2


def test_accuracy_contract():
    assert accuracy([1, 2, 2], [1, 2, 1]) == pytest.approx(2 / 3)
    with pytest.raises(ValueError):
        accuracy([1], [1, 2])
    with pytest.raises(ValueError):
        accuracy([], [])
