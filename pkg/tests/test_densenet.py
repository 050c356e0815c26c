import numpy as np
import pytest

from smartbuilding.core import ContractError
from smartbuilding.models.densenet import (
    AdamState,
    DenseNetModel,
    TrainingError,
    analytic_gradients,
    densenet_forward,
    densenet_init,
    densenet_train_step,
    numeric_gradients,
)


class TestInit:
    def test_shapes_chain(self):
        model = densenet_init(64, rng_seed=0)
        assert [w.shape for w in model.weights] == [(3, 64), (64, 64), (64, 1)]
        assert [b.shape for b in model.biases] == [(64,), (64,), (1,)]

    def test_same_seed_same_weights(self):
        a = densenet_init(128, rng_seed=5)
        b = densenet_init(128, rng_seed=5)
        assert all(np.array_equal(x, y) for x, y in zip(a.weights, b.weights))

    def test_biases_zero_so_zero_input_maps_to_zero(self):
        model = densenet_init(64, rng_seed=1)
        assert densenet_forward(model, np.zeros(3)) == pytest.approx(0.0)

    def test_unusual_width_warns(self):
        with pytest.warns(UserWarning):
            densenet_init(7, rng_seed=0)

    def test_glorot_bound(self):
        model = densenet_init(64, rng_seed=2)
        bound = np.sqrt(6.0 / (3 + 64))
        assert np.all(np.abs(model.weights[0]) <= bound)


def one_wide_net() -> DenseNetModel:
    """1-unit hidden layers, all weights 1, biases 0."""
    return DenseNetModel(
        weights=[np.ones((3, 1)), np.ones((1, 1)), np.ones((1, 1))],
        biases=[np.zeros(1), np.zeros(1), np.zeros(1)],
        hidden_width=1,
        input_dim=3,
        output_dim=1,
    )


class TestForward:
    def test_all_zero_parameters_output_zero(self):
        model = densenet_init(64, rng_seed=0)
        model.weights = [np.zeros_like(w) for w in model.weights]
        assert densenet_forward(model, np.array([0.4, 0.5, 0.6])) == 0.0

    def test_hand_traced_one_wide_net(self):
        # 0.1+0.2+0.3 = 0.6 -> relu -> 0.6 -> relu -> 0.6
        assert densenet_forward(one_wide_net(), np.array([0.1, 0.2, 0.3])) == pytest.approx(0.6)

    def test_rectifier_blocks_negative_preactivation(self):
        model = one_wide_net()
        # sum is negative: first hidden rectifier clamps to 0, output stays 0
        assert densenet_forward(model, np.array([-0.5, -0.2, 0.1])) == pytest.approx(0.0)

    def test_nonfinite_input_rejected(self):
        with pytest.raises(ContractError):
            densenet_forward(one_wide_net(), np.array([0.1, np.nan, 0.2]))

    def test_wrong_window_length_rejected(self):
        with pytest.raises(ContractError):
            densenet_forward(one_wide_net(), np.array([0.1, 0.2]))

    def test_batch_forward_matches_single(self):
        model = densenet_init(64, rng_seed=9)
        batch = np.random.default_rng(0).uniform(size=(4, 3))
        batched = densenet_forward(model, batch)
        singles = [densenet_forward(model, row) for row in batch]
        assert np.allclose(batched, singles)


class TestTrainStep:
    def test_zero_gradient_batch_keeps_parameters(self):
        # all weights/biases zero and targets zero: pred == target everywhere
        model = densenet_init(64, rng_seed=0)
        model.weights = [np.zeros_like(w) for w in model.weights]
        before = model.copy_parameters()
        state = AdamState.for_model(model)
        loss = densenet_train_step(
            model, np.zeros((4, 3)), np.zeros(4), learning_rate=0.001, state=state
        )
        assert loss == 0.0
        after_w, after_b = model.copy_parameters()
        assert all(np.array_equal(a, b) for a, b in zip(before[0], after_w))
        assert all(np.array_equal(a, b) for a, b in zip(before[1], after_b))

    def test_first_adam_step_magnitude(self):
        # single linear parameter with gradient exactly 1:
        # m_hat = 1, v_hat = 1 -> step = lr / (1 + eps)
        model = DenseNetModel(
            weights=[np.array([[1.0]])], biases=[np.array([0.0])],
            hidden_width=1, input_dim=1, output_dim=1,
        )
        state = AdamState.for_model(model)
        # pred = w*1 + b = 1.0, target 0.5 -> dL/dw = 2*(0.5)*1 = 1
        densenet_train_step(model, np.array([[1.0]]), np.array([0.5]), 0.001, state)
        step = 1.0 - model.weights[0][0, 0]
        assert step == pytest.approx(0.001 / (1.0 + 1e-8), rel=1e-9)

    @pytest.mark.filterwarnings("ignore::UserWarning")
    def test_gradients_match_finite_differences(self):
        rng = np.random.default_rng(3)
        model = densenet_init(4, rng_seed=3)
        x = rng.uniform(size=(6, 3))
        y = rng.uniform(size=(6, 1))
        analytic = analytic_gradients(model, x, y)
        numeric = numeric_gradients(model, x, y, delta=1e-5)
        for a, n in zip(analytic, numeric):
            denom = np.maximum(np.abs(n), 1e-8)
            assert float(np.max(np.abs(a - n) / denom)) < 1e-4

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_nonfinite_loss_surfaces(self):
        model = densenet_init(64, rng_seed=0)
        model.weights[0][:] = 1e200
        model.weights[1][:] = 1e200
        state = AdamState.for_model(model)
        with pytest.raises(TrainingError):
            densenet_train_step(model, np.ones((2, 3)), np.zeros(2), 0.001, state)

    def test_empty_batch_rejected(self):
        model = densenet_init(64, rng_seed=0)
        with pytest.raises(ContractError):
            densenet_train_step(model, np.empty((0, 3)), np.empty(0), 0.001,
                                AdamState.for_model(model))

    def test_loss_decreases_on_constant_target(self):
        model = densenet_init(64, rng_seed=4)
        state = AdamState.for_model(model)
        x = np.full((8, 3), 0.5)
        y = np.full(8, 0.5)
        losses = [densenet_train_step(model, x, y, 0.01, state) for _ in range(60)]
        assert losses[-1] < losses[0]
        assert losses[-1] < 1e-4
