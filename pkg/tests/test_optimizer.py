import numpy as np
import pytest
from numpy.testing import assert_allclose

from src.data.function.optimizer import adam_update
from src.data.model.training import AdamState
from src.util.error import ShapeMismatchError


class TestAdam:

    def test_zero_gradient_keeps_parameters(self):
        params = {"a": np.array([1.0, -2.0]), "b": np.ones((2, 2))}
        grads = {name: np.zeros_like(value) for name, value in params.items()}
        new_params, state = adam_update(params, grads, AdamState(), 0.1)
        for name in params:
            assert_allclose(new_params[name], params[name])
        assert state.step == 1

    def test_first_step_moves_by_learning_rate(self):
        params = {"a": np.array([0.0, 1.0, 2.0])}
        grads = {"a": np.array([3.0, -0.02, 1e3])}
        new_params, _ = adam_update(params, grads, AdamState(), 0.01)
        assert_allclose(new_params["a"] - params["a"], 0.01 * np.sign(grads["a"]), rtol=1e-5)

    def test_inputs_are_not_modified(self):
        params = {"a": np.array([1.0])}
        adam_update(params, {"a": np.array([1.0])}, AdamState(), 0.5)
        assert params["a"][0] == 1.0

    def test_moments_accumulate(self):
        params = {"a": np.array([0.0])}
        _, state = adam_update(params, {"a": np.array([2.0])}, AdamState(), 0.1)
        _, state = adam_update(params, {"a": np.array([4.0])}, state, 0.1)
        assert state.step == 2
        assert state.first_moments["a"][0] == pytest.approx(0.9 * 0.2 + 0.1 * 4.0)
        assert state.second_moments["a"][0] == pytest.approx(0.999 * 0.004 + 0.001 * 16.0)

    def test_learning_rate_scales(self):
        params = {"kernel/0/log_variance": np.array([0.0]), "mu/0/0": np.array([0.0])}
        grads = {name: np.array([1.0]) for name in params}
        new_params, _ = adam_update(params, grads, AdamState(), 0.1, lr_scales={"kernel/0/log_variance": 0.1})
        assert new_params["kernel/0/log_variance"][0] == pytest.approx(0.01, rel=1e-6)
        assert new_params["mu/0/0"][0] == pytest.approx(0.1, rel=1e-6)

    def test_identical_runs_are_bitwise_equal(self):
        def run():
            rng = np.random.default_rng(3)
            params, state = {"a": rng.normal(size=5)}, AdamState()
            for _ in range(20):
                params, state = adam_update(params, {"a": -params["a"] + rng.normal(size=5)}, state, 0.05)
            return params["a"]

        assert np.array_equal(run(), run())

    def test_ascends_a_concave_objective(self):
        params, state = {"a": np.array([5.0, -3.0])}, AdamState()
        for _ in range(2000):
            params, state = adam_update(params, {"a": -2.0 * params["a"]}, state, 0.05)
        assert_allclose(params["a"], 0.0, atol=0.1)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatchError):
            adam_update({"a": np.zeros(2)}, {"a": np.zeros(3)}, AdamState(), 0.1)
        with pytest.raises(ShapeMismatchError):
            adam_update({"a": np.zeros(2)}, {"b": np.zeros(2)}, AdamState(), 0.1)
