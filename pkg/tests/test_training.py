import math

import numpy as np
import pandas as pd
import pytest

from src.config.model.train import TrainConfiguration
from src.data.function.data_io import table_from_arrays, prepare_datasets
from src.data.function.optimizer import adam_update
from src.data.function.training import train, evaluate_metric, training_grid, write_history_csv, build_model
from src.data.function.variational_gp import elbo_grad, model_parameters, with_parameters
from src.data.model.training import AdamState
from src.util.constant import TaskKind, HISTORY_COLUMNS
from src.util.error import ConfigurationError


def _sine_datasets(rng, n=500, noise=0.1):
    x = rng.uniform(-3.0, 3.0, size=(n, 1))
    y = np.sin(x[:, 0]) + noise * rng.normal(size=n)
    return prepare_datasets(table_from_arrays(x, y), TaskKind.REGRESSION, 0.1, 0)


def _blob_datasets(rng, n=300):
    centers = np.array([[0.0, 0.0], [6.0, 0.0], [3.0, 6.0]])
    labels = np.repeat(np.arange(3), n // 3)
    x = centers[labels] + rng.normal(size=(n, 2))
    return prepare_datasets(table_from_arrays(x, labels), TaskKind.CLASSIFICATION, 0.1, 0)


class TestTrainingSetup:

    def test_zero_epochs_returns_initial_model(self, rng):
        train_set, test_set = _sine_datasets(rng, n=60)
        config = TrainConfiguration(task=TaskKind.REGRESSION, epochs=0, m0=8, tt_rank=2)
        result = train(train_set, config, validation=test_set)
        assert result.history == []
        assert result.state.step == 0
        assert result.model.grid.sizes == (8,)
        assert math.isfinite(result.best_metric)

    def test_task_mismatch(self, rng):
        train_set, _ = _sine_datasets(rng, n=60)
        with pytest.raises(ConfigurationError, match="does not match"):
            train(train_set, TrainConfiguration(task=TaskKind.CLASSIFICATION, epochs=1))

    def test_embedding_larger_than_inputs(self, rng):
        train_set, _ = _sine_datasets(rng, n=60)
        with pytest.raises(ConfigurationError, match="Embedding dimension"):
            train(train_set, TrainConfiguration(task=TaskKind.REGRESSION, epochs=1, embedding_dim=2))

    def test_grid_covers_training_range(self, rng):
        features = rng.normal(size=(50, 2))
        grid = training_grid(features, 10)
        assert np.all(grid.lower_bounds <= features.min(axis=0) + 1e-12)
        assert np.all(grid.upper_bounds >= features.max(axis=0) - 1e-12)

    def test_constant_feature_gets_a_grid(self):
        features = np.column_stack([np.linspace(0.0, 1.0, 10), np.zeros(10)])
        grid = training_grid(features, 6)
        assert grid.lower_bounds[1] == pytest.approx(-1.0)

    def test_embedding_model(self, rng):
        x = rng.normal(size=(80, 4))
        train_set, _ = prepare_datasets(table_from_arrays(x, x[:, 0] - x[:, 1]), TaskKind.REGRESSION, 0.1, 0)
        config = TrainConfiguration(task=TaskKind.REGRESSION, embedding_dim=2, m0=6, tt_rank=2)
        model = build_model(train_set, config, np.random.default_rng(0))
        assert model.grid.ndim == 2
        assert model.embedding.projection.shape == (2, 4)
        assert model.embedding.initialized
        assert model.grid.lower_bounds[0] == pytest.approx(-1.0)


class TestTrainingLoop:

    def test_history_and_cadence(self, rng):
        train_set, test_set = _sine_datasets(rng, n=100)
        config = TrainConfiguration(task=TaskKind.REGRESSION, epochs=5, batch_size=32, m0=8, tt_rank=2, eval_every=2)
        result = train(train_set, config, validation=test_set)
        assert [row["epoch"] for row in result.history] == [1, 2, 3, 4, 5]
        assert math.isnan(result.history[0]["metric"])
        assert not math.isnan(result.history[1]["metric"])
        assert not math.isnan(result.history[4]["metric"])
        assert result.best_metric == max(row["metric"] for row in result.history if not math.isnan(row["metric"]))

    def test_state_belongs_to_the_best_epoch(self, rng, monkeypatch):
        train_set, test_set = _sine_datasets(rng, n=100)
        metrics = iter([0.1, 0.5, 0.3, 0.2])
        monkeypatch.setattr("src.data.function.training.evaluate_metric", lambda model, dataset: next(metrics))
        config = TrainConfiguration(task=TaskKind.REGRESSION, epochs=4, batch_size=32, m0=8, tt_rank=2)
        result = train(train_set, config, validation=test_set)
        assert result.best_metric == 0.5
        assert result.state.step == 2 * math.ceil(train_set.num_rows / 32)

    def test_small_full_batch_steps_increase_the_elbo(self, rng):
        train_set, _ = _sine_datasets(rng, n=120)
        config = TrainConfiguration(task=TaskKind.REGRESSION, m0=8, tt_rank=2)
        model = build_model(train_set, config, np.random.default_rng(0))
        x, y = train_set.features, train_set.targets
        state = AdamState()
        values = []
        for _ in range(50):
            value, grads = elbo_grad(model, x, y, train_set.num_rows)
            values.append(value)
            params, state = adam_update(model_parameters(model), grads, state, learning_rate=5e-4)
            model = with_parameters(model, params)
        steps = np.diff(values)
        assert np.all(steps >= -1e-9 * np.abs(values[:-1]))
        assert values[-1] > values[0]

    def test_deterministic(self, rng):
        train_set, test_set = _blob_datasets(rng, n=60)
        config = TrainConfiguration(task=TaskKind.CLASSIFICATION, epochs=3, batch_size=16, m0=6, tt_rank=2,
                                    seed=7, workers=2)
        first = train(train_set, config, validation=test_set)
        second = train(train_set, config, validation=test_set)
        for a, b in zip(first.history, second.history):
            assert (a["epoch"], a["elbo"]) == (b["epoch"], b["elbo"])
            assert a["metric"] == b["metric"] or (math.isnan(a["metric"]) and math.isnan(b["metric"]))

    def test_kernel_learning_rate_decay(self, rng):
        train_set, _ = _sine_datasets(rng, n=60)
        base = dict(task=TaskKind.REGRESSION, epochs=2, batch_size=64, m0=6, tt_rank=1)
        plain = train(train_set, TrainConfiguration(**base)).model
        decayed = train(train_set, TrainConfiguration(**base, kernel_lr_decay_epoch=1, kernel_lr_factor=0.5)).model
        assert plain.kernels[0].log_variance != decayed.kernels[0].log_variance

    def test_history_csv(self, rng, tmp_path):
        train_set, _ = _sine_datasets(rng, n=60)
        result = train(train_set, TrainConfiguration(task=TaskKind.REGRESSION, epochs=2, m0=6, tt_rank=1))
        path = tmp_path / "runs" / "history.csv"
        write_history_csv(result.history, path)
        frame = pd.read_csv(path)
        assert list(frame.columns) == HISTORY_COLUMNS
        assert frame["epoch"].tolist() == [1, 2]


@pytest.mark.slow
class TestSyntheticProblems:

    def test_sine_regression(self, rng):
        train_set, test_set = _sine_datasets(rng)
        config = TrainConfiguration(task=TaskKind.REGRESSION, epochs=100, batch_size=64, learning_rate=0.05,
                                    m0=16, tt_rank=4, eval_every=10)
        result = train(train_set, config, validation=test_set)
        assert evaluate_metric(result.model, test_set) >= 0.95

    def test_separable_blobs(self, rng):
        train_set, test_set = _blob_datasets(rng)
        config = TrainConfiguration(task=TaskKind.CLASSIFICATION, epochs=50, batch_size=64, learning_rate=0.05,
                                    m0=10, tt_rank=4)
        result = train(train_set, config, validation=test_set)
        assert evaluate_metric(result.model, test_set) >= 0.95
