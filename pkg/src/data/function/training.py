import logging
import math
import time
from pathlib import Path

import numpy as np
import pandas as pd
from sklearn.metrics import r2_score, accuracy_score

from .data_io import inverse_targets
from .interpolation import grid_build
from .kernels import init_embedding, update_embedding_statistics
from .optimizer import adam_update
from .variational_gp import (init_model, model_parameters, with_parameters, elbo_grad, predict_regression,
                             predict_classification)
from ..model.dataset import Dataset
from ..model.gp import TTGPModel
from ..model.grid import Grid
from ..model.training import AdamState, TrainResult
from ...config.model.train import TrainConfiguration
from ...util import EpochSummary, ParameterBlocks
from ...util.constant import TaskKind, EMBEDDING_GRID_RANGE, EMBEDDING_MOMENTUM, HISTORY_COLUMNS
from ...util.error import ConfigurationError, NumericError

logger = logging.getLogger(__name__)


def training_grid(features: np.ndarray, m0: int) -> Grid:
    """Grid covering the per-column range of the (standardized) training features."""
    ranges = []
    for d, (lo, hi) in enumerate(zip(features.min(axis=0), features.max(axis=0))):
        if hi - lo < 1e-12:
            logger.warning("Feature %d is constant on the training split; widening its grid range.", d)
            lo, hi = lo - 1.0, hi + 1.0
        ranges.append((float(lo), float(hi)))
    return grid_build(ranges, m0)


def build_model(dataset: Dataset, config: TrainConfiguration, rng: np.random.Generator) -> TTGPModel:
    embedding = None
    if config.embedding_dim > 0:
        embedding = init_embedding(dataset.num_features, config.embedding_dim, rng)
        embedding = update_embedding_statistics(embedding, dataset.features, EMBEDDING_MOMENTUM)
        grid = grid_build([EMBEDDING_GRID_RANGE] * config.embedding_dim, config.m0)
    else:
        grid = training_grid(dataset.features, config.m0)
    kernels = config.kernel.create_params(grid.ndim, dataset.num_classes)
    return init_model(grid, kernels, dataset.num_classes, config.tt_rank, rng, embedding, dataset.statistics)


def evaluate_metric(model: TTGPModel, dataset: Dataset) -> float:
    """r² in original target units for regression, accuracy for classification."""
    if dataset.num_rows == 0:
        return math.nan
    if model.is_regression:
        means, _ = predict_regression(model, dataset.features, original_units=False)
        return float(r2_score(inverse_targets(dataset.statistics, dataset.targets),
                              inverse_targets(dataset.statistics, means)))
    labels, _ = predict_classification(model, dataset.features)
    return float(accuracy_score(dataset.labels, labels))


def _validate(dataset: Dataset, config: TrainConfiguration):
    if dataset.task != config.task:
        raise ConfigurationError(f"Task {config.task.value} does not match a {dataset.task.value} dataset.")
    if dataset.num_rows == 0:
        raise ConfigurationError("The training split is empty.")
    if config.embedding_dim > dataset.num_features:
        raise ConfigurationError(
            f"Embedding dimension {config.embedding_dim} exceeds the {dataset.num_features} input features.")
    if config.task == TaskKind.CLASSIFICATION and dataset.num_classes < 2:
        raise ConfigurationError("Classification needs at least two classes.")


def _lr_scales(params: ParameterBlocks, config: TrainConfiguration, epoch: int) -> dict[str, float] | None:
    if config.kernel_lr_decay_epoch is None or epoch <= config.kernel_lr_decay_epoch:
        return None
    return {name: config.kernel_lr_factor for name in params if name.startswith("kernel/")}


def train(dataset: Dataset, config: TrainConfiguration, validation: Dataset | None = None) -> TrainResult:
    """
    Shuffled minibatch Adam ascent on the ELBO.

    The held-out metric is computed on `validation` when given, otherwise on the
    training data; the returned model and optimizer state are those of the epoch
    with the best metric.

    Raises:
        ConfigurationError: If the configuration does not suit the dataset.
        NumericError: If the ELBO or its gradient becomes non-finite.
    """
    _validate(dataset, config)
    rng = np.random.default_rng(config.seed)
    model = build_model(dataset, config, rng)
    state = AdamState()
    evaluation = validation if validation is not None and validation.num_rows > 0 else dataset
    if config.epochs == 0:
        return TrainResult(model=model, state=state, history=[], best_metric=evaluate_metric(model, evaluation))

    history: list[EpochSummary] = []
    best_model, best_state, best_metric = model, state, -math.inf
    num_rows = dataset.num_rows
    for epoch in range(1, config.epochs + 1):
        started = time.perf_counter()
        order = rng.permutation(num_rows)
        estimates = []
        for start in range(0, num_rows, config.batch_size):
            index = order[start:start + config.batch_size]
            x, y = dataset.features[index], dataset.targets[index]
            if model.embedding is not None:
                embedding = update_embedding_statistics(model.embedding, x, EMBEDDING_MOMENTUM)
                model = model.model_copy(update={"embedding": embedding})
            value, grads = elbo_grad(model, x, y, num_rows, workers=config.workers)
            if not math.isfinite(value) or not all(np.all(np.isfinite(g)) for g in grads.values()):
                raise NumericError(f"Non-finite ELBO or gradient in epoch {epoch}.")
            params = model_parameters(model)
            params, state = adam_update(params, grads, state, config.learning_rate, config.beta1, config.beta2,
                                        config.epsilon, _lr_scales(params, config, epoch))
            model = with_parameters(model, params)
            estimates.append(value)
        seconds = time.perf_counter() - started

        evaluate = epoch % config.eval_every == 0 or epoch == config.epochs
        metric = evaluate_metric(model, evaluation) if evaluate else math.nan
        history.append(EpochSummary(epoch=epoch, elbo=float(np.mean(estimates)), metric=metric, seconds=seconds))
        logger.info("Epoch %d/%d: ELBO %.4f, metric %.4f, %.2f s.",
                    epoch, config.epochs, history[-1]["elbo"], metric, seconds)
        if not math.isnan(metric) and metric > best_metric:
            best_model, best_state, best_metric = model, state, metric
            logger.info("New best metric %.4f at epoch %d.", metric, epoch)

    if math.isinf(best_metric):
        best_metric = math.nan
    return TrainResult(model=best_model, state=best_state, history=history, best_metric=best_metric)


def write_history_csv(history: list[EpochSummary], path: str | Path):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(history, columns=HISTORY_COLUMNS).to_csv(path, index=False)
    logger.info("Wrote metric history to %s.", path)
