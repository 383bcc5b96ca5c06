import logging
from collections.abc import Mapping

import numpy as np

from ..model.training import AdamState
from ...util import ParameterBlocks
from ...util.error import ShapeMismatchError

logger = logging.getLogger(__name__)


def adam_update(params: ParameterBlocks, grads: ParameterBlocks, state: AdamState, learning_rate: float,
                beta1: float = 0.9, beta2: float = 0.999, epsilon: float = 1e-8,
                lr_scales: Mapping[str, float] | None = None) -> tuple[ParameterBlocks, AdamState]:
    """
    One bias-corrected Adam step in the ascent direction.

    Args:
        params: Unconstrained parameter blocks.
        grads: Gradient of the objective, same keys and shapes.
        state: Moment accumulators; empty on the first step.
        learning_rate: Shared step size.
        beta1: First-moment decay.
        beta2: Second-moment decay.
        epsilon: Denominator offset.
        lr_scales: Optional per-block multipliers of the learning rate.

    Returns:
        New parameter blocks and the new state; inputs are left untouched.

    Raises:
        ShapeMismatchError: If keys or shapes of params, grads and state disagree.
    """
    if set(params) != set(grads):
        raise ShapeMismatchError(f"Gradient blocks differ from parameters: {sorted(set(params) ^ set(grads))}.")
    if state.step > 0 and set(state.first_moments) != set(params):
        raise ShapeMismatchError("Optimizer state does not match the parameter blocks.")

    step = state.step + 1
    bias1 = 1.0 - beta1 ** step
    bias2 = 1.0 - beta2 ** step
    new_params, first, second = {}, {}, {}
    for name, value in params.items():
        grad = np.asarray(grads[name], dtype=np.float64)
        if grad.shape != value.shape:
            raise ShapeMismatchError(f"Gradient of {name} has shape {grad.shape}, expected {value.shape}.")
        m = state.first_moments.get(name, np.zeros_like(value))
        v = state.second_moments.get(name, np.zeros_like(value))
        if m.shape != value.shape or v.shape != value.shape:
            raise ShapeMismatchError(f"Optimizer state of {name} has the wrong shape.")
        m = beta1 * m + (1.0 - beta1) * grad
        v = beta2 * v + (1.0 - beta2) * (grad * grad)
        rate = learning_rate * (1.0 if lr_scales is None else lr_scales.get(name, 1.0))
        new_params[name] = value + rate * (m / bias1) / (np.sqrt(v / bias2) + epsilon)
        first[name] = m
        second[name] = v
    return new_params, AdamState(first_moments=first, second_moments=second, step=step)
