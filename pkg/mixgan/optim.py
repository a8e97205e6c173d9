"""Adam optimisation of tensor parameters."""
from dataclasses import dataclass

import numpy as np

from mixgan.common import DimensionError


@dataclass
class AdamState:
    """Moment estimates and hyperparameters for a single parameter."""

    m: np.ndarray
    v: np.ndarray
    t: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    @classmethod
    def for_param(cls, param, **hyper):
        """Create a fresh state matching the shape of a parameter.

        :param param: `Tensor` or array.
        :param hyper: optional `lr`, `beta1`, `beta2`, `epsilon`.
        """
        shape = np.shape(getattr(param, 'data', param))
        return cls(m=np.zeros(shape), v=np.zeros(shape), **hyper)


def adam_step(param, grad, state):
    """Apply one bias-corrected Adam update in place.

    :param param: `Tensor` whose `.data` is updated.
    :param grad: array of the same shape as `param`.
    :param state: `AdamState`, updated in place.

    :returns: (param, state).
    """
    grad = np.asarray(grad, dtype=np.float64)
    if grad.shape != param.shape or state.m.shape != param.shape:
        raise DimensionError(
            'Adam step shapes disagree: param {}, grad {}, state {}.'.format(
                param.shape, grad.shape, state.m.shape))
    state.t += 1
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grad
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * grad * grad
    m_hat = state.m / (1.0 - state.beta1 ** state.t)
    v_hat = state.v / (1.0 - state.beta2 ** state.t)
    param.data -= state.lr * m_hat / (np.sqrt(v_hat) + state.epsilon)
    return param, state


class Adam(object):
    """Adam over an ordered collection of parameters."""

    def __init__(self, parameters, lr=1e-3, beta1=0.9, beta2=0.999,
                 epsilon=1e-8):
        """Initialize the optimizer.

        :param parameters: list of leaf `Tensor` objects.
        :param lr: learning rate.
        :param beta1: first-moment decay.
        :param beta2: second-moment decay.
        :param epsilon: denominator offset.
        """
        self.parameters = list(parameters)
        self.states = [
            AdamState.for_param(
                p, lr=lr, beta1=beta1, beta2=beta2, epsilon=epsilon)
            for p in self.parameters]

    def step(self, grads):
        """Update every parameter from its gradient."""
        if len(grads) != len(self.parameters):
            raise DimensionError(
                'Got {} gradients for {} parameters.'.format(
                    len(grads), len(self.parameters)))
        for p, g, s in zip(self.parameters, grads, self.states):
            adam_step(p, g, s)
