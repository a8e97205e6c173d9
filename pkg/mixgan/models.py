"""Creation of generator and discriminator networks and latent sampling."""
from dataclasses import dataclass

import numpy as np

from mixgan.common import ContractError, SpecError, get_named_logger
import mixgan.tensor as T

logger = get_named_logger('Models')

hidden_activations = {'relu': T.relu}
output_activations = {'sigmoid': T.sigmoid, 'identity': lambda x: x}


@dataclass(frozen=True)
class MlpSpec:
    """Layer sizes and activations of a fully connected network.

    :param layer_sizes: (input, hidden..., output) sizes.
    :param hidden_activation: name of the hidden-layer activation.
    :param output_activation: 'sigmoid' or 'identity'.
    """

    layer_sizes: tuple
    hidden_activation: str = 'relu'
    output_activation: str = 'sigmoid'

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.layer_sizes)
        object.__setattr__(self, 'layer_sizes', sizes)
        if len(sizes) < 2:
            raise SpecError(
                'A network needs at least input and output sizes, '
                'got {}.'.format(sizes))
        if any(s < 1 for s in sizes):
            raise SpecError('Layer sizes must be positive, got {}.'.format(
                sizes))
        if self.hidden_activation not in hidden_activations:
            raise SpecError('Unknown hidden activation: {}.'.format(
                self.hidden_activation))
        if self.output_activation not in output_activations:
            raise SpecError('Unknown output activation: {}.'.format(
                self.output_activation))

    @property
    def input_dim(self):
        """Size of the input layer."""
        return self.layer_sizes[0]

    @property
    def output_dim(self):
        """Size of the output layer."""
        return self.layer_sizes[-1]

    @property
    def parameter_count(self):
        """Number of trainable parameters (weights and biases)."""
        return sum(
            n_in * n_out + n_out
            for n_in, n_out in zip(self.layer_sizes[:-1], self.layer_sizes[1:]))


class Mlp(object):
    """A fully connected network with tape-aware parameters."""

    def __init__(self, spec, weights, biases):
        """Initialize from explicit parameters.

        :param spec: `MlpSpec`.
        :param weights: list of [n_in x n_out] `Tensor`, one per layer.
        :param biases: list of [n_out] `Tensor`, one per layer.
        """
        self.spec = spec
        self.weights = list(weights)
        self.biases = list(biases)
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            n_in, n_out = spec.layer_sizes[i], spec.layer_sizes[i + 1]
            if w.shape != (n_in, n_out) or b.shape != (n_out,):
                raise SpecError(
                    'Layer {} parameters have shapes {} and {}, expected '
                    '{} and {}.'.format(
                        i, w.shape, b.shape, (n_in, n_out), (n_out,)))

    def parameters(self):
        """Parameters in a fixed order: weight then bias, layer by layer."""
        params = []
        for w, b in zip(self.weights, self.biases):
            params.extend((w, b))
        return params

    def named_parameters(self):
        """List of (name, `Tensor`) in the order of `parameters`."""
        named = []
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            named.append(('layer{}.weight'.format(i), w))
            named.append(('layer{}.bias'.format(i), b))
        return named

    @property
    def parameter_count(self):
        """Number of trainable parameters."""
        return int(sum(p.size for p in self.parameters()))

    def forward(self, x):
        """Map a batch [n x input_dim] to [n x output_dim].

        :param x: `Tensor` or array.

        :returns: `Tensor` on the tape.
        """
        x = T.as_tensor(x)
        if x.ndim != 2 or x.shape[1] != self.spec.input_dim:
            raise ContractError(
                'Expected a batch of shape (n, {}), got {}.'.format(
                    self.spec.input_dim, x.shape))
        hidden = hidden_activations[self.spec.hidden_activation]
        n_layers = len(self.weights)
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            x = T.add_bias(T.matmul(x, w), b)
            if i < n_layers - 1:
                x = hidden(x)
        return output_activations[self.spec.output_activation](x)

    __call__ = forward

    def copy(self):
        """Deep copy of the network (fresh tape leaves)."""
        return Mlp(
            self.spec,
            [T.Tensor(w.data, requires_grad=True) for w in self.weights],
            [T.Tensor(b.data, requires_grad=True) for b in self.biases])


def _as_rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def build_mlp(spec, seed):
    """Build a network with Glorot-uniform weights and zero biases.

    :param spec: `MlpSpec`.
    :param seed: int or `numpy.random.Generator`.
    """
    rng = _as_rng(seed)
    weights, biases = [], []
    for n_in, n_out in zip(spec.layer_sizes[:-1], spec.layer_sizes[1:]):
        limit = np.sqrt(6.0 / (n_in + n_out))
        weights.append(T.Tensor(
            rng.uniform(-limit, limit, size=(n_in, n_out)), requires_grad=True))
        biases.append(T.Tensor(np.zeros(n_out), requires_grad=True))
    return Mlp(spec, weights, biases)


def build_generator(spec, seed):
    """Build a generator network.

    :param spec: `MlpSpec`; sigmoid output for image data, identity for
        unbounded synthetic data.
    :param seed: int or `numpy.random.Generator`.
    """
    return build_mlp(spec, seed)


def discriminator_spec(generator_spec, hidden=None):
    """Specification of the discriminator inverse to a generator.

    The generator's sizes are reversed and the final size replaced by 1,
    e.g. [100, 240, 784] becomes [784, 240, 1].

    :param generator_spec: `MlpSpec` of the generator.
    :param hidden: optional int, replaces every hidden width (used to keep
        supplementary discriminators weak).
    """
    sizes = list(reversed(generator_spec.layer_sizes))
    sizes[-1] = 1
    if hidden is not None:
        sizes = [sizes[0]] + [int(hidden)] * (len(sizes) - 2) + [1]
    return MlpSpec(
        tuple(sizes), hidden_activation=generator_spec.hidden_activation,
        output_activation='sigmoid')


def build_discriminator(generator_spec, seed, hidden=None):
    """Build a discriminator with the inverse architecture of a generator.

    :param generator_spec: `MlpSpec` of the generator.
    :param seed: int or `numpy.random.Generator`.
    :param hidden: optional hidden width override.
    """
    return build_mlp(discriminator_spec(generator_spec, hidden), seed)


class LatentSampler(object):
    """Seeded sampler of latent vectors, uniform in [low, high)."""

    def __init__(self, dimension=100, seed=0, low=-1.0, high=1.0):
        """Initialize the sampler.

        :param dimension: latent dimension.
        :param seed: int or `numpy.random.Generator`.
        :param low: lower bound (inclusive).
        :param high: upper bound (exclusive).
        """
        self.dimension = int(dimension)
        self.low, self.high = low, high
        self.rng = _as_rng(seed)

    def sample(self, n):
        """Draw a batch of n latent vectors as an [n x dimension] `Tensor`."""
        return sample_latent(self, n)


def sample_latent(sampler, n):
    """Draw n i.i.d. latent vectors from a `LatentSampler`.

    :returns: `Tensor` of shape [n x dimension].
    """
    if n < 1:
        raise ContractError('Latent batch size must be >= 1, got {}.'.format(n))
    z = sampler.rng.uniform(
        sampler.low, sampler.high, size=(n, sampler.dimension))
    return T.Tensor(z)
