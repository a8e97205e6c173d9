"""Losses and alternating training of the multi-generator game.

K generators g_k are trained together with one adversarial discriminator h
and a set of supplementary discriminators h_k. With

    L_h  = E_real log h + E_mix log(1 - h)
    L_hk = E_k log h_k + sum_{j != k} E_j log(1 - h_k)

h maximises V = L_h - sum_k L_hk while the generators and the supplementary
discriminators minimise it. Each iteration updates h, then every h_k, then
every g_k, each from fresh latent batches and with one Adam step per model.
"""
from dataclasses import dataclass, field
import time

import numpy as np

from mixgan.common import (
    ConfigError, ContractError, NonFiniteLossError, get_named_logger,
    random_stream)
import mixgan.data
import mixgan.models
from mixgan.optim import Adam
import mixgan.tensor as T

logger = get_named_logger('Game')

SUPPLEMENTARY_MODES = ('full', 'pairwise_single', 'none')


@dataclass(frozen=True)
class GameConfig:
    """Everything that defines a training run of the game.

    :param K: number of generators.
    :param generator_spec: `MlpSpec` shared by every generator.
    :param supplementary_mode: 'full' (one h_k per generator),
        'pairwise_single' (only h_1, K == 2) or 'none' (K == 1, the
        traditional single-generator game).
    :param flip_labels: train generators on the non-saturating
        -log h(g(z)) instead of log(1 - h(g(z))).
    :param batch_size: samples per batch, at least K.
    :param total_iterations: number of `train_step` calls made by `run`.
    :param seed: run seed, expanded into named random streams.
    :param lr, beta1, beta2, epsilon: Adam hyperparameters.
    :param discriminator_hidden: optional hidden width of h.
    :param supplementary_hidden: optional hidden width of the h_k.
    :param supplementary_steps: updates of each h_k per iteration.
    :param snapshot_interval: iterations between metric snapshots (0: off).
    :param checkpoint_interval: iterations between checkpoints (0: off).
    """

    K: int = 2
    generator_spec: mixgan.models.MlpSpec = field(
        default_factory=lambda: mixgan.models.MlpSpec(
            (8, 32, 2), output_activation='identity'))
    supplementary_mode: str = 'pairwise_single'
    flip_labels: bool = True
    batch_size: int = 64
    total_iterations: int = 20000
    seed: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    discriminator_hidden: int = None
    supplementary_hidden: int = None
    supplementary_steps: int = 1
    snapshot_interval: int = 1000
    checkpoint_interval: int = 0

    def __post_init__(self):
        self.validate()

    def validate(self):
        """Check the configuration is consistent.

        :raises ConfigError: describing the first problem found.
        """
        if self.K < 1:
            raise ConfigError('K must be >= 1, got {}.'.format(self.K))
        if self.supplementary_mode not in SUPPLEMENTARY_MODES:
            raise ConfigError('Unknown supplementary_mode {!r}, use one of {}.'.format(
                self.supplementary_mode, SUPPLEMENTARY_MODES))
        if self.supplementary_mode == 'pairwise_single' and self.K != 2:
            raise ConfigError(
                'supplementary_mode pairwise_single requires K == 2, '
                'got K = {}.'.format(self.K))
        if self.supplementary_mode == 'full' and self.K < 2:
            raise ConfigError('supplementary_mode full requires K >= 2.')
        if self.K == 1 and self.supplementary_mode != 'none':
            raise ConfigError('K == 1 requires supplementary_mode none.')
        if self.batch_size < self.K:
            raise ConfigError(
                'batch_size ({}) must be at least K ({}).'.format(
                    self.batch_size, self.K))
        for name in ('total_iterations', 'snapshot_interval',
                     'checkpoint_interval'):
            if getattr(self, name) < 0:
                raise ConfigError('{} must be >= 0.'.format(name))
        if self.supplementary_steps < 1:
            raise ConfigError('supplementary_steps must be >= 1.')
        if self.lr < 0:
            raise ConfigError('lr must be >= 0, got {}.'.format(self.lr))

    @property
    def latent_dim(self):
        """Dimension of the latent space."""
        return self.generator_spec.input_dim

    @property
    def sample_dim(self):
        """Dimension of the sample space."""
        return self.generator_spec.output_dim

    @property
    def supplementary_owners(self):
        """Generator index that each supplementary discriminator claims."""
        if self.supplementary_mode == 'full':
            return list(range(self.K))
        if self.supplementary_mode == 'pairwise_single':
            return [0]
        return []

    def model_names(self):
        """Names of every sub-model, in update order."""
        return (['h'] + ['h{}'.format(k) for k in self.supplementary_owners] +
                ['g{}'.format(k) for k in range(self.K)])


class GameState(object):
    """Models, optimizers and random streams of one training run."""

    def __init__(self, config):
        """Build freshly initialised models for a configuration.

        :param config: `GameConfig`.
        """
        self.config = config
        seed = config.seed
        spec = config.generator_spec
        self.generators = [
            mixgan.models.build_generator(
                spec, random_stream(seed, 'init/g{}'.format(k)))
            for k in range(config.K)]
        self.adversarial = mixgan.models.build_discriminator(
            spec, random_stream(seed, 'init/h'),
            hidden=config.discriminator_hidden)
        self.supplementary_owners = config.supplementary_owners
        self.supplementary = [
            mixgan.models.build_discriminator(
                spec, random_stream(seed, 'init/h{}'.format(k)),
                hidden=config.supplementary_hidden)
            for k in self.supplementary_owners]
        self.optimizers = {
            name: Adam(
                model.parameters(), lr=config.lr, beta1=config.beta1,
                beta2=config.beta2, epsilon=config.epsilon)
            for name, model in self.models().items()}
        self.sampler = mixgan.models.LatentSampler(
            config.latent_dim, random_stream(seed, 'latent'))
        self.mixture_rng = random_stream(seed, 'mixture')
        self.iteration = 0
        self.last_losses = {}

    def models(self):
        """Dict of name -> `Mlp` in update order."""
        models = {'h': self.adversarial}
        for k, h_k in zip(self.supplementary_owners, self.supplementary):
            models['h{}'.format(k)] = h_k
        for k, g in enumerate(self.generators):
            models['g{}'.format(k)] = g
        return models

    @property
    def parameter_count(self):
        """Trainable parameters over all sub-models."""
        return sum(m.parameter_count for m in self.models().values())

    def named_arrays(self):
        """(name, array) pairs of parameters and optimizer moments."""
        named = [('state.iteration', np.array(float(self.iteration)))]
        for model_name, model in self.models().items():
            opt = self.optimizers[model_name]
            for (pname, p), s in zip(model.named_parameters(), opt.states):
                base = '{}.{}'.format(model_name, pname)
                named.append((base, p.data))
                named.append(('adam.{}.m'.format(base), s.m))
                named.append(('adam.{}.v'.format(base), s.v))
                named.append(('adam.{}.t'.format(base), np.array(float(s.t))))
        return named

    def restore(self, arrays):
        """Load parameters and optimizer moments from `named_arrays` output.

        :raises ContractError: on a missing entry or shape mismatch.
        """
        def fetch(name, shape):
            if name not in arrays:
                raise ContractError('Checkpoint has no entry {}.'.format(name))
            value = np.asarray(arrays[name], dtype=np.float64)
            if value.shape != shape:
                raise ContractError(
                    'Checkpoint entry {} has shape {}, model needs {}.'.format(
                        name, value.shape, shape))
            return value.copy()

        self.iteration = int(fetch('state.iteration', ()))
        for model_name, model in self.models().items():
            opt = self.optimizers[model_name]
            for (pname, p), s in zip(model.named_parameters(), opt.states):
                base = '{}.{}'.format(model_name, pname)
                p.data = fetch(base, p.shape)
                s.m = fetch('adam.{}.m'.format(base), p.shape)
                s.v = fetch('adam.{}.v'.format(base), p.shape)
                s.t = int(fetch('adam.{}.t'.format(base), ()))
        return self


def init_state(config):
    """Create the initial `GameState` of a configuration."""
    return GameState(config)


def _check_same_size(batches, what):
    sizes = set(np.shape(getattr(b, 'data', b))[0] for b in batches)
    if len(sizes) != 1:
        raise ContractError(
            '{} batches have different sizes: {}.'.format(what, sorted(sizes)))


def _log(x, floor=T.DEFAULT_LOG_FLOOR):
    return T.log_clamped(x, floor)


def _log_one_minus(x, floor=T.DEFAULT_LOG_FLOOR):
    return T.log_clamped(T.sub(1.0, x), floor)


def supplementary_loss(h_k, batches_by_generator, k):
    """Sampled L_hk of a supplementary discriminator.

    mean(log h_k(x_k)) + sum_{j != k} mean(log(1 - h_k(x_j))).

    :param h_k: supplementary discriminator (`Mlp`).
    :param batches_by_generator: one batch per generator, equal sizes.
    :param k: index of the generator that h_k claims.

    :returns: scalar `Tensor`.
    """
    _check_same_size(batches_by_generator, 'Generator')
    if not 0 <= k < len(batches_by_generator):
        raise ContractError('Generator index {} out of range.'.format(k))
    loss = T.mean(_log(h_k(batches_by_generator[k])))
    for j, batch in enumerate(batches_by_generator):
        if j != k:
            loss = T.add(loss, T.mean(_log_one_minus(h_k(batch))))
    return loss


def adversarial_loss(h, real_batch, fake_mixture_batch):
    """Sampled L_h = mean(log h(real)) + mean(log(1 - h(fake)))."""
    _check_same_size((real_batch, fake_mixture_batch), 'Real and fake')
    return T.add(
        T.mean(_log(h(real_batch))),
        T.mean(_log_one_minus(h(fake_mixture_batch))))


def generator_loss(g, k, h, supplementary, owners, z, flip_labels):
    """Objective minimised by generator k: its share of V.

    mean(log(1 - h(x))) - [mean(log h_k(x)) + sum_{j != k} mean(log(1 - h_j(x)))]
    with x = g(z). With `flip_labels` the adversarial term becomes
    -mean(log h(x)).

    :param g: the generator (`Mlp`).
    :param k: index of the generator.
    :param h: adversarial discriminator.
    :param supplementary: list of supplementary discriminators.
    :param owners: generator index claimed by each supplementary discriminator.
    :param z: latent batch.
    :param flip_labels: use the non-saturating adversarial term.

    :returns: scalar `Tensor`.
    """
    x = g(z)
    if flip_labels:
        loss = T.neg(T.mean(_log(h(x))))
    else:
        loss = T.mean(_log_one_minus(h(x)))
    for j, h_j in zip(owners, supplementary):
        if j == k:
            term = T.mean(_log(h_j(x)))
        else:
            term = T.mean(_log_one_minus(h_j(x)))
        loss = T.sub(loss, term)
    return loss


def sample_generator(g, sampler, n):
    """Draw n samples from one generator as an array."""
    return g(mixgan.models.sample_latent(sampler, n)).numpy()


def sample_mixture(generators, latent_sampler, n, rng=None, round_robin=False):
    """Draw n samples from the equi-probable mixture of the generators.

    Each row picks a generator uniformly at random, then maps a fresh latent.

    :param generators: list of generator `Mlp`.
    :param latent_sampler: `LatentSampler`.
    :param n: number of samples.
    :param rng: `numpy.random.Generator` for the generator choice.
    :param round_robin: assign rows to generators cyclically instead.

    :returns: ([n x d] array, n provenance indices).
    """
    K = len(generators)
    if round_robin:
        provenance = np.arange(n) % K
    else:
        if rng is None:
            rng = np.random.default_rng()
        provenance = rng.integers(0, K, size=n)
    z = mixgan.models.sample_latent(latent_sampler, n).data
    samples = np.empty((n, generators[0].spec.output_dim))
    for k, g in enumerate(generators):
        rows = provenance == k
        if np.any(rows):
            samples[rows] = g(z[rows]).data
    return samples, provenance


def _descend(state, name, objective, reported):
    """Apply one Adam step on `objective` for model `name`."""
    value = objective.item()
    if not np.isfinite(value):
        raise NonFiniteLossError(name, state.iteration, reported.item())
    opt = state.optimizers[name]
    grads = T.backward(objective, opt.parameters)
    opt.step(grads)


def train_step(state, real_batch):
    """Perform one iteration of alternating updates.

    Order: the adversarial discriminator (ascent on L_h), every
    supplementary discriminator (ascent on its L_hk), then every generator
    (descent on its share of V). Generators all see the discriminators as
    updated in this iteration. Losses are stored in `state.last_losses`.

    :param state: `GameState`, updated in place.
    :param real_batch: [batch_size x d] real samples.

    :returns: the updated `GameState`.
    :raises NonFiniteLossError: naming the sub-model and iteration.
    """
    config = state.config
    n = config.batch_size
    real_batch = np.asarray(real_batch, dtype=np.float64)
    if len(real_batch) != n:
        raise ContractError('Real batch has {} rows, batch_size is {}.'.format(
            len(real_batch), n))
    losses = {}

    fake, _ = sample_mixture(
        state.generators, state.sampler, n, rng=state.mixture_rng)
    l_h = adversarial_loss(state.adversarial, real_batch, fake)
    _descend(state, 'h', T.neg(l_h), l_h)
    losses['loss_h'] = l_h.item()

    for k, h_k in zip(state.supplementary_owners, state.supplementary):
        for _ in range(config.supplementary_steps):
            batches = [
                sample_generator(g, state.sampler, n)
                for g in state.generators]
            l_hk = supplementary_loss(h_k, batches, k)
            _descend(state, 'h{}'.format(k), T.neg(l_hk), l_hk)
        losses['loss_h{}'.format(k)] = l_hk.item()

    for k, g in enumerate(state.generators):
        z = mixgan.models.sample_latent(state.sampler, n)
        l_g = generator_loss(
            g, k, state.adversarial, state.supplementary,
            state.supplementary_owners, z, config.flip_labels)
        _descend(state, 'g{}'.format(k), l_g, l_g)
        losses['loss_g{}'.format(k)] = l_g.item()

    losses['value'] = losses['loss_h'] - sum(
        losses['loss_h{}'.format(k)] for k in state.supplementary_owners)
    state.last_losses = losses
    state.iteration += 1
    return state


def loss_columns(config):
    """Column names of the loss timeline."""
    return (['iteration', 'loss_h'] +
            ['loss_h{}'.format(k) for k in config.supplementary_owners] +
            ['loss_g{}'.format(k) for k in range(config.K)] + ['value'])


@dataclass
class Timeline:
    """Per-iteration losses and periodic metric snapshots of a run."""

    loss_header: list
    losses: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)

    def add_losses(self, iteration, losses):
        """Append a row of losses for an iteration."""
        row = [iteration] + [losses[c] for c in self.loss_header[1:]]
        self.losses.append(row)

    def add_snapshot(self, iteration, metrics):
        """Append a metric snapshot (dict) taken after an iteration."""
        snap = {'iteration': iteration}
        snap.update(metrics)
        self.snapshots.append(snap)

    def snapshot_table(self):
        """Snapshots as (header, rows); header is the union of keys in order."""
        header = []
        for snap in self.snapshots:
            for key in snap:
                if key not in header:
                    header.append(key)
        rows = [[snap.get(key, '') for key in header] for snap in self.snapshots]
        return header, rows


def run(config, dataset, snapshot_fn=None, checkpoint_fn=None,
        log_interval=None):
    """Train the game for `config.total_iterations` iterations.

    :param config: `GameConfig`.
    :param dataset: array of real rows or `mixgan.data.ImageDataset`.
    :param snapshot_fn: optional callable(state) -> dict of metrics, called
        on the initial state and every `snapshot_interval` iterations.
    :param checkpoint_fn: optional callable(state), called every
        `checkpoint_interval` iterations.
    :param log_interval: iterations between progress log lines, defaults
        to the snapshot interval.

    :returns: (trained `GameState`, `Timeline`).
    :raises ConfigError: if the dataset is smaller than a batch.
    """
    n_rows = len(dataset)
    if n_rows == 0:
        raise ConfigError('The dataset is empty.')
    if n_rows < config.batch_size:
        raise ConfigError(
            'Dataset has {} rows, fewer than batch_size {}.'.format(
                n_rows, config.batch_size))
    state = init_state(config)
    timeline = Timeline(loss_columns(config))
    batches = mixgan.data.batch_iterator(
        dataset, config.batch_size, random_stream(config.seed, 'shuffle'))
    if log_interval is None:
        log_interval = config.snapshot_interval or 1000

    logger.info(
        'Training K={} generators ({} parameters in total) for {} '
        'iterations.'.format(
            config.K, state.parameter_count, config.total_iterations))
    if snapshot_fn is not None:
        timeline.add_snapshot(0, snapshot_fn(state))

    t0 = time.time()
    for _ in range(config.total_iterations):
        train_step(state, next(batches))
        it = state.iteration
        timeline.add_losses(it, state.last_losses)
        if log_interval and it % log_interval == 0:
            logger.info('Iteration {} ({:.1f}s): {}'.format(
                it, time.time() - t0, ', '.join(
                    '{}={:.4f}'.format(k, v)
                    for k, v in state.last_losses.items())))
        if (snapshot_fn is not None and config.snapshot_interval and
                it % config.snapshot_interval == 0):
            timeline.add_snapshot(it, snapshot_fn(state))
        if (checkpoint_fn is not None and config.checkpoint_interval and
                it % config.checkpoint_interval == 0):
            checkpoint_fn(state)
    return state, timeline
