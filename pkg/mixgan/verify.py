"""Self-checks of the value-function identities and of the gradients."""
from dataclasses import dataclass

import numpy as np

from mixgan.common import get_named_logger, random_stream
import mixgan.divergences as dv
import mixgan.game
import mixgan.models
import mixgan.tensor as T

logger = get_named_logger('Verify')

IDENTITY_TOLERANCE = 1e-9
ALGEBRA_TOLERANCE = 1e-12
GRADIENT_TOLERANCE = 1e-4
FD_STEP = 1e-6


@dataclass
class Check:
    """Outcome of one verification check."""

    name: str
    max_deviation: float
    tolerance: float

    @property
    def passed(self):
        return bool(self.max_deviation <= self.tolerance)

    def __str__(self):
        return '{:4s} {:40s} max deviation {:.3e} (tolerance {:.0e})'.format(
            'PASS' if self.passed else 'FAIL', self.name, self.max_deviation,
            self.tolerance)


def _max_deviation(deviations):
    devs = np.asarray(list(deviations), dtype=np.float64)
    if devs.size == 0:
        return 0.0
    if not np.all(np.isfinite(devs)):
        return np.inf
    return float(devs.max())


def identity_checks(n_instances=100, seed=0):
    """Compare the three forms of the value at the optimal responses.

    :param n_instances: random instances, support 2-16 and K in {2, 3, 4}.
    :param seed: seed of the instance stream.

    :returns: list of `Check`.
    """
    rng = random_stream(seed, 'verify/instances')
    def_vs_kl, kl_vs_js = [], []
    for _ in range(n_instances):
        support = int(rng.integers(2, 17))
        K = int(rng.integers(2, 5))
        p_real, m = dv.random_instance(rng, support, K)
        mix = dv.mixture_pdf(m)
        h = dv.optimal_adversarial(p_real, mix)
        hks = [dv.optimal_supplementary(m, k) for k in range(K)]
        v_def = dv.value_from_definition(p_real, m, h, hks)
        v_kl = dv.value_kl_form(p_real, m)
        v_js = dv.value_js_form(p_real, m)
        def_vs_kl.append(abs(v_def - v_kl))
        kl_vs_js.append(abs(v_kl - v_js))
    return [
        Check('value: definition vs KL form', _max_deviation(def_vs_kl),
              IDENTITY_TOLERANCE),
        Check('value: KL form vs JS form', _max_deviation(kl_vs_js),
              IDENTITY_TOLERANCE)]


def algebra_checks(n_instances=20, seed=0):
    """Checks on the optimal discriminator responses.

    :returns: list of `Check`.
    """
    rng = random_stream(seed, 'verify/algebra')
    sums, halves = [], []
    for _ in range(n_instances):
        support = int(rng.integers(2, 17))
        K = int(rng.integers(2, 5))
        _, m = dv.random_instance(rng, support, K)
        total = sum(dv.optimal_supplementary(m, k) for k in range(K))
        sums.append(np.max(np.abs(total - 1.0)))
        mix = dv.mixture_pdf(m)
        halves.append(np.max(np.abs(dv.optimal_adversarial(mix, mix) - 0.5)))
    p = dv.DiscreteDistribution.from_weights(rng.random(5))
    equal = dv.MixtureModel([p, p])
    v = dv.value_js_form(p, equal)
    return [
        Check('optimal h_k sum to one', _max_deviation(sums),
              ALGEBRA_TOLERANCE),
        Check('optimal h is 1/2 on matched data', _max_deviation(halves),
              ALGEBRA_TOLERANCE),
        Check('value is ln 4 at equilibrium (K=2)', abs(v - np.log(4.0)),
              ALGEBRA_TOLERANCE)]


def numerical_gradient(loss_fn, param, step=FD_STEP):
    """Central finite-difference gradient of a scalar loss w.r.t. a tensor.

    :param loss_fn: callable returning a scalar `Tensor` computed from the
        current value of `param`.
    :param param: `Tensor` whose data is perturbed in place and restored.
    """
    grad = np.zeros(param.shape)
    for idx in np.ndindex(*param.shape):
        orig = param.data[idx]
        param.data[idx] = orig + step
        up = loss_fn().item()
        param.data[idx] = orig - step
        down = loss_fn().item()
        param.data[idx] = orig
        grad[idx] = (up - down) / (2.0 * step)
    return grad


def relative_error(analytic, numeric, floor=1e-5):
    """Elementwise |a - n| / max(|a|, |n|, floor), maximised."""
    a, n = np.asarray(analytic), np.asarray(numeric)
    scale = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
    return float(np.max(np.abs(a - n) / scale))


def gradient_error(loss_fn, params, step=FD_STEP):
    """Largest relative error between tape and finite-difference gradients."""
    analytic = T.backward(loss_fn(), params)
    errors = [
        relative_error(a, numerical_gradient(loss_fn, p, step))
        for a, p in zip(analytic, params)]
    return _max_deviation(errors)


def tiny_game(seed=0, K=2, batch_size=4):
    """A small game with every kind of discriminator, for gradient checks."""
    config = mixgan.game.GameConfig(
        K=K, supplementary_mode='full',
        generator_spec=mixgan.models.MlpSpec((3, 5, 2), output_activation='identity'),
        batch_size=batch_size, total_iterations=0, seed=seed)
    return mixgan.game.init_state(config)


def gradient_checks(seed=0):
    """Finite-difference checks of every training loss on a tiny game.

    :returns: list of `Check`.
    """
    state = tiny_game(seed)
    n = state.config.batch_size
    rng = random_stream(seed, 'verify/gradients')
    real = rng.normal(size=(n, state.config.sample_dim))
    fake, _ = mixgan.game.sample_mixture(
        state.generators, state.sampler, n, rng=rng)
    batches = [
        mixgan.game.sample_generator(g, state.sampler, n)
        for g in state.generators]
    z = mixgan.models.sample_latent(state.sampler, n)

    checks = [Check(
        'gradient of L_h', gradient_error(
            lambda: mixgan.game.adversarial_loss(state.adversarial, real, fake),
            state.adversarial.parameters()),
        GRADIENT_TOLERANCE)]
    for k, h_k in zip(state.supplementary_owners, state.supplementary):
        checks.append(Check(
            'gradient of L_h{}'.format(k), gradient_error(
                lambda: mixgan.game.supplementary_loss(h_k, batches, k),
                h_k.parameters()),
            GRADIENT_TOLERANCE))
    for flip in (False, True):
        for k, g in enumerate(state.generators):
            checks.append(Check(
                'gradient of generator {} loss{}'.format(
                    k, ' (flipped labels)' if flip else ''),
                gradient_error(
                    lambda: mixgan.game.generator_loss(
                        g, k, state.adversarial, state.supplementary,
                        state.supplementary_owners, z, flip),
                    g.parameters()),
                GRADIENT_TOLERANCE))
    return checks


def run_checks(seed=0, n_instances=100):
    """Run every check.

    :returns: list of `Check`.
    """
    checks = []
    for group in (identity_checks(n_instances, seed), algebra_checks(seed=seed),
                  gradient_checks(seed)):
        for check in group:
            logger.debug(str(check))
        checks.extend(group)
    return checks


def cmd_verify(config):
    """Entry point for `mixgan verify`: print results, return exit status.

    :param config: `RunConfig`, only the seed is used.
    """
    checks = run_checks(seed=config.seed)
    for check in checks:
        print(check)
    failed = [c for c in checks if not c.passed]
    if failed:
        logger.warning('{} of {} checks failed.'.format(len(failed), len(checks)))
        return 1
    logger.info('All {} checks passed.'.format(len(checks)))
    return 0
