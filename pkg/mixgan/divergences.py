"""Exact divergences and value functions on a finite support.

Every quantity here is an exact weighted sum over the support, never a
sampled estimate, so this module serves as the reference the training code
and the sample-based metrics are checked against.

Conventions: 0 * ln(0 / q) = 0, and a term p * ln(p / 0) with p > 0 is
`numpy.inf`. Response tables (discriminator outputs per support point) are
float arrays in which `numpy.nan` marks points where the response is
undefined.
"""
import numpy as np

from mixgan.common import ContractError, DimensionError, DomainError

SUM_TOLERANCE = 1e-12


class DiscreteDistribution(object):
    """A probability vector over an indexed finite support."""

    def __init__(self, probabilities):
        """Create a distribution, validating the probability vector.

        :param probabilities: 1D array-like of non-negative floats summing
            to one within `SUM_TOLERANCE`.
        """
        p = np.array(probabilities, dtype=np.float64)
        if p.ndim != 1 or p.size == 0:
            raise DimensionError(
                'Probabilities must be a non-empty vector, got shape {}.'.format(
                    p.shape))
        if np.any(p < 0) or not np.all(np.isfinite(p)):
            raise ContractError(
                'Probabilities must be finite and non-negative: {}.'.format(p))
        if abs(p.sum() - 1.0) > SUM_TOLERANCE:
            raise ContractError(
                'Probabilities sum to {!r}, not 1.'.format(p.sum()))
        p.flags.writeable = False
        self.probabilities = p

    @classmethod
    def from_weights(cls, weights, floor=0.0):
        """Normalise non-negative weights (e.g. counts) into a distribution.

        :param weights: array-like of non-negative numbers.
        :param floor: each weight is raised to at least this value first.
        """
        w = np.maximum(np.asarray(weights, dtype=np.float64), floor)
        total = w.sum()
        if total <= 0:
            raise ContractError('Cannot normalise weights with zero total.')
        return cls(w / total)

    def __len__(self):
        return self.probabilities.size

    def __repr__(self):
        return 'DiscreteDistribution({})'.format(
            np.array2string(self.probabilities, precision=6))

    def __eq__(self, other):
        if not isinstance(other, DiscreteDistribution):
            return NotImplemented
        return np.array_equal(self.probabilities, other.probabilities)

    __hash__ = None


def _probs(p):
    if isinstance(p, DiscreteDistribution):
        return p.probabilities
    return np.asarray(p, dtype=np.float64)


class MixtureModel(object):
    """K component distributions on a shared support and their weights."""

    def __init__(self, components, weights=None):
        """Create a mixture.

        :param components: sequence of `DiscreteDistribution` (or vectors).
        :param weights: optional weights pi_1..pi_K; uniform 1/K if omitted.
        """
        components = tuple(
            c if isinstance(c, DiscreteDistribution)
            else DiscreteDistribution(c) for c in components)
        if len(components) == 0:
            raise ContractError('A mixture needs at least one component.')
        sizes = set(len(c) for c in components)
        if len(sizes) != 1:
            raise DimensionError(
                'Mixture components have different support sizes: {}.'.format(
                    sorted(sizes)))
        k = len(components)
        if weights is None:
            weights = np.full(k, 1.0 / k)
        weights = np.array(weights, dtype=np.float64)
        if weights.shape != (k,):
            raise DimensionError(
                'Got {} weights for {} components.'.format(weights.size, k))
        if np.any(weights < 0) or abs(weights.sum() - 1.0) > SUM_TOLERANCE:
            raise ContractError(
                'Mixture weights must be non-negative and sum to 1: {}.'.format(
                    weights))
        self.components = components
        self.weights = weights

    @property
    def K(self):
        """Number of components."""
        return len(self.components)

    @property
    def support_size(self):
        """Size of the shared support."""
        return len(self.components[0])

    @property
    def is_uniform(self):
        """Whether all weights equal 1/K."""
        return bool(np.allclose(
            self.weights, 1.0 / self.K, rtol=0, atol=SUM_TOLERANCE))

    def stacked(self):
        """Component probabilities as a [K x support] array."""
        return np.stack([c.probabilities for c in self.components])

    def require_uniform(self, what):
        """Raise a `ContractError` unless the weights are uniform."""
        if not self.is_uniform:
            raise ContractError(
                '{} is only defined for uniform weights, got {}.'.format(
                    what, self.weights))


def _check_support(p, q):
    if p.shape != q.shape:
        raise DimensionError(
            'Distributions have different supports: {} and {}.'.format(
                p.shape, q.shape))


def mixture_pdf(m):
    """Pointwise weighted sum of the components of a mixture."""
    mix = m.weights @ m.stacked()
    # renormalise away rounding so the result validates
    return DiscreteDistribution(mix / mix.sum())


def complement_pdf(m, k):
    """Equi-probable mixture of every component except component k.

    :param m: `MixtureModel` with uniform weights and K >= 2.
    :param k: zero-based component index.
    """
    if m.K < 2:
        raise DomainError('The complement of a single-component mixture is undefined.')
    m.require_uniform('The complement distribution')
    if not 0 <= k < m.K:
        raise ContractError('Component index {} out of range for K={}.'.format(
            k, m.K))
    others = np.delete(m.stacked(), k, axis=0)
    comp = others.sum(axis=0) / (m.K - 1)
    return DiscreteDistribution(comp / comp.sum())


def entropy(p):
    """Shannon entropy (natural log) with 0 ln 0 = 0."""
    p = _probs(p)
    nz = p > 0
    return float(-np.sum(p[nz] * np.log(p[nz])))


def kl_divergence(p, q):
    """Kullback-Leibler divergence KL(p || q).

    :returns: float, `numpy.inf` if p puts mass where q has none.
    :raises DimensionError: if the supports differ.
    """
    p, q = _probs(p), _probs(q)
    _check_support(p, q)
    nz = p > 0
    if np.any(q[nz] == 0):
        return np.inf
    return float(np.sum(p[nz] * np.log(p[nz] / q[nz])))


def generalized_js(m):
    """Weighted Jensen-Shannon divergence of the components of a mixture.

    sum_k pi_k * KL(p_k || sum_j pi_j p_j); bounded by the entropy of the
    weights, i.e. ln K for uniform weights.
    """
    mix = mixture_pdf(m)
    total = 0.0
    for w, c in zip(m.weights, m.components):
        if w > 0:
            total += w * kl_divergence(c, mix)
    return float(total)


def js_divergence(p, q):
    """Classic two-distribution Jensen-Shannon divergence, in [0, ln 2]."""
    return generalized_js(MixtureModel([p, q]))


def optimal_supplementary(m, k):
    """Optimal response of the k-th supplementary discriminator.

    h_k*(x) = p_k(x) / (K * p_mix(x)), `numpy.nan` where p_mix(x) = 0.
    """
    m.require_uniform('The optimal supplementary response')
    mix = mixture_pdf(m).probabilities
    pk = m.components[k].probabilities
    table = np.full(mix.shape, np.nan)
    defined = mix > 0
    table[defined] = pk[defined] / (m.K * mix[defined])
    return table


def optimal_adversarial(p_real, p_mix):
    """Optimal response of the adversarial discriminator.

    h*(x) = p_real(x) / (p_mix(x) + p_real(x)), `numpy.nan` where both vanish.
    """
    pr, pm = _probs(p_real), _probs(p_mix)
    _check_support(pr, pm)
    total = pr + pm
    table = np.full(pr.shape, np.nan)
    defined = total > 0
    table[defined] = pr[defined] / total[defined]
    return table


def _expected_log(p, values):
    """Exact E_p[ln values], ignoring points with no mass."""
    nz = p > 0
    v = np.asarray(values, dtype=np.float64)
    _check_support(p, v)
    if np.any(np.isnan(v[nz])):
        raise ContractError(
            'Response table is undefined where the distribution has mass.')
    if np.any(v[nz] <= 0):
        return -np.inf
    return float(np.sum(p[nz] * np.log(v[nz])))


def expected_adversarial_loss(p_real, p_mix, h):
    """Exact L_h = E_real ln h + E_mix ln(1 - h)."""
    pr, pm = _probs(p_real), _probs(p_mix)
    h = np.asarray(h, dtype=np.float64)
    return _expected_log(pr, h) + _expected_log(pm, 1.0 - h)


def expected_supplementary_loss(m, k, h_k, complement_weight=1.0):
    """Exact L_hk = E_k ln h_k + w * E_complement ln(1 - h_k).

    :param m: `MixtureModel` with uniform weights.
    :param k: zero-based component index.
    :param h_k: response table of the k-th supplementary discriminator.
    :param complement_weight: weight w of the complement term. The sampled
        training loss sums one term per other generator, i.e. w = K - 1;
        the closed-form value functions correspond to w = 1.
    """
    pk = m.components[k].probabilities
    pkbar = complement_pdf(m, k).probabilities
    h_k = np.asarray(h_k, dtype=np.float64)
    return (_expected_log(pk, h_k) +
            complement_weight * _expected_log(pkbar, 1.0 - h_k))


def value_from_definition(p_real, m, h, hks, complement_weight=1.0):
    """Value of the game, V = L_h - sum_k L_hk, by exact expectation.

    :param p_real: `DiscreteDistribution` of the real data.
    :param m: `MixtureModel` of the generators (uniform weights).
    :param h: response table of the adversarial discriminator.
    :param hks: K response tables of the supplementary discriminators.
    :param complement_weight: see `expected_supplementary_loss`.

    :returns: float, possibly +/- `numpy.inf`.
    """
    if len(hks) != m.K:
        raise ContractError(
            'Expected {} supplementary tables, got {}.'.format(m.K, len(hks)))
    mix = mixture_pdf(m)
    _check_support(_probs(p_real), mix.probabilities)
    l_h = expected_adversarial_loss(p_real, mix, h)
    l_hk = [
        expected_supplementary_loss(m, k, hk, complement_weight)
        for k, hk in enumerate(hks)]
    return float(l_h - np.sum(l_hk))


def _value_constant(K):
    return -K * np.log((K - 1) / K ** 2)


def _log_ratio_expectation(p, total):
    """E_p ln(p / total) with 0 ln 0 = 0."""
    nz = p > 0
    return float(np.sum(p[nz] * np.log(p[nz] / total[nz])))


def value_kl_form(p_real, m):
    """Value of the game at the optimal responses, written with KL terms.

    The first two terms are log-ratios against the pointwise sum
    p_mix + p_real (not their average).
    """
    m.require_uniform('The KL form of the value')
    if m.K < 2:
        raise DomainError('The value function needs K >= 2.')
    pr = _probs(p_real)
    mix = mixture_pdf(m)
    pm = mix.probabilities
    _check_support(pr, pm)
    total = pr + pm
    value = _log_ratio_expectation(pr, total) + \
        _log_ratio_expectation(pm, total)
    for k, c in enumerate(m.components):
        value -= kl_divergence(c, mix)
        value -= kl_divergence(complement_pdf(m, k), mix)
    return float(value + _value_constant(m.K))


def value_terms(p_real, m):
    """Named terms of the JS form of the value.

    :returns: dict with 'adversarial_js' (JS between mixture and data),
        'component_js', 'complement_js' and 'constant', so that
        V = 2 * adversarial_js - K * component_js - K * complement_js
        + constant.
    """
    m.require_uniform('The JS form of the value')
    if m.K < 2:
        raise DomainError('The value function needs K >= 2.')
    mix = mixture_pdf(m)
    complements = MixtureModel(
        [complement_pdf(m, k) for k in range(m.K)])
    return {
        'adversarial_js': js_divergence(mix, p_real),
        'component_js': generalized_js(m),
        'complement_js': generalized_js(complements),
        'constant': float(_value_constant(m.K) - np.log(4.0)),
    }


def value_js_form(p_real, m):
    """Value of the game at the optimal responses, written with JS terms."""
    t = value_terms(p_real, m)
    return float(
        2.0 * t['adversarial_js'] - m.K * t['component_js'] -
        m.K * t['complement_js'] + t['constant'])


def random_instance(rng, support_size, K, floor=1e-3):
    """Draw a random data distribution and uniform K-mixture.

    Densities are floored then renormalised so no term hits infinity.

    :param rng: `numpy.random.Generator`.
    :param support_size: int, size of the support.
    :param K: number of components.
    :param floor: minimum raw density before renormalisation.

    :returns: (p_real `DiscreteDistribution`, `MixtureModel`).
    """
    def draw():
        return DiscreteDistribution.from_weights(
            rng.random(support_size), floor=floor)
    return draw(), MixtureModel([draw() for _ in range(K)])
