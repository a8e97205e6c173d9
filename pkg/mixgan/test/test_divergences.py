import unittest

from hypothesis import given, settings, strategies as st
import numpy as np

from mixgan.common import ContractError, DimensionError, DomainError
import mixgan.divergences as dv


def _instance(seed, support, K):
    return dv.random_instance(np.random.default_rng(seed), support, K)


def _optimal_value(p_real, m, complement_weight=1.0):
    h = dv.optimal_adversarial(p_real, dv.mixture_pdf(m))
    hks = [dv.optimal_supplementary(m, k) for k in range(m.K)]
    return dv.value_from_definition(
        p_real, m, h, hks, complement_weight=complement_weight)


class Distributions(unittest.TestCase):

    def test_000_probabilities_must_sum_to_one(self):
        with self.assertRaises(ContractError):
            dv.DiscreteDistribution([0.5, 0.6])

    def test_001_probabilities_non_negative(self):
        with self.assertRaises(ContractError):
            dv.DiscreteDistribution([1.5, -0.5])

    def test_002_from_weights(self):
        p = dv.DiscreteDistribution.from_weights([1, 3])
        np.testing.assert_array_equal(p.probabilities, [0.25, 0.75])

    def test_003_probabilities_read_only(self):
        p = dv.DiscreteDistribution([0.5, 0.5])
        with self.assertRaises(ValueError):
            p.probabilities[0] = 1.0

    def test_004_mixture_support_mismatch(self):
        with self.assertRaises(DimensionError):
            dv.MixtureModel([[0.5, 0.5], [1.0, 0.0, 0.0]])

    def test_005_mixture_pdf_and_complement(self):
        m = dv.MixtureModel([[1, 0, 0], [0, 1, 0], [0, 0, 1]])
        np.testing.assert_allclose(
            dv.mixture_pdf(m).probabilities, [1 / 3] * 3)
        np.testing.assert_allclose(
            dv.complement_pdf(m, 0).probabilities, [0, 0.5, 0.5])

    def test_006_complement_of_single_component(self):
        m = dv.MixtureModel([[0.5, 0.5]])
        with self.assertRaises(DomainError):
            dv.complement_pdf(m, 0)

    def test_007_complement_requires_uniform_weights(self):
        m = dv.MixtureModel([[0.5, 0.5], [0.2, 0.8]], weights=[0.3, 0.7])
        with self.assertRaises(ContractError):
            dv.complement_pdf(m, 0)


class Divergences(unittest.TestCase):

    def test_000_kl_of_identical_is_zero(self):
        p = dv.DiscreteDistribution([0.2, 0.3, 0.5])
        self.assertEqual(dv.kl_divergence(p, p), 0.0)

    def test_001_kl_infinite_sentinel(self):
        self.assertEqual(
            dv.kl_divergence([0.5, 0.5], [1.0, 0.0]), np.inf)

    def test_002_kl_support_mismatch(self):
        with self.assertRaises(DimensionError):
            dv.kl_divergence([0.5, 0.5], [0.2, 0.3, 0.5])

    def test_003_js_of_disjoint_is_ln2(self):
        self.assertAlmostEqual(
            dv.js_divergence([1.0, 0.0], [0.0, 1.0]), np.log(2), places=15)

    def test_004_generalized_js_disjoint_uniform_is_ln_k(self):
        m = dv.MixtureModel(np.eye(4))
        self.assertAlmostEqual(dv.generalized_js(m), np.log(4), places=14)

    def test_005_entropy(self):
        self.assertAlmostEqual(dv.entropy([0.25] * 4), np.log(4), places=15)
        self.assertEqual(dv.entropy([1.0, 0.0]), 0.0)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2 ** 32 - 1), st.integers(2, 16), st.integers(2, 4))
    def test_006_generalized_js_bounded_by_weight_entropy(self, seed, support, K):
        _, m = _instance(seed, support, K)
        js = dv.generalized_js(m)
        self.assertGreaterEqual(js, -1e-15)
        self.assertLessEqual(js, dv.entropy(m.weights) + 1e-12)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2 ** 32 - 1), st.integers(2, 16))
    def test_007_js_symmetric_and_bounded(self, seed, support):
        p, m = _instance(seed, support, 1)
        q = m.components[0]
        self.assertAlmostEqual(
            dv.js_divergence(p, q), dv.js_divergence(q, p), places=14)
        self.assertLessEqual(dv.js_divergence(p, q), np.log(2) + 1e-15)


class OptimalResponses(unittest.TestCase):

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2 ** 32 - 1), st.integers(2, 16), st.integers(2, 4))
    def test_000_supplementary_responses_sum_to_one(self, seed, support, K):
        _, m = _instance(seed, support, K)
        total = sum(dv.optimal_supplementary(m, k) for k in range(K))
        np.testing.assert_allclose(total, 1.0, rtol=0, atol=1e-12)

    def test_001_adversarial_half_when_matched(self):
        p = dv.DiscreteDistribution([0.1, 0.2, 0.7])
        np.testing.assert_array_equal(dv.optimal_adversarial(p, p), 0.5)

    def test_002_undefined_points_are_nan(self):
        h = dv.optimal_adversarial([1.0, 0.0], [1.0, 0.0])
        self.assertEqual(h[0], 0.5)
        self.assertTrue(np.isnan(h[1]))

    def test_003_expected_supplementary_loss_weighting(self):
        m = dv.MixtureModel([[0.5, 0.5], [0.25, 0.75], [1.0, 0.0]])
        half = np.full(2, 0.5)
        for w in (1.0, 2.0):
            self.assertAlmostEqual(
                dv.expected_supplementary_loss(m, 0, half, w),
                (1 + w) * np.log(0.5), places=14)


class ValueFunction(unittest.TestCase):

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 2 ** 32 - 1), st.integers(2, 16), st.integers(2, 4))
    def test_000_identity_chain(self, seed, support, K):
        p_real, m = _instance(seed, support, K)
        v_def = _optimal_value(p_real, m)
        v_kl = dv.value_kl_form(p_real, m)
        v_js = dv.value_js_form(p_real, m)
        self.assertLessEqual(abs(v_def - v_kl), 1e-9)
        self.assertLessEqual(abs(v_kl - v_js), 1e-9)

    def test_001_equilibrium_value_is_ln4(self):
        p = dv.DiscreteDistribution([0.1, 0.2, 0.3, 0.4])
        m = dv.MixtureModel([p, p])
        self.assertAlmostEqual(dv.value_js_form(p, m), np.log(4), delta=1e-12)
        self.assertAlmostEqual(dv.value_kl_form(p, m), np.log(4), delta=1e-12)
        self.assertAlmostEqual(_optimal_value(p, m), np.log(4), delta=1e-12)

    def test_002_terms_recombine(self):
        p_real, m = _instance(7, 6, 3)
        t = dv.value_terms(p_real, m)
        v = (2 * t['adversarial_js'] - 3 * t['component_js'] -
             3 * t['complement_js'] + t['constant'])
        self.assertAlmostEqual(v, dv.value_js_form(p_real, m), places=14)

    def test_003_separated_components_lower_the_value(self):
        # V is minimised by dissimilar components covering the data
        p_real = dv.DiscreteDistribution([0.5, 0.5])
        apart = dv.MixtureModel([[1.0, 0.0], [0.0, 1.0]])
        together = dv.MixtureModel([[0.5, 0.5], [0.5, 0.5]])
        self.assertLess(
            dv.value_js_form(p_real, apart),
            dv.value_js_form(p_real, together))

    def test_004_value_needs_two_components(self):
        p = dv.DiscreteDistribution([0.5, 0.5])
        with self.assertRaises(DomainError):
            dv.value_kl_form(p, dv.MixtureModel([p]))

    def test_005_mismatched_table_count(self):
        p_real, m = _instance(0, 3, 2)
        h = dv.optimal_adversarial(p_real, dv.mixture_pdf(m))
        with self.assertRaises(ContractError):
            dv.value_from_definition(p_real, m, h, [h])


class WorkedExamples(unittest.TestCase):

    def test_000_three_component_mixture(self):
        m = dv.MixtureModel([[0.5, 0.5], [0.2, 0.8], [0.9, 0.1]])
        np.testing.assert_allclose(
            dv.mixture_pdf(m).probabilities, [8 / 15, 7 / 15], atol=1e-12)
        np.testing.assert_allclose(
            dv.complement_pdf(m, 0).probabilities, [0.55, 0.45], atol=1e-12)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2 ** 32 - 1), st.integers(2, 16), st.integers(2, 5))
    def test_001_mean_of_complements_is_mixture(self, seed, support, K):
        _, m = _instance(seed, support, K)
        mean = np.mean(
            [dv.complement_pdf(m, k).probabilities for k in range(K)], axis=0)
        np.testing.assert_allclose(
            mean, dv.mixture_pdf(m).probabilities, rtol=0, atol=1e-12)

    def test_002_kl_by_hand(self):
        self.assertAlmostEqual(
            dv.kl_divergence([0.5, 0.5], [0.25, 0.75]),
            0.5 * np.log(2) + 0.5 * np.log(2 / 3), places=14)
        self.assertAlmostEqual(
            dv.kl_divergence([0.5, 0.5], [0.25, 0.75]), 0.143841, places=6)
        self.assertAlmostEqual(
            dv.kl_divergence([1.0, 0.0], [0.5, 0.5]), np.log(2), places=15)

    def test_003_two_point_js_by_hand(self):
        # each side against the average [0.375, 0.625]
        a = 0.5 * np.log(0.5 / 0.375) + 0.5 * np.log(0.5 / 0.625)
        b = 0.25 * np.log(0.25 / 0.375) + 0.75 * np.log(0.75 / 0.625)
        js = dv.js_divergence([0.5, 0.5], [0.25, 0.75])
        self.assertAlmostEqual(js, 0.5 * (a + b), places=13)
        self.assertAlmostEqual(js, 0.033822, places=6)

    def test_004_js_grows_with_separation(self):
        values = [
            dv.generalized_js(dv.MixtureModel(
                [[0.5 + t, 0.5 - t], [0.5 - t, 0.5 + t]]))
            for t in np.linspace(0.0, 0.5, 11)]
        self.assertEqual(values[0], 0.0)
        self.assertTrue(np.all(np.diff(values) > 0))
        self.assertAlmostEqual(values[-1], np.log(2), places=14)

    def test_005_optimal_responses_by_hand(self):
        m = dv.MixtureModel([[0.8, 0.2], [0.2, 0.8]])
        np.testing.assert_allclose(
            dv.optimal_supplementary(m, 0), [0.8, 0.2], atol=1e-12)
        np.testing.assert_allclose(
            dv.optimal_adversarial([0.6, 0.4], [0.2, 0.8]), [0.75, 1 / 3],
            atol=1e-12)

    def test_006_constant_half_adversary_is_suboptimal(self):
        p_real = dv.DiscreteDistribution([0.6, 0.4])
        m = dv.MixtureModel([[0.3, 0.7], [0.1, 0.9]])
        hks = [dv.optimal_supplementary(m, k) for k in range(m.K)]
        half = np.full(2, 0.5)
        self.assertLess(
            dv.value_from_definition(p_real, m, half, hks),
            _optimal_value(p_real, m))

    def test_007_matched_mixture_value_by_hand(self):
        m = dv.MixtureModel([[0.8, 0.2], [0.2, 0.8]])
        p_mix = dv.mixture_pdf(m)
        expected = (np.log(16) - np.log(4) -
                    2 * dv.kl_divergence(m.components[0], p_mix) -
                    2 * dv.kl_divergence(m.components[1], p_mix))
        v = dv.value_kl_form(p_mix, m)
        self.assertAlmostEqual(v, expected, places=12)
        self.assertAlmostEqual(v, np.log(4) - 4 * (
            0.8 * np.log(1.6) + 0.2 * np.log(0.4)), places=12)
        self.assertLess(v, np.log(4))
        self.assertAlmostEqual(v, dv.value_js_form(p_mix, m), places=12)
