import contextlib
import io
import unittest
from unittest import mock

import numpy as np

import mixgan.divergences
import mixgan.tensor as T
import mixgan.verify
from mixgan.options import RunConfig


class Checks(unittest.TestCase):

    def test_000_identity_checks_pass(self):
        checks = mixgan.verify.identity_checks(n_instances=20, seed=1)
        self.assertEqual(len(checks), 2)
        for check in checks:
            self.assertTrue(check.passed, str(check))

    def test_001_algebra_checks_pass(self):
        for check in mixgan.verify.algebra_checks(seed=2):
            self.assertTrue(check.passed, str(check))

    def test_002_gradient_checks_pass(self):
        checks = mixgan.verify.gradient_checks(seed=0)
        # L_h, one L_hk per generator, generator losses with and without flip
        self.assertEqual(len(checks), 1 + 2 + 4)
        for check in checks:
            self.assertTrue(check.passed, str(check))

    def test_003_check_report_line(self):
        check = mixgan.verify.Check('thing', 2e-3, 1e-4)
        self.assertFalse(check.passed)
        line = str(check)
        self.assertTrue(line.startswith('FAIL'))
        self.assertIn('1e-04', line)

    def test_004_non_finite_deviation_fails(self):
        check = mixgan.verify.Check(
            'nan', mixgan.verify._max_deviation([0.0, np.nan]), 1.0)
        self.assertFalse(check.passed)

    def test_005_numerical_gradient_of_quadratic(self):
        p = T.Tensor(np.array([[1.0, -2.0], [0.5, 3.0]]))
        grad = mixgan.verify.numerical_gradient(lambda: T.sum(p * p), p)
        np.testing.assert_allclose(grad, 2 * p.data, rtol=1e-6)
        np.testing.assert_array_equal(p.data, [[1.0, -2.0], [0.5, 3.0]])


class Command(unittest.TestCase):

    def _run(self):
        out = io.StringIO()
        with contextlib.redirect_stdout(out):
            status = mixgan.verify.cmd_verify(RunConfig(task='verify'))
        return status, out.getvalue()

    def test_000_all_pass(self):
        status, text = self._run()
        self.assertEqual(status, 0)
        self.assertNotIn('FAIL', text)
        self.assertIn('tolerance', text)

    def test_001_sign_error_detected(self):
        original = mixgan.divergences.value_js_form

        def broken(p_real, mixture):
            return -original(p_real, mixture)

        with mock.patch('mixgan.divergences.value_js_form', broken):
            status, text = self._run()
        self.assertEqual(status, 1)
        self.assertIn('FAIL', text)
