import csv
import math
import os
import tempfile
import unittest

import numpy as np

from mixgan.common import ConfigError, random_stream
import mixgan.game
import mixgan.metrics
from mixgan.options import RunConfig
import mixgan.training

slow = os.environ.get('MIXGAN_SLOW') == '1'
mnist_images = os.environ.get('MIXGAN_MNIST_IMAGES')
mnist_labels = os.environ.get('MIXGAN_MNIST_LABELS')


def _cluster(center, n, seed):
    rng = np.random.default_rng(seed)
    return rng.normal(size=(n, 2)) * 0.05 + center


class SeparationMetrics(unittest.TestCase):

    def setUp(self):
        self.config = RunConfig()

    def test_000_separated(self):
        row = mixgan.training.separation_metrics(
            self.config, [_cluster([-2, 0], 50, 0), _cluster([2, 0], 50, 1)])
        self.assertEqual((row['dominant_mode_1'], row['dominant_mode_2']), (0, 1))
        self.assertTrue(row['success'])
        self.assertFalse(row['collapsed'])
        self.assertEqual(row['overlap'], 0.0)

    def test_001_nothing_assigned(self):
        far = np.full((10, 2), 50.0)
        row = mixgan.training.separation_metrics(
            self.config, [far, _cluster([2, 0], 10, 1)])
        self.assertEqual(row['dominant_mode_1'], -1)
        self.assertTrue(math.isnan(row['purity_1']))
        self.assertEqual(row['unassigned_1'], 10)
        self.assertTrue(math.isnan(row['overlap']))
        self.assertFalse(row['success'])

    def test_002_collapse_after_success(self):
        monitor = mixgan.metrics.CollapseMonitor()
        apart = [_cluster([-2, 0], 30, 0), _cluster([2, 0], 30, 1)]
        same = [_cluster([2, 0], 30, 2), _cluster([2, 0], 30, 3)]
        flags = [
            mixgan.training.separation_metrics(self.config, s, monitor)['collapsed']
            for s in (apart, same)]
        self.assertEqual(flags, [False, True])

    def test_003_single_generator_columns(self):
        row = mixgan.training.separation_metrics(
            self.config, [_cluster([2, 0], 10, 0)])
        self.assertNotIn('overlap', row)
        self.assertEqual(row['dominant_mode_1'], 1)


class AffinityMetrics(unittest.TestCase):

    def test_000_closest_digit(self):
        means = {3: np.eye(4)[0], 8: np.eye(4)[1]}
        samples = [np.tile(np.eye(4)[1], (5, 1)), np.tile([1.0, 0.2, 0, 0], (5, 1))]
        row = mixgan.training.affinity_metrics(samples, means)
        self.assertEqual(row['closest_digit_1'], 8)
        self.assertEqual(row['closest_digit_2'], 3)
        self.assertAlmostEqual(row['affinity_1_digit8'], 1.0)


class SampleFromState(unittest.TestCase):

    def setUp(self):
        config = RunConfig(K=2, latent_dim=3, hidden_widths=(4,), batch_size=4)
        self.state = mixgan.game.init_state(config.game_config())

    def test_000_generator_rows_match_direct_sampling(self):
        samples, provenance = mixgan.training.sample_from_state(
            self.state, 6, '2', random_stream(0, 'sample'))
        self.assertIsNone(provenance)
        self.assertEqual(samples.shape, (6, 2))

    def test_001_mixture(self):
        samples, provenance = mixgan.training.sample_from_state(
            self.state, 20, 'mixture', random_stream(0, 'sample'))
        self.assertEqual(samples.shape, (20, 2))
        self.assertEqual(provenance.shape, (20,))

    def test_002_empty(self):
        samples, provenance = mixgan.training.sample_from_state(
            self.state, 0, 'mixture', random_stream(0, 'sample'))
        self.assertEqual(samples.shape, (0, 2))
        self.assertEqual(provenance.size, 0)

    def test_003_bad_index(self):
        for index in ('0', '3', '-1'):
            with self.assertRaises(ConfigError):
                mixgan.training.sample_from_state(
                    self.state, 1, index, random_stream(0, 'sample'))


class TrainRun(unittest.TestCase):

    def test_000_summary_and_final_snapshot(self):
        config = RunConfig(
            iterations=3, snapshot_interval=2, batch_size=8, n_real=32,
            n_eval=20, checkpoint_interval=2)
        with tempfile.TemporaryDirectory() as tmp:
            summary = mixgan.training.train_run(config, 4, tmp)
            with open(os.path.join(tmp, 'snapshots.csv'), newline='') as fh:
                rows = list(csv.reader(fh))
            self.assertTrue(os.path.isfile(
                os.path.join(tmp, 'checkpoint_2.mggan')))
            restored, state = mixgan.training.load_trained_state(
                os.path.join(tmp, 'checkpoint.mggan'))
        self.assertEqual(summary['seed'], 4)
        self.assertEqual(summary['iteration'], 3)
        self.assertEqual([r[0] for r in rows[1:]], ['0', '2', '3'])
        self.assertEqual(restored.seed, 4)
        self.assertEqual(state.iteration, 3)


@unittest.skipUnless(slow, 'set MIXGAN_SLOW=1 for full-length training runs')
class Acceptance(unittest.TestCase):

    def _sweep(self, config):
        with tempfile.TemporaryDirectory() as tmp:
            mixgan.training.cmd_train(config.merge({'out': tmp}))
            with open(os.path.join(tmp, 'sweep.csv'), newline='') as fh:
                return list(csv.DictReader(fh))

    def test_000_synthetic_modes_separate(self):
        rows = self._sweep(RunConfig.for_task(
            'train-synthetic', seeds=tuple(range(10))))
        self.assertGreaterEqual(sum(r['success'] == 'true' for r in rows), 7)

    @unittest.skipUnless(mnist_images and mnist_labels,
                         'MIXGAN_MNIST_IMAGES and MIXGAN_MNIST_LABELS not set')
    def test_001_mnist_generators_specialise(self):
        rows = self._sweep(RunConfig.for_task(
            'train-mnist', seeds=tuple(range(5)), mnist_images=mnist_images,
            mnist_labels=mnist_labels))
        distinct = sum(
            r['closest_digit_1'] != r['closest_digit_2'] for r in rows)
        self.assertGreaterEqual(distinct, 3)
