import gzip
import os
import tempfile
import unittest

import numpy as np

from mixgan.common import ContractError, DataError, DataFormatError
import mixgan.data as data

MNIST_IMAGES = os.environ.get('MIXGAN_MNIST_IMAGES')
MNIST_LABELS = os.environ.get('MIXGAN_MNIST_LABELS')


def fixture_images(n=6, seed=0):
    rng = np.random.default_rng(seed)
    return rng.integers(0, 256, size=(n, 28, 28), dtype=np.uint8)


class GaussianMixture(unittest.TestCase):

    def test_000_default_target(self):
        spec = data.default_two_mode_spec()
        np.testing.assert_array_equal(spec.center_array, [[-2, 0], [2, 0]])
        self.assertEqual(spec.sigma, 0.1)
        self.assertEqual(spec.weights, (0.5, 0.5))

    def test_001_samples_near_their_modes(self):
        spec = data.default_two_mode_spec()
        samples, modes = data.sample_gaussian_mixture(spec, 2000, 0)
        dist = np.linalg.norm(samples - spec.center_array[modes], axis=1)
        self.assertLess(dist.max(), 0.7)
        self.assertAlmostEqual(modes.mean(), 0.5, delta=0.05)

    def test_002_reproducible(self):
        spec = data.default_two_mode_spec()
        a, _ = data.sample_gaussian_mixture(spec, 10, 3)
        b, _ = data.sample_gaussian_mixture(spec, 10, 3)
        np.testing.assert_array_equal(a, b)

    def test_003_invalid_spec(self):
        with self.assertRaises(ContractError):
            data.GaussianMixtureSpec(((0, 0),), sigma=0.0)
        with self.assertRaises(ContractError):
            data.GaussianMixtureSpec(((0, 0), (1, 1)), weights=(0.2, 0.2))

    def test_004_sample_count(self):
        with self.assertRaises(ContractError):
            data.sample_gaussian_mixture(data.default_two_mode_spec(), 0, 0)


class Idx(unittest.TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.images = os.path.join(self.tmp.name, 'images.idx')
        self.labels = os.path.join(self.tmp.name, 'labels.idx')
        self.raw = fixture_images()
        data.write_idx_images(self.images, self.raw)
        data.write_idx_labels(self.labels, [0, 1, 2, 1, 0, 7])

    def tearDown(self):
        self.tmp.cleanup()

    def test_000_round_trip(self):
        images = data.load_idx_images(self.images)
        self.assertEqual(images.shape, (6, 784))
        restored = np.round(images * 255).astype(np.uint8).reshape(6, 28, 28)
        np.testing.assert_array_equal(restored, self.raw)
        np.testing.assert_array_equal(
            data.load_idx_labels(self.labels), [0, 1, 2, 1, 0, 7])

    def test_001_rewrite_is_byte_identical(self):
        other = os.path.join(self.tmp.name, 'again.idx')
        data.write_idx_images(other, self.raw)
        with open(self.images, 'rb') as a, open(other, 'rb') as b:
            self.assertEqual(a.read(), b.read())

    def test_002_header_is_big_endian(self):
        with open(self.images, 'rb') as fh:
            header = fh.read(16)
        self.assertEqual(header, bytes.fromhex(
            '00000803' '00000006' '0000001c' '0000001c'))

    def test_003_wrong_magic_reported(self):
        with self.assertRaises(DataFormatError) as ctx:
            data.load_idx_images(self.labels)
        self.assertIn('0x00000801', str(ctx.exception))

    def test_004_truncated_payload(self):
        with open(self.images, 'rb') as fh:
            content = fh.read()
        with open(self.images, 'wb') as fh:
            fh.write(content[:-1])
        with self.assertRaises(DataFormatError):
            data.load_idx_images(self.images)

    def test_005_gzip(self):
        gz = self.images + '.gz'
        with open(self.images, 'rb') as src, gzip.open(gz, 'wb') as dst:
            dst.write(src.read())
        np.testing.assert_array_equal(
            data.load_idx_images(gz), data.load_idx_images(self.images))

    def test_006_filter_digits(self):
        ds = data.load_mnist(self.images, self.labels)
        kept = data.filter_digits(ds, (0, 1))
        self.assertEqual(len(kept), 4)
        np.testing.assert_array_equal(kept.labels, [0, 1, 1, 0])
        np.testing.assert_array_equal(kept.images[1], ds.images[1])

    def test_007_filter_errors(self):
        ds = data.load_mnist(self.images, self.labels)
        with self.assertRaises(ContractError):
            data.filter_digits(ds, (3, 3))
        with self.assertRaises(DataError):
            data.filter_digits(ds, (4, 5))

    def test_008_class_means(self):
        ds = data.load_mnist(self.images, self.labels)
        means = data.class_mean_images(ds)
        self.assertEqual(sorted(means), [0, 1, 2, 7])
        np.testing.assert_allclose(
            means[0], (ds.images[0] + ds.images[4]) / 2)


class Batches(unittest.TestCase):

    def test_000_epoch_covers_each_row_once(self):
        rows = np.arange(10)[:, None].astype(float)
        it = data.batch_iterator(rows, 5, 0)
        epoch = np.concatenate([next(it), next(it)])
        self.assertEqual(sorted(epoch[:, 0]), list(range(10)))

    def test_001_partial_batch_dropped(self):
        rows = np.arange(7)[:, None].astype(float)
        it = data.batch_iterator(rows, 3, 0)
        first_epoch = np.concatenate([next(it), next(it)])
        self.assertEqual(len(set(first_epoch[:, 0])), 6)
        self.assertEqual(next(it).shape, (3, 1))

    def test_002_batch_larger_than_data(self):
        with self.assertRaises(ContractError):
            next(data.batch_iterator(np.zeros((2, 1)), 3, 0))


@unittest.skipUnless(
    MNIST_IMAGES and MNIST_LABELS, 'MNIST files not configured.')
class FullMnist(unittest.TestCase):

    def test_000_zero_one_count(self):
        ds = data.load_mnist(MNIST_IMAGES, MNIST_LABELS)
        self.assertEqual(len(data.filter_digits(ds, (0, 1))), 12665)
