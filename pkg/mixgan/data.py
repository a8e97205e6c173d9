"""Real-data sources: Gaussian mixtures and MNIST IDX files."""
from dataclasses import dataclass
import gzip

import numpy as np

from mixgan.common import (
    ContractError, DataError, DataFormatError, get_named_logger)

logger = get_named_logger('Data')

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801
_BE_U32 = np.dtype('>u4')


@dataclass(frozen=True)
class GaussianMixtureSpec:
    """Isotropic Gaussian modes in R^d.

    :param centers: [M x d] mode centres.
    :param sigma: standard deviation shared by every mode.
    :param weights: M mode weights, uniform if omitted.
    """

    centers: tuple
    sigma: float = 0.1
    weights: tuple = None

    def __post_init__(self):
        centers = np.atleast_2d(np.asarray(self.centers, dtype=np.float64))
        object.__setattr__(self, 'centers', tuple(map(tuple, centers)))
        if self.weights is None:
            weights = np.full(len(centers), 1.0 / len(centers))
        else:
            weights = np.asarray(self.weights, dtype=np.float64)
        if weights.shape != (len(centers),):
            raise ContractError(
                'Got {} weights for {} modes.'.format(weights.size, len(centers)))
        if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-9:
            raise ContractError(
                'Mode weights must be non-negative and sum to 1: {}.'.format(
                    weights))
        if not self.sigma > 0:
            raise ContractError('sigma must be positive, got {}.'.format(
                self.sigma))
        object.__setattr__(self, 'weights', tuple(weights))

    @property
    def center_array(self):
        """Mode centres as an [M x d] array."""
        return np.array(self.centers)

    @property
    def dimension(self):
        """Dimension of the sample space."""
        return len(self.centers[0])


def default_two_mode_spec():
    """Desk-scale target: modes at (-2, 0) and (+2, 0), sigma 0.1."""
    return GaussianMixtureSpec(centers=((-2.0, 0.0), (2.0, 0.0)), sigma=0.1)


def sample_gaussian_mixture(spec, n, seed):
    """Draw i.i.d. samples from a Gaussian mixture.

    :param spec: `GaussianMixtureSpec`.
    :param n: number of samples (>= 1).
    :param seed: int or `numpy.random.Generator`.

    :returns: ([n x d] array, n mode indices).
    """
    if n < 1:
        raise ContractError('Sample count must be >= 1, got {}.'.format(n))
    rng = seed if isinstance(seed, np.random.Generator) else \
        np.random.default_rng(seed)
    centers = spec.center_array
    modes = rng.choice(len(centers), size=n, p=np.array(spec.weights))
    noise = rng.normal(0.0, 1.0, size=(n, centers.shape[1]))
    return centers[modes] + spec.sigma * noise, modes


@dataclass
class ImageDataset:
    """Flattened images with pixels in [0, 1] and their digit labels."""

    images: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        if len(self.images) != len(self.labels):
            raise ContractError(
                'Got {} images but {} labels.'.format(
                    len(self.images), len(self.labels)))

    def __len__(self):
        return len(self.images)


def _open(path):
    if str(path).endswith('.gz'):
        return gzip.open(path, 'rb')
    return open(path, 'rb')


def _read_idx(path, magic, n_dims, what):
    with _open(path) as fh:
        data = fh.read()
    header_len = 4 * (1 + n_dims)
    if len(data) < header_len:
        raise DataFormatError(
            'IDX {} file {} is truncated: {} bytes, header needs {}.'.format(
                what, path, len(data), header_len))
    header = np.frombuffer(data[:header_len], dtype=_BE_U32)
    if int(header[0]) != magic:
        raise DataFormatError(
            'IDX {} file {} has magic 0x{:08x}, expected 0x{:08x}.'.format(
                what, path, int(header[0]), magic))
    dims = tuple(int(d) for d in header[1:])
    expected = int(np.prod(dims, dtype=np.int64))
    payload = data[header_len:]
    if len(payload) != expected:
        raise DataFormatError(
            'IDX {} file {} has a payload of {} bytes, expected {} for '
            'dimensions {}.'.format(what, path, len(payload), expected, dims))
    return np.frombuffer(payload, dtype=np.uint8).reshape(dims)


def load_idx_images(path):
    """Read an IDX image file.

    :param path: filepath, optionally gzip compressed (.gz).

    :returns: [n x rows*cols] float64 array with pixels scaled to [0, 1].
    :raises DataFormatError: on a wrong magic number or payload length.
    """
    raw = _read_idx(path, IDX_IMAGES_MAGIC, 3, 'image')
    images = raw.reshape(raw.shape[0], -1).astype(np.float64) / 255.0
    logger.info('Loaded {} images of {}x{} from {}'.format(
        raw.shape[0], raw.shape[1], raw.shape[2], path))
    return images


def load_idx_labels(path):
    """Read an IDX label file.

    :returns: int64 array of labels.
    """
    return _read_idx(path, IDX_LABELS_MAGIC, 1, 'label').astype(np.int64)


def load_mnist(images_path, labels_path):
    """Load an `ImageDataset` from an IDX image and label file pair."""
    images = load_idx_images(images_path)
    labels = load_idx_labels(labels_path)
    if np.any(labels > 9):
        raise DataFormatError(
            'Label file {} contains values above 9.'.format(labels_path))
    return ImageDataset(images, labels)


def write_idx_images(path, images):
    """Write uint8 images [n x rows x cols] as an IDX image file."""
    images = np.asarray(images, dtype=np.uint8)
    if images.ndim != 3:
        raise ContractError('Images must be [n x rows x cols], got {}.'.format(
            images.shape))
    header = np.array((IDX_IMAGES_MAGIC,) + images.shape, dtype=_BE_U32)
    with open(path, 'wb') as fh:
        fh.write(header.tobytes())
        fh.write(images.tobytes(order='C'))


def write_idx_labels(path, labels):
    """Write uint8 labels as an IDX label file."""
    labels = np.asarray(labels, dtype=np.uint8).ravel()
    header = np.array((IDX_LABELS_MAGIC, labels.size), dtype=_BE_U32)
    with open(path, 'wb') as fh:
        fh.write(header.tobytes())
        fh.write(labels.tobytes())


def filter_digits(ds, pair):
    """Keep the images whose label is one of two digits, in order.

    :param ds: `ImageDataset`.
    :param pair: two distinct digits in 0..9.

    :raises ContractError: for an invalid pair.
    :raises DataError: if nothing is left.
    """
    a, b = (int(d) for d in pair)
    if a == b or not (0 <= a <= 9 and 0 <= b <= 9):
        raise ContractError(
            'Digit pair must be two distinct digits in 0..9, got {}.'.format(
                tuple(pair)))
    keep = np.isin(ds.labels, (a, b))
    if not np.any(keep):
        raise DataError('No images with labels {} and {}.'.format(a, b))
    logger.info('Selected {} of {} images with digits {{{}, {}}}.'.format(
        int(keep.sum()), len(ds), a, b))
    return ImageDataset(ds.images[keep], ds.labels[keep])


def class_mean_images(ds):
    """Mean image per label.

    :returns: dict of label -> mean pixel vector.
    """
    return {
        int(label): ds.images[ds.labels == label].mean(axis=0)
        for label in np.unique(ds.labels)}


def batch_iterator(data, batch_size, seed):
    """Endless stream of shuffled batches, one permutation per epoch.

    The final partial batch of each epoch is dropped.

    :param data: array of rows (or an `ImageDataset`, whose images are used).
    :param batch_size: rows per batch, at most the number of rows.
    :param seed: int or `numpy.random.Generator`.

    :yields: [batch_size x ...] arrays.
    """
    if isinstance(data, ImageDataset):
        data = data.images
    n = len(data)
    if not 1 <= batch_size <= n:
        raise ContractError(
            'Batch size {} must be between 1 and the dataset size {}.'.format(
                batch_size, n))
    rng = seed if isinstance(seed, np.random.Generator) else \
        np.random.default_rng(seed)
    n_batches = n // batch_size
    while True:
        order = rng.permutation(n)
        for i in range(n_batches):
            yield data[order[i * batch_size:(i + 1) * batch_size]]
