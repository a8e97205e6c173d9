"""Mode ownership, separation and collapse measures, and artifact export."""
import csv
from dataclasses import dataclass

import numpy as np

from mixgan.common import (
    ContractError, DimensionError, ReportError, get_named_logger)
import mixgan.divergences as dv

logger = get_named_logger('Metrics')

SUCCESS_PURITY = 0.9

# bins per axis of a `Binning` without explicit bins, by dimension
default_bins = {1: 64, 2: 9}
fallback_bins = 4


@dataclass
class ModeHistogram:
    """Counts of one generator's samples per target mode."""

    counts: np.ndarray
    unassigned: int = 0

    @property
    def assigned(self):
        """Number of samples within the radius of some mode."""
        return int(np.sum(self.counts))

    @property
    def total(self):
        """Number of scored samples."""
        return self.assigned + int(self.unassigned)

    @property
    def dominant_mode(self):
        """Index of the most populated mode (lowest index on ties)."""
        return int(np.argmax(self.counts))

    @property
    def purity(self):
        """Share of the assigned samples that fall on the dominant mode."""
        if self.assigned == 0:
            raise ReportError('Purity is undefined without assigned samples.')
        return float(np.max(self.counts) / self.assigned)


@dataclass
class SeparationReport:
    """Whether two generators own distinct modes.

    :param dominant_modes: dominant mode of each generator.
    :param purities: ownership purity of each generator.
    :param overlap: 1 - total variation between the normalised mode
        histograms (1: identical mode usage, 0: disjoint).
    :param histogram_js: JS divergence between the smoothed histograms.
    :param success: both purities >= 0.9 and distinct dominant modes.
    """

    dominant_modes: tuple
    purities: tuple
    overlap: float
    histogram_js: float
    success: bool

    def as_row(self):
        """Flatten to a dict for CSV output."""
        row = {}
        for i, (mode, purity) in enumerate(
                zip(self.dominant_modes, self.purities), 1):
            row['dominant_mode_{}'.format(i)] = mode
            row['purity_{}'.format(i)] = purity
        row['overlap'] = self.overlap
        row['histogram_js'] = self.histogram_js
        row['success'] = self.success
        return row


def assign_modes(samples, centers, radius):
    """Assign samples to their nearest centre if within `radius`.

    Ties go to the lowest centre index.

    :param samples: [n x d] array.
    :param centers: [M x d] array.
    :param radius: Euclidean radius (> 0).

    :returns: `ModeHistogram`.
    """
    centers = np.atleast_2d(np.asarray(centers, dtype=np.float64))
    if centers.size == 0:
        raise ContractError('Mode assignment needs at least one centre.')
    if not radius > 0:
        raise ContractError('Radius must be positive, got {}.'.format(radius))
    samples = np.asarray(samples, dtype=np.float64).reshape(
        -1, centers.shape[1])
    dist = np.linalg.norm(samples[:, None, :] - centers[None, :, :], axis=-1)
    if len(samples) == 0:
        return ModeHistogram(np.zeros(len(centers), dtype=np.int64), 0)
    nearest = np.argmin(dist, axis=1)
    within = dist[np.arange(len(samples)), nearest] <= radius
    counts = np.bincount(nearest[within], minlength=len(centers))
    return ModeHistogram(counts.astype(np.int64), int(np.sum(~within)))


def _smoothed(counts):
    return dv.DiscreteDistribution.from_weights(np.asarray(counts) + 1.0)


def separation_report(hist_a, hist_b, histogram_js=None):
    """Compare the mode usage of two generators.

    :param hist_a, hist_b: `ModeHistogram` over the same modes.
    :param histogram_js: optional sample-level JS estimate; by default the
        JS divergence of the add-one smoothed mode histograms.

    :returns: `SeparationReport`.
    :raises ReportError: if either histogram has no assigned samples.
    """
    if len(hist_a.counts) != len(hist_b.counts):
        raise DimensionError(
            'Histograms cover {} and {} modes.'.format(
                len(hist_a.counts), len(hist_b.counts)))
    if hist_a.assigned == 0 or hist_b.assigned == 0:
        raise ReportError(
            'Separation is undefined: assigned samples {} and {}.'.format(
                hist_a.assigned, hist_b.assigned))
    a = hist_a.counts / hist_a.assigned
    b = hist_b.counts / hist_b.assigned
    overlap = 1.0 - 0.5 * float(np.sum(np.abs(a - b)))
    if histogram_js is None:
        histogram_js = dv.js_divergence(
            _smoothed(hist_a.counts), _smoothed(hist_b.counts))
    purities = (hist_a.purity, hist_b.purity)
    modes = (hist_a.dominant_mode, hist_b.dominant_mode)
    success = (min(purities) >= SUCCESS_PURITY and modes[0] != modes[1])
    return SeparationReport(
        dominant_modes=modes, purities=purities, overlap=overlap,
        histogram_js=float(histogram_js), success=bool(success))


@dataclass(frozen=True)
class Binning:
    """A regular grid over a box, the same in every dimension.

    Without `bins` the number of bins per axis depends on the dimension
    (`default_bins`); in 2D the default grid has unit cells centred on the
    integer points.
    """

    low: float = -4.5
    high: float = 4.5
    bins: int = None

    def __post_init__(self):
        if not self.high > self.low:
            raise ContractError('Binning needs high > low, got [{}, {}].'.format(
                self.low, self.high))
        if self.bins is not None and self.bins < 1:
            raise ContractError('bins must be >= 1, got {}.'.format(self.bins))

    def bins_per_axis(self, dim=1):
        """Number of bins along each of `dim` axes."""
        if self.bins is not None:
            return self.bins
        return default_bins.get(dim, fallback_bins)

    def edges(self, dim=1):
        """Bin edges along one axis."""
        return np.linspace(self.low, self.high, self.bins_per_axis(dim) + 1)

    def counts(self, samples):
        """Histogram counts of samples, clipped into the box."""
        samples = np.asarray(samples, dtype=np.float64)
        if samples.ndim == 1:
            samples = samples[:, None]
        dim = samples.shape[1]
        clipped = np.clip(samples, self.low, self.high)
        counts, _ = np.histogramdd(clipped, bins=[self.edges(dim)] * dim)
        return counts.ravel()


def histogram_js(samples_a, samples_b, binning):
    """JS divergence between add-one smoothed histograms of two sample sets.

    Bins empty in both sets are dropped before smoothing.

    :param samples_a, samples_b: arrays [n x d] (or 1D for d = 1).
    :param binning: `Binning` shared by both sets.
    """
    a = np.asarray(samples_a)
    b = np.asarray(samples_b)
    if a.ndim != b.ndim or (a.ndim == 2 and a.shape[1] != b.shape[1]):
        raise DimensionError(
            'Sample sets have shapes {} and {}.'.format(a.shape, b.shape))
    counts_a, counts_b = binning.counts(a), binning.counts(b)
    used = (counts_a + counts_b) > 0
    if not np.any(used):
        return 0.0
    return dv.js_divergence(
        _smoothed(counts_a[used]), _smoothed(counts_b[used]))


def mean_image_affinity(generator_samples, class_mean_images):
    """Cosine similarity between a generator's mean sample and class means.

    :param generator_samples: [n x D] samples of one generator.
    :param class_mean_images: dict label -> [D] mean image.

    :returns: dict label -> cosine similarity in [-1, 1].
    """
    mean = np.mean(np.asarray(generator_samples, dtype=np.float64), axis=0)
    norm = np.linalg.norm(mean)
    if norm == 0:
        raise ContractError('Mean generator sample has zero norm.')
    affinity = {}
    for label, image in class_mean_images.items():
        image = np.asarray(image, dtype=np.float64)
        if image.shape != mean.shape:
            raise DimensionError(
                'Class {} mean has shape {}, samples have {}.'.format(
                    label, image.shape, mean.shape))
        inorm = np.linalg.norm(image)
        if inorm == 0:
            raise ContractError('Class {} mean has zero norm.'.format(label))
        cos = float(np.dot(mean, image) / (norm * inorm))
        affinity[label] = min(1.0, max(-1.0, cos))
    return affinity


def to_pixels(values):
    """Map values to bytes: round(clamp(v, 0, 1) * 255), halves rounded up."""
    v = np.clip(np.asarray(values, dtype=np.float64), 0.0, 1.0)
    return np.floor(v * 255.0 + 0.5).astype(np.uint8)


def export_grid(samples, rows, cols, path, image_shape=(28, 28)):
    """Write a rows x cols grid of images as a binary PGM (P5) file.

    :param samples: [n x H*W] images, values nominally in [0, 1].
    :param rows, cols: grid size, rows * cols <= n.
    :param path: output filepath.
    :param image_shape: (H, W) of each image.
    """
    samples = np.asarray(samples, dtype=np.float64)
    height, width = image_shape
    if rows * cols > len(samples):
        raise ContractError(
            'A {}x{} grid needs {} samples, got {}.'.format(
                rows, cols, rows * cols, len(samples)))
    if samples.shape[1] != height * width:
        raise DimensionError(
            'Samples of size {} cannot be shown as {}x{} images.'.format(
                samples.shape[1], height, width))
    images = samples[:rows * cols].reshape(rows, cols, height, width)
    grid = images.transpose(0, 2, 1, 3).reshape(rows * height, cols * width)
    header = 'P5\n{} {}\n255\n'.format(cols * width, rows * height)
    with open(path, 'wb') as fh:
        fh.write(header.encode('ascii'))
        fh.write(to_pixels(grid).tobytes())


def _format_cell(value):
    if isinstance(value, (bool, np.bool_)):
        return 'true' if value else 'false'
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def export_csv(table, path):
    """Write a (header, rows) table as CSV with a header row.

    Floats are written with `repr`, so re-reading restores them exactly.
    """
    header, rows = table
    with open(path, 'w', newline='') as fh:
        writer = csv.writer(fh, lineterminator='\n')
        writer.writerow(header)
        for row in rows:
            writer.writerow([_format_cell(v) for v in row])


def samples_table(samples, provenance=None):
    """Table of sample coordinates, with a 1-based generator column."""
    samples = np.asarray(samples, dtype=np.float64)
    dim = samples.shape[1] if samples.ndim == 2 else 0
    header = ['x{}'.format(i) for i in range(dim)]
    if provenance is not None:
        header.append('generator')
    rows = []
    for i, s in enumerate(samples):
        row = list(s)
        if provenance is not None:
            row.append(int(provenance[i]) + 1)
        rows.append(row)
    return header, rows


def read_samples_csv(path):
    """Read samples written by `export_csv(samples_table(...))`.

    :returns: ([n x d] array, provenance array (0-based) or None).
    """
    with open(path, newline='') as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [r for r in reader if r]
    coords = [i for i, h in enumerate(header) if h.startswith('x')]
    samples = np.array(
        [[float(r[i]) for i in coords] for r in rows],
        dtype=np.float64).reshape(len(rows), len(coords))
    provenance = None
    if 'generator' in header:
        col = header.index('generator')
        provenance = np.array([int(r[col]) - 1 for r in rows], dtype=np.int64)
    return samples, provenance


class CollapseMonitor(object):
    """Flag snapshots where generators fall back onto a shared mode.

    A snapshot is collapsed when an earlier snapshot was a success and the
    current one has equal dominant modes.
    """

    def __init__(self):
        self.separated = False

    def update(self, report):
        """Consume a `SeparationReport`, returning the collapse flag."""
        modes = report.dominant_modes
        collapsed = self.separated and len(set(modes)) < len(modes)
        if collapsed:
            logger.warning('Generators collapsed onto mode {}.'.format(modes[0]))
        self.separated = self.separated or report.success
        return collapsed
