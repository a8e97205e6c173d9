"""Training, sampling and scoring programs behind the command line."""
from dataclasses import replace
import os

import numpy as np

from mixgan.common import (
    ConfigError, DimensionError, get_named_logger, mkdir_p, random_stream)
import mixgan.data
import mixgan.datastore
import mixgan.executor
import mixgan.game
import mixgan.metrics
import mixgan.models
import mixgan.options

CONFIG_NAME = 'config.json'
CHECKPOINT_NAME = 'checkpoint.mggan'
GRID_SIDE = 8


def load_training_data(config, seed):
    """Real data of a run.

    :param config: `RunConfig`.
    :param seed: run seed, for synthetic draws.

    :returns: array of rows or `mixgan.data.ImageDataset`.
    """
    if config.is_mnist:
        if config.mnist_images is None or config.mnist_labels is None:
            raise ConfigError(
                'MNIST training needs --mnist-images and --mnist-labels.')
        ds = mixgan.data.load_mnist(config.mnist_images, config.mnist_labels)
        return mixgan.data.filter_digits(ds, config.digits)
    spec = mixgan.data.GaussianMixtureSpec(config.centers, sigma=config.sigma)
    samples, _ = mixgan.data.sample_gaussian_mixture(
        spec, config.n_real, random_stream(seed, 'data'))
    return samples


def _per_generator_samples(state, n, seed):
    sampler = mixgan.models.LatentSampler(
        state.config.latent_dim, random_stream(seed, 'eval'))
    return [mixgan.game.sample_generator(g, sampler, n)
            for g in state.generators]


def separation_metrics(config, generator_samples, monitor=None):
    """Mode ownership metrics of the generators on the synthetic target.

    :param config: `RunConfig`.
    :param generator_samples: one [n x d] array per generator.
    :param monitor: optional `CollapseMonitor`, updated in place.

    :returns: dict of snapshot columns; NaN marks undefined values.
    """
    hists = [
        mixgan.metrics.assign_modes(s, config.centers, config.radius)
        for s in generator_samples]
    row = {}
    for k, hist in enumerate(hists, 1):
        defined = hist.assigned > 0
        row['dominant_mode_{}'.format(k)] = hist.dominant_mode if defined else -1
        row['purity_{}'.format(k)] = hist.purity if defined else float('nan')
        row['unassigned_{}'.format(k)] = hist.unassigned
    if len(hists) == 2:
        defined = hists[0].assigned > 0 and hists[1].assigned > 0
        if defined:
            report = mixgan.metrics.separation_report(
                hists[0], hists[1],
                histogram_js=mixgan.metrics.histogram_js(
                    generator_samples[0], generator_samples[1],
                    mixgan.metrics.Binning(bins=config.bins)))
            row['overlap'] = report.overlap
            row['histogram_js'] = report.histogram_js
            row['success'] = report.success
            row['collapsed'] = (
                monitor.update(report) if monitor is not None else False)
        else:
            row['overlap'] = float('nan')
            row['histogram_js'] = float('nan')
            row['success'] = False
            row['collapsed'] = False
    return row


def affinity_metrics(generator_samples, class_means):
    """Per generator, the cosine affinity to every class mean and its argmax."""
    row = {}
    for k, samples in enumerate(generator_samples, 1):
        affinity = mixgan.metrics.mean_image_affinity(samples, class_means)
        for label, value in sorted(affinity.items()):
            row['affinity_{}_digit{}'.format(k, label)] = value
        row['closest_digit_{}'.format(k)] = max(
            sorted(affinity), key=affinity.get)
    return row


def _snapshot_fn(config, seed, class_means):
    monitor = mixgan.metrics.CollapseMonitor()

    def snapshot(state):
        samples = _per_generator_samples(state, config.n_eval, seed)
        if class_means is not None:
            return affinity_metrics(samples, class_means)
        return separation_metrics(config, samples, monitor)
    return snapshot


def train_run(config, seed, out_dir):
    """Train one seed and write every artifact into `out_dir`.

    :param config: `RunConfig` of a training task.
    :param seed: run seed.
    :param out_dir: output directory, created if missing.

    :returns: dict summary of the final snapshot.
    """
    logger = get_named_logger('Train')
    mkdir_p(out_dir, info='Results will be overwritten.')
    run_config = replace(config, seed=seed, seeds=None, out=out_dir)
    run_config.to_json(os.path.join(out_dir, CONFIG_NAME))
    game_config = run_config.game_config()

    dataset = load_training_data(run_config, seed)
    class_means = None
    if run_config.is_mnist:
        class_means = mixgan.data.class_mean_images(dataset)

    def checkpoint(state):
        path = os.path.join(
            out_dir, 'checkpoint_{}.mggan'.format(state.iteration))
        with mixgan.datastore.ModelStore(path) as store:
            store.save(state)

    snapshot = _snapshot_fn(run_config, seed, class_means)
    state, timeline = mixgan.game.run(
        game_config, dataset, snapshot_fn=snapshot, checkpoint_fn=checkpoint)
    if timeline.snapshots[-1]['iteration'] != state.iteration:
        timeline.add_snapshot(state.iteration, snapshot(state))

    with mixgan.datastore.ModelStore(
            os.path.join(out_dir, CHECKPOINT_NAME)) as store:
        store.save(state)
    mixgan.metrics.export_csv(
        (timeline.loss_header, timeline.losses),
        os.path.join(out_dir, 'losses.csv'))
    mixgan.metrics.export_csv(
        timeline.snapshot_table(), os.path.join(out_dir, 'snapshots.csv'))

    final = timeline.snapshots[-1]
    samples = _per_generator_samples(state, run_config.n_eval, seed)
    if run_config.is_mnist:
        side = min(GRID_SIDE, int(np.sqrt(run_config.n_eval)))
        for k, s in enumerate(samples, 1):
            if side > 0:
                mixgan.metrics.export_grid(
                    s, side, side,
                    os.path.join(out_dir, 'generator_{}.pgm'.format(k)),
                    image_shape=mixgan.options.mnist_image_shape)
        rows = [[k, label, value]
                for k, s in enumerate(samples, 1)
                for label, value in sorted(mixgan.metrics.mean_image_affinity(
                    s, class_means).items())]
        mixgan.metrics.export_csv(
            (['generator', 'digit', 'affinity'], rows),
            os.path.join(out_dir, 'affinity.csv'))
    else:
        mix, provenance = sample_from_state(
            state, run_config.n_eval, 'mixture', random_stream(seed, 'eval'))
        mixgan.metrics.export_csv(
            mixgan.metrics.samples_table(mix, provenance),
            os.path.join(out_dir, 'samples.csv'))
        keys = list(final.keys())
        mixgan.metrics.export_csv(
            (keys, [[final[k] for k in keys]]),
            os.path.join(out_dir, 'separation.csv'))
        if 'success' in final:
            logger.info('Seed {}: separation {}.'.format(
                seed, 'succeeded' if final['success'] else 'failed'))
    summary = {'seed': seed}
    summary.update(final)
    return summary


def _train_item(item):
    config, seed, out_dir = item
    return train_run(config, seed, out_dir)


def cmd_train(config):
    """Entry point for `mixgan train-synthetic` and `mixgan train-mnist`.

    With `seeds` every seed trains in its own process and writes to
    `<out>/seed_<seed>/`; a `sweep.csv` summarises the final snapshots.

    :returns: exit status 0; errors are raised.
    """
    logger = get_named_logger('Train')
    out_dir = config.output_dir()
    # fail early on an invalid game
    config.game_config()
    if not config.seeds:
        train_run(config, config.seed, out_dir)
        return 0

    mkdir_p(out_dir, info='Results will be overwritten.')
    items = [
        (config, int(s), os.path.join(out_dir, 'seed_{}'.format(s)))
        for s in config.seeds]
    workers = min(len(items), os.cpu_count() or 1)
    logger.info('Training {} seeds with {} workers.'.format(
        len(items), workers))
    summaries = mixgan.executor.run_all(_train_item, items, workers=workers)
    header = []
    for summary in summaries:
        header.extend(k for k in summary if k not in header)
    mixgan.metrics.export_csv(
        (header, [[s.get(k, '') for k in header] for s in summaries]),
        os.path.join(out_dir, 'sweep.csv'))
    if 'success' in header:
        logger.info('{} of {} seeds separated.'.format(
            sum(bool(s.get('success')) for s in summaries), len(summaries)))
    return 0


def sample_from_state(state, n, generator, rng):
    """Draw samples from a trained state.

    :param state: `GameState`.
    :param n: number of samples (>= 0).
    :param generator: 1-based generator index, or 'mixture'.
    :param rng: `numpy.random.Generator`, source of latents and choices.

    :returns: ([n x d] array, provenance array or None).
    :raises ConfigError: for an index outside 1..K.
    """
    K = state.config.K
    if generator == 'mixture':
        index = None
    else:
        index = int(generator)
        if not 1 <= index <= K:
            raise ConfigError(
                'Generator index {} is outside 1..{}.'.format(index, K))
    dim = state.config.sample_dim
    if n == 0:
        provenance = np.empty(0, dtype=np.int64) if index is None else None
        return np.empty((0, dim)), provenance
    sampler = mixgan.models.LatentSampler(state.config.latent_dim, rng)
    if index is not None:
        return mixgan.game.sample_generator(
            state.generators[index - 1], sampler, n), None
    return mixgan.game.sample_mixture(state.generators, sampler, n, rng=rng)


def load_trained_state(checkpoint, config_path=None):
    """Rebuild a `GameState` from a checkpoint and its run configuration.

    :param checkpoint: checkpoint filepath.
    :param config_path: run `config.json`, by default the one next to the
        checkpoint.

    :returns: (`RunConfig` of the run, `GameState`).
    """
    if config_path is None:
        config_path = os.path.join(os.path.dirname(checkpoint), CONFIG_NAME)
    if not os.path.isfile(config_path):
        raise ConfigError(
            'No run configuration found at {}.'.format(config_path))
    run_config = mixgan.options.RunConfig.from_json(config_path)
    state = mixgan.game.init_state(run_config.game_config())
    with mixgan.datastore.ModelStore(checkpoint) as store:
        store.load_into(state)
    return run_config, state


def cmd_sample(config, config_path=None):
    """Entry point for `mixgan sample`: write `samples.csv` to the output.

    :param config: `RunConfig` with `checkpoint`, `n`, `generator`.
    :param config_path: optional run configuration of the checkpoint.
    """
    logger = get_named_logger('Sample')
    if config.checkpoint is None:
        raise ConfigError('Sampling needs --checkpoint.')
    _, state = load_trained_state(config.checkpoint, config_path)
    samples, provenance = sample_from_state(
        state, config.n, config.generator, random_stream(config.seed, 'sample'))
    out_dir = config.output_dir()
    mkdir_p(out_dir)
    path = os.path.join(out_dir, 'samples.csv')
    mixgan.metrics.export_csv(
        mixgan.metrics.samples_table(samples, provenance), path)
    logger.info('Wrote {} samples to {}.'.format(config.n, path))
    return 0


def _metric_inputs(config):
    if config.checkpoint is not None:
        _, state = load_trained_state(config.checkpoint)
        if state.config.K < 2:
            raise ConfigError('Scoring needs at least two generators.')
        rng = random_stream(config.seed, 'sample')
        return [sample_from_state(state, config.n, k, rng)[0]
                for k in (1, 2)]
    if len(config.samples) == 2:
        return [mixgan.metrics.read_samples_csv(p)[0] for p in config.samples]
    if len(config.samples) == 1:
        samples, provenance = mixgan.metrics.read_samples_csv(
            config.samples[0])
        if provenance is None or set(provenance) != {0, 1}:
            raise ConfigError(
                'A single samples file needs a generator column with '
                'generators 1 and 2.')
        return [samples[provenance == 0], samples[provenance == 1]]
    raise ConfigError(
        'Scoring needs one or two samples files, or --checkpoint.')


def cmd_metrics(config):
    """Entry point for `mixgan metrics`: write `report.csv` to the output.

    :raises DimensionError: if samples do not match the target dimension.
    """
    logger = get_named_logger('Metrics')
    sample_sets = _metric_inputs(config)
    dim = len(config.centers[0])
    for s in sample_sets:
        if s.shape[1] != dim:
            raise DimensionError(
                'Samples have dimension {}, the target modes {}.'.format(
                    s.shape[1], dim))
    hists = [
        mixgan.metrics.assign_modes(s, config.centers, config.radius)
        for s in sample_sets]
    report = mixgan.metrics.separation_report(
        hists[0], hists[1], histogram_js=mixgan.metrics.histogram_js(
            sample_sets[0], sample_sets[1], mixgan.metrics.Binning(bins=config.bins)))
    row = report.as_row()
    for k, hist in enumerate(hists, 1):
        row['unassigned_{}'.format(k)] = hist.unassigned
    out_dir = config.output_dir()
    mkdir_p(out_dir)
    path = os.path.join(out_dir, 'report.csv')
    mixgan.metrics.export_csv((list(row), [list(row.values())]), path)
    logger.info('Overlap {:.3f}, purities {}, success {}.'.format(
        report.overlap, report.purities, report.success))
    return 0
