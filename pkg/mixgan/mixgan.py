import argparse
import logging
import sys

from mixgan.common import (
    ConfigError, ContractError, DataError, DataFormatError, DimensionError,
    DomainError, NonFiniteLossError, ReportError, SpecError)
import mixgan.game
import mixgan.options
import mixgan.training
import mixgan.verify

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_USAGE = 2
EXIT_DIVERGED = 3

usage_errors = (
    ConfigError, ContractError, DataError, DataFormatError, DimensionError,
    DomainError, ReportError, SpecError, FileNotFoundError)

# argparse dests that are not RunConfig fields
_cli_only = ('command', 'func', 'log_level', 'config', 'run_config')


def _digit_pair(value):
    try:
        a, b = (int(x) for x in value.split(','))
    except ValueError:
        raise argparse.ArgumentTypeError(
            'expected two digits as a,b, got {!r}'.format(value))
    return (a, b)


def _points(value):
    try:
        return tuple(
            tuple(float(c) for c in point.split(','))
            for point in value.split(';'))
    except ValueError:
        raise argparse.ArgumentTypeError(
            'expected points as x,y;x,y, got {!r}'.format(value))


def _generator_index(value):
    if value == 'mixture':
        return value
    try:
        int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(
            'expected a generator index or "mixture", got {!r}'.format(value))
    return value


def _log_level():
    """Parser to set logging level."""
    parser = argparse.ArgumentParser(
        formatter_class=argparse.ArgumentDefaultsHelpFormatter, add_help=False)

    modify_log_level = parser.add_mutually_exclusive_group()
    modify_log_level.add_argument('--debug', action='store_const',
        dest='log_level', const=logging.DEBUG, default=logging.INFO,
        help='Verbose logging of debug information.')
    modify_log_level.add_argument('--quiet', action='store_const',
        dest='log_level', const=logging.WARNING, default=logging.INFO,
        help='Minimal logging; warnings only.')

    return parser


def _run_args(config_help='JSON run configuration; flags take precedence.'):
    parser = argparse.ArgumentParser(
        formatter_class=argparse.ArgumentDefaultsHelpFormatter, add_help=False)
    parser.add_argument('--config', help=config_help)
    parser.add_argument('--seed', type=int, help='Run seed.')
    parser.add_argument('--out',
        help='Output directory (default <$MIXGAN_OUT>/<command>).')
    return parser


def _game_args():
    parser = argparse.ArgumentParser(
        formatter_class=argparse.ArgumentDefaultsHelpFormatter, add_help=False)
    grp = parser.add_argument_group('game', 'Models and optimisation.')
    grp.add_argument('--k', dest='K', type=int, help='Number of generators.')
    grp.add_argument('--supplementary-mode', dest='supplementary_mode',
        choices=mixgan.game.SUPPLEMENTARY_MODES,
        help='Supplementary discriminators to train.')
    grp.add_argument('--flip-labels', dest='flip_labels',
        action=argparse.BooleanOptionalAction, default=None,
        help='Train generators on the non-saturating loss.')
    grp.add_argument('--hidden', dest='hidden_widths', type=int, nargs='+',
        help='Hidden layer widths of the generators.')
    grp.add_argument('--latent-dim', dest='latent_dim', type=int,
        help='Latent dimension.')
    grp.add_argument('--discriminator-hidden', dest='discriminator_hidden',
        type=int, help='Hidden width of the adversarial discriminator.')
    grp.add_argument('--supplementary-hidden', dest='supplementary_hidden',
        type=int, help='Hidden width of the supplementary discriminators.')
    grp.add_argument('--supplementary-steps', dest='supplementary_steps',
        type=int, help='Updates of each supplementary discriminator per '
        'iteration.')
    grp.add_argument('--iterations', type=int, help='Training iterations.')
    grp.add_argument('--batch-size', dest='batch_size', type=int,
        help='Samples per batch.')
    grp.add_argument('--lr', type=float, help='Adam learning rate.')
    grp.add_argument('--snapshot-interval', dest='snapshot_interval',
        type=int, help='Iterations between metric snapshots.')
    grp.add_argument('--checkpoint-interval', dest='checkpoint_interval',
        type=int, help='Iterations between checkpoints (0: final only).')
    grp.add_argument('--n-eval', dest='n_eval', type=int,
        help='Samples per generator for snapshots and outputs.')
    return parser


def _target_args():
    parser = argparse.ArgumentParser(
        formatter_class=argparse.ArgumentDefaultsHelpFormatter, add_help=False)
    grp = parser.add_argument_group('target', 'Synthetic Gaussian modes.')
    grp.add_argument('--centers', type=_points,
        help='Mode centres as x,y;x,y (use --centers=... for negatives).')
    grp.add_argument('--sigma', type=float, help='Mode standard deviation.')
    grp.add_argument('--radius', type=float, help='Mode assignment radius.')
    grp.add_argument('--bins', type=int,
        help='Histogram bins per axis for the JS estimate; unset uses 9 in '
        '2D and 64 in 1D.')
    return parser


def mixgan_parser():
    """Create the mixgan command-line interface."""
    from mixgan import __version__
    parser = argparse.ArgumentParser('mixgan',
        formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    subparsers = parser.add_subparsers(title='subcommands', description='valid commands', help='additional help', dest='command')
    subparsers.required = True

    parser.add_argument('--version', action='version',
        version='%(prog)s {}'.format(__version__))

    vparser = subparsers.add_parser('verify',
        help='Check the value-function identities and the gradients.',
        parents=[_log_level(), _run_args()],
        formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    vparser.set_defaults(func=mixgan.verify.cmd_verify)

    sparser = subparsers.add_parser('train-synthetic',
        help='Train on a 2D Gaussian mixture.',
        parents=[_log_level(), _run_args(), _game_args(), _target_args()],
        formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    sparser.set_defaults(func=mixgan.training.cmd_train)
    sparser.add_argument('--seeds', type=int, nargs='+',
        help='Train every seed in parallel, into <out>/seed_<seed>/.')
    sparser.add_argument('--n-real', dest='n_real', type=int,
        help='Size of the synthetic training set.')

    mparser = subparsers.add_parser('train-mnist',
        help='Train on two MNIST digits.',
        parents=[_log_level(), _run_args(), _game_args()],
        formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    mparser.set_defaults(func=mixgan.training.cmd_train)
    mparser.add_argument('--mnist-images', dest='mnist_images',
        help='IDX image file, optionally gzipped.')
    mparser.add_argument('--mnist-labels', dest='mnist_labels',
        help='IDX label file, optionally gzipped.')
    mparser.add_argument('--digits', type=_digit_pair,
        help='Two digits to train on, as a,b.')

    smparser = subparsers.add_parser('sample',
        help='Sample from a trained checkpoint.',
        parents=[_log_level(), _run_args(
            config_help='Run configuration of the checkpoint (default: '
            'config.json next to it).')],
        formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    smparser.set_defaults(func=mixgan.training.cmd_sample)
    smparser.add_argument('--checkpoint', required=True,
        help='Checkpoint written by training.')
    smparser.add_argument('--n', type=int, help='Number of samples.')
    smparser.add_argument('--generator', type=_generator_index,
        help='Generator index (1..K) or "mixture".')

    meparser = subparsers.add_parser('metrics',
        help='Score the mode separation of two generators.',
        parents=[_log_level(), _run_args(), _target_args()],
        formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    meparser.set_defaults(func=mixgan.training.cmd_metrics)
    meparser.add_argument('samples', nargs='*',
        help='Two samples files, or one with a generator column.')
    meparser.add_argument('--checkpoint',
        help='Draw the samples of generators 1 and 2 from a checkpoint.')
    meparser.add_argument('--n', type=int,
        help='Samples per generator drawn from --checkpoint.')

    return parser


def build_config(args):
    """Combine task defaults, an optional JSON file and the flags.

    Precedence: flags > file > task defaults. For `sample` the file is the
    run configuration of the checkpoint and is not merged.

    :returns: `RunConfig`.
    """
    config = mixgan.options.RunConfig.for_task(args.command)
    if args.config is not None and args.command != 'sample':
        config = mixgan.options.RunConfig.from_json(args.config, base=config)
    overrides = {
        k: v for k, v in vars(args).items() if k not in _cli_only}
    if 'samples' in overrides:
        overrides['samples'] = tuple(overrides['samples']) or None
    overrides['task'] = args.command
    return config.merge(overrides)


def run_command(args):
    """Run a parsed command, mapping errors to exit codes."""
    logger = logging.getLogger(__package__)
    try:
        config = build_config(args)
        if args.command == 'sample':
            status = args.func(config, config_path=args.config)
        else:
            status = args.func(config)
    except NonFiniteLossError as e:
        logger.error(str(e))
        return EXIT_DIVERGED
    except usage_errors as e:
        logger.error(str(e))
        return EXIT_USAGE
    return status


def main(argv=None):
    parser = mixgan_parser()
    args = parser.parse_args(argv)

    logging.basicConfig(format='[%(asctime)s - %(name)s] %(message)s', datefmt='%H:%M:%S', level=logging.INFO)
    logger = logging.getLogger(__package__)
    logger.setLevel(args.log_level)

    sys.exit(run_command(args))
