"""Run defaults and the JSON-backed run configuration."""
from dataclasses import asdict, dataclass, fields, replace
import json
import os

from mixgan.common import ConfigError
import mixgan.game
import mixgan.models

TASKS = ('verify', 'train-synthetic', 'train-mnist', 'sample', 'metrics')
OUT_ENV = 'MIXGAN_OUT'
default_out_root = 'mixgan_runs'

mnist_image_shape = (28, 28)
mnist_sample_dim = 784

# desk-scale 2D target and networks
synthetic_defaults = {
    'K': 2,
    'supplementary_mode': 'pairwise_single',
    'flip_labels': True,
    'hidden_widths': (32,),
    'latent_dim': 8,
    'batch_size': 64,
    'iterations': 20000,
    'lr': 1e-3,
    'snapshot_interval': 1000,
    'centers': ((-2.0, 0.0), (2.0, 0.0)),
    'sigma': 0.1,
    'radius': 0.5,
}

# two-digit MNIST, 803,650 trainable parameters in total
mnist_defaults = {
    'K': 2,
    'supplementary_mode': 'pairwise_single',
    'flip_labels': True,
    'hidden_widths': (240,),
    'latent_dim': 100,
    'batch_size': 64,
    'iterations': 20000,
    'lr': 1e-3,
    'snapshot_interval': 1000,
    'digits': (0, 1),
}

task_defaults = {
    'train-synthetic': synthetic_defaults,
    'train-mnist': mnist_defaults,
}


def _tupled(value):
    if isinstance(value, list):
        return tuple(_tupled(v) for v in value)
    return value


@dataclass(frozen=True)
class RunConfig:
    """All settings of one invocation of the program.

    Stored as one flat JSON object whose keys are the field names.
    Lists in the JSON become tuples.
    """

    task: str = 'train-synthetic'
    K: int = 2
    supplementary_mode: str = 'pairwise_single'
    flip_labels: bool = True
    hidden_widths: tuple = (32,)
    discriminator_hidden: int = None
    supplementary_hidden: int = None
    supplementary_steps: int = 1
    latent_dim: int = 8
    batch_size: int = 64
    iterations: int = 20000
    lr: float = 1e-3
    seed: int = 0
    seeds: tuple = None
    mnist_images: str = None
    mnist_labels: str = None
    digits: tuple = (0, 1)
    out: str = None
    snapshot_interval: int = 1000
    checkpoint_interval: int = 0
    centers: tuple = ((-2.0, 0.0), (2.0, 0.0))
    sigma: float = 0.1
    radius: float = 0.5
    bins: int = None
    n_real: int = 10000
    n_eval: int = 1000
    checkpoint: str = None
    generator: str = 'mixture'
    n: int = 1000
    samples: tuple = ()

    def __post_init__(self):
        for f in fields(self):
            object.__setattr__(self, f.name, _tupled(getattr(self, f.name)))
        self.validate()

    def validate(self):
        """Check field values that do not depend on the game.

        :raises ConfigError: describing the first problem found.
        """
        if self.task not in TASKS:
            raise ConfigError('Unknown task {!r}, use one of {}.'.format(
                self.task, TASKS))
        digits = tuple(self.digits)
        if (len(digits) != 2 or digits[0] == digits[1] or
                not all(0 <= int(d) <= 9 for d in digits)):
            raise ConfigError(
                'digits must be two distinct digits in 0..9, got {}.'.format(
                    digits))
        if self.bins is not None and self.bins < 1:
            raise ConfigError('bins must be >= 1, got {}.'.format(self.bins))
        if not self.radius > 0:
            raise ConfigError('radius must be positive.')
        for name in ('n', 'n_real', 'n_eval'):
            if getattr(self, name) < 0:
                raise ConfigError('{} must be >= 0.'.format(name))
        if any(w < 1 for w in self.hidden_widths):
            raise ConfigError('hidden_widths must be positive, got {}.'.format(
                self.hidden_widths))
        if self.generator != 'mixture':
            try:
                int(self.generator)
            except (TypeError, ValueError):
                raise ConfigError(
                    'generator must be an index or "mixture", got {!r}.'.format(
                        self.generator))

    @classmethod
    def for_task(cls, task, **overrides):
        """Defaults of a task, updated with keyword overrides."""
        values = dict(task_defaults.get(task, {}))
        values.update(overrides)
        values['task'] = task
        return cls(**values)

    @classmethod
    def field_names(cls):
        """Names of all configuration keys."""
        return [f.name for f in fields(cls)]

    def merge(self, overrides):
        """Copy with non-None values of a dict replacing fields.

        :raises ConfigError: for unknown keys.
        """
        unknown = sorted(set(overrides) - set(self.field_names()))
        if unknown:
            raise ConfigError('Unknown configuration keys: {}.'.format(
                ', '.join(unknown)))
        values = {k: v for k, v in overrides.items() if v is not None}
        return replace(self, **values)

    @classmethod
    def from_json(cls, path, base=None):
        """Read a configuration file.

        :param path: JSON filepath.
        :param base: `RunConfig` supplying values absent from the file,
            defaults of the file's task when omitted.

        :raises ConfigError: on invalid JSON, a non-object or unknown keys.
        """
        try:
            with open(path) as fh:
                values = json.load(fh)
        except json.JSONDecodeError as e:
            raise ConfigError('Config file {} is not valid JSON: {}.'.format(
                path, e))
        if not isinstance(values, dict):
            raise ConfigError('Config file {} must hold a JSON object.'.format(
                path))
        if base is None:
            base = cls.for_task(values.get('task', cls.task))
        return base.merge(values)

    def to_json(self, path):
        """Write the configuration as a JSON object with sorted keys."""
        with open(path, 'w') as fh:
            fh.write(self.dumps())

    def dumps(self):
        """The JSON text written by `to_json`."""
        return json.dumps(asdict(self), indent=2, sort_keys=True) + '\n'

    @property
    def is_mnist(self):
        """Whether the configuration trains on MNIST images."""
        return self.task == 'train-mnist' or self.mnist_images is not None

    @property
    def sample_dim(self):
        """Dimension of the data space."""
        if self.is_mnist:
            return mnist_sample_dim
        return len(self.centers[0])

    def output_dir(self):
        """Output directory: `out`, else <$MIXGAN_OUT>/<task>."""
        if self.out is not None:
            return self.out
        root = os.environ.get(OUT_ENV, default_out_root)
        return os.path.join(root, self.task)

    def generator_spec(self):
        """`MlpSpec` of every generator."""
        sizes = (self.latent_dim,) + tuple(self.hidden_widths) + (
            self.sample_dim,)
        output = 'sigmoid' if self.is_mnist else 'identity'
        return mixgan.models.MlpSpec(sizes, output_activation=output)

    def game_config(self, seed=None):
        """`GameConfig` of the run.

        :param seed: overrides `seed`, used for seed sweeps.
        """
        return mixgan.game.GameConfig(
            K=self.K,
            generator_spec=self.generator_spec(),
            supplementary_mode=self.supplementary_mode,
            flip_labels=self.flip_labels,
            batch_size=self.batch_size,
            total_iterations=self.iterations,
            seed=self.seed if seed is None else seed,
            lr=self.lr,
            discriminator_hidden=self.discriminator_hidden,
            supplementary_hidden=self.supplementary_hidden,
            supplementary_steps=self.supplementary_steps,
            snapshot_interval=self.snapshot_interval,
            checkpoint_interval=self.checkpoint_interval)
