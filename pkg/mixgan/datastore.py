"""Storing of model parameters to file.

Checkpoints use a small documented binary container::

    magic       6 bytes    b'MGGAN1'
    repeated until end of file, one record per tensor:
    name_len    uint64 LE
    name        name_len bytes, utf-8
    rank        uint64 LE
    dims        rank x uint64 LE
    values      prod(dims) x float64 LE, row-major

Loading a file written by `save_checkpoint` restores every value bit-exactly.
"""
import collections
import math
import os

import numpy as np

from mixgan.common import DataFormatError, get_named_logger

MAGIC = b'MGGAN1'
_U64 = np.dtype('<u8')
_F64 = np.dtype('<f8')


def _encode_tensor(name, array):
    array = np.ascontiguousarray(array, dtype=np.float64)
    name_bytes = name.encode('utf-8')
    parts = [
        np.array([len(name_bytes)], dtype=_U64).tobytes(),
        name_bytes,
        np.array([array.ndim], dtype=_U64).tobytes(),
        np.array(array.shape, dtype=_U64).tobytes(),
        array.astype(_F64).tobytes(order='C')]
    return b''.join(parts)


def save_checkpoint(path, named_arrays):
    """Write named arrays to a checkpoint file.

    :param path: output filepath.
    :param named_arrays: iterable of (name, array) in the order to store.
    """
    tmp = '{}.tmp'.format(path)
    try:
        with open(tmp, 'wb') as fh:
            fh.write(MAGIC)
            for name, array in named_arrays:
                fh.write(_encode_tensor(name, array))
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise


class _Reader(object):

    def __init__(self, data, path):
        self.data = data
        self.path = path
        self.offset = 0

    def take(self, n, what):
        if self.offset + n > len(self.data):
            raise DataFormatError(
                'Checkpoint {} is truncated while reading {} '
                '(need {} bytes at offset {}, file has {}).'.format(
                    self.path, what, n, self.offset, len(self.data)))
        chunk = self.data[self.offset:self.offset + n]
        self.offset += n
        return chunk

    def u64(self, count, what):
        return np.frombuffer(self.take(8 * count, what), dtype=_U64)

    @property
    def exhausted(self):
        return self.offset == len(self.data)


def load_checkpoint(path):
    """Read a checkpoint file.

    :param path: checkpoint filepath.

    :returns: `collections.OrderedDict` of name -> float64 array.
    :raises DataFormatError: on a bad magic string, a truncated file or
        dims that do not fit the file.
    """
    with open(path, 'rb') as fh:
        data = fh.read()
    reader = _Reader(data, path)
    magic = reader.take(len(MAGIC), 'magic')
    if magic != MAGIC:
        raise DataFormatError(
            'File {} is not a checkpoint: magic {!r}, expected {!r}.'.format(
                path, magic, MAGIC))
    arrays = collections.OrderedDict()
    while not reader.exhausted:
        name_len = int(reader.u64(1, 'name length')[0])
        try:
            name = reader.take(name_len, 'name').decode('utf-8')
        except UnicodeDecodeError as e:
            raise DataFormatError(
                'Checkpoint {} has a tensor name that is not utf-8.'.format(
                    path)) from e
        rank = int(reader.u64(1, 'rank of {}'.format(name))[0])
        dims = tuple(int(d) for d in reader.u64(rank, 'dims of {}'.format(name)))
        count = math.prod(dims)
        if 8 * count > len(data) - reader.offset:
            raise DataFormatError(
                'Checkpoint {} declares {} values for {} with {} bytes left.'
                .format(path, count, name, len(data) - reader.offset))
        values = np.frombuffer(
            reader.take(8 * count, 'values of {}'.format(name)), dtype=_F64)
        arrays[name] = values.astype(np.float64).reshape(dims)
    return arrays


class ModelStore(object):
    """Read and write game parameters to a checkpoint file."""

    def __init__(self, filepath):
        """Initialize a ModelStore.

        :param filepath: checkpoint filepath.
        """
        self.filepath = filepath
        self.logger = get_named_logger('MdlStore')

    def __enter__(self):
        """Create context for handling a checkpoint file."""
        return self

    def __exit__(self, exception_type, exception_value, traceback):
        """Exit context manager."""
        if exception_type is not None:
            self.logger.info('ModelStore exception {}'.format(exception_value))

    def save(self, state):
        """Write the parameters and optimizer moments of a `GameState`."""
        save_checkpoint(self.filepath, state.named_arrays())
        self.logger.debug('Wrote checkpoint {}'.format(self.filepath))

    def load_into(self, state):
        """Restore a `GameState` from the file.

        :param state: `GameState` with the architecture of the checkpoint.

        :returns: the restored state.
        """
        self.logger.info('Loading checkpoint {}'.format(self.filepath))
        state.restore(load_checkpoint(self.filepath))
        return state
