"""Bounded process pool for running independent training seeds."""
import concurrent.futures
import multiprocessing


class ProcessPoolExecutor(concurrent.futures.ProcessPoolExecutor):
    """Extends `ProcessPoolExecutor` by limiting simultaneous work items."""

    def __init__(self, max_items, **kwargs):
        """Initialize a process pool.

        :param max_items: maximum number of simultaneous work items.
            Calls to `.submit` will block if there are too many unprocessed
            items.
        :param kwargs: key-word arguments to `ProcessPoolExecutor`.
        """
        super().__init__(**kwargs)
        self.semaphore = multiprocessing.BoundedSemaphore(max_items)

    def submit(self, fn, *args, **kwargs):
        self.semaphore.acquire()
        future = super().submit(fn, *args, **kwargs)
        future.add_done_callback(self._release)
        return future

    def _release(self, future):
        self.semaphore.release()


def run_all(fn, items, workers=1):
    """Apply a function to items in worker processes, keeping item order.

    :param fn: picklable callable of one argument.
    :param items: list of arguments.
    :param workers: number of processes; 1 runs in the calling process.

    :returns: list of results; the first exception raised is re-raised.
    """
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(
            max_items=2 * workers, max_workers=workers) as executor:
        futures = [executor.submit(fn, item) for item in items]
        return [f.result() for f in futures]
