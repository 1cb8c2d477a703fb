"""
Process pool for independent replicates.

Workers are started with the "spawn" method on every platform, so a worker
never inherits numpy or logging state from the parent. Results always come
back in submission order, which keeps sweep output independent of the
number of workers.
"""

import multiprocessing as mp
import logging

logger = logging.getLogger("spatialfdr.pool")


def _context():
    try:
        return mp.get_context("spawn")
    except ValueError as e:
        logger.debug("spawn start method unavailable, using default: %s", e)
        return mp.get_context()


def map_ordered(func, items, workers=1, on_result=None):
    """
    Apply func to every item, in parallel when workers > 1.

    Args:
        func: Picklable module-level function
        items: Work items
        workers: Number of processes; 1 runs in the calling process
        on_result: Optional callback(index, result) run in the parent as
            results arrive (in order)

    Returns:
        list of results, ordered like items
    """
    items = list(items)
    results = []
    if workers <= 1 or len(items) <= 1:
        for i, item in enumerate(items):
            results.append(func(item))
            if on_result:
                on_result(i, results[-1])
        return results

    workers = min(workers, len(items))
    logger.debug("Starting %d worker processes for %d items", workers,
                 len(items))
    with _context().Pool(processes=workers) as pool:
        for i, result in enumerate(pool.imap(func, items, chunksize=1)):
            results.append(result)
            if on_result:
                on_result(i, result)
    return results
