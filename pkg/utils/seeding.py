"""Seed derivation and deterministic fan-out of independent replicas"""

import logging
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import psutil

logger = logging.getLogger(__name__)

# Work units per replica chunk; fixed so merged results never depend on the thread count
DEFAULT_CHUNK = 4096


def replica_rng(seed, replica=0):
    """Generator for replica `replica` of master seed `seed`"""
    sequence = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(replica),))
    return np.random.Generator(np.random.PCG64(sequence))


def default_threads():
    try:
        count = psutil.cpu_count(logical=False)
    except Exception as e:
        logger.debug("cpu_count failed: %s", e)
        count = None
    return count or 1


def chunk_sizes(total, chunk=DEFAULT_CHUNK):
    """Split `total` work units into fixed-size chunks, last one possibly short"""
    if total <= 0:
        return []
    full, rest = divmod(int(total), int(chunk))
    return [chunk] * full + ([rest] if rest else [])


def fan_out(worker, total, seed, threads=None, chunk=DEFAULT_CHUNK):
    """Run worker(size, rng) over fixed chunks of `total` on a thread pool.

    Chunk i always uses replica_rng(seed, i), and results are returned in chunk
    order, so the output is identical for any thread count.
    """
    sizes = chunk_sizes(total, chunk)
    threads = max(1, int(threads or default_threads()))
    if threads == 1 or len(sizes) <= 1:
        return [worker(size, replica_rng(seed, i)) for i, size in enumerate(sizes)]
    with ThreadPoolExecutor(max_workers=threads) as executor:
        futures = [executor.submit(worker, size, replica_rng(seed, i)) for i, size in enumerate(sizes)]
        return [future.result() for future in futures]
