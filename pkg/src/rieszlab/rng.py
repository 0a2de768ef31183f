"""Counter-based random streams for reproducible Monte Carlo.

Every consumer draws from a Philox generator keyed by the user seed with the
counter preset to (0, chunk, unit, stream).  The draw sequence is therefore a
pure function of (seed, stream, unit, chunk): any schedule that assigns whole
chunks to workers reproduces the single-threaded stream exactly, so estimates
do not depend on the thread count.
"""

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .errors import DomainError

# Stream ids, one per Monte Carlo consumer.  Distinct ids give disjoint
# counter ranges under the same seed.
SPHERE_NORM = 1
SPHERE_MEAN = 2
LIPSCHITZ = 3
LEVELSET = 4
LEVELSET_RETRY = 5
EXHAUSTION = 6
EVAL_H = 7
SEARCH_INIT = 8
SEARCH_ANNEAL = 9
SEARCH_REEVAL = 10

# Samples per chunk.  Fixed so that chunk boundaries (and hence results) do
# not depend on the worker count.
CHUNK = 1 << 14


def check_seed(seed):
    if not isinstance(seed, (int, np.integer)):
        raise DomainError("seed must be an integer")
    if not 0 <= int(seed) < 2**64:
        raise DomainError("seed must lie in [0, 2**64)")
    return int(seed)


def generator(seed, stream, unit=0, chunk=0):
    """Philox generator for one (seed, stream, unit, chunk) cell."""
    seed = check_seed(seed)
    counter = np.array([0, chunk, unit, stream], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=np.uint64(seed), counter=counter))


def derive_seed(seed, stream, unit=0):
    """Deterministic child seed, used when an op needs fresh randomness."""
    return int(generator(seed, stream, unit).integers(0, 2**63))


def chunk_sizes(total):
    if total < 1:
        raise DomainError("sample count must be positive")
    full, rem = divmod(total, CHUNK)
    return [CHUNK] * full + ([rem] if rem else [])


def run_chunked(total, fn, seed, stream, unit=0, threads=1):
    """Evaluate fn(generator, size, chunk_index) over fixed-size chunks.

    Returns the per-chunk results in chunk order regardless of threads.
    """
    sizes = chunk_sizes(total)

    def one(c):
        return fn(generator(seed, stream, unit, c), sizes[c], c)

    if threads <= 1 or len(sizes) == 1:
        return [one(c) for c in range(len(sizes))]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(one, range(len(sizes))))


def combine_mean_se(partials):
    """Pool per-chunk (sum, sum_sq, count) triples into (mean, se, count)."""
    m = sum(p[2] for p in partials)
    s1 = math.fsum(p[0] for p in partials)
    s2 = math.fsum(p[1] for p in partials)
    mean = s1 / m
    if m > 1:
        var = max(s2 - s1 * s1 / m, 0.0) / (m - 1)
        se = math.sqrt(var / m)
    else:
        se = float("inf")
    return mean, se, m


def uniform_sphere(gen, m, n):
    """m points uniform on S^{n-1} (random signs when n = 1)."""
    g = gen.standard_normal((m, n))
    norms = np.linalg.norm(g, axis=1, keepdims=True)
    return g / norms


def uniform_ball(gen, m, n):
    """m points uniform in the open unit ball."""
    d = uniform_sphere(gen, m, n)
    r = gen.random(m) ** (1.0 / n)
    return d * r[:, None]
