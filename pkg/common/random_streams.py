"""
Named, counter-based random substreams.

All randomness flows from one master seed. Each consumer asks for a named
stream plus integer keys (block index, time index, ...), and receives a
Philox generator keyed by ``SeedSequence(seed, spawn_key=(stream, *keys))``.
Draws therefore depend only on (seed, stream, keys), never on how many
workers run or in what order blocks are produced.
"""

import numpy as np

STREAMS = {
    'market': 0,
    'inner': 1,
    'candidates': 2,
    'moments': 3,
    'bridge': 4,
    'lsmc': 5,
}


def substream(seed, stream, *keys):
    if stream not in STREAMS:
        raise KeyError(f'Unknown random stream: {stream}')
    spawn_key = (STREAMS[stream],) + tuple(int(key) for key in keys)
    sequence = np.random.SeedSequence(entropy=int(seed), spawn_key=spawn_key)
    return np.random.Generator(np.random.Philox(sequence))


def block_normals(seed, stream, n_rows, shape, block_size, *keys):
    """
    Standard normals of shape (n_rows, *shape) assembled from fixed-size
    blocks of rows; row j always comes from block j // block_size, so a prefix
    of rows is identical for any total row count.
    """
    out = np.empty((n_rows,) + tuple(shape))
    for block, start in enumerate(range(0, n_rows, block_size)):
        stop = min(start + block_size, n_rows)
        generator = substream(seed, stream, *keys, block)
        drawn = generator.standard_normal((block_size,) + tuple(shape))
        out[start:stop] = drawn[:stop - start]
    return out
