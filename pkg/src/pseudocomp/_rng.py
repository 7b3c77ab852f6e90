"""Counter-based random streams.

Every random draw in the package comes from a Philox-4x64 generator whose
128-bit key is ``(seed, purpose)`` and whose starting counter carries a block
index in its top word.  Work is split into blocks of ``BLOCK`` tasks; block
``b`` always sees the same stream no matter which worker evaluates it or in
what order, so serial and parallel runs agree bit for bit.
"""

import numpy as np

BLOCK = 1 << 16

_U64 = (1 << 64) - 1

# Purpose tags keep independent uses of one seed on disjoint keys.
DRAWS = 1
TIES = 2
ESTIMATION = 3
REPLICATION = 4


def stream(seed, purpose=DRAWS, block=0):
    """Return the generator for ``(seed, purpose, block)``."""
    seed = int(seed)
    if seed < 0 or seed > _U64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    bitgen = np.random.Philox(
        key=np.array([seed, int(purpose)], dtype=np.uint64),
        counter=np.array([0, 0, 0, int(block)], dtype=np.uint64),
    )
    return np.random.Generator(bitgen)


def derive_seed(seed, *path):
    """Deterministically derive a child u64 seed from ``seed`` and integers."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(p) for p in path))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def blocks(total):
    """Yield ``(block_index, start, size)`` covering ``total`` items."""
    for b, start in enumerate(range(0, total, BLOCK)):
        yield b, start, min(BLOCK, total - start)
