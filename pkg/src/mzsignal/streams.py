"""Deterministic derivation of random streams from a 64-bit seed.

All Monte Carlo in this package runs on counter-based Philox generators so
that results are bit-for-bit reproducible and independent of evaluation
order or worker count.  Two split schemes are used:

* block streams: one master stream per experiment, where the i-th trial owns
  counter tick i (Philox yields ``DRAWS_PER_BLOCK`` doubles per tick).  A
  worker starting at trial ``a`` simply advances the counter by ``a`` ticks
  and reproduces exactly the draws a serial run would have used.
* substreams: fully independent generators keyed by (seed, index), for runs
  whose draw count is data dependent (rejection sampling, sequential tests).
"""

import numpy as np

# Philox4x64 emits four 64-bit words per counter tick; numpy turns each word
# into one double, so a block is four uniform draws.
DRAWS_PER_BLOCK = 4

_SEED_MAX = 2**64


def _check_seed(seed: int) -> None:
    if not isinstance(seed, (int, np.integer)):
        raise ValueError(f"seed must be an integer, got {type(seed).__name__}")
    if not 0 <= seed < _SEED_MAX:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")


def master_stream(seed: int) -> np.random.Generator:
    """Stream whose counter tick i is the draw block of trial i."""
    _check_seed(seed)
    return np.random.Generator(np.random.Philox(key=seed))


def block_stream(seed: int, start_block: int) -> np.random.Generator:
    """master_stream(seed) advanced to the start of block ``start_block``."""
    _check_seed(seed)
    if start_block < 0:
        raise ValueError(f"start_block must be >= 0, got {start_block}")
    bitgen = np.random.Philox(key=seed)
    if start_block:
        bitgen.advance(start_block)
    return np.random.Generator(bitgen)


def substream(seed: int, index: int) -> np.random.Generator:
    """Independent generator for run ``index`` under ``seed``.

    The 128-bit Philox key holds the seed in its low word and index + 1 in
    its high word, so substreams never collide with each other or with the
    master stream (whose high key word is zero).
    """
    _check_seed(seed)
    if not 0 <= index < _SEED_MAX - 1:
        raise ValueError(f"substream index out of range: {index}")
    return np.random.Generator(np.random.Philox(key=seed | ((index + 1) << 64)))
