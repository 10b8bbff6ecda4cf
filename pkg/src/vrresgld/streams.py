"""Named, independent random streams derived from a single master seed.

Each consumer gets its own Philox generator keyed by ``(master_seed, index)``
through :class:`numpy.random.SeedSequence`. Streams never share state, so
turning one consumer off (say, the variance probes) leaves every other
sequence untouched.
"""

from __future__ import annotations

import numpy as np

STREAM_NAMES = ("data-gen", "batch", "chain1-noise", "chain2-noise", "swap", "probe")
_STREAM_INDEX = {name: i for i, name in enumerate(STREAM_NAMES)}


def stream(master_seed: int, name: str) -> np.random.Generator:
    """Return the generator for one named stream."""
    try:
        key = _STREAM_INDEX[name]
    except KeyError:
        raise ValueError(f"unknown stream {name!r}; expected one of {STREAM_NAMES}") from None
    seq = np.random.SeedSequence(int(master_seed), spawn_key=(key,))
    return np.random.Generator(np.random.Philox(seq))


def rng_streams(master_seed: int) -> dict[str, np.random.Generator]:
    """All named streams for ``master_seed``, keyed by stream name."""
    return {name: stream(master_seed, name) for name in STREAM_NAMES}
