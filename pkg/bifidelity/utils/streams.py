import zlib

import numpy as np

from ..error import IncorrectConfig

SAMPLING = "sampling"
HF_SUBSET = "hf-subset"
SOLVER_HOLDOUT = "solver-holdout"
COHERENCE_POOL = "coherence-pool"
BOUND_SUBSET = "bound-subset"


def substream_seed(seed: int, name: str, *keys: int) -> np.random.SeedSequence:
    """
    Seed sequence of the named sub-stream ``name`` under ``seed``, keyed by ``keys``.

    Streams depend only on their name and keys, never on the order they are requested in.

    :param seed: Root seed of the run.
    :param name: Stream name, e.g. :data:`HF_SUBSET`.
    :param keys: Non-negative integers such as sweep cell coordinates.
    """
    if seed < 0 or any(k < 0 for k in keys):
        raise IncorrectConfig("Seeds and stream keys must be non-negative")
    spawn_key = (zlib.crc32(name.encode("utf-8")),) + tuple(int(k) for k in keys)
    return np.random.SeedSequence(int(seed), spawn_key=spawn_key)


def substream(seed: int, name: str, *keys: int) -> np.random.Generator:
    """Generator of the named sub-stream, see :func:`substream_seed`."""
    return np.random.default_rng(substream_seed(seed, name, *keys))


def substream_int(seed: int, name: str, *keys: int) -> int:
    """A 32-bit integer seed drawn from the named sub-stream, for APIs that take plain ints."""
    return int(substream_seed(seed, name, *keys).generate_state(1)[0])
