"""Deterministic random-number streams.

All randomness in the package flows from a single master seed through the
counter-based Philox4x32 generator (numpy's ``Philox`` bit generator).  Streams
for subcommands and per-trial work are derived from
``SeedSequence((master_seed, tag_code, index))`` so any worker can be
reproduced independently of execution order.  The generator name and the
derivation are recorded in every output artifact.
"""
from __future__ import annotations

import numpy as np

GENERATOR_NAME = "numpy-philox4x32"

# Stable tag codes for stream derivation.  New tags append; never renumber.
STREAM_TAGS = {
    "unitary": 1,
    "simulate": 2,
    "success-prob": 3,
    "perm-bench": 4,
    "diagnose-gaussian": 5,
    "distribution": 6,
    "sources": 7,
    "test": 99,
}


def seed_sequence(master_seed: int, tag: str | None = None, index: int = 0) -> np.random.SeedSequence:
    if tag is None:
        return np.random.SeedSequence(master_seed)
    try:
        code = STREAM_TAGS[tag]
    except KeyError:
        raise KeyError(f"unknown stream tag {tag!r}; known: {sorted(STREAM_TAGS)}") from None
    return np.random.SeedSequence((master_seed, code, index))


def make_rng(master_seed: int, tag: str | None = None, index: int = 0) -> np.random.Generator:
    """Philox generator for (master seed, subcommand tag, worker index)."""
    return np.random.Generator(np.random.Philox(seed_sequence(master_seed, tag, index)))
