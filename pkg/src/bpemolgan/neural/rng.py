"""Replayable random streams.

Every random draw in training comes from a Philox stream keyed by
(seed, step, name), so any step can be replayed without carrying generator
state around, e.g. after resuming from a checkpoint.
"""

from __future__ import annotations

import zlib

import numpy as np


def stream_id(name: str) -> int:
    return zlib.crc32(name.encode("utf-8"))


def rng_for(seed: int, step: int, name: str) -> np.random.Generator:
    ss = np.random.SeedSequence([int(seed), int(step), stream_id(name)])
    return np.random.Generator(np.random.Philox(ss))
