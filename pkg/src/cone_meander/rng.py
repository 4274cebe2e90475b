"""Reproducible random streams keyed by ``(seed, stream_id)``.

Every sampler draws from ``numpy.random.Generator`` objects built here.  Bulk
work is cut into fixed-size chunks and chunk ``k`` of stream ``s`` always gets
the generator spawned from ``SeedSequence(seed, spawn_key=(s, k))``, so the
output does not depend on how chunks are spread over worker processes.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

SEED_ENV_VAR = "CONE_MEANDER_SEED"


@dataclass(frozen=True)
class RngStreamSpec:
    """Seed record of one random stream."""

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        if not (0 <= int(self.seed) < 2**64):
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if int(self.stream_id) < 0:
            raise ConfigError(f"stream_id must be >= 0, got {self.stream_id}")

    def generator(self, chunk: int = 0) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.seed), spawn_key=(int(self.stream_id), int(chunk)))
        return np.random.Generator(np.random.PCG64(ss))

    def substream(self, offset: int) -> "RngStreamSpec":
        """Stream with the same seed and ``stream_id`` shifted by ``offset``.

        Used to give independent streams to the sub-tasks of one check.
        """
        return RngStreamSpec(self.seed, self.stream_id + 1000 * (offset + 1))

    def as_dict(self) -> dict:
        return {"seed": int(self.seed), "stream_id": int(self.stream_id)}


def resolve_seed(seed: int | None) -> int:
    """Explicit seed, else ``$CONE_MEANDER_SEED``, else 0."""
    if seed is not None:
        return int(seed)
    env = os.environ.get(SEED_ENV_VAR)
    if env is None or env.strip() == "":
        return 0
    try:
        return int(env)
    except ValueError as exc:
        raise ConfigError(f"{SEED_ENV_VAR}={env!r} is not an integer") from exc


def as_stream(rng) -> RngStreamSpec:
    """Coerce an int seed or an existing spec into a :class:`RngStreamSpec`."""
    if isinstance(rng, RngStreamSpec):
        return rng
    if rng is None:
        return RngStreamSpec(resolve_seed(None))
    return RngStreamSpec(int(rng))


def chunk_sizes(n: int, chunk: int) -> list[int]:
    """Split ``n`` items into fixed-size chunks (last one possibly smaller)."""
    full, rest = divmod(int(n), int(chunk))
    return [chunk] * full + ([rest] if rest else [])
