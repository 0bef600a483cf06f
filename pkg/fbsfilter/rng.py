"""
Streams de números aleatorios deterministas.

Asignación fija de streams:
    1  -> lámina de Wiener de la señal (W)
    2  -> lámina de ruido que colorea B^{α,β}
    3+ -> lotes de partículas (3 + índice de lote)
"""

from __future__ import annotations

from typing import Union

import numpy as np

SIGNAL_STREAM = 1
NOISE_STREAM = 2
PARTICLE_STREAM_BASE = 3

Seed = Union[int, np.random.Generator, None]


def rng_streams(master_seed: int, stream_id: int) -> np.random.Generator:
    """Generador PCG64 independiente para (semilla maestra, id de stream)"""
    seq = np.random.SeedSequence(int(master_seed), spawn_key=(int(stream_id),))
    return np.random.Generator(np.random.PCG64(seq))


def particle_stream(master_seed: int, batch: int) -> np.random.Generator:
    return rng_streams(master_seed, PARTICLE_STREAM_BASE + batch)


def as_generator(seed: Seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)
