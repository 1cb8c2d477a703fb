"""
Seeded random streams.

A run is driven by one integer seed. Independent parts of a run draw from
separate streams derived from that seed, so that e.g. changing the number of
Method II resampling draws never changes the simulated noise field:

    stream "noise"        parent noise fields of the simulated scenarios
    stream "resample"     Method II exclusion / resampling draws
    stream "monte_carlo"  Monte Carlo null laws (even neighborhood sizes)

Each stream is ``PCG64(SeedSequence(seed, spawn_key=(stream_id,)))``.
Replicate ``r`` of a sweep started with seed ``s`` uses seed ``s + r``.
"""

import numpy as np

STREAMS = {
    "noise": 0,
    "resample": 1,
    "monte_carlo": 2,
}


def get_rng(seed: int, stream: str = "noise") -> np.random.Generator:
    """
    Get a numpy random generator for one named stream of a seed.

    Args:
        seed: Non-negative run seed
        stream: One of STREAMS

    Returns:
        numpy Generator instance
    """
    try:
        stream_id = STREAMS[stream]
    except KeyError:
        raise ValueError(f"Unknown random stream '{stream}'. "
                         f"Use one of: {', '.join(STREAMS)}") from None
    seq = np.random.SeedSequence(int(seed), spawn_key=(stream_id,))
    return np.random.Generator(np.random.PCG64(seq))


def replicate_seeds(base_seed: int, reps: int):
    """Seeds of replicates 0..reps-1; replicate 0 reuses the base seed."""
    return [int(base_seed) + r for r in range(reps)]
