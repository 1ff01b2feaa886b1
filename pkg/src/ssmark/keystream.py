"""Deterministic key-to-randomness pipeline.

A 64-bit mixing stream (splitmix-style, constants below) replaces the
compiler-dependent generator so embedder and detector agree bit-for-bit on
every platform.  Output j of the stream seeded with s is mix64(s + j*GAMMA),
so arbitrary spans can be produced vectorized.
"""

from dataclasses import dataclass, field

import numpy as np

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
SEED_MODULUS = (1 << 31) - 1

KEY_MIN = 1
KEY_MAX = (1 << 31) - 1


def check_key(key):
    key = int(key)
    if not (KEY_MIN <= key <= KEY_MAX):
        raise ValueError(f"watermark key must be in [{KEY_MIN}, {KEY_MAX}]")
    return key


def mix64(v):
    """Finalizer applied to the stream state (scalar, python int)."""
    z = v & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def mix_outputs(seed, count, start=0):
    """Vectorized stream outputs start+1 .. start+count as uint64."""
    j = np.arange(start + 1, start + count + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(seed) + j * np.uint64(GAMMA)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        z = z ^ (z >> np.uint64(31))
    return z


def uniform_stream(seed, count, start=0):
    """Uniform doubles on (0, 1] from the mix stream."""
    z = mix_outputs(seed, count, start)
    u = (z >> np.uint64(11)).astype(np.float64) * (2.0 ** -53)
    return 1.0 - u


@dataclass
class SeedVector:
    """The key plus its 15 derived sequence seeds, all distinct."""

    seeds: tuple

    def __post_init__(self):
        assert len(self.seeds) == 16


def derive_seed_vector(key):
    """Deterministically expand `key` into 16 distinct 31-bit seeds.

    Collisions are resolved by skipping to the next stream output.
    """
    key = check_key(key)
    seeds = [key]
    seen = {key}
    step = 0
    # 64 outputs cover any realistic collision run
    pool = mix_outputs(key, 64)
    while len(seeds) < 16:
        if step >= len(pool):
            pool = np.concatenate([pool, mix_outputs(key, 64, start=len(pool))])
        candidate = 1 + int(pool[step]) % SEED_MODULUS
        step += 1
        if candidate in seen:
            continue
        seeds.append(candidate)
        seen.add(candidate)
    return SeedVector(tuple(seeds))


@dataclass
class GaussianSequence:
    seed: int
    samples: np.ndarray = field(repr=False)

    def __len__(self):
        return len(self.samples)


def gaussian_sequence(seed, n):
    """n standard-normal samples via Box-Muller over the mix stream.

    Both outputs of each Box-Muller pair are consumed in order; same
    (seed, n) is bitwise reproducible.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    pairs = (n + 1) // 2
    u = uniform_stream(seed, 2 * pairs)
    u1 = u[0::2]
    u2 = u[1::2]
    r = np.sqrt(-2.0 * np.log(u1))
    theta = 2.0 * np.pi * u2
    out = np.empty(2 * pairs, dtype=np.float64)
    out[0::2] = r * np.cos(theta)
    out[1::2] = r * np.sin(theta)
    return GaussianSequence(seed=int(seed), samples=out[:n])
