"""Deterministic random streams.

Every random draw in the package comes from a Philox4x64-10 counter-based
generator (``numpy.random.Philox``) keyed by ``(seed, stream)``, with
standard-normal variates produced by the Box-Muller transform on uniform
doubles. Given the same seed and stream, the draw sequence is reproducible
across processes and platforms; both the generator and the transform are
fixed per major version.

Stream ids pack a small "kind" tag into the top byte so that source draws
and channel-noise draws never collide even when both are indexed by the
same iteration counter.
"""

import numpy as np

SOURCE_KIND = 0
NOISE_KIND = 1

_KIND_SHIFT = 56
_MAX_INDEX = 1 << _KIND_SHIFT
_MAX_SEED = 1 << 64


def stream_id(kind: int, index: int) -> int:
    """Pack a (kind, index) pair into a single 64-bit stream id."""
    if not 0 <= index < _MAX_INDEX:
        raise ValueError(f"stream index out of range: {index}")
    if not 0 <= kind < 256:
        raise ValueError(f"stream kind out of range: {kind}")
    return (kind << _KIND_SHIFT) | index


def philox(seed: int, stream: int = 0) -> np.random.Generator:
    """Generator for the given (seed, stream) pair."""
    if not 0 <= seed < _MAX_SEED:
        raise ValueError(f"seed must fit in 64 bits, got {seed}")
    if not 0 <= stream < _MAX_SEED:
        raise ValueError(f"stream must fit in 64 bits, got {stream}")
    key = np.array([seed, stream], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def standard_normal(gen: np.random.Generator, n: int) -> np.ndarray:
    """n standard-normal draws via Box-Muller on pairs of uniforms."""
    if n < 0:
        raise ValueError("n must be non-negative")
    half = (n + 1) // 2
    u1 = gen.random(half)
    u2 = gen.random(half)
    # 1 - u1 lies in (0, 1], which keeps the log finite.
    radius = np.sqrt(-2.0 * np.log1p(-u1))
    angle = (2.0 * np.pi) * u2
    out = np.empty(2 * half)
    out[0::2] = radius * np.cos(angle)
    out[1::2] = radius * np.sin(angle)
    return out[:n]
