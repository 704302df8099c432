"""Counter-based pseudo-random generator built on the splitmix64 finalizer.

Every random draw in the fixtures and in classifier initialization is a pure
function of (seed, stream, counter), so runs are reproducible bitwise and
fixture synthesis can be evaluated out of order or in parallel.  Streams
namespace independent consumers (per-step latents, token maps, textures...).
"""

from __future__ import annotations

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_U64 = np.uint64


def _mix(state: np.ndarray) -> np.ndarray:
    """splitmix64 step: advance by the golden gamma, then finalize."""
    z = state + _GOLDEN
    z = (z ^ (z >> _U64(30))) * _MIX1
    z = (z ^ (z >> _U64(27))) * _MIX2
    return z ^ (z >> _U64(31))


def hash_u64(seed: int, stream: int, counters) -> np.ndarray:
    """64-bit words for the given counters under (seed, stream).

    Computed as mix(mix(mix(seed) ^ stream) ^ counter); every stage is a
    bijection on u64, so distinct counters map to distinct words.
    """
    c = np.atleast_1d(np.asarray(counters, dtype=np.uint64))
    with np.errstate(over="ignore"):
        key = _mix(np.asarray([seed], dtype=np.uint64))
        key = _mix(key ^ np.asarray([stream], dtype=np.uint64))
        return _mix(key ^ c)


def uniforms(seed: int, stream: int, count: int, offset: int = 0) -> np.ndarray:
    """float64 samples in [0, 1) for counters offset .. offset+count-1."""
    words = hash_u64(seed, stream, np.arange(offset, offset + count, dtype=np.uint64))
    return (words >> _U64(11)).astype(np.float64) * (2.0 ** -53)


def gaussians(seed: int, stream: int, count: int) -> np.ndarray:
    """Standard normal samples via Box-Muller over paired uniform draws."""
    pairs = (count + 1) // 2
    u = uniforms(seed, stream, 2 * pairs)
    u1 = 1.0 - u[0::2]  # move into (0, 1] so log() is finite
    u2 = u[1::2]
    radius = np.sqrt(-2.0 * np.log(u1))
    out = np.empty(2 * pairs)
    out[0::2] = radius * np.cos(2.0 * np.pi * u2)
    out[1::2] = radius * np.sin(2.0 * np.pi * u2)
    return out[:count]
