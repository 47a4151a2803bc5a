"""Two-dimensional digital nets (Sobol) and nested uniform (Owen) scrambling.

The net pairs the base-2 radical-inverse sequence with the first Sobol
dimension; the pair is a (0, m, 2)-net in base 2, i.e. every dyadic box of
volume 2^-m contains exactly one of the 2^m points.  Scrambling flips each
digit by a keyed hash of the digits above it, independently per coordinate,
which preserves the net property exactly while making every point uniform
on [0,1)^2 marginally over keys.

Points carry 31 bits of precision.  The default real mapping is digits/2^31,
so the engine adds half an ulp before feeding inverse CDFs; an offset
mapping (digits+0.5)/2^31 is available as an alternative.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["DigitalNet2D", "ScrambleKeys", "sobol_net", "owen_scramble"]

N_BITS = 31

# Direction integers m_j for the second Sobol dimension (primitive
# polynomial x + 1): m_1 = 1, m_j = m_{j-1} xor 2*m_{j-1}.
_DIM2_M = [1]
while len(_DIM2_M) < N_BITS:
    prev = _DIM2_M[-1]
    _DIM2_M.append(prev ^ (prev << 1))

# Generator columns as 31-bit integers, one per index bit (LSB first).
# Coordinate 1 is the van der Corput sequence; coordinate 2 the Sobol
# direction numbers v_j = m_j * 2^(31-j).
_COLUMNS = (
    tuple(1 << (N_BITS - 1 - j) for j in range(N_BITS)),
    tuple(_DIM2_M[j] << (N_BITS - 1 - j) for j in range(N_BITS)),
)

_SPLITMIX_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_U64 = np.uint64


def _mix64(x):
    """SplitMix64 finalizer; accepts uint64 scalars or arrays (wrapping mul)."""
    x = np.asarray(x, dtype=np.uint64)
    with np.errstate(over="ignore"):
        x = (x ^ (x >> _U64(30))) * _U64(0xBF58476D1CE4E5B9)
        x = (x ^ (x >> _U64(27))) * _U64(0x94D049BB133111EB)
    return x ^ (x >> _U64(31))


@dataclass(frozen=True)
class DigitalNet2D:
    """2^m points of a two-dimensional digital net in base 2.

    digits holds the 31-bit integer coordinates, shape (2^m, 2); points are
    digits / 2^31 in [0, 1).
    """

    m: int
    digits: np.ndarray
    columns: tuple = _COLUMNS

    @property
    def n_points(self) -> int:
        return 1 << self.m

    @property
    def points(self) -> np.ndarray:
        return self.digits / float(1 << N_BITS)

    def points_offset(self) -> np.ndarray:
        """Centered mapping (digits + 0.5) / 2^31, never exactly zero."""
        return (self.digits + 0.5) / float(1 << N_BITS)


@dataclass(frozen=True)
class ScrambleKeys:
    """Per-coordinate hash keys, derived from (seed, replicate)."""

    seed: int
    replicate: int
    coord_keys: tuple

    @classmethod
    def derive(cls, seed: int, replicate: int) -> "ScrambleKeys":
        with np.errstate(over="ignore"):
            mixed = _U64(seed & 0xFFFFFFFFFFFFFFFF) * _SPLITMIX_GAMMA + _U64(replicate & 0xFFFFFFFFFFFFFFFF)
            base = _mix64(mixed)
            k0 = int(_mix64(base + _U64(1)))
            k1 = int(_mix64(base + _U64(2)))
        return cls(seed=seed, replicate=replicate, coord_keys=(k0, k1))


def sobol_net(m: int) -> DigitalNet2D:
    """Build the two-dimensional Sobol net with 2^m points."""
    if not 1 <= m <= N_BITS:
        raise ValueError(f"m must lie in [1, {N_BITS}], got {m}")
    n = 1 << m
    idx = np.arange(n, dtype=np.uint32)
    digits = np.zeros((n, 2), dtype=np.uint32)
    for c in range(2):
        cols = _COLUMNS[c]
        acc = np.zeros(n, dtype=np.uint32)
        for j in range(m):
            bit = (idx >> np.uint32(j)) & np.uint32(1)
            acc ^= bit * np.uint32(cols[j])
        digits[:, c] = acc
    digits.setflags(write=False)
    return DigitalNet2D(m=m, digits=digits)


def owen_scramble(net: DigitalNet2D, seed: int, replicate: int) -> DigitalNet2D:
    """Nested uniform scramble of a net, deterministic in (seed, replicate).

    Bit k of each coordinate is flipped by a hash of (coordinate key, k,
    the k leading bits of the unscrambled coordinate), so points sharing a
    dyadic prefix receive the same flips at that level: an Owen scramble
    with hash-defined permutation trees.
    """
    keys = ScrambleKeys.derive(seed, replicate)
    digits = net.digits.astype(np.uint64)
    out = np.empty_like(net.digits)
    for c in range(2):
        key = _U64(keys.coord_keys[c])
        col = digits[:, c]
        scrambled = col.copy()
        for k in range(N_BITS):
            prefix = col >> _U64(N_BITS - k)
            token = (prefix << _U64(6)) | _U64(k)
            h = _mix64(token ^ key)
            flip = h >> _U64(63)
            scrambled ^= flip << _U64(N_BITS - 1 - k)
        out[:, c] = scrambled.astype(np.uint32)
    out.setflags(write=False)
    return DigitalNet2D(m=net.m, digits=out, columns=net.columns)
