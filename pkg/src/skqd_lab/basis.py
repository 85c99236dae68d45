"""Bitstring conventions and fixed-Hamming-weight sector bases.

Site 0 is the leftmost character of a serialized bitstring and the most
significant bit of its integer label, so lexicographic string order equals
ascending integer order. A set bit is an excitation (Z eigenvalue -1).
"""

from __future__ import annotations

from functools import lru_cache
from itertools import combinations
from math import comb

import numpy as np

from .errors import InvalidSectorError, InvalidSizeError

MAX_SITES = 62


def site_mask(n: int, site: int) -> int:
    return 1 << (n - 1 - site)


def to_bitstring(x: int, n: int) -> str:
    return format(int(x), f"0{n}b")


def from_bitstring(s: str) -> int:
    if not s or set(s) - {"0", "1"}:
        raise ValueError(f"not a bitstring: {s!r}")
    return int(s, 2)


def bitstrings(keys, n: int) -> list[str]:
    return [format(int(x), f"0{n}b") for x in keys]


def popcount(x):
    return np.bitwise_count(np.asarray(x, dtype=np.int64)).astype(np.int64)


def check_sites(n: int) -> None:
    if not 1 <= n <= MAX_SITES:
        raise InvalidSizeError(f"n_sites must be in [1, {MAX_SITES}], got {n}")


@lru_cache(maxsize=64)
def _sector_basis(n: int, k: int) -> np.ndarray:
    weights = np.array([1 << (n - 1 - s) for s in range(n)], dtype=np.int64)
    if k == 0:
        out = np.zeros(1, dtype=np.int64)
    else:
        count = comb(n, k)
        flat = np.fromiter(
            (p for c in combinations(range(n), k) for p in c), dtype=np.int64, count=count * k
        )
        out = weights[flat.reshape(count, k)].sum(axis=1)
        out.sort()
    out.flags.writeable = False
    return out


def sector_basis(n: int, k: int) -> np.ndarray:
    """All weight-``k`` labels of ``n`` sites in ascending (lexicographic) order."""
    check_sites(n)
    if not 0 <= k <= n:
        raise InvalidSectorError(f"sector k={k} outside [0, {n}]")
    return _sector_basis(n, k)


def sector_dim(n: int, k: int) -> int:
    return comb(n, k) if 0 <= k <= n else 0


def sector_rank(x: int, n: int) -> int:
    """Position of ``x`` within its own weight sector, without a lookup table."""
    rank, j = 0, 0
    for p in range(n):
        if (x >> p) & 1:
            j += 1
            rank += comb(p, j)
    return rank


def sector_unrank(rank: int, n: int, k: int) -> int:
    if not 0 <= rank < comb(n, k):
        raise IndexError(f"rank {rank} outside sector ({n}, {k})")
    x = 0
    for j in range(k, 0, -1):
        p = j - 1
        while comb(p + 1, j) <= rank:
            p += 1
        rank -= comb(p, j)
        x |= 1 << p
    return x


def lookup(sorted_keys: np.ndarray, images: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Indices of ``images`` in ``sorted_keys`` plus a mask of which were found."""
    pos = np.searchsorted(sorted_keys, images)
    pos = np.minimum(pos, len(sorted_keys) - 1)
    found = sorted_keys[pos] == images
    return pos, found
