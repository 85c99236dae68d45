"""Initial states: singlet products, Neel states and per-sector W-state products."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product

import numpy as np

from .basis import check_sites, lookup, sector_basis, site_mask
from .errors import DimensionError, InvalidSectorError, InvalidSizeError
from .hamiltonian import SectorVector, State, StateVector
from .lattice import Geometry, snake_order

KINDS = ("singlet", "neel", "wstate")


@dataclass(frozen=True)
class InitialStateSpec:
    kind: str = "singlet"
    k: int | None = None
    layout: str = "identity"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown initial state {self.kind!r}, expected one of {KINDS}")
        if self.kind == "wstate" and (self.k is None or self.k < 0):
            raise InvalidSectorError("a W-state product needs a sector k >= 0")
        if self.layout not in ("identity", "snake"):
            raise ValueError(f"unknown layout {self.layout!r}")

    def sector(self, n: int) -> int:
        """Hamming weight of every bitstring in the prepared state."""
        if self.kind == "wstate":
            return self.k
        return n // 2

    def order(self, geometry: Geometry) -> list[int]:
        if self.layout == "snake":
            return snake_order(geometry)
        return list(range(geometry.n_sites))

    def prepare(self, geometry: Geometry, sector: bool = False) -> State:
        n = geometry.n_sites
        layout = self.order(geometry)
        if self.kind == "singlet":
            return singlet_product(n, layout, sector=sector)
        if self.kind == "neel":
            return neel(n, sector=sector)
        if self.k > n // 2:
            raise InvalidSectorError(f"sector sweeps run k in [0, n/2], got k={self.k}")
        return w_state_product(n, self.k, layout, sector=sector)

    def to_json(self) -> dict:
        return {"kind": self.kind, "k": self.k, "layout": self.layout}


def _from_support(n: int, keys: np.ndarray, amps: np.ndarray, k: int, sector: bool) -> State:
    if sector:
        basis = sector_basis(n, k)
        pos, found = lookup(basis, keys)
        assert found.all()
        out = np.zeros(len(basis), dtype=complex)
        out[pos] = amps
        return SectorVector(n, k, out)
    out = np.zeros(1 << n, dtype=complex)
    out[keys] = amps
    return StateVector(n, out)


def singlet_product(n: int, layout=None, sector: bool = False) -> State:
    """Product of ``(|01> - |10>)/sqrt(2)`` on consecutive pairs of ``layout``."""
    if n % 2:
        raise InvalidSizeError(f"a singlet product needs an even number of sites, got {n}")
    check_sites(n)
    layout = list(range(n)) if layout is None else list(layout)
    pairs = [(layout[2 * j], layout[2 * j + 1]) for j in range(n // 2)]
    keys, amps = [], []
    for choice in product((0, 1), repeat=len(pairs)):
        x, sign = 0, 1
        for (a, b), first in zip(pairs, choice):
            # first == 1 puts the excitation on the pair's first site: the |10> branch
            x |= site_mask(n, a if first else b)
            sign = -sign if first else sign
        keys.append(x)
        amps.append(sign)
    amps = np.asarray(amps, dtype=float) / np.sqrt(2.0 ** len(pairs))
    return _from_support(n, np.asarray(keys, dtype=np.int64), amps, n // 2, sector)


def neel(n: int, sector: bool = False) -> State:
    """Basis state ``|0101...>``."""
    check_sites(n)
    x = sum(site_mask(n, i) for i in range(1, n, 2))
    return _from_support(n, np.array([x], dtype=np.int64), np.ones(1), n // 2, sector)


def w_groups(n: int, k: int, layout=None) -> list[list[int]]:
    """Contiguous site groups, one per excitation.

    Boundaries are ``round(m * n / k)`` with Python's round-half-to-even.
    """
    if not 0 <= k <= n:
        raise InvalidSectorError(f"sector k={k} outside [0, {n}]")
    layout = list(range(n)) if layout is None else list(layout)
    if k == 0:
        return []
    bounds = [round(Fraction(m * n, k)) for m in range(k + 1)]
    return [layout[bounds[m] : bounds[m + 1]] for m in range(k)]


def w_state_product(n: int, k: int, layout=None, sector: bool = False) -> State:
    """Tensor product of W states, one per group of :func:`w_groups`."""
    check_sites(n)
    groups = w_groups(n, k, layout)
    keys = np.zeros(1, dtype=np.int64)
    amps = np.ones(1)
    for group in groups:
        masks = np.array([site_mask(n, s) for s in group], dtype=np.int64)
        keys = (keys[:, None] | masks[None, :]).ravel()
        amps = np.repeat(amps / np.sqrt(len(group)), len(group))
    return _from_support(n, keys, amps, k, sector)


def overlap_sq(a: State, b: State) -> float:
    """``|<a|b>|**2``; sector and full-space states may be mixed."""
    if a.n_sites != b.n_sites:
        raise DimensionError(f"{a.n_sites} vs {b.n_sites} sites")
    if isinstance(a, SectorVector) and isinstance(b, SectorVector):
        if a.k != b.k:
            return 0.0
        return float(abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2)
    return float(abs(np.vdot(a.to_full().amplitudes, b.to_full().amplitudes)) ** 2)
