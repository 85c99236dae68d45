"""XXZ Hamiltonian as a weighted Pauli-term list, and its action on states.

Convention: the spin operators are the Pauli matrices themselves (no factor
1/2), so a two-site XXX bond has singlet energy -3J. Bit value 1 means spin
down, ``Z|0> = |0>`` and ``Z|1> = -|1>``.

Every operator action goes through :func:`matrix_elements`, which evaluates
all terms sharing the same bit-flip pattern at once. On a nearest-neighbour
bond the XX and YY terms share a flip pattern, so they are fused into a single
hop of amplitude ``2J`` between ``|01>`` and ``|10>`` and cancel on
``|00>``/``|11>``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property, lru_cache

import numpy as np
import scipy.sparse as sp

from .basis import check_sites, lookup, popcount, sector_basis, site_mask
from .errors import DimensionError, InvalidSectorError, SymmetryError
from .lattice import Geometry

AXES = ("X", "Y", "Z")


@dataclass(frozen=True)
class ModelParams:
    geometry: Geometry
    J: float = 1.0
    delta: float = 1.0
    h_z: float = 0.0
    h_x: float = 0.0

    def __post_init__(self):
        for name in ("J", "delta", "h_z", "h_x"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value}")

    @property
    def n_sites(self) -> int:
        return self.geometry.n_sites

    def with_field(self, h_z: float) -> "ModelParams":
        return replace(self, h_z=float(h_z))


@dataclass(frozen=True)
class PauliTerm:
    coeff: float
    paulis: tuple[tuple[int, str], ...]

    def masks(self, n: int) -> tuple[int, int, int]:
        """``(x_mask, z_mask, n_y)`` in the decomposition ``Y = i X Z``."""
        x = z = 0
        n_y = 0
        for site, axis in self.paulis:
            m = site_mask(n, site)
            if axis in ("X", "Y"):
                x |= m
            if axis in ("Z", "Y"):
                z |= m
            n_y += axis == "Y"
        return x, z, n_y


@dataclass(frozen=True)
class TermList:
    n_sites: int
    terms: tuple[PauliTerm, ...] = ()

    def __post_init__(self):
        check_sites(self.n_sites)
        for t in self.terms:
            if not 1 <= len(t.paulis) <= 2:
                raise ValueError(f"term {t} must touch one or two sites")
            sites = [s for s, _ in t.paulis]
            if len(set(sites)) != len(sites):
                raise ValueError(f"term {t} repeats a site")
            for s, axis in t.paulis:
                if not 0 <= s < self.n_sites or axis not in AXES:
                    raise ValueError(f"bad Pauli factor ({s}, {axis!r})")
            if not math.isfinite(t.coeff):
                raise ValueError("coefficients must be finite reals")

    def __len__(self):
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms)

    @cached_property
    def groups(self) -> tuple[tuple[int, tuple[tuple[int, complex], ...]], ...]:
        """Terms grouped by flip mask: ``((x_mask, ((z_mask, coeff * i**n_y), ...)), ...)``."""
        by_x: dict[int, list[tuple[int, complex]]] = {}
        for t in self.terms:
            x, z, n_y = t.masks(self.n_sites)
            by_x.setdefault(x, []).append((z, t.coeff * 1j**n_y))
        return tuple((x, tuple(zs)) for x, zs in sorted(by_x.items()))

    @cached_property
    def conserves_weight(self) -> bool:
        """True when every flip group maps each bitstring to one of equal weight.

        Checked exhaustively over the few sites each group touches.
        """
        for x, zs in self.groups:
            if x == 0:
                continue
            support = x
            for z, _ in zs:
                support |= z
            bits = [1 << p for p in range(self.n_sites) if support >> p & 1]
            half = bin(x).count("1")
            for assignment in range(1 << len(bits)):
                b = sum(m for i, m in enumerate(bits) if assignment >> i & 1)
                if 2 * bin(b & x).count("1") == half:
                    continue
                amp = sum(c * (-1) ** bin(b & z).count("1") for z, c in zs)
                if abs(amp) > 0:
                    return False
        return True

    def to_json(self) -> list[dict]:
        return [
            {"coeff": t.coeff, "paulis": {str(s): a for s, a in t.paulis}} for t in self.terms
        ]

    @classmethod
    def from_json(cls, data: list[dict], n_sites: int | None = None) -> "TermList":
        terms = tuple(
            PauliTerm(float(d["coeff"]), tuple(sorted((int(s), a) for s, a in d["paulis"].items())))
            for d in data
        )
        if n_sites is None:
            n_sites = 1 + max((s for t in terms for s, _ in t.paulis), default=0)
        return cls(n_sites, terms)


@dataclass(frozen=True, eq=False)
class StateVector:
    """Amplitudes over all ``2**n`` computational basis states."""

    n_sites: int
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (1 << self.n_sites,):
            raise DimensionError(f"expected {1 << self.n_sites} amplitudes, got {amps.shape}")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def keys(self) -> np.ndarray:
        return np.arange(1 << self.n_sites, dtype=np.int64)

    @property
    def k(self) -> None:
        return None

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def replace_amplitudes(self, amps) -> "StateVector":
        return StateVector(self.n_sites, amps)

    def to_full(self) -> "StateVector":
        return self


@dataclass(frozen=True, eq=False)
class SectorVector:
    """Amplitudes over the weight-``k`` basis, in lexicographic order."""

    n_sites: int
    k: int
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (len(self.keys),):
            raise DimensionError(f"expected {len(self.keys)} amplitudes, got {amps.shape}")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def keys(self) -> np.ndarray:
        return sector_basis(self.n_sites, self.k)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def replace_amplitudes(self, amps) -> "SectorVector":
        return SectorVector(self.n_sites, self.k, amps)

    def to_full(self) -> StateVector:
        out = np.zeros(1 << self.n_sites, dtype=complex)
        out[self.keys] = self.amplitudes
        return StateVector(self.n_sites, out)

    @classmethod
    def from_full(cls, state: StateVector, k: int, atol: float = 1e-12) -> "SectorVector":
        keys = sector_basis(state.n_sites, k)
        leak = np.linalg.norm(state.amplitudes) ** 2 - np.linalg.norm(state.amplitudes[keys]) ** 2
        if leak > atol:
            raise InvalidSectorError(f"state has weight {leak:.3g} outside sector {k}")
        return cls(state.n_sites, k, state.amplitudes[keys])


State = StateVector | SectorVector


def xxz_terms(
    n: int,
    edges,
    J: float = 1.0,
    delta: float = 1.0,
    h_z: float = 0.0,
    h_x: float = 0.0,
) -> TermList:
    terms = []
    for i, j in edges:
        a, b = min(i, j), max(i, j)
        terms.append(PauliTerm(J, ((a, "X"), (b, "X"))))
        terms.append(PauliTerm(J, ((a, "Y"), (b, "Y"))))
        terms.append(PauliTerm(J * delta, ((a, "Z"), (b, "Z"))))
    if h_z != 0:
        terms.extend(PauliTerm(-h_z, ((i, "Z"),)) for i in range(n))
    if h_x != 0:
        terms.extend(PauliTerm(-h_x, ((i, "X"),)) for i in range(n))
    return TermList(n, tuple(terms))


def build_terms(p: ModelParams) -> TermList:
    g = p.geometry
    return xxz_terms(g.n_sites, g.edges, p.J, p.delta, p.h_z, p.h_x)


def coeff_norm_bound(h: TermList) -> float:
    """Sum of coefficient magnitudes; an upper bound on the spectral norm."""
    return float(sum(abs(t.coeff) for t in h.terms))


def _signs(keys: np.ndarray, z: int) -> np.ndarray:
    return 1 - 2 * (popcount(keys & z) & 1)


def matrix_elements(h: TermList, keys: np.ndarray, full_space: bool = False):
    """Sparse matrix elements of ``h`` between basis labels ``keys`` (sorted).

    Returns ``(rows, cols, vals, leaked)``: ``vals[i] = <keys[rows[i]]|H|keys[cols[i]]>``,
    and ``leaked`` is True when some nonzero image fell outside ``keys``.
    Out-of-basis images are dropped, which is exactly a Galerkin projection.
    """
    keys = np.asarray(keys, dtype=np.int64)
    src_all = np.arange(len(keys))
    rows, cols, vals = [], [], []
    leaked = False
    for x, zs in h.groups:
        amp = np.zeros(len(keys), dtype=complex)
        for z, c in zs:
            amp += c * _signs(keys, z)
        if x == 0:
            dst, src = src_all, src_all
        else:
            images = keys ^ x
            if full_space:
                dst, found = images, None
            else:
                dst, found = lookup(keys, images)
            live = amp != 0
            if found is not None:
                leaked = leaked or bool(np.any(live & ~found))
                live &= found
            dst, src, amp = dst[live], src_all[live], amp[live]
        keep = amp != 0
        rows.append(dst[keep])
        cols.append(src[keep])
        vals.append(amp[keep])
    if rows:
        rows, cols, vals = np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)
    else:
        rows = cols = np.zeros(0, dtype=np.int64)
        vals = np.zeros(0, dtype=complex)
    if not np.any(vals.imag):
        vals = vals.real
    return rows, cols, vals, leaked


def _csr(rows, cols, vals, dim) -> sp.csr_matrix:
    m = sp.csr_matrix((vals, (rows, cols)), shape=(dim, dim))
    m.sum_duplicates()
    return m


@lru_cache(maxsize=2)
def full_operator(h: TermList) -> sp.csr_matrix:
    dim = 1 << h.n_sites
    rows, cols, vals, _ = matrix_elements(h, np.arange(dim, dtype=np.int64), full_space=True)
    return _csr(rows, cols, vals, dim)


@lru_cache(maxsize=12)
def sector_operator(h: TermList, k: int) -> sp.csr_matrix:
    """``h`` restricted to the weight-``k`` sector; raises if it leaks out of it."""
    keys = sector_basis(h.n_sites, k)
    rows, cols, vals, leaked = matrix_elements(h, keys)
    if leaked:
        raise SymmetryError("Hamiltonian does not conserve Hamming weight (transverse field?)")
    return _csr(rows, cols, vals, len(keys))


def operator_for(h: TermList, state: State) -> sp.csr_matrix:
    if h.n_sites != state.n_sites:
        raise DimensionError(f"operator on {h.n_sites} sites, state on {state.n_sites}")
    if isinstance(state, SectorVector):
        return sector_operator(h, state.k)
    return full_operator(h)


def apply(h: TermList, s: State) -> State:
    """Unnormalized ``H|s>``, in the same space (full or sector) as ``s``."""
    return s.replace_amplitudes(operator_for(h, s) @ s.amplitudes)


def apply_sector(h: TermList, s: SectorVector) -> SectorVector:
    if not isinstance(s, SectorVector):
        raise TypeError("apply_sector needs a SectorVector")
    return apply(h, s)


def apply_terms(h: TermList, s: StateVector) -> StateVector:
    """Unfused, one-term-at-a-time full-space action. Slow; kept for cross-checks."""
    if h.n_sites != s.n_sites:
        raise DimensionError(f"operator on {h.n_sites} sites, state on {s.n_sites}")
    keys = s.keys
    out = np.zeros_like(s.amplitudes)
    for t in h.terms:
        x, z, n_y = t.masks(h.n_sites)
        out[keys ^ x] += t.coeff * 1j**n_y * _signs(keys, z) * s.amplitudes
    return StateVector(s.n_sites, out)


def diagonal(h: TermList, keys: np.ndarray) -> np.ndarray:
    """Diagonal matrix elements ``<b|H|b>`` for each label in ``keys``."""
    keys = np.asarray(keys, dtype=np.int64)
    out = np.zeros(len(keys))
    for x, zs in h.groups:
        if x == 0:
            for z, c in zs:
                out += c.real * _signs(keys, z)
    return out


def expectation(h: TermList, s: State) -> float:
    return float(np.vdot(s.amplitudes, apply(h, s).amplitudes).real)


def magnetization_expect(s: State) -> float:
    """``<sum_j Z_j>``; exactly ``N - 2k`` for a weight-``k`` sector state."""
    if isinstance(s, SectorVector):
        return float(s.n_sites - 2 * s.k)
    weights = s.n_sites - 2 * popcount(s.keys)
    return float(np.dot(s.probabilities(), weights))
