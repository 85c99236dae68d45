"""Exact-diagonalization oracle and ground-state sparsity diagnostics."""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from math import comb
from pathlib import Path

import numpy as np
import scipy.sparse.linalg as spla

from .basis import lookup
from .errors import ConvergenceError, ResourceError
from .hamiltonian import SectorVector, State, StateVector, TermList, full_operator, sector_operator
from .sampling import rng_for

FULL_SPACE_CAP = 20
SECTOR_CAP = 5_000_000
DENSE_LIMIT = 1024
DEGENERACY_GAP = 1e-9
CACHE_ENV = "SKQD_LAB_CACHE"


@dataclass(frozen=True, eq=False)
class EdResult:
    energy: float
    ground_state: State = field(repr=False)
    gap: float = float("inf")
    residual: float = 0.0

    @property
    def degenerate(self) -> bool:
        return self.gap < DEGENERACY_GAP

    def to_json(self) -> dict:
        k = self.ground_state.k if isinstance(self.ground_state, SectorVector) else None
        return {
            "energy": self.energy,
            "gap": None if np.isinf(self.gap) else self.gap,
            "degenerate": self.degenerate,
            "residual": self.residual,
            "sector": k,
            "n_sites": self.ground_state.n_sites,
        }


def _fix_phase(v: np.ndarray) -> np.ndarray:
    i = int(np.argmax(np.abs(v)))
    return v * (abs(v[i]) / v[i])


def lowest_eigenpairs(op, count: int = 2, dense_limit: int = DENSE_LIMIT):
    """Lowest ``count`` eigenvalues and the ground vector of a Hermitian sparse matrix.

    Dense ``eigh`` up to ``dense_limit``; ARPACK ``eigsh`` from a fixed start
    vector above it, so repeated calls return identical results.
    """
    dim = op.shape[0]
    if dim <= dense_limit:
        evals, evecs = np.linalg.eigh(op.toarray())
        return evals[:count], evecs[:, 0]
    v0 = rng_for(0x5EED).random(dim) + 0.5
    evals, evecs = spla.eigsh(op, k=min(count, dim - 1), which="SA", v0=v0, tol=0)
    order = np.argsort(evals)
    return evals[order], evecs[:, order[0]]


def _solve(op, make_state) -> EdResult:
    evals, vec = lowest_eigenpairs(op)
    vec = _fix_phase(vec / np.linalg.norm(vec))
    energy = float(evals[0])
    residual = float(np.linalg.norm(op @ vec - energy * vec))
    if residual > 1e-8 * max(1.0, abs(energy)):
        raise ConvergenceError(f"ground state residual {residual:.3g} too large", residual=residual)
    gap = float(evals[1] - evals[0]) if len(evals) > 1 else float("inf")
    return EdResult(energy, make_state(vec), gap, residual)


def _cache_path(h: TermList, k) -> Path | None:
    root = os.environ.get(CACHE_ENV)
    if not root:
        return None
    blob = json.dumps({"n": h.n_sites, "k": k, "terms": h.to_json()}, sort_keys=True)
    name = hashlib.blake2b(blob.encode(), digest_size=16).hexdigest()
    return Path(root) / f"ed_{name}.npz"


def _cached(h: TermList, k, compute) -> EdResult:
    path = _cache_path(h, k)
    if path is not None and path.exists():
        with np.load(path) as data:
            amps = data["amplitudes"]
            state = StateVector(h.n_sites, amps) if k is None else SectorVector(h.n_sites, k, amps)
            return EdResult(float(data["energy"]), state, float(data["gap"]), float(data["residual"]))
    result = compute()
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        np.savez(path, amplitudes=result.ground_state.amplitudes, energy=result.energy,
                 gap=result.gap, residual=result.residual)
    return result


def ed_ground(h: TermList, cap: int = FULL_SPACE_CAP) -> EdResult:
    """Full-space ground state."""
    if h.n_sites > cap:
        raise ResourceError(
            f"full-space ED on {h.n_sites} sites exceeds the cap of {cap}; use ed_ground_sector"
        )
    return _cached(h, None, lambda: _solve(full_operator(h), lambda v: StateVector(h.n_sites, v)))


def ed_ground_sector(h: TermList, k: int, cap: int = SECTOR_CAP) -> EdResult:
    """Ground state within the weight-``k`` sector (needs a weight-conserving ``h``)."""
    dim = comb(h.n_sites, k)
    if dim > cap:
        raise ResourceError(f"sector ({h.n_sites}, {k}) has dimension {dim} > cap {cap}")
    return _cached(
        h, k, lambda: _solve(sector_operator(h, k), lambda v: SectorVector(h.n_sites, k, v))
    )


def captured_weight(s: State, keys) -> float:
    """Probability mass of ``s`` on the bitstrings ``keys``."""
    keys = np.unique(np.asarray(keys, dtype=np.int64))
    if len(keys) == 0:
        return 0.0
    pos, found = lookup(keys, s.keys)
    # summation roundoff can push a full capture just past 1
    return float(min(np.sum(s.probabilities()[found]), 1.0))


@dataclass(frozen=True, eq=False)
class SparsityProfile:
    sorted_probs: np.ndarray = field(repr=False)
    alpha: np.ndarray = field(repr=False)
    beta: np.ndarray = field(repr=False)
    ipr: float = 1.0

    @property
    def log_ipr(self) -> float:
        return float(np.log(self.ipr))

    @property
    def log10_ipr(self) -> float:
        return float(np.log10(self.ipr))

    def support_for(self, alpha_target: float) -> int:
        """Smallest ``L`` whose top-``L`` probabilities sum to at least ``alpha_target``."""
        return int(min(np.searchsorted(self.alpha, alpha_target - 1e-15) + 1, len(self.alpha)))


def sparsity_profile(s: State) -> SparsityProfile:
    """Sorted probabilities, top-``L`` mass ``alpha_L``, ``beta_L = p_L`` and the IPR."""
    probs = s.probabilities()
    probs = probs[probs > 0]
    probs = probs / probs.sum()
    probs = -np.sort(-probs)
    return SparsityProfile(probs, np.cumsum(probs), probs.copy(), float(1.0 / np.sum(probs**2)))
