"""Krylov-state generation: exact exponential action and second-order Trotter."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg as sla

from .basis import lookup, sector_basis, site_mask
from .errors import ConvergenceError, DimensionError, SymmetryError
from .hamiltonian import SectorVector, State, TermList, diagonal, operator_for

METHODS = ("exact", "trotter2")

_PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


@dataclass(frozen=True)
class EvolutionConfig:
    dt: float = 0.3
    d: int = 5
    method: str = "trotter2"
    reps: int = 3
    tol: float = 1e-12

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.d < 1:
            raise ValueError(f"Krylov dimension must be >= 1, got {self.d}")
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}, expected one of {METHODS}")
        if self.reps < 1:
            raise ValueError(f"Trotter reps must be >= 1, got {self.reps}")
        if not 0 < self.tol <= 1e-6:
            raise ValueError(f"tolerance must be in (0, 1e-6], got {self.tol}")

    def to_json(self) -> dict:
        return {"dt": self.dt, "d": self.d, "method": self.method, "reps": self.reps, "tol": self.tol}


def expm_action(matvec, v: np.ndarray, t: float, tol: float = 1e-12, m_max: int = 40,
                max_substeps: int = 1000) -> np.ndarray:
    """``exp(-i t H) v`` for Hermitian ``H`` given only ``matvec``.

    Lanczos with full reorthogonalization builds a basis of dimension at most
    ``m_max``; the substep ``tau`` is halved until the usual a-posteriori
    estimate ``beta_m |e_m^T exp(-i tau T) e_1|`` is below ``tol * tau / t``.
    The Lanczos basis does not depend on ``tau``, so shrinking reuses it.
    """
    w = np.array(v, dtype=complex)
    if t == 0:
        return w
    dim = len(w)
    m_max = min(m_max, dim)
    done, tau, substeps, err = 0.0, float(t), 0, None
    while t - done > 1e-15 * abs(t):
        substeps += 1
        if substeps > max_substeps:
            raise ConvergenceError(
                f"exponential action needed more than {max_substeps} substeps", residual=err
            )
        norm = np.linalg.norm(w)
        if norm == 0:
            return w
        V = np.zeros((m_max + 1, dim), dtype=complex)
        alpha = np.zeros(m_max)
        beta = np.zeros(m_max)
        V[0] = w / norm
        m = m_max
        for j in range(m_max):
            u = matvec(V[j])
            alpha[j] = np.vdot(V[j], u).real
            u -= V[: j + 1].T @ (V[: j + 1].conj() @ u)
            u -= V[: j + 1].T @ (V[: j + 1].conj() @ u)
            beta[j] = np.linalg.norm(u)
            if beta[j] < 1e-13 * max(1.0, abs(alpha[j])):
                m = j + 1
                beta[j] = 0.0
                break
            V[j + 1] = u / beta[j]
        evals, evecs = sla.eigh_tridiagonal(alpha[:m], beta[: m - 1])
        tau = min(tau, t - done)
        while True:
            y = evecs @ (np.exp(-1j * tau * evals) * evecs[0].conj())
            err = beta[m - 1] * abs(y[-1])
            # below ~10 m eps the estimate is roundoff, not truncation
            if err <= max(tol * tau / abs(t), 10 * m * np.finfo(float).eps) or tau < 1e-12 * abs(t):
                break
            tau /= 2
        w = norm * (V[:m].T @ y)
        done += tau
        if err < 1e-3 * tol * tau / abs(t):
            tau *= 2
    return w


def evolve_exact(h: TermList, s: State, t: float, tol: float = 1e-12) -> State:
    op = operator_for(h, s)
    out = expm_action(op.dot, s.amplitudes, t, tol=tol, max_substeps=10 * max(h.n_sites, 100))
    norm = np.linalg.norm(out)
    if abs(norm - s.norm()) > 10 * tol + 1e-12:
        raise ConvergenceError(f"norm drifted by {abs(norm - s.norm()):.3g}", residual=norm)
    return s.replace_amplitudes(out / norm * s.norm())


# --- Trotter layers -------------------------------------------------------------


def _local_matrix(paulis, sites) -> np.ndarray:
    axis = dict(paulis)
    out = np.ones((1, 1), dtype=complex)
    for s in sites:
        out = np.kron(out, _PAULI[axis.get(s, "I")])
    return out


def _color_bonds(bonds) -> list[list[tuple[int, int]]]:
    """Greedy edge coloring, one color pool per bond length.

    Chains get odd/even bonds; row-major rectangles get four layers
    (two horizontal, two vertical).
    """
    by_length: dict[int, list] = {}
    for b in sorted(bonds):
        by_length.setdefault(b[1] - b[0], []).append(b)
    layers = []
    for length in sorted(by_length):
        colors: list[tuple[set, list]] = []
        for a, b in by_length[length]:
            for used, members in colors:
                if a not in used and b not in used:
                    used.update((a, b))
                    members.append((a, b))
                    break
            else:
                colors.append(({a, b}, [(a, b)]))
        layers.extend(members for _, members in colors)
    return layers


@dataclass(frozen=True)
class TrotterLayers:
    """Mutually commuting term groups: one diagonal layer, bond layers, one site layer."""

    has_diagonal: bool
    bond_layers: tuple[tuple[tuple[int, int, np.ndarray], ...], ...]
    site_layer: tuple[tuple[int, np.ndarray], ...]


@lru_cache(maxsize=32)
def trotter_layers(h: TermList) -> TrotterLayers:
    bonds: dict[tuple[int, int], np.ndarray] = {}
    sites: dict[int, np.ndarray] = {}
    has_diag = False
    for t in h.terms:
        if all(a == "Z" for _, a in t.paulis):
            has_diag = True
            continue
        support = tuple(sorted(s for s, _ in t.paulis))
        if len(support) == 2:
            m = bonds.setdefault(support, np.zeros((4, 4), dtype=complex))
            m += t.coeff * _local_matrix(t.paulis, support)
        else:
            m = sites.setdefault(support[0], np.zeros((2, 2), dtype=complex))
            m += t.coeff * _local_matrix(t.paulis, support)
    bond_layers = tuple(
        tuple((a, b, bonds[(a, b)]) for a, b in layer) for layer in _color_bonds(bonds)
    )
    return TrotterLayers(has_diag, bond_layers, tuple(sorted(sites.items(), key=lambda kv: kv[0])))


@lru_cache(maxsize=256)
def _bond_classes(n: int, k: int, a: int, b: int):
    """Sector indices grouped by the bits on sites ``(a, b)``: 00, 11, and paired 01/10."""
    keys = sector_basis(n, k)
    ma, mb = site_mask(n, a), site_mask(n, b)
    ba = (keys & ma) != 0
    bb = (keys & mb) != 0
    i00 = np.flatnonzero(~ba & ~bb).astype(np.int32)
    i11 = np.flatnonzero(ba & bb).astype(np.int32)
    i01 = np.flatnonzero(~ba & bb)
    i10, found = lookup(keys, keys[i01] ^ (ma | mb))
    assert found.all()
    return i00, i11, i01.astype(np.int32), i10.astype(np.int32)


@lru_cache(maxsize=16)
def _diag_cached(h: TermList, k) -> np.ndarray:
    keys = sector_basis(h.n_sites, k) if k is not None else np.arange(1 << h.n_sites, dtype=np.int64)
    return diagonal(h, keys)


def _apply_full_local(psi: np.ndarray, n: int, U: np.ndarray, sites) -> np.ndarray:
    tensor = psi.reshape((2,) * n)
    q = len(sites)
    out = np.tensordot(U.reshape((2,) * (2 * q)), tensor, axes=(list(range(q, 2 * q)), list(sites)))
    return np.moveaxis(out, list(range(q)), list(sites)).reshape(-1)


def _apply_sector_bond(psi: np.ndarray, n: int, k: int, U: np.ndarray, a: int, b: int) -> np.ndarray:
    off_block = U[np.ix_([0, 3], [1, 2])], U[np.ix_([1, 2], [0, 3])], U[0, 3], U[3, 0]
    if any(np.max(np.abs(blk)) > 1e-13 for blk in off_block):
        raise SymmetryError(f"bond ({a}, {b}) does not conserve Hamming weight")
    i00, i11, i01, i10 = _bond_classes(n, k, a, b)
    out = psi.copy()
    out[i00] *= U[0, 0]
    out[i11] *= U[3, 3]
    a01, a10 = psi[i01], psi[i10]
    out[i01] = U[1, 1] * a01 + U[1, 2] * a10
    out[i10] = U[2, 1] * a01 + U[2, 2] * a10
    return out


def _apply_layer(h: TermList, layers: TrotterLayers, which, psi: np.ndarray, k, tau: float):
    n = h.n_sites
    if which == "diag":
        return psi * np.exp(-1j * tau * _diag_cached(h, k))
    if which == "sites":
        if k is not None:
            raise SymmetryError("single-site transverse terms break the weight sector")
        for site, A in layers.site_layer:
            psi = _apply_full_local(psi, n, sla.expm(-1j * tau * A), (site,))
        return psi
    for a, b, A in layers.bond_layers[which]:
        U = sla.expm(-1j * tau * A)
        if k is None:
            psi = _apply_full_local(psi, n, U, (a, b))
        else:
            psi = _apply_sector_bond(psi, n, k, U, a, b)
    return psi


def trotter_step(h: TermList, s: State, dt: float, reps: int = 1) -> State:
    """Second-order product formula for ``exp(-i dt H)`` with ``reps`` substeps.

    One substep of length ``tau = dt / reps`` applies every layer for
    ``tau/2`` in order and then again in reverse order.
    """
    if h.n_sites != s.n_sites:
        raise DimensionError(f"operator on {h.n_sites} sites, state on {s.n_sites}")
    if reps < 1:
        raise ValueError("reps must be >= 1")
    layers = trotter_layers(h)
    order = []
    if layers.has_diagonal:
        order.append("diag")
    order.extend(range(len(layers.bond_layers)))
    if layers.site_layer:
        order.append("sites")
    k = s.k if isinstance(s, SectorVector) else None
    tau = dt / reps
    psi = s.amplitudes
    for _ in range(reps):
        for which in order:
            psi = _apply_layer(h, layers, which, psi, k, tau / 2)
        for which in reversed(order):
            psi = _apply_layer(h, layers, which, psi, k, tau / 2)
    return s.replace_amplitudes(psi)


def evolve(h: TermList, s: State, cfg: EvolutionConfig) -> State:
    """One Krylov step ``exp(-i dt H)`` with the configured method."""
    if cfg.method == "exact":
        return evolve_exact(h, s, cfg.dt, cfg.tol)
    return trotter_step(h, s, cfg.dt, cfg.reps)


def krylov_states(h: TermList, psi0: State, cfg: EvolutionConfig) -> list[State]:
    """``[psi0, U psi0, U^2 psi0, ...]`` with ``d`` entries, ``U`` one time step."""
    states = [psi0]
    for _ in range(cfg.d - 1):
        states.append(evolve(h, states[-1], cfg))
    return states
