"""Sample-based Krylov diagonalization: sampled-bitstring projection and solve.

Distinct computational bitstrings are orthonormal, so the overlap matrix of
the projected problem is the identity and the generalized eigenproblem
reduces to an ordinary symmetric one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from math import comb

import numpy as np
import scipy.sparse as sp

from .analysis import captured_weight, ed_ground, ed_ground_sector, lowest_eigenpairs
from .basis import from_bitstring
from .errors import BoundDomainError, ConvergenceError, EmptySubspaceError, InvalidBasisError
from .evolution import EvolutionConfig, krylov_states
from .hamiltonian import ModelParams, TermList, build_terms, matrix_elements
from .sampling import (
    NoiseModel,
    SampledBasis,
    SampleTable,
    apply_readout_noise,
    filter_sector,
    merge_tables,
    sample,
    task_seed,
)
from .states import InitialStateSpec, overlap_sq

SUBSPACE_DENSE_LIMIT = 512
RESIDUAL_TOL = 1e-10
ORACLE_FULL_CAP = 20
ORACLE_SECTOR_CAP = 1_000_000


@dataclass(frozen=True, eq=False)
class SubspaceProblem:
    n_sites: int
    basis: np.ndarray = field(repr=False)
    h_eff: sp.csr_matrix = field(repr=False)

    @property
    def size(self) -> int:
        return len(self.basis)

    @property
    def s_eff(self) -> sp.csr_matrix:
        return sp.identity(self.size, format="csr")


def _as_keys(basis) -> tuple[np.ndarray, int | None]:
    if isinstance(basis, SampledBasis):
        return basis.keys, basis.n_sites
    basis = list(basis) if not isinstance(basis, np.ndarray) else basis
    if len(basis) and isinstance(basis[0], str):
        return np.array([from_bitstring(b) for b in basis], dtype=np.int64), len(basis[0])
    return np.asarray(basis, dtype=np.int64), None


def project_hamiltonian(h: TermList, basis) -> SubspaceProblem:
    """Galerkin projection of ``h`` onto the span of the given bitstrings.

    ``h_eff[a, b] = <basis[a]|H|basis[b]>``; images that fall outside the
    basis are dropped.
    """
    keys, n = _as_keys(basis)
    if n is not None and n != h.n_sites:
        raise InvalidBasisError(f"bitstrings have {n} sites, Hamiltonian has {h.n_sites}")
    if len(keys) == 0:
        raise EmptySubspaceError("empty basis")
    order = np.argsort(keys, kind="stable")
    sorted_keys = keys[order]
    if np.any(np.diff(sorted_keys) == 0):
        raise InvalidBasisError("basis contains duplicate bitstrings")
    if sorted_keys[0] < 0 or sorted_keys[-1] >= 1 << h.n_sites:
        raise InvalidBasisError("basis label out of range for this system size")
    rows, cols, vals, _ = matrix_elements(h, sorted_keys)
    L = len(keys)
    h_eff = sp.csr_matrix((vals, (order[rows], order[cols])), shape=(L, L))
    h_eff.sum_duplicates()
    return SubspaceProblem(h.n_sites, keys, h_eff)


@dataclass(frozen=True, eq=False)
class SkqdResult:
    energy: float
    ground_vector: np.ndarray = field(repr=False)
    basis_size: int = 0
    residual: float = 0.0
    gamma0_sq: float | None = None
    basis: np.ndarray = field(default=None, repr=False)
    sector: int | None = None
    shots_discarded: int = 0
    reference_energy: float | None = None
    captured_alpha: float | None = None
    tables: tuple[SampleTable, ...] = field(default=(), repr=False)
    config_echo: dict = field(default_factory=dict, repr=False)

    def to_json(self) -> dict:
        return {
            "energy": self.energy,
            "basis_size": self.basis_size,
            "residual": self.residual,
            "gamma0_sq": self.gamma0_sq,
            "sector": self.sector,
            "shots_discarded": self.shots_discarded,
            "reference_energy": self.reference_energy,
            "captured_alpha": self.captured_alpha,
            "config_echo": self.config_echo,
        }


def solve_subspace(p: SubspaceProblem) -> SkqdResult:
    """Lowest eigenpair of ``h_eff``: dense below 512 states, Lanczos (ARPACK) above."""
    h = p.h_eff
    evals, v = lowest_eigenpairs(h, count=1, dense_limit=SUBSPACE_DENSE_LIMIT)
    energy = float(evals[0])
    v = v / np.linalg.norm(v)
    i = int(np.argmax(np.abs(v)))
    v = v * (abs(v[i]) / v[i])
    if not np.iscomplexobj(h.data):
        v = v.real
    residual = float(np.linalg.norm(h @ v - energy * v))
    if residual > RESIDUAL_TOL * max(1.0, abs(energy)):
        raise ConvergenceError(f"subspace eigensolver residual {residual:.3g}", residual=residual)
    return SkqdResult(energy, v, p.size, residual, basis=p.basis)


def support_table(state, krylov_step: int = 0) -> SampleTable:
    """One count per bitstring with nonzero probability: the infinite-shot limit."""
    keys = state.keys[state.probabilities() > 0]
    return SampleTable(
        state.n_sites, keys, np.ones(len(keys)), krylov_step=krylov_step, shots_requested=len(keys)
    )


def _oracle(h: TermList, k: int | None, use_sector: bool):
    if use_sector and comb(h.n_sites, k) <= ORACLE_SECTOR_CAP:
        return ed_ground_sector(h, k)
    if not use_sector and h.n_sites <= ORACLE_FULL_CAP:
        return ed_ground(h)
    return None


def skqd_run(
    params: ModelParams,
    init: InitialStateSpec,
    evo: EvolutionConfig,
    shots: int | None,
    noise: NoiseModel | None = None,
    filter_k: int | None = None,
    seed: int = 0,
    grid_index: int = 0,
    oracle: bool = True,
) -> SkqdResult:
    """Prepare, evolve, sample, (noise), (filter), merge, project, solve.

    ``shots=None`` replaces sampling by the exact support of each Krylov state.
    When the Hamiltonian conserves Hamming weight the whole simulation runs in
    the initial state's sector.
    """
    h = build_terms(params)
    n = params.n_sites
    k0 = init.sector(n)
    if filter_k is not None and filter_k != k0:
        raise ValueError(f"initial state lies in sector {k0}, filter asks for {filter_k}")
    use_sector = h.conserves_weight
    psi0 = init.prepare(params.geometry, sector=use_sector)
    states = krylov_states(h, psi0, evo)

    tables = []
    for step, state in enumerate(states):
        step_seed = task_seed(seed, step, k0, grid_index)
        if shots is None:
            table = support_table(state, step)
        else:
            table = sample(state, shots, step_seed, krylov_step=step)
        if noise is not None:
            table = apply_readout_noise(table, noise, task_seed(step_seed, 1))
        if filter_k is not None:
            table = filter_sector(table, filter_k)
        tables.append(table)
    merged = merge_tables(tables)
    if len(merged) == 0:
        raise EmptySubspaceError("no bitstrings left after post-selection")

    result = solve_subspace(project_hamiltonian(h, merged))
    gamma0_sq = reference = alpha = None
    if oracle:
        ed = _oracle(h, k0, use_sector)
        if ed is not None:
            gamma0_sq = overlap_sq(psi0, ed.ground_state)
            reference = ed.energy
            alpha = captured_weight(ed.ground_state, merged.keys)
    echo = {
        "model": {
            "n": n,
            "J": params.J,
            "delta": params.delta,
            "h_z": params.h_z,
            "h_x": params.h_x,
            "geometry": params.geometry.shape,
        },
        "init": init.to_json(),
        "evolution": evo.to_json(),
        "shots": shots,
        "noise": None if noise is None else noise.readout_flip_prob,
        "filter_k": filter_k,
        "seed": seed,
        "grid_index": grid_index,
    }
    return SkqdResult(
        energy=result.energy,
        ground_vector=result.ground_vector,
        basis_size=result.basis_size,
        residual=result.residual,
        gamma0_sq=gamma0_sq,
        basis=merged.keys,
        sector=k0 if use_sector else None,
        shots_discarded=sum(t.shots_discarded for t in tables),
        reference_energy=reference,
        captured_alpha=alpha,
        tables=tuple(tables),
        config_echo=echo,
    )


# --- bounds -----------------------------------------------------------------------


@dataclass(frozen=True)
class BoundParams:
    d: int
    L: int
    eta: float
    gamma0_sq: float
    beta_L: float
    eps_tilde: float = 0.0
    alpha_L: float = 1.0
    h_norm: float = 0.0

    def __post_init__(self):
        if self.d < 1 or self.L < 1:
            raise BoundDomainError("d and L must be positive")
        if not 0 < self.eta < 1:
            raise BoundDomainError(f"eta must be in (0, 1), got {self.eta}")
        if not 0 < self.gamma0_sq <= 1:
            raise BoundDomainError(f"gamma0_sq must be in (0, 1], got {self.gamma0_sq}")
        if not 0 <= self.alpha_L <= 1:
            raise BoundDomainError(f"alpha_L must be in [0, 1], got {self.alpha_L}")
        if not 0 <= self.beta_L <= self.alpha_L:
            raise BoundDomainError(f"beta_L must be in [0, alpha_L], got {self.beta_L}")
        if self.eps_tilde < 0 or self.h_norm < 0:
            raise BoundDomainError("eps_tilde and h_norm must be nonnegative")


def energy_error_bound(alpha_L: float, h_norm: float) -> float:
    """``sqrt(8) * ||H|| * sqrt(1 - sqrt(alpha_L))``."""
    if not 0 <= alpha_L <= 1:
        raise BoundDomainError(f"alpha_L must be in [0, 1], got {alpha_L}")
    if h_norm < 0:
        raise BoundDomainError(f"h_norm must be nonnegative, got {h_norm}")
    return math.sqrt(8.0) * h_norm * math.sqrt(1.0 - math.sqrt(alpha_L))


def sample_count_bound(b: BoundParams) -> float:
    """Shots per Krylov state: ``d**2 ln(L/eta) / (gamma0_sq (beta_L - 2 sqrt(eps)))``."""
    margin = b.beta_L - 2.0 * math.sqrt(b.eps_tilde)
    if margin <= 0:
        raise BoundDomainError(
            f"beta_L={b.beta_L} does not exceed 2*sqrt(eps_tilde)={2 * math.sqrt(b.eps_tilde):.3g}"
        )
    return b.d**2 * math.log(b.L / b.eta) / (b.gamma0_sq * margin)
