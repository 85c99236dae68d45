"""Sample-based Krylov quantum diagonalization for spin-1/2 XXZ models."""

from .analysis import EdResult, SparsityProfile, captured_weight, ed_ground, ed_ground_sector, sparsity_profile
from .basis import from_bitstring, popcount, sector_basis, sector_dim, sector_rank, sector_unrank, to_bitstring
from .config import MATERIALS, MaterialPreset, RunConfig, get_preset, load_config
from .errors import *  # noqa: F403
from .evolution import EvolutionConfig, evolve, evolve_exact, expm_action, krylov_states, trotter_step
from .hamiltonian import (
    ModelParams,
    PauliTerm,
    SectorVector,
    StateVector,
    TermList,
    apply,
    build_terms,
    coeff_norm_bound,
    expectation,
    full_operator,
    sector_operator,
    xxz_terms,
)
from .lattice import Geometry, build_chain, build_geometry, build_rectangle, snake_order
from .sampling import (
    NoiseModel,
    SampledBasis,
    SampleTable,
    apply_readout_noise,
    filter_sector,
    merge_tables,
    sample,
)
from .skqd import (
    BoundParams,
    SkqdResult,
    SubspaceProblem,
    energy_error_bound,
    project_hamiltonian,
    sample_count_bound,
    skqd_run,
    solve_subspace,
)
from .states import InitialStateSpec, neel, overlap_sq, singlet_product, w_state_product
from .sweep import (
    FieldSweepResult,
    SectorSweepResult,
    SkqdConfig,
    ZeroFieldReference,
    field_sweep,
    sector_sweep,
    sparsity_map,
)

__version__ = "0.1.0"
