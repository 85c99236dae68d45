import numpy as np
import pytest
from conftest import chain_edges, dense_evolve, dense_xxz, random_state
from hypothesis import given, settings
from hypothesis import strategies as st

from skqd_lab.basis import sector_basis
from skqd_lab.errors import ConvergenceError
from skqd_lab.evolution import (
    EvolutionConfig,
    evolve_exact,
    expm_action,
    krylov_states,
    trotter_layers,
    trotter_step,
)
from skqd_lab.hamiltonian import SectorVector, StateVector, xxz_terms
from skqd_lab.lattice import build_rectangle
from skqd_lab.states import singlet_product, w_state_product


def test_config_validation():
    EvolutionConfig()
    for bad in (dict(dt=0), dict(d=0), dict(reps=0), dict(method="rk4"), dict(tol=1e-3)):
        with pytest.raises(ValueError):
            EvolutionConfig(**bad)


def test_defaults():
    cfg = EvolutionConfig()
    assert (cfg.dt, cfg.d, cfg.method, cfg.reps) == (0.3, 5, "trotter2", 3)


def test_zero_time_is_identity():
    h = xxz_terms(4, chain_edges(4))
    s = StateVector(4, random_state(4))
    assert np.array_equal(evolve_exact(h, s, 0.0).amplitudes, s.amplitudes)


@pytest.mark.parametrize("t", [0.1, 1.0, 7.3])
def test_singlet_picks_up_global_phase(t):
    h = xxz_terms(2, [(0, 1)])
    s = singlet_product(2)
    out = evolve_exact(h, s, t)
    assert np.allclose(out.amplitudes, np.exp(3j * t) * s.amplitudes, atol=1e-12)


@pytest.mark.parametrize("t", [0.3, 2.0])
def test_exact_matches_dense(t):
    edges = chain_edges(6)
    h = xxz_terms(6, edges, 1.0, 0.7, 0.4, 0.3)
    v = random_state(6, 11)
    out = evolve_exact(h, StateVector(6, v), t)
    assert np.linalg.norm(out.amplitudes - dense_evolve(dense_xxz(6, edges, 1.0, 0.7, 0.4, 0.3), v, t)) < 1e-10


@settings(max_examples=15, deadline=None)
@given(st.integers(2, 6), st.floats(-2, 4), st.floats(0, 3), st.floats(0.01, 3), st.integers(0, 999))
def test_exact_matches_dense_property(n, delta, h_z, t, seed):
    edges = chain_edges(n)
    v = random_state(n, seed)
    out = evolve_exact(xxz_terms(n, edges, 1.0, delta, h_z), StateVector(n, v), t)
    assert np.linalg.norm(out.amplitudes - dense_evolve(dense_xxz(n, edges, 1.0, delta, h_z), v, t)) < 1e-10
    assert out.norm() == pytest.approx(1, abs=1e-10)


def test_expm_action_reports_non_convergence():
    A = np.diag(np.linspace(0, 1e6, 64))
    with pytest.raises(ConvergenceError):
        expm_action(lambda x: A @ x, np.ones(64) / 8, 10.0, m_max=2, max_substeps=3)


def test_diagonal_terms_trotter_exact():
    h = xxz_terms(5, chain_edges(5), 0.0, 1.0, 0.8)
    v = random_state(5, 2)
    exact = dense_evolve(dense_xxz(5, chain_edges(5), 0.0, 1.0, 0.8), v, 0.7)
    for reps in (1, 3):
        out = trotter_step(h, StateVector(5, v), 0.7, reps).amplitudes
        assert np.linalg.norm(out - exact) < 1e-12


def test_trotter_error_decreases_with_reps():
    h = xxz_terms(4, chain_edges(4))
    v = random_state(4, 5)
    exact = evolve_exact(h, StateVector(4, v), 0.3).amplitudes
    errs = [np.linalg.norm(trotter_step(h, StateVector(4, v), 0.3, r).amplitudes - exact) for r in (1, 3, 9)]
    assert errs[0] > errs[1] > errs[2]


def test_trotter_composition_identity():
    h = xxz_terms(6, chain_edges(6), 1.0, 0.5, 0.2, 0.1)
    s = StateVector(6, random_state(6, 9))
    twice = trotter_step(h, trotter_step(h, s, 0.15, 1), 0.15, 1)
    once = trotter_step(h, s, 0.3, 2)
    assert np.linalg.norm(twice.amplitudes - once.amplitudes) < 1e-12


def test_trotter_second_order_slope():
    n = 6
    h = xxz_terms(n, chain_edges(n), 1.0, 0.8, 0.3)
    s = StateVector(n, random_state(n, 4))
    exact = evolve_exact(h, s, 0.3).amplitudes
    reps = np.array([1, 2, 4, 8])
    errs = [np.linalg.norm(trotter_step(h, s, 0.3, int(r)).amplitudes - exact) for r in reps]
    slope = -np.polyfit(np.log(reps), np.log(errs), 1)[0]
    assert slope >= 1.8


def test_layers_chain_and_rectangle():
    assert len(trotter_layers(xxz_terms(8, chain_edges(8))).bond_layers) == 2
    g = build_rectangle(16)
    assert len(trotter_layers(xxz_terms(16, g.edges)).bond_layers) == 4


@pytest.mark.parametrize("method", ["exact", "trotter2"])
def test_sector_and_full_agree(method):
    n, k = 8, 3
    h = xxz_terms(n, chain_edges(n), 1.0, 1.3, 0.6)
    cfg = EvolutionConfig(method=method, d=4)
    full = krylov_states(h, w_state_product(n, k), cfg)
    sector = krylov_states(h, w_state_product(n, k, sector=True), cfg)
    for a, b in zip(full, sector):
        assert np.linalg.norm(a.amplitudes - b.to_full().amplitudes) < 1e-10


@pytest.mark.parametrize("method", ["exact", "trotter2"])
def test_weight_is_conserved(method):
    n, k = 8, 3
    h = xxz_terms(n, chain_edges(n), 1.0, 0.4, 0.2)
    for s in krylov_states(h, w_state_product(n, k), EvolutionConfig(method=method)):
        off = np.ones(2**n, bool)
        off[sector_basis(n, k)] = False
        assert np.max(np.abs(s.amplitudes[off])) <= 1e-12
        assert s.norm() == pytest.approx(1, abs=1e-10)


def test_krylov_states_shapes():
    h = xxz_terms(4, chain_edges(4))
    psi0 = singlet_product(4)
    assert krylov_states(h, psi0, EvolutionConfig(d=1)) == [psi0]
    states = krylov_states(h, psi0, EvolutionConfig(d=5))
    assert len(states) == 5 and states[0] is psi0


def test_krylov_of_eigenstate_is_stationary():
    h = xxz_terms(2, [(0, 1)])
    for s in krylov_states(h, singlet_product(2), EvolutionConfig(method="exact")):
        assert np.allclose(s.probabilities(), singlet_product(2).probabilities(), atol=1e-12)


def test_transverse_field_trotter_full_space():
    n = 4
    h = xxz_terms(n, chain_edges(n), 1.0, 1.0, 0.0, 0.7)
    v = random_state(n, 8)
    exact = dense_evolve(dense_xxz(n, chain_edges(n), 1.0, 1.0, 0.0, 0.7), v, 0.3)
    assert np.linalg.norm(trotter_step(h, StateVector(n, v), 0.3, 50).amplitudes - exact) < 1e-4


def test_eighteen_site_krylov_count():
    h = xxz_terms(18, chain_edges(18), 0.91)
    states = krylov_states(h, singlet_product(18, sector=True), EvolutionConfig())
    assert len(states) == 5 and all(isinstance(s, SectorVector) for s in states)
