import json

import numpy as np
import pytest
from conftest import chain_edges, dense_from_terms, dense_xxz, random_state
from hypothesis import given, settings
from hypothesis import strategies as st

from skqd_lab.analysis import ed_ground
from skqd_lab.basis import popcount, sector_basis
from skqd_lab.errors import DimensionError, InvalidSectorError, SymmetryError
from skqd_lab.hamiltonian import (
    ModelParams,
    PauliTerm,
    SectorVector,
    StateVector,
    TermList,
    apply,
    apply_sector,
    apply_terms,
    build_terms,
    coeff_norm_bound,
    diagonal,
    expectation,
    full_operator,
    magnetization_expect,
    sector_operator,
    xxz_terms,
)
from skqd_lab.lattice import build_chain, build_rectangle
from skqd_lab.states import singlet_product, w_state_product

finite = st.floats(-3, 3, allow_nan=False)


def as_set(h):
    return {(t.coeff, t.paulis) for t in h.terms}


def test_two_site_xxx_terms():
    h = build_terms(ModelParams(build_chain(2)))
    assert as_set(h) == {
        (1.0, ((0, "X"), (1, "X"))),
        (1.0, ((0, "Y"), (1, "Y"))),
        (1.0, ((0, "Z"), (1, "Z"))),
    }


def test_two_site_field_terms():
    h = build_terms(ModelParams(build_chain(2), delta=0.25, h_z=0.5))
    assert (0.25, ((0, "Z"), (1, "Z"))) in as_set(h)
    assert (-0.5, ((0, "Z"),)) in as_set(h)
    assert (-0.5, ((1, "Z"),)) in as_set(h)
    assert len(h) == 5


def test_rectangle_term_count():
    assert len(build_terms(ModelParams(build_rectangle(24)))) == 114


def test_model_params_reject_nonfinite():
    with pytest.raises(ValueError):
        ModelParams(build_chain(2), J=float("nan"))


def test_z_convention():
    h = TermList(1, (PauliTerm(1.0, ((0, "Z"),)),))
    assert np.allclose(apply(h, StateVector(1, [1, 0])).amplitudes, [1, 0])
    assert np.allclose(apply(h, StateVector(1, [0, 1])).amplitudes, [0, -1])


@pytest.mark.parametrize("axis", ["X", "Y", "Z"])
def test_single_pauli_matches_matrix(axis):
    h = TermList(3, (PauliTerm(0.7, ((1, axis),)),))
    assert np.allclose(full_operator(h).toarray(), dense_from_terms(h))


def test_singlet_eigenvalue():
    h = build_terms(ModelParams(build_chain(2)))
    s = singlet_product(2)
    assert np.allclose(apply(h, s).amplitudes, -3 * s.amplitudes)


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 7), finite, finite, finite, finite)
def test_full_operator_matches_kronecker(n, J, delta, h_z, h_x):
    h = xxz_terms(n, chain_edges(n), J, delta, h_z, h_x)
    expected = dense_xxz(n, chain_edges(n), J, delta, h_z, h_x)
    assert np.allclose(full_operator(h).toarray(), expected, atol=1e-12)


def test_rectangle_matches_kronecker():
    g = build_rectangle(6)
    h = xxz_terms(6, g.edges, 0.8, 1.7, 0.3, 0.2)
    assert np.allclose(full_operator(h).toarray(), dense_xxz(6, g.edges, 0.8, 1.7, 0.3, 0.2))


def test_random_eight_site_apply():
    h = xxz_terms(8, chain_edges(8), 1.1, 0.6, 0.4)
    v = random_state(8, 3)
    expected = dense_xxz(8, chain_edges(8), 1.1, 0.6, 0.4) @ v
    assert np.max(np.abs(apply(h, StateVector(8, v)).amplitudes - expected)) < 1e-12


@settings(max_examples=20, deadline=None)
@given(st.integers(2, 7), finite, finite, finite, st.integers(0, 2**16))
def test_fused_and_term_by_term_agree(n, J, delta, h_x, seed):
    h = xxz_terms(n, chain_edges(n), J, delta, 0.3, h_x)
    s = StateVector(n, random_state(n, seed))
    assert np.allclose(apply(h, s).amplitudes, apply_terms(h, s).amplitudes, atol=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.integers(2, 10), finite, finite, st.integers(0, 2**16))
def test_hermiticity(n, delta, h_x, seed):
    h = xxz_terms(n, chain_edges(n), 1.0, delta, 0.5, h_x)
    x, y = StateVector(n, random_state(n, seed)), StateVector(n, random_state(n, seed + 1))
    lhs = np.vdot(x.amplitudes, apply(h, y).amplitudes)
    rhs = np.conj(np.vdot(y.amplitudes, apply(h, x).amplitudes))
    assert abs(lhs - rhs) < 1e-12 * max(1, abs(lhs))


@settings(max_examples=20, deadline=None)
@given(st.integers(2, 10), finite, finite, st.data())
def test_weight_conservation(n, delta, h_z, data):
    k = data.draw(st.integers(0, n))
    h = xxz_terms(n, chain_edges(n), 1.0, delta, h_z)
    amps = np.zeros(2**n, dtype=complex)
    keys = sector_basis(n, k)
    amps[keys] = np.random.default_rng(k).normal(size=len(keys))
    out = apply(h, StateVector(n, amps)).amplitudes
    off = np.ones(2**n, bool)
    off[keys] = False
    assert np.all(out[off] == 0)


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 10), finite, finite, st.data())
def test_sector_apply_matches_embed_project(n, delta, h_z, data):
    k = data.draw(st.integers(0, n))
    h = xxz_terms(n, chain_edges(n), 0.9, delta, h_z)
    rng = np.random.default_rng(n * 100 + k)
    keys = sector_basis(n, k)
    v = rng.normal(size=len(keys)) + 1j * rng.normal(size=len(keys))
    s = SectorVector(n, k, v / np.linalg.norm(v))
    via_full = SectorVector.from_full(apply(h, s.to_full()), k, atol=np.inf)
    assert np.max(np.abs(apply_sector(h, s).amplitudes - via_full.amplitudes)) < 1e-12


def test_sector_matrix_two_sites():
    h = build_terms(ModelParams(build_chain(2)))
    assert np.allclose(sector_operator(h, 1).toarray(), [[-1, 2], [2, -1]])


def test_sector_diagonal_only_is_elementwise():
    h = TermList(4, (PauliTerm(0.5, ((0, "Z"), (2, "Z"))), PauliTerm(-1.0, ((3, "Z"),))))
    s = SectorVector(4, 2, np.arange(6) + 1.0)
    keys = sector_basis(4, 2)
    assert np.allclose(apply_sector(h, s).amplitudes, diagonal(h, keys) * s.amplitudes)


def test_sector_apply_rejects_transverse_field():
    h = xxz_terms(4, chain_edges(4), h_x=0.3)
    assert not h.conserves_weight
    with pytest.raises(SymmetryError):
        sector_operator(h, 2)


def test_dimension_mismatch():
    h = build_terms(ModelParams(build_chain(3)))
    with pytest.raises(DimensionError):
        apply(h, StateVector(2, [1, 0, 0, 0]))


def test_coeff_norm_bound_examples():
    assert coeff_norm_bound(build_terms(ModelParams(build_chain(2)))) == 3
    assert coeff_norm_bound(build_terms(ModelParams(build_chain(2), delta=0.25, h_z=0.5))) == 3.25
    assert coeff_norm_bound(TermList(3, ())) == 0


@pytest.mark.parametrize("n,delta,h_z", [(4, 1, 0), (6, -0.5, 0.7), (8, 2.0, 1.3), (10, 0.3, 0.1)])
def test_coeff_norm_bounds_spectrum(n, delta, h_z):
    h = xxz_terms(n, chain_edges(n), 1.0, delta, h_z, 0.2)
    evals = np.linalg.eigvalsh(full_operator(h).toarray())
    assert np.max(np.abs(evals)) <= coeff_norm_bound(h) + 1e-12


def test_magnetization_examples():
    assert magnetization_expect(StateVector(5, np.eye(32)[0])) == 5
    assert magnetization_expect(w_state_product(6, 2)) == pytest.approx(2)
    assert magnetization_expect(w_state_product(6, 2, sector=True)) == 2
    assert magnetization_expect(singlet_product(4)) == pytest.approx(0)


def test_expectation_of_eigenstate():
    h = build_terms(ModelParams(build_chain(6)))
    gs = ed_ground(h)
    assert expectation(h, gs.ground_state) == pytest.approx(gs.energy, abs=1e-10)


def test_from_full_detects_leakage():
    with pytest.raises(InvalidSectorError):
        SectorVector.from_full(StateVector(2, [0.6, 0.8, 0, 0]), 1)


def test_terms_json_round_trip():
    h = xxz_terms(3, chain_edges(3), 0.5, 2.0, 0.1, 0.2)
    data = json.loads(json.dumps(h.to_json()))
    assert data[0] == {"coeff": 0.5, "paulis": {"0": "X", "1": "X"}}
    assert TermList.from_json(data, 3) == h


def test_term_locality_enforced():
    with pytest.raises(ValueError):
        TermList(3, (PauliTerm(1.0, ((0, "X"), (1, "X"), (2, "X"))),))
    with pytest.raises(ValueError):
        TermList(3, (PauliTerm(1.0, ((0, "X"), (0, "Z"))),))


def test_popcount_weight_of_sector_keys():
    assert np.all(popcount(sector_basis(9, 4)) == 4)
