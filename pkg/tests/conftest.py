"""Shared independent oracles: dense Kronecker-product operators."""

from functools import reduce

import numpy as np
import pytest
import scipy.linalg

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def kron_string(n, paulis):
    """Dense operator for {site: axis}; site 0 is the leftmost tensor factor."""
    return reduce(np.kron, [PAULI[paulis.get(i, "I")] for i in range(n)])


def dense_xxz(n, edges, J=1.0, delta=1.0, h_z=0.0, h_x=0.0):
    H = np.zeros((2**n, 2**n), dtype=complex)
    for i, j in edges:
        H += J * kron_string(n, {i: "X", j: "X"})
        H += J * kron_string(n, {i: "Y", j: "Y"})
        H += J * delta * kron_string(n, {i: "Z", j: "Z"})
    for i in range(n):
        H -= h_z * kron_string(n, {i: "Z"})
        H -= h_x * kron_string(n, {i: "X"})
    return H


def dense_from_terms(h):
    H = np.zeros((2**h.n_sites, 2**h.n_sites), dtype=complex)
    for t in h.terms:
        H += t.coeff * kron_string(h.n_sites, dict(t.paulis))
    return H


def dense_evolve(H, v, t):
    return scipy.linalg.expm(-1j * t * H) @ v


def chain_edges(n):
    return [(i, i + 1) for i in range(n - 1)]


def random_state(n, seed=0):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    return v / np.linalg.norm(v)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# acceptance lines, filled by test_acceptance.report and printed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
