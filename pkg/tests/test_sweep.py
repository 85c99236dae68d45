import csv
import io

import numpy as np
import pytest

from skqd_lab.analysis import ed_ground_sector
from skqd_lab.errors import SweepError
from skqd_lab.evolution import EvolutionConfig
from skqd_lab.hamiltonian import ModelParams, build_terms
from skqd_lab.lattice import build_chain
from skqd_lab.sampling import NoiseModel
from skqd_lab.sweep import (
    FIELD_SWEEP_COLUMNS,
    SECTOR_DETAIL_COLUMNS,
    SPARSITY_COLUMNS,
    SkqdConfig,
    ZeroFieldReference,
    argmin_sector,
    field_sweep,
    field_sweep_csv,
    sector_detail_csv,
    sector_sweep,
    sparsity_map,
    sparsity_map_csv,
)

FAST = SkqdConfig(shots=20_000)


def ed_best_k(params):
    h = build_terms(params)
    return argmin_sector({k: ed_ground_sector(h, k).energy for k in range(params.n_sites // 2 + 1)})[0]


def test_argmin_ties_prefer_smaller_k():
    assert argmin_sector({2: -1.0, 1: -1.0 + 1e-12, 3: 0.0}) == (1, True)
    assert argmin_sector({0: 0.0, 1: -1.0}) == (1, False)
    with pytest.raises(SweepError):
        argmin_sector({})


def test_polarized_at_strong_field():
    r = sector_sweep(ModelParams(build_chain(8), h_z=20.0), [0, 1], FAST)
    assert r.best_k == 0 and r.magnetization == 8


def test_zero_field_half_filling():
    r = sector_sweep(ModelParams(build_chain(8)), range(5), FAST)
    assert r.best_k == 4 and r.magnetization == 0 and r.reference_k == 4


def test_sector_energies_are_upper_bounds():
    params = ModelParams(build_chain(10), J=0.91, h_z=1.0)
    r = sector_sweep(params, range(6), SkqdConfig(shots=2000))
    for rec in r.per_sector:
        assert rec.energy >= rec.reference_energy - 1e-9


def test_sweep_input_checks():
    with pytest.raises(ValueError):
        sector_sweep(ModelParams(build_chain(6), h_x=0.1), [1], FAST)
    with pytest.raises(ValueError):
        sector_sweep(ModelParams(build_chain(6)), [4], FAST)
    with pytest.raises(ValueError):
        field_sweep(ModelParams(build_chain(6)), [], FAST)


def test_zero_field_shift_matches_direct_ed():
    params = ModelParams(build_chain(10), delta=1.4)
    ref = ZeroFieldReference(params)
    for h_z in (0.0, 0.7, 3.1):
        h = build_terms(params.with_field(h_z))
        for k in (0, 2, 5):
            assert ref.energy(k, h_z) == pytest.approx(ed_ground_sector(h, k).energy, abs=1e-10)


def test_staircase_matches_oracle_and_is_monotone():
    params = ModelParams(build_chain(8), J=0.91)
    grid = np.linspace(0, 4.2, 15)
    result = field_sweep(params, grid, FAST, sector_window=None)
    ks = [row.best_k for row in result.rows]
    assert all(b <= a for a, b in zip(ks, ks[1:]))
    assert ks[0] == 4 and ks[-1] == 0
    for row in result.rows:
        assert row.best_k == ed_best_k(params.with_field(row.h_z))
        assert row.magnetization == 8 - 2 * row.best_k
        assert row.energy >= row.reference_energy - 1e-9


@pytest.mark.parametrize("n", [6, 10, 12])
def test_monotone_staircase_other_sizes(n):
    params = ModelParams(build_chain(n), delta=0.5)
    rows = field_sweep(params, np.linspace(0, 3.5, 12), SkqdConfig(shots=5000)).rows
    ks = [row.best_k for row in rows]
    assert all(b <= a for a, b in zip(ks, ks[1:]))


def test_window_zero_collapses_to_reference():
    params = ModelParams(build_chain(8), delta=1.2)
    rows = field_sweep(params, np.linspace(0, 5, 8), FAST, sector_window=0).rows
    for row in rows:
        assert row.best_k == row.reference_k
        assert row.energy == pytest.approx(row.reference_energy, abs=1e-8)


@pytest.mark.parametrize("n", [6, 8, 10])
def test_pruned_and_full_sweeps_agree(n):
    params = ModelParams(build_chain(n), delta=0.8)
    grid = np.linspace(0, 3.6, 9)
    pruned = field_sweep(params, grid, SkqdConfig(shots=10_000), sector_window=1)
    full = field_sweep(params, grid, SkqdConfig(shots=10_000), sector_window=None)
    assert [r.best_k for r in pruned.rows] == [r.best_k for r in full.rows]


def test_rows_sorted_by_field():
    rows = field_sweep(ModelParams(build_chain(6)), [2.0, 0.0, 1.0], FAST).rows
    assert [r.h_z for r in rows] == [0.0, 1.0, 2.0]


def test_noisy_filtered_sweep_runs():
    cfg = SkqdConfig(shots=5000, noise=NoiseModel(0.01))
    r = sector_sweep(ModelParams(build_chain(8)), range(5), cfg)
    assert r.best_k == 4
    assert sum(rec.shots_discarded for rec in r.per_sector) > 0


def test_threads_do_not_change_results():
    params = ModelParams(build_chain(8), delta=0.7)
    grid = [0.0, 1.5, 3.0]
    a = field_sweep(params, grid, SkqdConfig(shots=3000), seed=5, threads=1)
    b = field_sweep(params, grid, SkqdConfig(shots=3000), seed=5, threads=3)
    assert field_sweep_csv(a) == field_sweep_csv(b)
    assert sector_detail_csv(a) == sector_detail_csv(b)


def test_csv_columns_and_formatting():
    result = field_sweep(ModelParams(build_chain(6)), [0.0, 0.1], FAST)
    rows = list(csv.reader(io.StringIO(field_sweep_csv(result))))
    assert tuple(rows[0]) == FIELD_SWEEP_COLUMNS
    assert ",".join(FIELD_SWEEP_COLUMNS) == (
        "h_z,best_k,magnetization,energy,reference_energy,reference_k,basis_size,shots_discarded"
    )
    assert float(rows[1][3]) == result.rows[0].energy
    assert rows[2][0] == "0.1"
    detail = list(csv.reader(io.StringIO(sector_detail_csv(result))))
    assert ",".join(detail[0]) == "h_z,k,energy,basis_size,shots_discarded"
    assert tuple(detail[0]) == SECTOR_DETAIL_COLUMNS
    assert ",".join(SPARSITY_COLUMNS) == "delta,h_z,log_ipr_nat,log_ipr_10,ground_k,energy,degenerate"


def test_sparsity_map_polarized_and_boundaries():
    deltas = np.linspace(-2, 4, 8)
    fields = np.linspace(0, 10, 11)
    rows = sparsity_map(8, 1.0, deltas, fields)
    assert len(rows) == 88
    for r in rows:
        if r.ground_k == 0:
            assert r.log_ipr_nat == 0 and r.log_ipr_10 == 0
        assert r.log_ipr_10 == pytest.approx(r.log_ipr_nat / np.log(10))
    text = sparsity_map_csv(rows)
    assert text.splitlines()[0] == ",".join(SPARSITY_COLUMNS)
    assert text.splitlines()[1].endswith(("true", "false"))


def test_sparsity_map_matches_direct_ed():
    rows = sparsity_map(6, 1.0, [0.5], [0.0, 1.0, 6.0])
    for r in rows:
        assert r.ground_k == ed_best_k(ModelParams(build_chain(6), delta=0.5, h_z=r.h_z))
