"""Magnetization-sector sweeps, longitudinal-field sweeps and sparsity maps.

For a weight-conserving Hamiltonian the Zeeman term is the constant
``-h_z (N - 2k)`` inside sector ``k``, so exact sector energies at any field
follow from one zero-field diagonalization per sector. The oracle references
below use that identity; the SKQD runs themselves always simulate the full
Hamiltonian at each field value.
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .analysis import DEGENERACY_GAP, ed_ground_sector, sparsity_profile
from .errors import EmptySubspaceError, SweepError
from .evolution import EvolutionConfig
from .hamiltonian import ModelParams, build_terms
from .lattice import build_geometry
from .sampling import NoiseModel
from .skqd import skqd_run
from .states import InitialStateSpec

TIE_TOL = 1e-9

FIELD_SWEEP_COLUMNS = (
    "h_z", "best_k", "magnetization", "energy", "reference_energy", "reference_k",
    "basis_size", "shots_discarded",
)
SPARSITY_COLUMNS = ("delta", "h_z", "log_ipr_nat", "log_ipr_10", "ground_k", "energy", "degenerate")
SECTOR_DETAIL_COLUMNS = ("h_z", "k", "energy", "basis_size", "shots_discarded")


@dataclass(frozen=True)
class SkqdConfig:
    """Per-sector SKQD settings shared by every point of a sweep."""

    evolution: EvolutionConfig = field(default_factory=EvolutionConfig)
    shots: int | None = 300_000
    noise: NoiseModel | None = None
    filter: bool = True
    layout: str = "identity"


@dataclass(frozen=True)
class SectorRecord:
    k: int
    energy: float | None
    basis_size: int
    shots_discarded: int
    reference_energy: float | None = None
    captured_alpha: float | None = None


@dataclass(frozen=True)
class SectorSweepResult:
    n_sites: int
    per_sector: tuple[SectorRecord, ...]
    best_k: int
    reference_k: int | None = None
    reference_energy: float | None = None

    @property
    def energy(self) -> float:
        return self.record(self.best_k).energy

    @property
    def magnetization(self) -> int:
        return self.n_sites - 2 * self.best_k

    def record(self, k: int) -> SectorRecord:
        return next(r for r in self.per_sector if r.k == k)


@dataclass(frozen=True)
class FieldSweepRow:
    h_z: float
    best_k: int
    magnetization: int
    energy: float
    reference_energy: float | None
    reference_k: int | None
    basis_size: int
    shots_discarded: int
    reference_degenerate: bool = False
    m_rel: float = 0.0


@dataclass(frozen=True)
class FieldSweepResult:
    rows: tuple[FieldSweepRow, ...]
    details: tuple[tuple[float, SectorRecord], ...]


@dataclass(frozen=True)
class SparsityRow:
    delta: float
    h_z: float
    log_ipr_nat: float
    log_ipr_10: float
    ground_k: int
    energy: float
    degenerate: bool


def argmin_sector(energies: dict[int, float], tol: float = TIE_TOL) -> tuple[int, bool]:
    """Lowest-energy sector, ties within ``tol`` going to the smaller ``k``.

    Also reports whether the runner-up sits within ``tol`` of the minimum.
    """
    if not energies:
        raise SweepError("no sector produced an energy")
    e_min = min(energies.values())
    best = min(k for k, e in energies.items() if e <= e_min + tol)
    tied = sum(1 for e in energies.values() if e <= e_min + tol) > 1
    return best, tied


def _check_sweepable(params: ModelParams, sectors) -> list[int]:
    if params.h_x != 0:
        raise ValueError("sector sweeps need h_x = 0; a transverse field breaks the sectors")
    n = params.n_sites
    sectors = sorted(set(int(k) for k in sectors))
    if not sectors or sectors[0] < 0 or sectors[-1] > n // 2:
        raise ValueError(f"sectors must be a nonempty subset of [0, {n // 2}], got {sectors}")
    return sectors


def _map(fn, items, threads: int):
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


class ZeroFieldReference:
    """Sector ED at zero field, shifted to any ``h_z`` by ``-h_z (N - 2k)``."""

    def __init__(self, params: ModelParams):
        self.params = params.with_field(0.0)
        self.terms = build_terms(self.params)
        self._results = {}

    def result(self, k: int):
        if k not in self._results:
            self._results[k] = ed_ground_sector(self.terms, k)
        return self._results[k]

    def energy(self, k: int, h_z: float) -> float:
        return self.result(k).energy - h_z * (self.params.n_sites - 2 * k)

    def energies(self, sectors, h_z: float) -> dict[int, float]:
        return {k: self.energy(k, h_z) for k in sectors}


def sector_sweep(
    params: ModelParams,
    sectors,
    cfg: SkqdConfig = SkqdConfig(),
    seed: int = 0,
    grid_index: int = 0,
    reference: bool = True,
    threads: int = 1,
    oracle: bool = False,
) -> SectorSweepResult:
    """SKQD from a W-state product in each sector; the lowest energy picks the sector.

    ``oracle=True`` also records each run's sector-ED energy and the weight of
    that ground state captured by the sampled basis.
    """
    sectors = _check_sweepable(params, sectors)

    def run(k: int) -> SectorRecord:
        init = InitialStateSpec("wstate", k, cfg.layout)
        try:
            r = skqd_run(
                params, init, cfg.evolution, cfg.shots, cfg.noise,
                filter_k=k if cfg.filter else None, seed=seed, grid_index=grid_index,
                oracle=oracle,
            )
        except EmptySubspaceError:
            return SectorRecord(k, None, 0, cfg.evolution.d * (cfg.shots or 0))
        return SectorRecord(
            k, r.energy, r.basis_size, r.shots_discarded, r.reference_energy, r.captured_alpha
        )

    records = _map(run, sectors, threads)
    energies = {r.k: r.energy for r in records if r.energy is not None}
    if not energies:
        raise SweepError("every sector came back empty after post-selection")
    best_k, _ = argmin_sector(energies)

    ref_k = ref_e = None
    if reference:
        h = build_terms(params)
        refs = {k: ed_ground_sector(h, k).energy for k in range(params.n_sites // 2 + 1)}
        ref_k, _ = argmin_sector(refs)
        ref_e = refs[ref_k]
        records = [
            replace(r, reference_energy=refs[r.k]) for r in records
        ]
    return SectorSweepResult(params.n_sites, tuple(records), best_k, ref_k, ref_e)


def field_sweep(
    params_base: ModelParams,
    hz_grid,
    cfg: SkqdConfig = SkqdConfig(),
    seed: int = 0,
    sector_window: int | None = 2,
    sectors=None,
    reference: bool = True,
    threads: int = 1,
    oracle: bool = False,
) -> FieldSweepResult:
    """Sector sweep at every field value, in ascending ``h_z`` order.

    With a reference, only sectors within ``sector_window`` of the oracle's
    ground sector are run; ``sector_window=None`` sweeps all of ``sectors``.
    """
    hz_grid = sorted(float(h) for h in hz_grid)
    if not hz_grid:
        raise ValueError("empty field grid")
    n = params_base.n_sites
    sectors = _check_sweepable(params_base, range(n // 2 + 1) if sectors is None else sectors)
    ref = ZeroFieldReference(params_base) if reference else None

    rows, details = [], []
    for i, h_z in enumerate(hz_grid):
        ref_k = ref_e = None
        degenerate = False
        swept = sectors
        if ref is not None:
            refs = ref.energies(sectors, h_z)
            ref_k, degenerate = argmin_sector(refs)
            ref_e = refs[ref_k]
            if sector_window is not None:
                swept = [k for k in sectors if abs(k - ref_k) <= sector_window]
        result = sector_sweep(
            params_base.with_field(h_z), swept, cfg, seed, grid_index=i, reference=False,
            threads=threads, oracle=oracle,
        )
        best = result.record(result.best_k)
        rows.append(FieldSweepRow(
            h_z=h_z,
            best_k=result.best_k,
            magnetization=result.magnetization,
            energy=best.energy,
            reference_energy=ref_e,
            reference_k=ref_k,
            basis_size=best.basis_size,
            shots_discarded=best.shots_discarded,
            reference_degenerate=degenerate,
            m_rel=result.magnetization / n,
        ))
        details.extend((h_z, r) for r in result.per_sector)
    return FieldSweepResult(tuple(rows), tuple(details))


def sparsity_map(
    n: int,
    J: float,
    delta_grid,
    hz_grid,
    geometry: str = "chain",
    threads: int = 1,
) -> list[SparsityRow]:
    """Ground-state IPR over a ``(delta, h_z)`` grid from sector ED.

    Each ``delta`` costs one diagonalization per sector; every ``h_z`` then
    reuses the zero-field sector ground states.
    """
    geom = build_geometry(n, geometry)
    sectors = range(n // 2 + 1)
    hz_grid = [float(h) for h in hz_grid]

    def column(delta: float) -> list[SparsityRow]:
        oracle = ZeroFieldReference(ModelParams(geom, J, float(delta)))
        iprs = {k: sparsity_profile(oracle.result(k).ground_state) for k in sectors}
        out = []
        for h_z in hz_grid:
            energies = oracle.energies(sectors, h_z)
            k, tied = argmin_sector(energies)
            prof = iprs[k]
            out.append(SparsityRow(
                delta=float(delta),
                h_z=h_z,
                log_ipr_nat=prof.log_ipr,
                log_ipr_10=prof.log10_ipr,
                ground_k=k,
                energy=energies[k],
                degenerate=tied or oracle.result(k).gap < DEGENERACY_GAP,
            ))
        return out

    return [row for col in _map(column, list(delta_grid), threads) for row in col]


# --- CSV output -------------------------------------------------------------------


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(int(value)) if isinstance(value, (int, np.integer)) else str(value)


def _csv(columns, records) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for rec in records:
        writer.writerow([_fmt(getattr(rec, c)) for c in columns])
    return buf.getvalue()


def field_sweep_csv(result: FieldSweepResult) -> str:
    return _csv(FIELD_SWEEP_COLUMNS, result.rows)


def sector_detail_csv(result: FieldSweepResult) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SECTOR_DETAIL_COLUMNS)
    for h_z, r in result.details:
        writer.writerow([_fmt(h_z), r.k, _fmt(r.energy), r.basis_size, r.shots_discarded])
    return buf.getvalue()


def sparsity_map_csv(rows) -> str:
    return _csv(SPARSITY_COLUMNS, rows)
