"""Projective-measurement sampling, readout noise, and Hamming-weight post-selection."""

from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .basis import bitstrings, popcount, site_mask
from .errors import DimensionError, EmptySectorWarning
from .hamiltonian import State

_MASK64 = (1 << 64) - 1


def rng_for(seed: int) -> np.random.Generator:
    """Counter-based stream (Philox) for a 64-bit seed."""
    return np.random.Generator(np.random.Philox(int(seed) & _MASK64))


def task_seed(base_seed: int, *indices: int) -> int:
    """``base_seed`` XOR a stable 64-bit hash of the task indices."""
    digest = hashlib.blake2b(repr(tuple(int(i) for i in indices)).encode(), digest_size=8)
    return (int(base_seed) ^ int.from_bytes(digest.digest(), "little")) & _MASK64


@dataclass(frozen=True)
class NoiseModel:
    readout_flip_prob: float = 0.0

    def __post_init__(self):
        if not 0 <= self.readout_flip_prob < 1:
            raise ValueError(f"flip probability must be in [0, 1), got {self.readout_flip_prob}")


@dataclass(frozen=True, eq=False)
class SampleTable:
    """Bitstring counts from one measured state, stored as sorted integer labels."""

    n_sites: int
    keys: np.ndarray = field(repr=False)
    counts: np.ndarray = field(repr=False)
    krylov_step: int = 0
    shots_requested: int = 0
    shots_discarded: int = 0
    filtered: bool = False
    sector: int | None = None
    seed: int = 0

    def __post_init__(self):
        keys = np.asarray(self.keys, dtype=np.int64)
        counts = np.asarray(self.counts, dtype=np.int64)
        if keys.shape != counts.shape:
            raise DimensionError("keys and counts differ in length")
        if np.any(counts < 0):
            raise ValueError("counts must be nonnegative")
        if len(keys) > 1 and np.any(np.diff(keys) <= 0):
            raise ValueError("keys must be strictly increasing")
        if int(counts.sum()) + self.shots_discarded != self.shots_requested:
            raise ValueError("counts plus discarded shots must equal shots requested")
        object.__setattr__(self, "keys", keys)
        object.__setattr__(self, "counts", counts)

    def __len__(self):
        return len(self.keys)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def as_dict(self) -> dict[str, int]:
        return dict(zip(bitstrings(self.keys, self.n_sites), map(int, self.counts)))

    @property
    def meta(self) -> dict:
        return {
            "n_sites": self.n_sites,
            "krylov_step": self.krylov_step,
            "shots_requested": self.shots_requested,
            "shots_discarded": self.shots_discarded,
            "filtered": self.filtered,
            "sector": self.sector,
            "seed": self.seed,
        }

    @classmethod
    def from_counts(cls, counts: dict[str, int], n_sites: int | None = None, **meta) -> "SampleTable":
        if n_sites is None:
            lengths = {len(b) for b in counts}
            if len(lengths) != 1:
                raise DimensionError(f"mixed bitstring lengths {sorted(lengths)}")
            n_sites = lengths.pop()
        merged: dict[int, int] = {}
        for b, c in counts.items():
            if len(b) != n_sites:
                raise DimensionError(f"bitstring {b!r} is not {n_sites} sites long")
            merged[int(b, 2)] = merged.get(int(b, 2), 0) + int(c)
        keys = np.array(sorted(merged), dtype=np.int64)
        vals = np.array([merged[x] for x in keys], dtype=np.int64)
        meta.setdefault("shots_requested", int(vals.sum()) + meta.get("shots_discarded", 0))
        return cls(n_sites, keys, vals, **meta)

    def to_jsonl(self) -> str:
        lines = [json.dumps({"meta": self.meta}, sort_keys=True)]
        lines += [
            json.dumps({"bitstring": b, "count": int(c)})
            for b, c in zip(bitstrings(self.keys, self.n_sites), self.counts)
        ]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_jsonl(cls, text: str) -> "SampleTable":
        """Parse :meth:`to_jsonl` output; the meta header is optional for external counts."""
        meta, counts = {}, {}
        for lineno, line in enumerate(text.splitlines(), 1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"line {lineno}: {exc.msg}") from exc
            if "meta" in record:
                meta = dict(record["meta"])
                continue
            b = record["bitstring"]
            counts[b] = counts.get(b, 0) + int(record["count"])
        n_sites = meta.pop("n_sites", None)
        return cls.from_counts(counts, n_sites, **meta)


def sample(s: State, shots: int, seed: int, krylov_step: int = 0) -> SampleTable:
    """Multinomial measurement of ``s`` in the computational basis.

    Draws by inverse CDF over the nonzero probabilities, so a sector state is
    sampled without ever touching the full ``2**n`` space.
    """
    if shots < 1:
        raise ValueError("need at least one shot")
    probs = s.probabilities()
    support = np.flatnonzero(probs > 0)
    cdf = np.cumsum(probs[support])
    u = rng_for(seed).random(shots) * cdf[-1]
    idx = np.minimum(np.searchsorted(cdf, u, side="right"), len(support) - 1)
    counts = np.bincount(idx, minlength=len(support))
    hit = counts > 0
    return SampleTable(
        s.n_sites,
        s.keys[support[hit]],
        counts[hit],
        krylov_step=krylov_step,
        shots_requested=shots,
        seed=int(seed) & _MASK64,
    )


def apply_readout_noise(t: SampleTable, noise: NoiseModel, seed: int) -> SampleTable:
    """Flip every bit of every recorded shot independently with the model's probability."""
    p = noise.readout_flip_prob
    if p == 0:
        return t
    shots = np.repeat(t.keys, t.counts)
    rng = rng_for(seed)
    flips = np.zeros(len(shots), dtype=np.int64)
    for site in range(t.n_sites):
        flips |= np.where(rng.random(len(shots)) < p, site_mask(t.n_sites, site), 0)
    keys, counts = np.unique(shots ^ flips, return_counts=True)
    return replace(t, keys=keys, counts=counts)


def filter_sector(t: SampleTable, k: int) -> SampleTable:
    """Keep only bitstrings with exactly ``k`` excitations."""
    keep = popcount(t.keys) == k
    dropped = int(t.counts[~keep].sum())
    out = replace(
        t,
        keys=t.keys[keep],
        counts=t.counts[keep],
        shots_discarded=t.shots_discarded + dropped,
        filtered=True,
        sector=k,
    )
    if len(out) == 0:
        warnings.warn(f"no bitstrings survived the sector-{k} filter", EmptySectorWarning, stacklevel=2)
    return out


@dataclass(frozen=True, eq=False)
class SampledBasis:
    """Deduplicated union of sampled bitstrings, sorted, with total multiplicities."""

    n_sites: int
    keys: np.ndarray = field(repr=False)
    multiplicity: np.ndarray = field(repr=False)

    def __len__(self):
        return len(self.keys)

    def bitstrings(self) -> list[str]:
        return bitstrings(self.keys, self.n_sites)


def merge_tables(tables) -> SampledBasis:
    tables = list(tables)
    if not tables:
        raise ValueError("nothing to merge")
    sizes = {t.n_sites for t in tables}
    if len(sizes) != 1:
        raise DimensionError(f"tables span different system sizes {sorted(sizes)}")
    keys = np.concatenate([t.keys for t in tables])
    counts = np.concatenate([t.counts for t in tables])
    uniq, inverse = np.unique(keys, return_inverse=True)
    mult = np.bincount(inverse, weights=counts, minlength=len(uniq)).astype(np.int64)
    return SampledBasis(sizes.pop(), uniq, mult)
