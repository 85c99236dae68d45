"""Run configuration: JSON schema, defaults, and material presets."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from .errors import ConfigError
from .evolution import EvolutionConfig
from .hamiltonian import ModelParams
from .lattice import build_geometry
from .sampling import NoiseModel
from .states import InitialStateSpec


@dataclass(frozen=True)
class MaterialPreset:
    name: str
    J: float
    delta: float
    citation_key: str


# J in meV
MATERIALS = (
    MaterialPreset("Cs2CoCl4", 0.23, 0.25, "PhysRevLett.127.037201"),
    MaterialPreset("CuPzN", 0.91, 1.00, "PhysRevB.59.1008"),
    MaterialPreset("KCuF3", 33.5, 1.00, "PhysRevLett.111.137205"),
    MaterialPreset("BaCo2V2O8", 3.05, 1.90, "PhysRevLett.123.027204"),
    MaterialPreset("SrCo2V2O8", 3.7, 2.10, "PhysRevLett.123.067203"),
    MaterialPreset("CsCoBr3", 1.25, 6.25, "WPLehmann_1981"),
    MaterialPreset("CsCoCl3", 0.595, 10.42, "WPLehmann_1981"),
)


def get_preset(name: str) -> MaterialPreset:
    for m in MATERIALS:
        if m.name.lower() == name.lower():
            return m
    raise ConfigError(f"unknown preset {name!r}; known: {', '.join(m.name for m in MATERIALS)}")


_NUM = {"type": "number"}
_GRID = {"type": "array", "items": _NUM, "minItems": 1}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["model"],
    "properties": {
        "preset": {"type": "string"},
        "model": {
            "type": "object",
            "additionalProperties": False,
            "required": ["n"],
            "properties": {
                "n": {"type": "integer", "minimum": 2, "maximum": 62},
                "J": _NUM,
                "delta": _NUM,
                "h_z": _NUM,
                "h_x": _NUM,
                "geometry": {"enum": ["chain", "rect"]},
                "preset": {"type": "string"},
            },
        },
        "init": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["singlet", "neel", "wstate"]},
                "k": {"type": ["integer", "null"], "minimum": 0},
                "layout": {"enum": ["identity", "snake"]},
            },
        },
        "evolution": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "dt": {"type": "number", "exclusiveMinimum": 0},
                "d": {"type": "integer", "minimum": 1},
                "method": {"enum": ["exact", "trotter2"]},
                "reps": {"type": "integer", "minimum": 1},
                "tol": {"type": "number", "exclusiveMinimum": 0, "maximum": 1e-6},
            },
        },
        "shots": {"type": ["integer", "null"], "minimum": 1},
        "noise": {
            "type": ["object", "null"],
            "additionalProperties": False,
            "properties": {
                "readout_flip_prob": {"type": "number", "minimum": 0, "exclusiveMaximum": 1}
            },
        },
        "filter_k": {"type": ["integer", "null"], "minimum": 0},
        "sweep": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "hz_grid": _GRID,
                "hz_min": _NUM,
                "hz_max": _NUM,
                "steps": {"type": "integer", "minimum": 1},
                "sector_window": {"type": ["integer", "null"], "minimum": 0},
                "sectors": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                "delta_grid": _GRID,
                "delta_min": _NUM,
                "delta_max": _NUM,
                "delta_steps": {"type": "integer", "minimum": 1},
            },
        },
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "output_dir": {"type": "string"},
    },
}


@dataclass(frozen=True)
class SweepConfig:
    hz_grid: tuple[float, ...] | None = None
    sector_window: int | None = 2
    sectors: tuple[int, ...] | None = None
    delta_grid: tuple[float, ...] | None = None


@dataclass(frozen=True)
class RunConfig:
    model: ModelParams
    init: InitialStateSpec = field(default_factory=InitialStateSpec)
    evolution: EvolutionConfig = field(default_factory=EvolutionConfig)
    shots: int | None = 300_000
    noise: NoiseModel | None = None
    filter_k: int | None = None
    sweep: SweepConfig = field(default_factory=SweepConfig)
    seed: int = 0
    output_dir: str = "out"
    preset: str | None = None

    @property
    def n(self) -> int:
        return self.model.n_sites

    def to_json(self) -> dict:
        m = self.model
        return {
            "preset": self.preset,
            "model": {"n": m.n_sites, "J": m.J, "delta": m.delta, "h_z": m.h_z, "h_x": m.h_x,
                      "geometry": m.geometry.shape},
            "init": self.init.to_json(),
            "evolution": self.evolution.to_json(),
            "shots": self.shots,
            "noise": None if self.noise is None else {"readout_flip_prob": self.noise.readout_flip_prob},
            "filter_k": self.filter_k,
            "sweep": {
                "hz_grid": None if self.sweep.hz_grid is None else list(self.sweep.hz_grid),
                "sector_window": self.sweep.sector_window,
                "sectors": None if self.sweep.sectors is None else list(self.sweep.sectors),
                "delta_grid": None if self.sweep.delta_grid is None else list(self.sweep.delta_grid),
            },
            "seed": self.seed,
        }


def _grid(sweep: dict, key: str, lo: str, hi: str, steps: str):
    if key in sweep:
        return tuple(float(x) for x in sweep[key])
    if lo in sweep or hi in sweep:
        if not (lo in sweep and hi in sweep and steps in sweep):
            raise ConfigError(f"sweep: {lo}, {hi} and {steps} must be given together")
        return tuple(float(x) for x in np.linspace(sweep[lo], sweep[hi], sweep[steps]))
    return None


def validate(data: dict) -> RunConfig:
    """Schema-check a config dictionary and fill in defaults."""
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        where = ".".join(str(p) for p in e.absolute_path) or "<root>"
        raise ConfigError(f"{where}: {e.message}")

    model = dict(data["model"])
    preset_name = model.pop("preset", None) or data.get("preset")
    J, delta = 1.0, 1.0
    if preset_name:
        preset = get_preset(preset_name)
        J, delta = preset.J, preset.delta
    try:
        params = ModelParams(
            build_geometry(model["n"], model.get("geometry", "chain")),
            J=float(model.get("J", J)),
            delta=float(model.get("delta", delta)),
            h_z=float(model.get("h_z", 0.0)),
            h_x=float(model.get("h_x", 0.0)),
        )
        init = InitialStateSpec(**data.get("init", {}))
        evolution = EvolutionConfig(**data.get("evolution", {}))
        noise = data.get("noise")
        noise = None if noise is None else NoiseModel(**noise)
        sweep = data.get("sweep", {})
        sweep_cfg = SweepConfig(
            hz_grid=_grid(sweep, "hz_grid", "hz_min", "hz_max", "steps"),
            sector_window=sweep.get("sector_window", 2),
            sectors=tuple(sweep["sectors"]) if "sectors" in sweep else None,
            delta_grid=_grid(sweep, "delta_grid", "delta_min", "delta_max", "delta_steps"),
        )
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    if init.kind == "singlet" and params.n_sites % 2:
        raise ConfigError("init: a singlet product needs an even number of sites")
    return RunConfig(
        model=params,
        init=init,
        evolution=evolution,
        shots=data.get("shots", 300_000),
        noise=noise,
        filter_k=data.get("filter_k"),
        sweep=sweep_cfg,
        seed=int(data.get("seed", 0)),
        output_dir=data.get("output_dir", "out"),
        preset=preset_name,
    )


def load_config(path) -> RunConfig:
    return validate(read_config_dict(path))


def read_config_dict(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return data
