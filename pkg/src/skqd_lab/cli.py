"""Command-line entry point: ``skqd-lab <subcommand> [options]``."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .analysis import ed_ground, ed_ground_sector
from .config import MATERIALS, RunConfig, read_config_dict, validate
from .errors import ConfigError, ConvergenceError, ResourceError, SkqdError
from .hamiltonian import build_terms
from .skqd import BoundParams, energy_error_bound, sample_count_bound, skqd_run
from .sweep import (
    SkqdConfig,
    field_sweep,
    field_sweep_csv,
    sector_detail_csv,
    sparsity_map,
    sparsity_map_csv,
)

EXIT_OK, EXIT_CONFIG, EXIT_RESOURCE, EXIT_CONVERGENCE = 0, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_CONFIG)


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _shots(text: str):
    return None if text in ("exhaustive", "none") else int(text)


# (flag, dest, type, path into the config dictionary)
_OVERRIDES = (
    ("--n", "n", int, ("model", "n")),
    ("--J", "J", float, ("model", "J")),
    ("--delta", "delta", float, ("model", "delta")),
    ("--h-z", "h_z", float, ("model", "h_z")),
    ("--h-x", "h_x", float, ("model", "h_x")),
    ("--geometry", "geometry", str, ("model", "geometry")),
    ("--init", "init_kind", str, ("init", "kind")),
    ("--k", "init_k", int, ("init", "k")),
    ("--layout", "layout", str, ("init", "layout")),
    ("--dt", "dt", float, ("evolution", "dt")),
    ("--krylov-dim", "d", int, ("evolution", "d")),
    ("--method", "method", str, ("evolution", "method")),
    ("--reps", "reps", int, ("evolution", "reps")),
    ("--tol", "tol", float, ("evolution", "tol")),
    ("--shots", "shots", _shots, ("shots",)),
    ("--noise", "noise", float, ("noise", "readout_flip_prob")),
    ("--filter-k", "filter_k", int, ("filter_k",)),
    ("--hz-grid", "hz_grid", _floats, ("sweep", "hz_grid")),
    ("--hz-min", "hz_min", float, ("sweep", "hz_min")),
    ("--hz-max", "hz_max", float, ("sweep", "hz_max")),
    ("--steps", "steps", int, ("sweep", "steps")),
    ("--sector-window", "sector_window", int, ("sweep", "sector_window")),
    ("--sectors", "sectors", _ints, ("sweep", "sectors")),
    ("--delta-grid", "delta_grid", _floats, ("sweep", "delta_grid")),
    ("--delta-min", "delta_min", float, ("sweep", "delta_min")),
    ("--delta-max", "delta_max", float, ("sweep", "delta_max")),
    ("--delta-steps", "delta_steps", int, ("sweep", "delta_steps")),
)


_UNSET = object()


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="JSON run configuration")
    p.add_argument("--seed", type=int, help="64-bit base seed")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p.add_argument("--output", type=Path, help="output directory")
    p.add_argument("--preset", help="material preset name (see `materials`)")
    for flag, dest, typ, _ in _OVERRIDES:
        p.add_argument(flag, dest=dest, type=typ, default=_UNSET)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="skqd-lab", description="SKQD simulator for spin-1/2 XXZ models")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, helptext in (
        ("ed", "exact ground state (sector ED when --k or filter_k is set)"),
        ("skqd", "one SKQD run"),
        ("field-sweep", "sector sweep over a longitudinal-field grid"),
        ("sparsity-map", "ground-state IPR over a (delta, h_z) grid"),
    ):
        _add_run_flags(sub.add_parser(name, help=helptext))

    b = sub.add_parser("bounds", help="evaluate the energy-error and sample-count bounds")
    b.add_argument("--alpha-L", dest="alpha_L", type=float, required=True)
    b.add_argument("--h-norm", dest="h_norm", type=float, required=True)
    b.add_argument("--d", type=int)
    b.add_argument("--L", type=int)
    b.add_argument("--eta", type=float)
    b.add_argument("--gamma0-sq", dest="gamma0_sq", type=float)
    b.add_argument("--beta-L", dest="beta_L", type=float)
    b.add_argument("--eps-tilde", dest="eps_tilde", type=float, default=0.0)

    sub.add_parser("materials", help="list the material presets")
    return parser


def _set(d: dict, path, value) -> None:
    for key in path[:-1]:
        if d.get(key) is None:
            d[key] = {}
        d = d[key]
    d[path[-1]] = value


def resolve_config(args) -> RunConfig:
    """Config file (if any), then command-line overrides, then schema validation."""
    data = read_config_dict(args.config) if args.config else {}
    data.setdefault("model", {})
    for _, dest, _, path in _OVERRIDES:
        value = getattr(args, dest)
        if value is not _UNSET:
            _set(data, path, value)
    if args.preset is not None:
        data["preset"] = args.preset
    if args.seed is not None:
        data["seed"] = args.seed
    if args.output is not None:
        data["output_dir"] = str(args.output)
    if "n" not in data["model"]:
        raise ConfigError("model.n is required (config file or --n)")
    return validate(data)


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _emit(cfg: RunConfig, name: str, text: str, to_file: bool) -> None:
    sys.stdout.write(text)
    if to_file:
        out = Path(cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / name).write_text(text)


def _cmd_ed(cfg: RunConfig, args) -> None:
    h = build_terms(cfg.model)
    k = cfg.filter_k if cfg.filter_k is not None else cfg.init.k
    result = ed_ground(h) if k is None else ed_ground_sector(h, k)
    payload = result.to_json() | {"config_echo": cfg.to_json()}
    _emit(cfg, "ed.json", _dumps(payload), args.output is not None)


def _cmd_skqd(cfg: RunConfig, args) -> None:
    r = skqd_run(
        cfg.model, cfg.init, cfg.evolution, cfg.shots, cfg.noise,
        filter_k=cfg.filter_k, seed=cfg.seed,
    )
    _emit(cfg, "skqd.json", _dumps(r.to_json()), args.output is not None)


def _default_hz_grid(cfg: RunConfig) -> list[float]:
    # the polarized state wins once h_z exceeds 2|J|(1 + delta) on a chain
    m = cfg.model
    h_sat = 2.0 * abs(m.J) * (1.0 + max(m.delta, -1.0)) * (2 if m.geometry.shape == "rect" else 1)
    return [float(x) for x in np.linspace(0.0, 1.1 * max(h_sat, 1e-3), 21)]


def _cmd_field_sweep(cfg: RunConfig, args) -> None:
    grid = cfg.sweep.hz_grid or _default_hz_grid(cfg)
    skqd_cfg = SkqdConfig(cfg.evolution, cfg.shots, cfg.noise, filter=True, layout=cfg.init.layout)
    result = field_sweep(
        cfg.model, grid, skqd_cfg, seed=cfg.seed, sector_window=cfg.sweep.sector_window,
        sectors=cfg.sweep.sectors, threads=args.threads,
    )
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "field_sweep.csv").write_text(field_sweep_csv(result))
    (out / "sector_detail.csv").write_text(sector_detail_csv(result))
    (out / "run_config.json").write_text(_dumps(cfg.to_json()))


def _cmd_sparsity_map(cfg: RunConfig, args) -> None:
    m = cfg.model
    delta_grid = cfg.sweep.delta_grid or [float(x) for x in np.linspace(-2.0, 4.0, 20)]
    hz_grid = cfg.sweep.hz_grid or [float(x) for x in np.linspace(0.0, 10.0, 20)]
    rows = sparsity_map(m.n_sites, m.J, delta_grid, hz_grid, m.geometry.shape, threads=args.threads)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "sparsity_map.csv").write_text(sparsity_map_csv(rows))
    (out / "run_config.json").write_text(_dumps(cfg.to_json()))


def _cmd_bounds(args) -> None:
    payload = {"energy_error_bound": energy_error_bound(args.alpha_L, args.h_norm)}
    sample_args = (args.d, args.L, args.eta, args.gamma0_sq, args.beta_L)
    if all(a is not None for a in sample_args):
        b = BoundParams(args.d, args.L, args.eta, args.gamma0_sq, args.beta_L, args.eps_tilde,
                        args.alpha_L, args.h_norm)
        payload["sample_count_bound"] = sample_count_bound(b)
    elif any(a is not None for a in sample_args):
        raise ConfigError("the sample-count bound needs all of --d, --L, --eta, --gamma0-sq, --beta-L")
    sys.stdout.write(_dumps(payload))


def _cmd_materials() -> None:
    sys.stdout.write("name,J_meV,delta,citation_key\n")
    for m in MATERIALS:
        sys.stdout.write(f"{m.name},{m.J!r},{m.delta!r},{m.citation_key}\n")


_RUNNERS = {
    "ed": _cmd_ed,
    "skqd": _cmd_skqd,
    "field-sweep": _cmd_field_sweep,
    "sparsity-map": _cmd_sparsity_map,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    try:
        if args.command == "materials":
            _cmd_materials()
        elif args.command == "bounds":
            _cmd_bounds(args)
        else:
            if args.threads < 1:
                raise ConfigError("--threads must be at least 1")
            _RUNNERS[args.command](resolve_config(args), args)
    except ResourceError as exc:
        print(f"resource cap: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except ConvergenceError as exc:
        print(f"convergence failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (ConfigError, SkqdError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
