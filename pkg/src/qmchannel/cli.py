"""Command line interface.

Subcommands: solve, measure, sweep, sample, confront.  Options come from
defaults, then an optional flat ``key = value`` config file, then flags
(flags win).  Every run writes its outputs under ``--out`` atomically and
prints the main JSON document to stdout.  Exit codes: 0 success, 2 config
error, 3 numeric or domain error, 4 confrontation refuted.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .channel import (
    ChannelModel,
    apply_channel,
    oscillator_closed_forms,
    reconstruct_predicted_state,
)
from .eigensolver import (
    EigenSolution,
    PotentialSpec,
    residual_norm,
    solve_bound_states,
    write_eigensolution_csv,
)
from .errors import ConfigError, QmChannelError, SpectralCaptureError
from .grid import Grid, GridFunction
from .sampling import (
    DeviceNoise,
    PositionTarget,
    SamplingPlan,
    SpectralTarget,
    confront,
    ConfrontationTolerances,
    draw_samples,
    empirical_from_samples,
    exp_quantifiers,
    spectral_probabilities,
    write_empirical_csv,
    write_samples_csv,
)
from .state import (
    HBAR_SI,
    PhysicalUnits,
    WaveFunction,
    current,
    density,
    descriptor_set,
    oscillator_grid,
    position_observable,
)

_REL_ERR_FLOOR = 1e-12  # denominator floor for relative errors vs closed forms

_DEFAULTS: dict = {
    "units": "natural",
    "hbar": None,
    "mass": None,
    "omega": None,
    "grid_n": 2048,
    "domain": None,
    "potential": "harmonic",
    "gamma": 1.0,
    "current_gamma": None,
    "gammas": (0.1, 0.5, 1.0, 2.0),
    "n_samples": 100_000,
    "seed": 12345,
    "noise_width": 0.0,
    "target": "energy",
    "k": 5,
    "k_max": 64,
    "against": "pd",
    "tolerance_mean": 0.05,
    "tolerance_dev": 0.10,
    "tolerance_floor": 0.02,
    "out": "out",
}


@dataclass(frozen=True)
class RunConfig:
    units: str
    hbar: Optional[float]
    mass: Optional[float]
    omega: Optional[float]
    grid_n: int
    domain: Optional[float]
    potential: str
    gamma: float
    current_gamma: Optional[float]
    gammas: tuple
    n_samples: int
    seed: int
    noise_width: float
    target: str
    k: int
    k_max: int
    against: str
    tolerance_mean: float
    tolerance_dev: float
    tolerance_floor: float
    out: str


# ---------------------------------------------------------------- config --


def _bad(key: str, value, reason: str) -> ConfigError:
    return ConfigError(f"config key {key!r}: {reason} (got {value!r})")


def _to_float(key: str, s: str) -> float:
    try:
        return float(s)
    except ValueError:
        raise _bad(key, s, "expected a number") from None


def _to_int(key: str, s: str) -> int:
    try:
        return int(s)
    except ValueError:
        raise _bad(key, s, "expected an integer") from None


def _to_choice(key: str, s: str, allowed: tuple) -> str:
    if s not in allowed:
        raise _bad(key, s, f"expected one of {allowed}")
    return s


def _to_gamma_list(key: str, s) -> tuple:
    if isinstance(s, tuple):
        return s
    parts = [p.strip() for p in str(s).split(",") if p.strip()]
    if not parts:
        raise _bad(key, s, "expected a comma-separated list of widths")
    return tuple(_to_float(key, p) for p in parts)


_FILE_CONVERTERS = {
    "units": lambda k, s: _to_choice(k, s, ("natural", "si")),
    "hbar": _to_float,
    "mass": _to_float,
    "omega": _to_float,
    "grid_n": _to_int,
    "domain": _to_float,
    "potential": lambda k, s: s,
    "gamma": _to_float,
    "current_gamma": _to_float,
    "gammas": _to_gamma_list,
    "n_samples": _to_int,
    "seed": _to_int,
    "noise_width": _to_float,
    "target": lambda k, s: _to_choice(k, s, ("energy", "position")),
    "k": _to_int,
    "k_max": _to_int,
    "against": lambda k, s: _to_choice(k, s, ("in", "pd")),
    "tolerance_mean": _to_float,
    "tolerance_dev": _to_float,
    "tolerance_floor": _to_float,
    "out": lambda k, s: s,
}


def parse_config(path) -> dict:
    """Read a flat ``key = value`` config file ('#' starts a comment)."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key or not value:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        if key not in _DEFAULTS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = _FILE_CONVERTERS[key](key, value)
    return values


def _validate(cfg: RunConfig) -> None:
    if cfg.grid_n < 8:
        raise _bad("grid_n", cfg.grid_n, "need at least 8 points")
    if cfg.domain is not None and not cfg.domain > 0.0:
        raise _bad("domain", cfg.domain, "half-width must be positive")
    if cfg.gamma < 0.0:
        raise _bad("gamma", cfg.gamma, "device width must be nonnegative")
    if cfg.current_gamma is not None and cfg.current_gamma < 0.0:
        raise _bad("current_gamma", cfg.current_gamma, "device width must be nonnegative")
    if any(g < 0.0 for g in cfg.gammas):
        raise _bad("gammas", cfg.gammas, "device widths must be nonnegative")
    if cfg.n_samples < 1:
        raise _bad("n_samples", cfg.n_samples, "need at least one sample")
    if cfg.seed < 0:
        raise _bad("seed", cfg.seed, "seed must be nonnegative")
    if cfg.noise_width < 0.0:
        raise _bad("noise_width", cfg.noise_width, "noise width must be nonnegative")
    if cfg.k < 1:
        raise _bad("k", cfg.k, "need at least one state")
    if cfg.k_max < 1:
        raise _bad("k_max", cfg.k_max, "need at least one state")
    for name in ("tolerance_mean", "tolerance_dev", "tolerance_floor"):
        if not getattr(cfg, name) > 0.0:
            raise _bad(name, getattr(cfg, name), "tolerance must be positive")
    for name in ("hbar", "mass", "omega"):
        value = getattr(cfg, name)
        if value is not None and not value > 0.0:
            raise _bad(name, value, "must be positive")


def resolve_config(args: argparse.Namespace) -> RunConfig:
    merged = dict(_DEFAULTS)
    config_path = getattr(args, "config", None)
    if config_path:
        merged.update(parse_config(config_path))
    for key in _DEFAULTS:
        flag = getattr(args, key, None)
        if flag is not None:
            merged[key] = _FILE_CONVERTERS[key](key, flag) if isinstance(flag, str) else flag
    if isinstance(merged["gammas"], str):
        merged["gammas"] = _to_gamma_list("gammas", merged["gammas"])
    cfg = RunConfig(**merged)
    _validate(cfg)
    return cfg


def config_hash(cfg: RunConfig) -> str:
    """sha256 over the resolved config, excluding the output directory."""
    payload = asdict(cfg)
    payload.pop("out")
    canonical = "\n".join(f"{k}={payload[k]!r}" for k in sorted(payload))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


# ------------------------------------------------------------- problem set --


def _build_units(cfg: RunConfig) -> PhysicalUnits:
    base = {"hbar": 1.0, "mass": 1.0, "omega": 1.0}
    if cfg.units == "si":
        base["hbar"] = HBAR_SI
    for name in ("hbar", "mass", "omega"):
        value = getattr(cfg, name)
        if value is not None:
            base[name] = value
    try:
        return PhysicalUnits(**base)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _load_potential_table(path: str):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read potential table {path}: {exc}") from None
    xs, vs = [], []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = [p for p in line.replace(",", " ").split() if p]
        try:
            x, v = (float(parts[0]), float(parts[1])) if len(parts) == 2 else (None, None)
        except ValueError:
            x = v = None
        if x is None:
            if not xs:
                continue  # header line
            raise ConfigError(f"{path}:{lineno}: expected 'x,V' pair, got {raw!r}")
        xs.append(x)
        vs.append(v)
    if len(xs) < 8:
        raise ConfigError(f"potential table {path} needs at least 8 rows, got {len(xs)}")
    return np.asarray(xs), np.asarray(vs)


def _grid_from_points(x: np.ndarray, origin: str) -> Grid:
    h = (x[-1] - x[0]) / (x.size - 1)
    if not h > 0.0 or np.max(np.abs(np.diff(x) - h)) > 1e-9 * abs(h):
        raise ConfigError(f"{origin}: x column must be uniformly ascending")
    return Grid(float(x[0]), float(x[-1]), int(x.size))


def _load_problem(cfg: RunConfig, units: PhysicalUnits, gamma: float):
    """Potential and grid for a run; the grid adapts to the device width."""
    if cfg.potential == "harmonic":
        if cfg.domain is not None:
            grid = Grid(-cfg.domain, cfg.domain, cfg.grid_n)
        else:
            grid = oscillator_grid(units, n=cfg.grid_n, gamma=gamma)
        return PotentialSpec.harmonic(units), grid
    x, v = _load_potential_table(cfg.potential)
    grid = _grid_from_points(x, cfg.potential)
    return PotentialSpec.from_table(GridFunction(grid, v), units), grid


# ---------------------------------------------------------------- output --


def _atomic_write_text(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def _atomic_write_via(writer, obj, path: Path) -> None:
    tmp = path.with_name(path.name + ".tmp")
    writer(obj, tmp)
    os.replace(tmp, path)


def _write_json(path: Path, payload: dict) -> None:
    _atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _desc_dict(desc) -> dict:
    return {"mean": float(desc.mean), "dev": float(desc.deviation)}


def _grid_dict(grid: Grid) -> dict:
    return {"x_min": float(grid.x_min), "x_max": float(grid.x_max), "n": int(grid.n)}


def _units_dict(units: PhysicalUnits) -> dict:
    return {"hbar": float(units.hbar), "mass": float(units.mass), "omega": float(units.omega)}


# --------------------------------------------------------------- commands --


def _rel_err(value: float, reference: float) -> float:
    return abs(value - reference) / max(abs(reference), _REL_ERR_FLOOR)


def _measure_at(cfg: RunConfig, units: PhysicalUnits, gamma: float):
    """Shared pipeline: solve, blur, reconstruct, re-evaluate descriptors."""
    potential, grid = _load_problem(cfg, units, gamma)
    solution = solve_bound_states(potential, grid, 1)
    state_in = solution.states[0]
    h_obs = potential.hamiltonian(grid)
    in_desc = descriptor_set(state_in, h_obs)
    channel = ChannelModel.gaussian(grid, gamma, cfg.current_gamma)
    rho_pd, j_pd = apply_channel(channel, density(state_in), current(state_in))
    state_pd = reconstruct_predicted_state(rho_pd, j_pd, units)
    pd_desc = descriptor_set(state_pd, h_obs)
    return potential, grid, solution, state_in, state_pd, rho_pd, in_desc, pd_desc


def run_solve(cfg: RunConfig, out_dir: Path):
    units = _build_units(cfg)
    potential, grid = _load_problem(cfg, units, 0.0)
    solution = solve_bound_states(potential, grid, cfg.k)
    residuals = [float(residual_norm(solution, s)) for s in range(solution.k)]
    _atomic_write_via(write_eigensolution_csv, solution, out_dir / "eigenstates.csv")
    payload = {
        "schema_version": 1,
        "command": "solve",
        "potential": cfg.potential,
        "units": _units_dict(units),
        "grid": _grid_dict(grid),
        "energies": [float(e) for e in solution.energies],
        "residual_norms": residuals,
        "config_hash": config_hash(cfg),
    }
    _write_json(out_dir / "solve.json", payload)
    return payload, 0


def run_measure(cfg: RunConfig, out_dir: Path):
    units = _build_units(cfg)
    _, grid, _, _, _, _, in_desc, pd_desc = _measure_at(cfg, units, cfg.gamma)
    closed = rel_mean = rel_dev = None
    if cfg.potential == "harmonic":
        mean_pd, dev_pd, mean_in, dev_in = oscillator_closed_forms(units, cfg.gamma)
        closed = {
            "mean_pd": mean_pd,
            "dev_pd": dev_pd,
            "mean_in": mean_in,
            "dev_in": dev_in,
        }
        rel_mean = _rel_err(pd_desc.mean, mean_pd)
        rel_dev = _rel_err(pd_desc.deviation, dev_pd)
    payload = {
        "schema_version": 1,
        "command": "measure",
        "gamma": float(cfg.gamma),
        "units": _units_dict(units),
        "grid": _grid_dict(grid),
        "in": _desc_dict(in_desc),
        "pd": _desc_dict(pd_desc),
        "closed_form": closed,
        "rel_err_mean": rel_mean,
        "rel_err_dev": rel_dev,
        "config_hash": config_hash(cfg),
    }
    _write_json(out_dir / "measure.json", payload)
    return payload, 0


def run_sweep(cfg: RunConfig, out_dir: Path):
    if cfg.potential != "harmonic":
        raise ConfigError("sweep compares against closed forms; it requires the harmonic potential")
    units = _build_units(cfg)
    rows = []
    for gamma in cfg.gammas:
        *_, in_desc, pd_desc = _measure_at(cfg, units, gamma)
        mean_closed, dev_closed, _, _ = oscillator_closed_forms(units, gamma)
        rows.append(
            {
                "gamma": float(gamma),
                "mean_pd_numeric": pd_desc.mean,
                "dev_pd_numeric": pd_desc.deviation,
                "mean_pd_closed": mean_closed,
                "dev_pd_closed": dev_closed,
                "rel_err_mean": _rel_err(pd_desc.mean, mean_closed),
                "rel_err_dev": _rel_err(pd_desc.deviation, dev_closed),
            }
        )
    columns = (
        "gamma",
        "mean_pd_numeric",
        "dev_pd_numeric",
        "mean_pd_closed",
        "dev_pd_closed",
        "rel_err_mean",
        "rel_err_dev",
    )
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(repr(float(row[c])) for c in columns))
    _atomic_write_text(out_dir / "sweep.csv", "\n".join(lines) + "\n")
    payload = {
        "schema_version": 1,
        "command": "sweep",
        "units": _units_dict(units),
        "rows": rows,
        "config_hash": config_hash(cfg),
    }
    return payload, 0


def _solve_for_capture(potential, grid, state: WaveFunction, k_max: int):
    """Escalate k until the eigenbasis captures enough of ``state``."""
    k = min(8, k_max)
    while True:
        solution = solve_bound_states(potential, grid, k)
        try:
            return solution, spectral_probabilities(state, solution)
        except SpectralCaptureError:
            if k >= k_max:
                raise
            k = min(2 * k, k_max)


def _noise_from(cfg: RunConfig) -> DeviceNoise:
    if cfg.noise_width > 0.0:
        return DeviceNoise.additive_gaussian(cfg.noise_width)
    return DeviceNoise.none()


def _simulate(cfg: RunConfig, units: PhysicalUnits):
    """Simulated experiment: the realized run always goes through the device."""
    (potential, grid, _, state_in, state_pd, rho_pd, in_desc_h, pd_desc_h) = (
        _measure_at(cfg, units, cfg.gamma)
    )
    if cfg.target == "energy":
        _, pairs = _solve_for_capture(potential, grid, state_pd, cfg.k_max)
        plan = SamplingPlan(
            cfg.n_samples, cfg.seed, _noise_from(cfg), SpectralTarget(cfg.k_max)
        )
        samples = draw_samples(plan, pairs)
    else:
        plan = SamplingPlan(cfg.n_samples, cfg.seed, _noise_from(cfg), PositionTarget())
        samples = draw_samples(plan, rho_pd)
    dist = empirical_from_samples(samples)
    return potential, grid, state_in, state_pd, samples, dist


def run_sample(cfg: RunConfig, out_dir: Path):
    units = _build_units(cfg)
    potential, grid, _, _, samples, dist = _simulate(cfg, units)
    exp_desc = exp_quantifiers(dist)
    _atomic_write_via(write_samples_csv, samples, out_dir / "samples.csv")
    _atomic_write_via(write_empirical_csv, dist, out_dir / "empirical.csv")
    payload = {
        "schema_version": 1,
        "command": "sample",
        "target": cfg.target,
        "gamma": float(cfg.gamma),
        "n_samples": int(cfg.n_samples),
        "seed": int(cfg.seed),
        "noise_width": float(cfg.noise_width),
        "units": _units_dict(units),
        "grid": _grid_dict(grid),
        "exp": _desc_dict(exp_desc),
        "config_hash": config_hash(cfg),
    }
    _write_json(out_dir / "sample.json", payload)
    return payload, 0


def run_confront(cfg: RunConfig, out_dir: Path):
    units = _build_units(cfg)
    potential, grid, state_in, state_pd, samples, dist = _simulate(cfg, units)
    if cfg.target == "energy":
        obs = potential.hamiltonian(grid)
    else:
        obs = position_observable(units)
    in_desc = descriptor_set(state_in, obs)
    pd_desc = descriptor_set(state_pd, obs)
    exp_desc = exp_quantifiers(dist)
    tolerances = ConfrontationTolerances(
        mean_rel=cfg.tolerance_mean,
        dev_rel=cfg.tolerance_dev,
        floor=cfg.tolerance_floor,
    )
    report = confront(
        in_desc,
        exp_desc,
        pd_descriptors=pd_desc if cfg.against == "pd" else None,
        tolerances=tolerances,
    )
    closed = None
    if cfg.potential == "harmonic" and cfg.target == "energy" and cfg.against == "pd":
        mean_pd, dev_pd, mean_in, dev_in = oscillator_closed_forms(units, cfg.gamma)
        closed = {
            "mean_pd": mean_pd,
            "dev_pd": dev_pd,
            "mean_in": mean_in,
            "dev_in": dev_in,
        }
    _atomic_write_via(write_empirical_csv, dist, out_dir / "empirical.csv")
    payload = {
        "schema_version": 1,
        "command": "confront",
        "target": cfg.target,
        "against": cfg.against,
        "gamma": float(cfg.gamma),
        "in": _desc_dict(in_desc),
        "pd": _desc_dict(pd_desc) if cfg.against == "pd" else None,
        "exp": _desc_dict(exp_desc),
        "closed_form": closed,
        "verdict": report.verdict,
        "suggested_upgradings": list(report.suggested_upgradings),
        "comparisons": [
            {
                "name": c.name,
                "reference": float(c.reference),
                "observed": float(c.observed),
                "limit": float(c.limit),
                "within": bool(c.within),
            }
            for c in report.comparisons
        ],
        "tolerances": {
            "mean_rel": tolerances.mean_rel,
            "dev_rel": tolerances.dev_rel,
            "floor": tolerances.floor,
        },
        "seed": int(cfg.seed),
        "config_hash": config_hash(cfg),
    }
    _write_json(out_dir / "report.json", payload)
    return payload, 0 if report.verdict == "confirmed" else 4


_COMMANDS = {
    "solve": run_solve,
    "measure": run_measure,
    "sweep": run_sweep,
    "sample": run_sample,
    "confront": run_confront,
}


# ------------------------------------------------------------------ main --


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="flat key = value config file")
    common.add_argument("--gamma", type=float, help="device blur width")
    common.add_argument("--current-gamma", dest="current_gamma", type=float,
                        help="separate width for the current kernel")
    common.add_argument("--n-samples", dest="n_samples", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--grid-n", dest="grid_n", type=int)
    common.add_argument("--domain", type=float, help="grid half-width; grid is [-domain, domain]")
    common.add_argument("--units", choices=("natural", "si"))
    common.add_argument("--potential", help="'harmonic' or path to an x,V table")
    common.add_argument("--out", help="output directory")
    common.add_argument("--tolerance-mean", dest="tolerance_mean", type=float)
    common.add_argument("--tolerance-dev", dest="tolerance_dev", type=float)
    common.add_argument("--tolerance-floor", dest="tolerance_floor", type=float)

    parser = argparse.ArgumentParser(
        prog="qmchannel",
        description="1D quantum states through measurement channels: "
        "solve, blur, sample, confront.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", parents=[common], help="lowest-k bound states")
    p.add_argument("--k", type=int, help="number of states")

    sub.add_parser("measure", parents=[common],
                   help="intrinsic and predicted energy descriptors at one width")

    p = sub.add_parser("sweep", parents=[common],
                       help="pipeline vs closed forms over several widths")
    p.add_argument("--gammas", help="comma-separated widths")

    for name, doc in (
        ("sample", "simulate a measurement run"),
        ("confront", "simulate a run and compare against theory descriptors"),
    ):
        p = sub.add_parser(name, parents=[common], help=doc)
        p.add_argument("--target", choices=("energy", "position"))
        p.add_argument("--k-max", dest="k_max", type=int,
                       help="eigenstates available for spectral sampling")
        p.add_argument("--noise-width", dest="noise_width", type=float)
        if name == "confront":
            p.add_argument("--against", choices=("in", "pd"),
                           help="theory side: intrinsic or predicted descriptors")
    return parser


def _print_error(exc: Exception) -> None:
    code = getattr(exc, "code", "invalid-value")
    print(json.dumps({"error": code, "message": str(exc)}, sort_keys=True))


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        out_dir = Path(cfg.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        payload, code = _COMMANDS[args.command](cfg, out_dir)
    except ConfigError as exc:
        _print_error(exc)
        return 2
    except (QmChannelError, ValueError) as exc:
        _print_error(exc)
        return 3
    print(json.dumps(payload, indent=2, sort_keys=True))
    return code


if __name__ == "__main__":
    sys.exit(main())
