"""Config files, CSV/JSON emission and output-bundle layout.

Configs are flat key/value text with one section per experiment; lists are
comma-separated.  CSV bodies are fully deterministic: fixed column order,
9 significant digits, a schema tag comment on the first line.
"""

from __future__ import annotations

import configparser
import hashlib
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

from .experiments import AveragedPoint, DeviationPoint, ExperimentConfig, FitResult

__all__ = [
    "ConfigError",
    "OutputBundle",
    "parse_config",
    "config_to_mapping",
    "config_from_mapping",
    "write_config",
    "run_id_for",
    "resolve_out_dir",
    "write_csv",
    "read_csv",
    "write_metadata",
    "averages_rows",
    "timeseries_rows",
    "deviations_rows",
    "fit_rows",
    "AVERAGES_HEADER",
    "TIMESERIES_HEADER",
    "DEVIATIONS_HEADER",
    "FITS_HEADER",
    "SATURATIONS_HEADER",
]

SCHEMA_VERSION = 1
OUT_DIR_ENV = "MAGICMPS_OUT"

AVERAGES_HEADER = ["N", "chi", "m1_bar", "sem1", "m2_bar", "sem2", "s_bar", "sem_s", "max_bond_mean", "n_traj", "master_seed"]
TIMESERIES_HEADER = ["N", "t", "m1_bar", "sem1", "m2_bar", "sem2", "s_bar", "sem_s", "max_bond_mean", "chi", "n_traj", "master_seed"]
DEVIATIONS_HEADER = ["N", "sweep", "x", "delta_m1", "delta_m2", "sat_m1", "sat_m2", "sem1", "sem2", "master_seed"]
FITS_HEADER = ["model", "rank", "N", "slope", "intercept", "r_squared", "points_used", "decay_rate", "amplitude", "master_seed"]
SATURATIONS_HEADER = ["N", "quantity", "target", "epsilon", "t_sat", "saturated", "master_seed"]


class ConfigError(ValueError):
    """Malformed or inconsistent configuration."""


@dataclass
class OutputBundle:
    """One run's artifacts: CSV tables, metadata, optional SVG plots."""

    run_id: str
    root: Path
    files: dict[str, Path] = field(default_factory=dict)


# ---------------------------------------------------------------------- #
# config files


def _parse_int_list(text: str, what: str) -> tuple[int, ...]:
    try:
        values = tuple(int(part.strip()) for part in text.split(",") if part.strip())
    except ValueError as exc:
        raise ConfigError(f"{what}: expected comma-separated integers, got {text!r}") from exc
    if not values:
        raise ConfigError(f"{what}: empty list")
    return values


def _parse_chi_map(text: str) -> dict[int, int]:
    out: dict[int, int] = {}
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            key, value = part.split(":")
            out[int(key.strip())] = int(value.strip())
        except ValueError as exc:
            raise ConfigError(f"chi_map: expected N:chi pairs, got {part!r}") from exc
    if not out:
        raise ConfigError("chi_map: empty map")
    return out


def parse_config(path) -> ExperimentConfig:
    """Read an experiment config; the section name selects the experiment."""
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        read = parser.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    if not read:
        raise ConfigError(f"config file not found: {path}")
    if parser.has_section("experiment1") == parser.has_section("experiment2"):
        raise ConfigError("config must contain exactly one of [experiment1] or [experiment2]")
    experiment = 1 if parser.has_section("experiment1") else 2
    section = parser[f"experiment{experiment}"]

    known = {"sites", "chi", "chi_map", "depth", "trajectories", "samples", "seed", "out"}
    unknown = set(section) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if "sites" not in section:
        raise ConfigError("config key 'sites' is required")

    try:
        config = ExperimentConfig(
            experiment=experiment,
            n_list=_parse_int_list(section["sites"], "sites"),
            chi_list=_parse_int_list(section["chi"], "chi") if "chi" in section else None,
            chi_map=_parse_chi_map(section["chi_map"]) if "chi_map" in section else None,
            depth=section.getint("depth") if "depth" in section else None,
            n_trajectories=section.getint("trajectories", fallback=500),
            n_samples=section.getint("samples") if "samples" in section else None,
            master_seed=section.getint("seed", fallback=0),
            out_dir=section.get("out", fallback=None),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    try:
        config.validate()
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return config


def config_to_mapping(config: ExperimentConfig) -> dict:
    """JSON-friendly echo of a config; round-trips through config_from_mapping."""
    return {
        "experiment": config.experiment,
        "sites": list(config.n_list),
        "chi": list(config.chi_list) if config.chi_list is not None else None,
        "chi_map": {str(k): v for k, v in config.chi_map.items()} if config.chi_map is not None else None,
        "depth": config.depth,
        "depth_effective": config.resolved_depth(),
        "trajectories": config.n_trajectories,
        "samples": config.n_samples,
        "seed": config.master_seed,
        "out": config.out_dir,
    }


def config_from_mapping(mapping: dict) -> ExperimentConfig:
    return ExperimentConfig(
        experiment=int(mapping["experiment"]),
        n_list=tuple(mapping["sites"]),
        chi_list=tuple(mapping["chi"]) if mapping.get("chi") is not None else None,
        chi_map={int(k): int(v) for k, v in mapping["chi_map"].items()} if mapping.get("chi_map") else None,
        depth=mapping.get("depth"),
        n_trajectories=int(mapping["trajectories"]),
        n_samples=mapping.get("samples"),
        master_seed=int(mapping["seed"]),
        out_dir=mapping.get("out"),
    )


def write_config(config: ExperimentConfig, path) -> None:
    """Write a config back to the flat key/value format."""
    lines = [f"[experiment{config.experiment}]"]
    lines.append("sites = " + ", ".join(str(n) for n in config.n_list))
    if config.chi_list is not None:
        lines.append("chi = " + ", ".join(str(c) for c in config.chi_list))
    if config.chi_map is not None:
        lines.append("chi_map = " + ", ".join(f"{k}:{v}" for k, v in sorted(config.chi_map.items())))
    if config.depth is not None:
        lines.append(f"depth = {config.depth}")
    lines.append(f"trajectories = {config.n_trajectories}")
    if config.n_samples is not None:
        lines.append(f"samples = {config.n_samples}")
    lines.append(f"seed = {config.master_seed}")
    if config.out_dir is not None:
        lines.append(f"out = {config.out_dir}")
    Path(path).write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------- #
# bundle layout


def run_id_for(config: ExperimentConfig, kind: str) -> str:
    digest = hashlib.sha256(json.dumps(config_to_mapping(config), sort_keys=True).encode()).hexdigest()[:8]
    return f"{kind}-seed{config.master_seed}-{digest}"


def resolve_out_dir(cli_out: str | None, config_out: str | None, run_id: str) -> Path:
    """Precedence: --out flag, then MAGICMPS_OUT, then the config, then ./runs."""
    if cli_out:
        return Path(cli_out)
    env = os.environ.get(OUT_DIR_ENV)
    if env:
        return Path(env) / run_id
    if config_out:
        return Path(config_out)
    return Path("runs") / run_id


# ---------------------------------------------------------------------- #
# CSV / JSON


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int,)):
        return str(value)
    if isinstance(value, float):
        return f"{value:.9g}"
    return str(value)


def write_csv(path, name: str, header: list[str], rows: list[list]) -> None:
    lines = [f"# magicmps {name} schema v{SCHEMA_VERSION}", ",".join(header)]
    for row in rows:
        if len(row) != len(header):
            raise ValueError(f"{name}: row width {len(row)} != header width {len(header)}")
        lines.append(",".join(_format_cell(cell) for cell in row))
    Path(path).write_text("\n".join(lines) + "\n")


def read_csv(path) -> tuple[list[str], list[dict[str, str]]]:
    """Read one of our CSVs back into header + per-row dicts (string cells)."""
    lines = Path(path).read_text().splitlines()
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise ValueError(f"{path}: empty CSV")
    header = lines[0].split(",")
    rows = [dict(zip(header, ln.split(","))) for ln in lines[1:]]
    return header, rows


def write_metadata(path, payload: dict) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------- #
# row builders


def averages_rows(points: list[AveragedPoint], master_seed: int) -> list[list]:
    return [
        [p.n_sites, p.chi, p.m1_bar, p.sem1, p.m2_bar, p.sem2, p.s_bar, p.sem_s, p.max_bond_mean, p.n_traj, master_seed]
        for p in points
    ]


def timeseries_rows(points: list[AveragedPoint], master_seed: int) -> list[list]:
    return [
        [p.n_sites, p.t, p.m1_bar, p.sem1, p.m2_bar, p.sem2, p.s_bar, p.sem_s, p.max_bond_mean, p.chi, p.n_traj, master_seed]
        for p in points
    ]


def deviations_rows(deviations: list[DeviationPoint], sweep: str, master_seed: int) -> list[list]:
    return [
        [d.n_sites, sweep, d.x, d.delta_m1, d.delta_m2, d.sat_m1, d.sat_m2, d.sem1, d.sem2, master_seed]
        for d in deviations
    ]


def fit_rows(fits: list[tuple[FitResult, int, int | None]], master_seed: int) -> list[list]:
    """Rows from (fit, rank, N) triples; N is None for across-size fits."""
    rows = []
    for fit, rank, n_sites in fits:
        if fit.model.startswith("log-linear"):
            decay_rate, amplitude = -fit.slope, math.exp(fit.intercept)
        else:
            decay_rate, amplitude = None, None
        rows.append(
            [fit.model, rank, n_sites, fit.slope, fit.intercept, fit.r_squared, fit.points_used, decay_rate, amplitude, master_seed]
        )
    return rows
