"""Command-line interface: experiment drivers, validation, refits, plots."""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .exact import entanglement_entropy, evolve, sre_from_statevector
from .experiments import (
    SAMPLER_STREAM_BASE,
    ExperimentConfig,
    FitResult,
    apply_desk_scale,
    compute_deviations,
    filter_noise_floor,
    fit_beta_vs_n,
    fit_log_linear,
    run_experiment1,
    run_experiment2,
    run_trajectory_state,
    saturation_time,
)
from .io import (
    AVERAGES_HEADER,
    DEVIATIONS_HEADER,
    FITS_HEADER,
    SATURATIONS_HEADER,
    TIMESERIES_HEADER,
    ConfigError,
    OutputBundle,
    averages_rows,
    config_to_mapping,
    deviations_rows,
    fit_rows,
    parse_config,
    read_csv,
    resolve_out_dir,
    run_id_for,
    timeseries_rows,
    write_csv,
    write_metadata,
)
from .mps import MpsState
from .random_circuits import GENERATOR_ID, SeedTree, brickwork, derive_stream, haar_unitary
from .sampling import draw_samples, estimate_sre

SAMPLES_HEADER = ["trajectory", "sample_index", "string", "c", "xi"]


# ---------------------------------------------------------------------- #
# shared plumbing


def _load_config(args) -> ExperimentConfig:
    config = parse_config(args.config)
    if args.seed is not None:
        config = replace(config, master_seed=args.seed)
    if args.desk_scale:
        config = apply_desk_scale(config)
    config.validate()
    return config


def _metadata_payload(kind, run_id, config, wall, redraws, warnings, outputs):
    return {
        "run_id": run_id,
        "kind": kind,
        "schema_version": 1,
        "package_version": __version__,
        "rng": GENERATOR_ID,
        "numpy_version": np.__version__,
        "config": config_to_mapping(config),
        "wall_seconds": wall,
        "sample_redraws": redraws,
        "warnings": warnings,
        "outputs": sorted(str(p.name) for p in outputs),
    }


def _emit_warnings(warnings: list[str]) -> None:
    for message in warnings:
        print(f"warning: {message}", file=sys.stderr)


def _finish_bundle(args, kind, run_id, config, out_dir, wall, redraws, warnings, files):
    if not args.no_plots:
        from .plots import render_bundle

        plot_paths, plot_warnings = render_bundle(out_dir)
        files.extend(plot_paths)
        warnings.extend(plot_warnings)
    meta_path = out_dir / "metadata.json"
    write_metadata(meta_path, _metadata_payload(kind, run_id, config, wall, redraws, warnings, files))
    files.append(meta_path)
    _emit_warnings(warnings)
    for path in files:
        print(f"wrote {path}")
    return OutputBundle(run_id=run_id, root=out_dir, files={p.name: p for p in files})


def _chi_decay_fits(deviations, model: str) -> tuple[list[tuple[FitResult, int, int]], list[str]]:
    fits, warnings = [], []
    sizes = sorted({d.n_sites for d in deviations})
    for n in sizes:
        group = [d for d in deviations if d.n_sites == n]
        for rank in (1, 2):
            pairs = filter_noise_floor(group, rank)
            try:
                fits.append((fit_log_linear(pairs, 0.0, model=model), rank, n))
            except ValueError as exc:
                warnings.append(f"N={n} rank={rank}: fit rejected: {exc}")
    return fits, warnings


def _beta_fits(chi_fits) -> tuple[list[tuple[FitResult, int, None]], list[str]]:
    fits, warnings = [], []
    for rank in (1, 2):
        points = [(float(n), float(np.exp(fit.intercept))) for fit, r, n in chi_fits if r == rank]
        try:
            fits.append((fit_beta_vs_n(points), rank, None))
        except ValueError as exc:
            warnings.append(f"rank={rank}: amplitude-vs-N fit rejected: {exc}")
    return fits, warnings


# ---------------------------------------------------------------------- #
# experiment commands


def _cmd_exp1(args) -> int:
    config = _load_config(args)
    if config.experiment != 1:
        raise ConfigError("exp1 requires an [experiment1] config")
    run_id = run_id_for(config, "exp1")
    out_dir = resolve_out_dir(args.out, config.out_dir, run_id)
    out_dir.mkdir(parents=True, exist_ok=True)

    start = time.perf_counter()
    result = run_experiment1(config, n_workers=args.threads)
    wall = time.perf_counter() - start

    deviations = compute_deviations(result.points, "vs-chi")
    chi_fits, warnings = _chi_decay_fits(deviations, "log-linear-chi")
    beta_fits, beta_warnings = _beta_fits(chi_fits)
    warnings = result.warnings + warnings + beta_warnings

    files = []
    seed = config.master_seed
    averages_path = out_dir / "averages.csv"
    write_csv(averages_path, "averages", AVERAGES_HEADER, averages_rows(result.points, seed))
    files.append(averages_path)
    dev_path = out_dir / "deviations.csv"
    write_csv(dev_path, "deviations", DEVIATIONS_HEADER, deviations_rows(deviations, "chi", seed))
    files.append(dev_path)
    fits_path = out_dir / "fits.csv"
    write_csv(fits_path, "fits", FITS_HEADER, fit_rows(chi_fits + beta_fits, seed))
    files.append(fits_path)

    _finish_bundle(args, "exp1", run_id, config, out_dir, wall, result.redraws, warnings, files)
    return 0


def _saturation_rows(points, seed):
    rows = []
    from .exact import haar_m2

    sizes = sorted({p.n_sites for p in points})
    for n in sizes:
        group = sorted((p for p in points if p.n_sites == n), key=lambda p: p.t)
        tail = group[-1]
        for quantity, target, values, eps in (
            ("m1", max(p.m1_bar for p in group), [(p.t, p.m1_bar) for p in group], max(3 * tail.sem1, 0.02 * max(p.m1_bar for p in group))),
            ("m2", haar_m2(n), [(p.t, p.m2_bar) for p in group], max(3 * tail.sem2, 0.02 * haar_m2(n))),
            ("entropy", tail.s_bar, [(p.t, p.s_bar) for p in group], 0.1 * tail.s_bar if tail.s_bar > 0 else 1e-9),
        ):
            t_sat = saturation_time(values, target, eps)
            rows.append([n, quantity, target, eps, t_sat, t_sat is not None, seed])
    return rows


def _cmd_exp2(args) -> int:
    config = _load_config(args)
    if config.experiment != 2:
        raise ConfigError("exp2 requires an [experiment2] config")
    run_id = run_id_for(config, "exp2")
    out_dir = resolve_out_dir(args.out, config.out_dir, run_id)
    out_dir.mkdir(parents=True, exist_ok=True)

    start = time.perf_counter()
    result = run_experiment2(config, n_workers=args.threads)
    wall = time.perf_counter() - start

    deviations = compute_deviations(result.points, "vs-t")
    t_fits, warnings = _chi_decay_fits(deviations, "log-linear-t")
    warnings = result.warnings + warnings

    files = []
    seed = config.master_seed
    ts_path = out_dir / "timeseries.csv"
    write_csv(ts_path, "timeseries", TIMESERIES_HEADER, timeseries_rows(result.points, seed))
    files.append(ts_path)
    dev_path = out_dir / "deviations.csv"
    write_csv(dev_path, "deviations", DEVIATIONS_HEADER, deviations_rows(deviations, "t", seed))
    files.append(dev_path)
    fits_path = out_dir / "fits.csv"
    write_csv(fits_path, "fits", FITS_HEADER, fit_rows(t_fits, seed))
    files.append(fits_path)
    sat_path = out_dir / "saturations.csv"
    write_csv(sat_path, "saturations", SATURATIONS_HEADER, _saturation_rows(result.points, seed))
    files.append(sat_path)

    _finish_bundle(args, "exp2", run_id, config, out_dir, wall, result.redraws, warnings, files)
    return 0


# ---------------------------------------------------------------------- #
# validation and utility commands


def _cmd_oracle_check(args) -> int:
    n, depth, seed = args.sites, args.depth, args.seed
    if not 2 <= n <= 8:
        raise ConfigError(f"oracle-check supports 2..8 sites, got {n}")
    if depth < 0:
        raise ConfigError(f"depth must be nonnegative, got {depth}")

    state = MpsState.all_zeros(n)
    if depth > 0:
        schedule = brickwork(n, depth)
        gates = [haar_unitary(4, derive_stream(SeedTree(seed, 0, g))) for g in range(schedule.gate_count)]
        for counter, _layer, site in schedule.slots():
            state.apply_two_qubit_gate(gates[counter], site)
        reference = evolve(n, schedule, gates)
    else:
        reference = np.zeros(2**n, dtype=np.complex128)
        reference[0] = 1.0

    fidelity = float(abs(np.vdot(reference, state.to_statevector())) ** 2)
    exact_m1 = sre_from_statevector(reference, 1)
    exact_m2 = sre_from_statevector(reference, 2)
    est = estimate_sre(state, args.samples, derive_stream(SeedTree(seed, 0, SAMPLER_STREAM_BASE + depth)))
    profile = state.entanglement_profile()
    entropy_gap = float(
        max(abs(entanglement_entropy(reference, cut + 1) - profile.per_cut[cut]) for cut in range(n - 1))
    )

    checks = [
        ("fidelity >= 1 - 1e-8", fidelity >= 1 - 1e-8, f"fidelity = {fidelity:.12f}"),
        ("M1 within 3 se", abs(exact_m1 - est.m1) <= max(3 * est.se1, 1e-12), f"exact {exact_m1:.6f} sampled {est.m1:.6f} +/- {est.se1:.6f}"),
        ("M2 within 3 se", abs(exact_m2 - est.m2) <= max(3 * est.se2, 1e-12), f"exact {exact_m2:.6f} sampled {est.m2:.6f} +/- {est.se2:.6f}"),
        ("entropies within 1e-8", entropy_gap <= 1e-8, f"max gap = {entropy_gap:.2e} bits"),
    ]
    all_pass = all(ok for _, ok, _ in checks)
    for name, ok, detail in checks:
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    print(f"overall: {'PASS' if all_pass else 'FAIL'}")

    if args.out:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        report = {
            "sites": n,
            "depth": depth,
            "seed": seed,
            "samples": args.samples,
            "fidelity": fidelity,
            "exact_m1": exact_m1,
            "exact_m2": exact_m2,
            "sampled_m1": est.m1,
            "sampled_m2": est.m2,
            "se1": est.se1,
            "se2": est.se2,
            "max_entropy_gap_bits": entropy_gap,
            "checks": {name: ok for name, ok, _ in checks},
            "overall": all_pass,
        }
        (out_dir / "oracle_check.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
        print(f"wrote {out_dir / 'oracle_check.json'}")
    return 0 if all_pass else 1


def _cmd_sample(args) -> int:
    if args.sites < 1:
        raise ConfigError(f"need at least one site, got {args.sites}")
    chi = None if args.chi == 0 else args.chi
    if args.depth > 0:
        state = run_trajectory_state(args.sites, args.depth, chi, args.seed, args.trajectory)
    else:
        state = MpsState.all_zeros(args.sites, chi_max=chi)
    rng = derive_stream(SeedTree(args.seed, args.trajectory, SAMPLER_STREAM_BASE + args.depth))
    records = draw_samples(state, args.samples, rng)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "samples.csv"
    rows = [[args.trajectory, i, rec.string, rec.c, rec.xi] for i, rec in enumerate(records)]
    write_csv(path, "samples", SAMPLES_HEADER, rows)
    print(f"wrote {path}")
    return 0


def _cmd_fit(args) -> int:
    bundle = Path(args.bundle)
    dev_path = bundle / "deviations.csv"
    if not dev_path.exists():
        raise ConfigError(f"no deviations.csv in {bundle}")
    _, rows = read_csv(dev_path)
    if not rows:
        raise ConfigError(f"{dev_path} has no data rows")

    from .experiments import DeviationPoint

    sweep = rows[0]["sweep"]
    seed = int(rows[0]["master_seed"])
    deviations = [
        DeviationPoint(
            n_sites=int(r["N"]),
            x=int(r["x"]),
            delta_m1=float(r["delta_m1"]),
            delta_m2=float(r["delta_m2"]),
            sat_m1=float(r["sat_m1"]),
            sat_m2=float(r["sat_m2"]),
            sem1=float(r["sem1"]),
            sem2=float(r["sem2"]),
        )
        for r in rows
    ]
    model = "log-linear-chi" if sweep == "chi" else "log-linear-t"
    fits, warnings = _chi_decay_fits(deviations, model)
    all_fits = list(fits)
    if sweep == "chi":
        beta_fits, beta_warnings = _beta_fits(fits)
        all_fits += beta_fits
        warnings += beta_warnings
    fits_path = bundle / "fits.csv"
    write_csv(fits_path, "fits", FITS_HEADER, fit_rows(all_fits, seed))
    _emit_warnings(warnings)
    print(f"wrote {fits_path}")
    return 0


def _cmd_plot(args) -> int:
    bundle = Path(args.bundle)
    if not bundle.is_dir():
        raise ConfigError(f"bundle directory not found: {bundle}")
    from .plots import render_bundle

    paths, warnings = render_bundle(bundle)
    _emit_warnings(warnings)
    for path in paths:
        print(f"wrote {path}")
    return 0


# ---------------------------------------------------------------------- #
# parser


def _add_common(parser, config_required=True):
    parser.add_argument("--config", required=config_required, help="experiment config file")
    parser.add_argument("--out", default=None, help="output directory (overrides config and MAGICMPS_OUT)")
    parser.add_argument("--seed", type=int, default=None, help="master seed override")
    parser.add_argument("--threads", type=int, default=1, help="trajectory worker processes")
    parser.add_argument("--desk-scale", action="store_true", help="apply desk-scale defaults (2000 samples, <=100 trajectories)")
    parser.add_argument("--no-plots", action="store_true", help="skip SVG rendering")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="magicmps",
        description="Haar-random brick-wall circuits on MPS with stabilizer Renyi entropy sampling.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("exp1", help="bond-dimension sweep of the final-state SRE")
    _add_common(p)
    p.set_defaults(func=_cmd_exp1)

    p = sub.add_parser("exp2", help="per-layer SRE/entanglement time series at fixed caps")
    _add_common(p)
    p.set_defaults(func=_cmd_exp2)

    p = sub.add_parser("oracle-check", help="validate MPS + sampler against the exact oracle")
    p.add_argument("--sites", type=int, required=True)
    p.add_argument("--depth", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=4000)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_oracle_check)

    p = sub.add_parser("sample", help="dump Pauli samples for one circuit state")
    p.add_argument("--sites", type=int, required=True)
    p.add_argument("--depth", type=int, required=True)
    p.add_argument("--chi", type=int, default=0, help="bond cap (0 = infinite)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--trajectory", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("fit", help="refit scaling laws from an existing bundle")
    p.add_argument("--bundle", required=True)
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("plot", help="render SVG figures from an existing bundle")
    p.add_argument("--bundle", required=True)
    p.set_defaults(func=_cmd_plot)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
