"""SVG figures rendered from a run bundle's CSV tables.

Output is byte-deterministic: fixed svg.hashsalt, no embedded date, fixed
figure geometry.  Rerunning `plot` on the same bundle reproduces identical
files.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .exact import haar_m2  # noqa: E402
from .io import read_csv  # noqa: E402

__all__ = ["render_bundle"]

_HASHSALT = "magicmps-fixed-salt"
_FIGSIZE = (5.2, 3.6)


def _save(fig, path: Path) -> Path:
    fig.savefig(path, metadata={"Date": None})
    plt.close(fig)
    return path


def _new_axes(xlabel: str, ylabel: str):
    plt.rcParams["svg.hashsalt"] = _HASHSALT
    fig, ax = plt.subplots(figsize=_FIGSIZE, constrained_layout=True)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    return fig, ax


def _by_n(rows, x_key):
    series: dict[int, list[dict]] = {}
    for row in rows:
        series.setdefault(int(row["N"]), []).append(row)
    for n in series:
        series[n].sort(key=lambda r: float(r[x_key]))
    return dict(sorted(series.items()))


def _plot_mean_vs_chi(rows, rank: int, out_dir: Path) -> Path:
    key = f"m{rank}_bar"
    fig, ax = _new_axes("bond cap", f"mean M{rank} (nats)")
    for n, group in _by_n(rows, "chi").items():
        chi = [float(r["chi"]) for r in group]
        val = [float(r[key]) for r in group]
        line = ax.plot(chi, val, "o-", markersize=3, label=f"N={n}")[0]
        if rank == 2:
            ax.axhline(haar_m2(n), color=line.get_color(), linestyle="--", linewidth=0.8)
    if ax.get_legend_handles_labels()[0]:
        ax.legend(fontsize=8)
    return _save(fig, out_dir / f"m{rank}_vs_chi.svg")


def _plot_entropy_vs_chi(rows, out_dir: Path) -> Path:
    fig, ax = _new_axes("bond cap", "mean entanglement (bits)")
    for n, group in _by_n(rows, "chi").items():
        chi = [float(r["chi"]) for r in group]
        val = [float(r["s_bar"]) for r in group]
        ax.plot(chi, val, "s-", markersize=3, label=f"N={n}")
    if ax.get_legend_handles_labels()[0]:
        ax.legend(fontsize=8)
    return _save(fig, out_dir / "entropy_vs_chi.svg")


def _fit_lines_for(fit_rows, model: str):
    lines: dict[tuple[int, int], tuple[float, float]] = {}
    for row in fit_rows:
        if row["model"] != model or not row["N"]:
            continue
        lines[(int(row["N"]), int(row["rank"]))] = (float(row["slope"]), float(row["intercept"]))
    return lines


def _plot_deviations(rows, fit_lines, rank: int, sweep: str, out_dir: Path) -> Path | None:
    rows = [r for r in rows if r["sweep"] == sweep]
    if not rows:
        return None
    model = "log-linear-chi" if sweep == "chi" else "log-linear-t"
    xlabel = "bond cap" if sweep == "chi" else "layer"
    key = f"delta_m{rank}"
    fig, ax = _new_axes(xlabel, f"deviation of M{rank} (nats)")
    ax.set_yscale("log")
    for n, group in _by_n(rows, "x").items():
        xs = [float(r["x"]) for r in group]
        ys = [float(r[key]) for r in group]
        keep = [(x, y) for x, y in zip(xs, ys) if y > 0]
        if not keep:
            continue
        line = ax.plot([p[0] for p in keep], [p[1] for p in keep], "o", markersize=3, label=f"N={n}")[0]
        params = fit_lines.get((n, rank))
        if params is not None:
            slope, intercept = params
            fit_y = [math.exp(intercept + slope * x) for x, _ in keep]
            ax.plot([p[0] for p in keep], fit_y, "--", color=line.get_color(), linewidth=0.8)
    if ax.get_legend_handles_labels()[0]:
        ax.legend(fontsize=8)
    return _save(fig, out_dir / f"delta_m{rank}_vs_{sweep}.svg")


def _plot_beta_vs_n(fit_rows_data, out_dir: Path) -> Path | None:
    points: dict[int, list[tuple[int, float]]] = {1: [], 2: []}
    lines: dict[int, tuple[float, float]] = {}
    for row in fit_rows_data:
        if row["model"] == "log-linear-chi" and row["N"] and row["amplitude"]:
            points[int(row["rank"])].append((int(row["N"]), float(row["amplitude"])))
        if row["model"] == "linear-N":
            lines[int(row["rank"])] = (float(row["slope"]), float(row["intercept"]))
    if not points[1] and not points[2]:
        return None
    fig, ax = _new_axes("system size", "decay amplitude")
    for rank in (1, 2):
        if not points[rank]:
            continue
        pts = sorted(points[rank])
        line = ax.plot([p[0] for p in pts], [p[1] for p in pts], "o", markersize=4, label=f"rank {rank}")[0]
        if rank in lines:
            slope, intercept = lines[rank]
            ax.plot([p[0] for p in pts], [slope * p[0] + intercept for p in pts], "--", color=line.get_color(), linewidth=0.8)
    if ax.get_legend_handles_labels()[0]:
        ax.legend(fontsize=8)
    return _save(fig, out_dir / "beta_vs_N.svg")


def _plot_timeseries(rows, out_dir: Path) -> Path:
    fig, axes = plt.subplots(2, 2, figsize=(8.0, 5.6), constrained_layout=True)
    plt.rcParams["svg.hashsalt"] = _HASHSALT
    panels = [
        ("m1_bar", "mean M1 (nats)", axes[0][0]),
        ("m2_bar", "mean M2 (nats)", axes[0][1]),
        ("s_bar", "mean entanglement (bits)", axes[1][0]),
        ("max_bond_mean", "mean required bond", axes[1][1]),
    ]
    for key, label, ax in panels:
        for n, group in _by_n(rows, "t").items():
            ts = [float(r["t"]) for r in group]
            ax.plot(ts, [float(r[key]) for r in group], "o-", markersize=2.5, label=f"N={n}")
        if key == "m2_bar":
            for n in _by_n(rows, "t"):
                ax.axhline(haar_m2(n), linestyle="--", linewidth=0.8, color="gray")
        ax.set_xlabel("layer")
        ax.set_ylabel(label)
    if axes[0][0].get_legend_handles_labels()[0]:
        axes[0][0].legend(fontsize=8)
    return _save(fig, out_dir / "timeseries.svg")


def render_bundle(bundle_dir) -> tuple[list[Path], list[str]]:
    """Render every figure the bundle's CSVs support; returns (paths, warnings)."""
    out_dir = Path(bundle_dir)
    produced: list[Path] = []
    warnings: list[str] = []

    def load(name: str):
        path = out_dir / name
        if not path.exists():
            return None
        _, rows = read_csv(path)
        if not rows:
            warnings.append(f"{name} has no data rows; skipped its plots")
            return None
        return rows

    fits = load("fits.csv") or []

    averages = load("averages.csv")
    if averages:
        produced.append(_plot_mean_vs_chi(averages, 1, out_dir))
        produced.append(_plot_mean_vs_chi(averages, 2, out_dir))
        produced.append(_plot_entropy_vs_chi(averages, out_dir))

    deviations = load("deviations.csv")
    if deviations:
        for sweep in ("chi", "t"):
            lines = _fit_lines_for(fits, "log-linear-chi" if sweep == "chi" else "log-linear-t")
            for rank in (1, 2):
                path = _plot_deviations(deviations, lines, rank, sweep, out_dir)
                if path:
                    produced.append(path)

    if fits:
        path = _plot_beta_vs_n(fits, out_dir)
        if path:
            produced.append(path)

    timeseries = load("timeseries.csv")
    if timeseries:
        produced.append(_plot_timeseries(timeseries, out_dir))

    if not produced and not warnings:
        warnings.append("bundle contains no plottable CSV data")
    return produced, warnings
