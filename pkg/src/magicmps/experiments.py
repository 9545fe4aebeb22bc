"""Experiment harness: quenched trajectory sweeps, deviations, scaling fits.

Experiment 1 sweeps (N, chi) pairs in finite mode and measures the final-state
SRE and entanglement.  Experiment 2 tracks the same observables after every
layer at a fixed per-N bond cap.  Trajectories are independent work units;
aggregation is an ordered reduction over trajectory indices, so results are
bitwise independent of the worker count.
"""

from __future__ import annotations

import multiprocessing
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from threadpoolctl import threadpool_limits

from .exact import haar_m2
from .mps import MpsState
from .random_circuits import SeedTree, brickwork, derive_stream, haar_unitary
from .sampling import estimate_sre

__all__ = [
    "ExperimentConfig",
    "AveragedPoint",
    "DeviationPoint",
    "FitResult",
    "ExperimentResult",
    "default_samples",
    "apply_desk_scale",
    "run_trajectory_state",
    "run_experiment1",
    "run_experiment2",
    "compute_deviations",
    "filter_noise_floor",
    "fit_log_linear",
    "fit_beta_vs_n",
    "saturation_time",
]

EXP1_DEPTH_DEFAULT = 40
EXP2_DEPTH_DEFAULT = 20
DESK_SAMPLES = 2000
DESK_MAX_TRAJECTORIES = 100
CHI_HARD_CAP = 4096
# sampler streams live far above any gate counter (circuits stay << 2^30 gates)
SAMPLER_STREAM_BASE = 1 << 30

_BLAS_GUARD = None


def default_samples(n_sites: int) -> int:
    """Sample-count rule: 10^4 up to 20 sites, 3*10^3 beyond."""
    return 10_000 if n_sites <= 20 else 3_000


@dataclass(frozen=True)
class ExperimentConfig:
    """Declarative description of one experiment run."""

    experiment: int
    n_list: tuple[int, ...]
    chi_list: tuple[int, ...] | None = None
    chi_map: dict[int, int] | None = None
    depth: int | None = None
    n_trajectories: int = 500
    n_samples: int | None = None
    master_seed: int = 0
    out_dir: str | None = None

    def resolved_depth(self) -> int:
        if self.depth is not None:
            return self.depth
        return EXP1_DEPTH_DEFAULT if self.experiment == 1 else EXP2_DEPTH_DEFAULT

    def samples_for(self, n_sites: int) -> int:
        return self.n_samples if self.n_samples is not None else default_samples(n_sites)

    def validate(self) -> None:
        if self.experiment not in (1, 2):
            raise ValueError(f"experiment must be 1 or 2, got {self.experiment}")
        if not self.n_list:
            raise ValueError("at least one system size is required")
        if any(n < 2 for n in self.n_list):
            raise ValueError("system sizes must be at least 2")
        if self.resolved_depth() < 1:
            raise ValueError("depth must be at least 1")
        if self.n_trajectories < 1:
            raise ValueError("trajectory count must be positive")
        if self.n_samples is not None and self.n_samples < 2:
            raise ValueError("sample count must be at least 2")
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must be a 64-bit unsigned integer")
        if self.experiment == 1:
            if not self.chi_list:
                raise ValueError("experiment 1 needs a chi list")
            caps = self.chi_list
        else:
            if not self.chi_map:
                raise ValueError("experiment 2 needs a chi map")
            missing = [n for n in self.n_list if n not in self.chi_map]
            if missing:
                raise ValueError(f"chi map missing system sizes {missing}")
            caps = tuple(self.chi_map[n] for n in self.n_list)
        if any(c < 1 for c in caps):
            raise ValueError("bond caps must be positive")
        if any(c > CHI_HARD_CAP for c in caps):
            raise ValueError(f"bond cap beyond the configured hard cap {CHI_HARD_CAP}: " f"{max(caps)} requested")


def apply_desk_scale(config: ExperimentConfig) -> ExperimentConfig:
    """Desk-scale defaults: 2000 samples, at most 100 trajectories."""
    return replace(
        config,
        n_samples=DESK_SAMPLES if config.n_samples is None else min(config.n_samples, DESK_SAMPLES),
        n_trajectories=min(config.n_trajectories, DESK_MAX_TRAJECTORIES),
    )


@dataclass(frozen=True)
class AveragedPoint:
    """Quenched averages over trajectories at one (N, chi[, t]) point."""

    n_sites: int
    chi: int | None
    t: int | None
    m1_bar: float
    sem1: float
    m2_bar: float
    sem2: float
    s_bar: float
    sem_s: float
    max_bond_mean: float
    n_traj: int


@dataclass(frozen=True)
class DeviationPoint:
    """|M_n^Sat - mean| against chi or t, with the saturation references used."""

    n_sites: int
    x: int
    delta_m1: float
    delta_m2: float
    sat_m1: float
    sat_m2: float
    sem1: float
    sem2: float


@dataclass(frozen=True)
class FitResult:
    """Ordinary least squares result for one scaling-law fit."""

    model: str
    slope: float
    intercept: float
    r_squared: float
    points_used: int


@dataclass
class ExperimentResult:
    points: list[AveragedPoint]
    redraws: int = 0
    warnings: list[str] = field(default_factory=list)


# ---------------------------------------------------------------------- #
# trajectory execution


def _pin_blas_worker():
    global _BLAS_GUARD
    _BLAS_GUARD = threadpool_limits(limits=1)


def run_trajectory_state(
    n_sites: int,
    depth: int,
    chi_max: int | None,
    master_seed: int,
    trajectory: int,
) -> MpsState:
    """Evolve |0...0> through the brick-wall circuit of one trajectory."""
    state = MpsState.all_zeros(n_sites, chi_max=chi_max)
    schedule = brickwork(n_sites, depth)
    for counter, _layer, site in schedule.slots():
        gate = haar_unitary(4, derive_stream(SeedTree(master_seed, trajectory, counter)))
        state.apply_two_qubit_gate(gate, site)
    return state


def _sampler_stream(master_seed: int, trajectory: int, t: int) -> np.random.Generator:
    return derive_stream(SeedTree(master_seed, trajectory, SAMPLER_STREAM_BASE + t))


def _measure(state, n_samples, master_seed, trajectory, t):
    est = estimate_sre(state, n_samples, _sampler_stream(master_seed, trajectory, t))
    profile = state.entanglement_profile()
    return est, profile.max_value, state.max_bond()


def _exp1_task(args) -> tuple:
    n_sites, chi, depth, n_samples, master_seed, trajectory = args
    state = run_trajectory_state(n_sites, depth, chi, master_seed, trajectory)
    est, s_max, bond = _measure(state, n_samples, master_seed, trajectory, depth)
    return est.m1, est.m2, s_max, bond, est.n_redrawn


def _exp2_task(args) -> tuple:
    n_sites, chi, depth, n_samples, master_seed, trajectory = args
    state = MpsState.all_zeros(n_sites, chi_max=chi)
    schedule = brickwork(n_sites, depth)
    m1 = np.zeros(depth + 1)
    m2 = np.zeros(depth + 1)
    s = np.zeros(depth + 1)
    bonds = np.zeros(depth + 1)
    redraws = 0
    est, s_max, bond = _measure(state, n_samples, master_seed, trajectory, 0)
    m1[0], m2[0], s[0], bonds[0], redraws = est.m1, est.m2, s_max, bond, est.n_redrawn
    counter = 0
    for t, layer in enumerate(schedule.layers, start=1):
        for site in layer:
            gate = haar_unitary(4, derive_stream(SeedTree(master_seed, trajectory, counter)))
            state.apply_two_qubit_gate(gate, site)
            counter += 1
        est, s_max, bond = _measure(state, n_samples, master_seed, trajectory, t)
        m1[t], m2[t], s[t], bonds[t] = est.m1, est.m2, s_max, bond
        redraws += est.n_redrawn
    return m1, m2, s, bonds, redraws


def _run_tasks(task_fn, tasks: list, n_workers: int) -> list:
    if n_workers <= 1 or len(tasks) <= 1:
        with threadpool_limits(limits=1):
            return [task_fn(t) for t in tasks]
    # fork keeps plain scripts usable without a __main__ guard; workers re-pin
    # BLAS to one thread either way
    method = "fork" if "fork" in multiprocessing.get_all_start_methods() else "spawn"
    context = multiprocessing.get_context(method)
    chunk = max(1, len(tasks) // (4 * n_workers))
    with ProcessPoolExecutor(max_workers=n_workers, mp_context=context, initializer=_pin_blas_worker) as pool:
        return list(pool.map(task_fn, tasks, chunksize=chunk))


def _sem(values: np.ndarray) -> float:
    if values.size < 2:
        return 0.0
    return float(np.std(values, ddof=1) / np.sqrt(values.size))


def run_experiment1(config: ExperimentConfig, n_workers: int = 1) -> ExperimentResult:
    """Final-state SRE and entanglement over an (N, chi) grid."""
    config.validate()
    if config.experiment != 1:
        raise ValueError("config is not for experiment 1")
    depth = config.resolved_depth()
    grid = [(n, chi) for n in config.n_list for chi in config.chi_list]
    tasks = [
        (n, chi, depth, config.samples_for(n), config.master_seed, traj)
        for n, chi in grid
        for traj in range(config.n_trajectories)
    ]
    raw = _run_tasks(_exp1_task, tasks, n_workers)
    points, redraws = [], 0
    per_point = config.n_trajectories
    for idx, (n, chi) in enumerate(grid):
        rows = raw[idx * per_point : (idx + 1) * per_point]
        m1 = np.array([r[0] for r in rows])
        m2 = np.array([r[1] for r in rows])
        s = np.array([r[2] for r in rows])
        bonds = np.array([r[3] for r in rows])
        redraws += sum(r[4] for r in rows)
        points.append(
            AveragedPoint(
                n_sites=n,
                chi=chi,
                t=None,
                m1_bar=float(np.mean(m1)),
                sem1=_sem(m1),
                m2_bar=float(np.mean(m2)),
                sem2=_sem(m2),
                s_bar=float(np.mean(s)),
                sem_s=_sem(s),
                max_bond_mean=float(np.mean(bonds)),
                n_traj=per_point,
            )
        )
    return ExperimentResult(points=points, redraws=redraws)


def run_experiment2(config: ExperimentConfig, n_workers: int = 1) -> ExperimentResult:
    """Per-layer SRE, entanglement and required bond at a fixed per-N cap."""
    config.validate()
    if config.experiment != 2:
        raise ValueError("config is not for experiment 2")
    depth = config.resolved_depth()
    tasks = [
        (n, config.chi_map[n], depth, config.samples_for(n), config.master_seed, traj)
        for n in config.n_list
        for traj in range(config.n_trajectories)
    ]
    raw = _run_tasks(_exp2_task, tasks, n_workers)
    points, redraws = [], 0
    per_point = config.n_trajectories
    for idx, n in enumerate(config.n_list):
        rows = raw[idx * per_point : (idx + 1) * per_point]
        m1 = np.stack([r[0] for r in rows])  # (n_traj, depth + 1)
        m2 = np.stack([r[1] for r in rows])
        s = np.stack([r[2] for r in rows])
        bonds = np.stack([r[3] for r in rows])
        redraws += sum(r[4] for r in rows)
        for t in range(depth + 1):
            points.append(
                AveragedPoint(
                    n_sites=n,
                    chi=config.chi_map[n],
                    t=t,
                    m1_bar=float(np.mean(m1[:, t])),
                    sem1=_sem(m1[:, t]),
                    m2_bar=float(np.mean(m2[:, t])),
                    sem2=_sem(m2[:, t]),
                    s_bar=float(np.mean(s[:, t])),
                    sem_s=_sem(s[:, t]),
                    max_bond_mean=float(np.mean(bonds[:, t])),
                    n_traj=per_point,
                )
            )
    return ExperimentResult(points=points, redraws=redraws)


# ---------------------------------------------------------------------- #
# deviations, fits, saturation


def compute_deviations(points: list[AveragedPoint], mode: str) -> list[DeviationPoint]:
    """Deviation |M_n^Sat - mean| per point; sat_m2 from the closed form,
    sat_m1 as the maximum of the sweep."""
    if mode not in ("vs-chi", "vs-t"):
        raise ValueError(f"mode must be 'vs-chi' or 'vs-t', got {mode!r}")
    if not points:
        raise ValueError("empty table: nothing to take deviations against")
    by_n: dict[int, list[AveragedPoint]] = {}
    for p in points:
        by_n.setdefault(p.n_sites, []).append(p)
    out: list[DeviationPoint] = []
    for n in sorted(by_n):
        group = sorted(by_n[n], key=lambda p: p.chi if mode == "vs-chi" else p.t)
        sat2 = haar_m2(n)
        sat1 = max(p.m1_bar for p in group)
        for p in group:
            x = p.chi if mode == "vs-chi" else p.t
            out.append(
                DeviationPoint(
                    n_sites=n,
                    x=int(x),
                    delta_m1=abs(sat1 - p.m1_bar),
                    delta_m2=abs(sat2 - p.m2_bar),
                    sat_m1=sat1,
                    sat_m2=sat2,
                    sem1=p.sem1,
                    sem2=p.sem2,
                )
            )
    return out


def filter_noise_floor(deviations: list[DeviationPoint], rank: int) -> list[tuple[float, float]]:
    """(x, delta) pairs for one rank, keeping only points with delta > 3*sem."""
    if rank not in (1, 2):
        raise ValueError(f"rank must be 1 or 2, got {rank}")
    pairs = []
    for d in deviations:
        delta = d.delta_m1 if rank == 1 else d.delta_m2
        sem = d.sem1 if rank == 1 else d.sem2
        if delta > 3.0 * sem:
            pairs.append((float(d.x), float(delta)))
    return pairs


def _ols(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    slope, intercept = np.polyfit(x, y, 1)
    predicted = slope * x + intercept
    ss_res = float(np.sum((y - predicted) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return float(slope), float(intercept), float(min(max(r2, 0.0), 1.0))


def fit_log_linear(points: list[tuple[float, float]], noise_floor: float, model: str = "log-linear-chi") -> FitResult:
    """OLS of ln(y) on x over points with y above the noise floor."""
    usable = [(x, y) for x, y in points if y > noise_floor]
    if len(usable) < 3:
        raise ValueError(f"fewer than 3 usable points above the noise floor ({len(usable)})")
    x = np.array([p[0] for p in usable])
    y = np.log(np.array([p[1] for p in usable]))
    slope, intercept, r2 = _ols(x, y)
    return FitResult(model=model, slope=slope, intercept=intercept, r_squared=r2, points_used=len(usable))


def fit_beta_vs_n(points: list[tuple[float, float]]) -> FitResult:
    """Linear OLS of the decay amplitude against system size."""
    if len(points) < 3:
        raise ValueError(f"fewer than 3 system sizes ({len(points)})")
    x = np.array([p[0] for p in points])
    y = np.array([p[1] for p in points])
    slope, intercept, r2 = _ols(x, y)
    return FitResult(model="linear-N", slope=slope, intercept=intercept, r_squared=r2, points_used=len(points))


def saturation_time(series: list[tuple[int, float]], target: float, epsilon: float) -> int | None:
    """Smallest t from which every later recorded value stays within epsilon
    of the target; None when the series never settles."""
    if not series:
        raise ValueError("empty series")
    ordered = sorted(series)
    t_sat = None
    for t, value in reversed(ordered):
        if abs(value - target) <= epsilon:
            t_sat = t
        else:
            break
    return t_sat
