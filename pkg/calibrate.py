"""Scratch calibration for acceptance-criterion tolerances (not shipped)."""

import sys
import time

import numpy as np

from magicmps import (
    ExperimentConfig,
    compute_deviations,
    fit_log_linear,
    haar_m2,
    run_experiment1,
    run_experiment2,
    saturation_time,
)
from magicmps.experiments import filter_noise_floor

t0 = time.time()


def stamp(msg):
    print(f"[{time.time() - t0:7.1f}s] {msg}", flush=True)


# --- criterion 3 shape: N=12 chi sweep (reduced trajectories) ---
cfg = ExperimentConfig(
    experiment=1, n_list=(12,), chi_list=tuple(range(2, 17)), depth=40,
    n_trajectories=30, n_samples=2000, master_seed=1001,
)
res = run_experiment1(cfg, n_workers=2)
dev = compute_deviations(res.points, "vs-chi")
for rank in (1, 2):
    pairs = filter_noise_floor(dev, rank)
    fit = fit_log_linear(pairs, 0.0)
    print(f"rank {rank}: alpha = {-fit.slope:.3f}, beta = {np.exp(fit.intercept):.3f}, "
          f"R2 = {fit.r_squared:.4f}, used = {fit.points_used}")
for d in dev:
    print(f"  chi={d.x:2d} dM1={d.delta_m1:8.4f} (3sem={3*d.sem1:.4f}) dM2={d.delta_m2:8.4f} (3sem={3*d.sem2:.4f})")
stamp("criterion 3 probe done")

# --- criterion 5 shape: N=16 chi=16 time decay (reduced) ---
cfg5 = ExperimentConfig(
    experiment=2, n_list=(16,), chi_map={16: 16}, depth=20,
    n_trajectories=30, n_samples=2000, master_seed=1005,
)
res5 = run_experiment2(cfg5, n_workers=2)
dev5 = compute_deviations(res5.points, "vs-t")
pairs5 = filter_noise_floor(dev5, 2)
fit5 = fit_log_linear(pairs5, 0.0, model="log-linear-t")
print(f"gamma2 = {-fit5.slope:.3f}, R2 = {fit5.r_squared:.4f}, used = {fit5.points_used}")
for d in dev5:
    print(f"  t={d.x:2d} dM2={d.delta_m2:9.5f} 3sem={3*d.sem2:.5f}")
stamp("criterion 5 probe done")

# --- criteria 6 + 7 shape: N=11, chi 15 vs 32 (reduced) ---
points = {}
for chi in (15, 32):
    cfg6 = ExperimentConfig(
        experiment=2, n_list=(11,), chi_map={11: chi}, depth=20,
        n_trajectories=30, n_samples=2000, master_seed=1006,
    )
    points[chi] = sorted(run_experiment2(cfg6, n_workers=2).points, key=lambda p: p.t)
    stamp(f"chi={chi} run done")

print(" t   m2(15)    m2(32)    |diff|/3sigma   s(15)    s(32)   sdiff/5sigma  bond15 bond32")
for a, b in zip(points[15], points[32]):
    sig = np.hypot(a.sem2, b.sem2)
    ssig = np.hypot(a.sem_s, b.sem_s)
    ratio = abs(a.m2_bar - b.m2_bar) / (3 * sig) if sig > 0 else 0.0
    sratio = abs(a.s_bar - b.s_bar) / (5 * ssig) if ssig > 0 else 0.0
    print(f"{a.t:3d} {a.m2_bar:8.4f} {b.m2_bar:8.4f}   {ratio:8.3f}    {a.s_bar:7.4f} {b.s_bar:7.4f}  {sratio:8.3f}  {a.max_bond_mean:6.1f} {b.max_bond_mean:6.1f}")

series_s = [(p.t, p.s_bar) for p in points[15]]
target = points[15][-1].s_bar
for frac in (0.05, 0.1, 0.15):
    print(f"t_ENT(eps={frac:.2f}*target) = {saturation_time(series_s, target, frac * target)} "
          f"(log2(15) = {np.log2(15):.2f})")
series_m2 = [(p.t, p.m2_bar) for p in points[15]]
tail_sem = points[15][-1].sem2
print("t_SRE:", saturation_time(series_m2, haar_m2(11), max(3 * tail_sem, 0.02 * haar_m2(11))))
stamp("all probes done")
