"""Full-scale measurement for criteria 3+4 (not shipped)."""

import time

import numpy as np

from magicmps import ExperimentConfig, compute_deviations, fit_beta_vs_n, fit_log_linear, run_experiment1
from magicmps.experiments import filter_noise_floor

t0 = time.time()
cfg = ExperimentConfig(
    experiment=1, n_list=(8, 12, 16, 20), chi_list=tuple(range(2, 17)), depth=40,
    n_trajectories=100, n_samples=None, master_seed=20240811,
)
res = run_experiment1(cfg, n_workers=2)
print(f"sweep done in {time.time() - t0:.0f}s, redraws = {res.redraws}", flush=True)
dev = compute_deviations(res.points, "vs-chi")
betas = {1: [], 2: []}
for n in (8, 12, 16, 20):
    group = [d for d in dev if d.n_sites == n]
    for rank in (1, 2):
        pairs = filter_noise_floor(group, rank)
        try:
            fit = fit_log_linear(pairs, 0.0)
            betas[rank].append((n, float(np.exp(fit.intercept))))
            print(f"N={n} rank={rank}: alpha={-fit.slope:.3f} beta={np.exp(fit.intercept):.3f} "
                  f"R2={fit.r_squared:.4f} used={fit.points_used}")
        except ValueError as exc:
            print(f"N={n} rank={rank}: {exc}")
for rank in (1, 2):
    if len(betas[rank]) >= 3:
        bf = fit_beta_vs_n(betas[rank])
        print(f"rank {rank}: lambda={bf.slope:.3f} mu={bf.intercept:.3f} R2={bf.r_squared:.4f} betas={betas[rank]}")
for d in dev:
    print(f"  N={d.n_sites:2d} chi={d.x:2d} dM1={d.delta_m1:9.5f} (3s={3*d.sem1:.5f}) dM2={d.delta_m2:9.5f} (3s={3*d.sem2:.5f})")
print(f"total {time.time() - t0:.0f}s")
