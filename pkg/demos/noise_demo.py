"""Colored force noise and an oscillator it shakes."""

import numpy as np

from bayesosc.gp_noise import GPKernel, TimeGrid, autocorrelation, drive_oscillator, sample_paths

grid = TimeGrid(0.0, 0.1, 300)
for kind in ("white", "ornstein_uhlenbeck", "squared_exponential"):
    kernel = GPKernel(kind, variance=1.0, correlation_time=1.0)
    paths = sample_paths(kernel, grid, 4000, seed=0)
    acf = autocorrelation(paths, 20)
    print(f"{kind:>20}: autocorrelation at lags 0.5, 1, 2 = "
          f"{acf[5]:.3f}, {acf[10]:.3f}, {acf[20]:.3f}")

D, m = 0.5, 1.0
ens = drive_oscillator(1.0, m, GPKernel("white", D), TimeGrid(0.0, 0.05, 600), 4000, seed=1)
energy = ens.energy().mean(axis=0)
slope = np.polyfit(ens.times, energy, 1)[0]
print(f"\nwhite-noise heating rate {slope:.4f}, expected D/(2m) = {D / (2 * m):.4f}")
