"""Sampling the limiting Gaussian fluctuation process.

The centered noises that drive the limit are Gaussian with covariances
computed along a mean-field solution; the fluctuation paths then solve a
linear system with the same convolution kernels as the density equations.
This draws a bundle of limit paths and summarizes their spread.
"""

import numpy as np

from rumorlab import (
    MeanFieldProblem,
    Weibull,
    eval_noise_covariance,
    sample_limit_noises,
    solve_fclt,
    solve_mean_field,
    validate_blueprint,
)

problem = MeanFieldProblem(
    validate_blueprint([[4]]), 0.5, Weibull(2.0, 5.0), (0.01,), (0.0,), 2.0, 0.01
)
solution = solve_mean_field(problem)
cov = eval_noise_covariance(solution)

print("drawing 500 limit fluctuation paths ...")
noises = sample_limit_noises(cov, seed=99, n_samples=500)
sample = solve_fclt(cov, noises)

print()
print("   t    sd Xhat   sd Yhat   sd Zhat")
for t in (0.5, 1.0, 1.5, 2.0):
    i = sample.index_of(t)
    sx = sample.X[:, i, 0].std(ddof=1)
    sy = sample.Y[:, i, 0].std(ddof=1)
    sz = sample.Z[:, i, 0].std(ddof=1)
    print(f"{t:5.2f}  {sx:8.4f}  {sy:8.4f}  {sz:8.4f}")

i2 = sample.index_of(2.0)
corr = np.corrcoef(sample.Y[:, i2, 0], sample.Z[:, i2, 0])[0, 1]
print()
print(f"Y-Z fluctuation correlation at t = 2: {corr:+.3f}")
print("mass conservation pins Xhat = -(Yhat + Zhat) pathwise, so the three")
print("components are never independent.")
