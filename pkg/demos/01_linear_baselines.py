"""
Linear baselines on synthetic data
==================================

Two closed-form maps between embedding spaces: ordinary least squares and the
orthogonal (Procrustes) solution. A pure rotation is recovered exactly by both;
once the target space is a nonlinear warp of the source, neither can follow it.
"""

import numpy as np

from absent.evaluation import baseline_least_squares, baseline_procrustes, evaluate
from absent.synthetic import nonlinear_pairs, sphere

rng = np.random.default_rng(0)
d = 50

# a random rotation R and points on the unit sphere
R, _ = np.linalg.qr(rng.standard_normal((d, d)))
x = sphere(2000, d, rng)
y = x @ R

W = baseline_procrustes(x[:1500], y[:1500])
print("procrustes max |W - R^T|:", np.abs(W - R.T).max())
print("held-out P@1:", evaluate(W, x[1500:], y[1500:], ks=(1,)).precision[1])

# least squares recovers any linear map, orthogonal or not
A = rng.standard_normal((d, d))
W_ls = baseline_least_squares(x[:1500], x[:1500] @ A.T)
print("least squares max |W - A|:", np.abs(W_ls - A).max())

# the nonlinear benchmark: y = normalize(tanh(A2 relu(A1 x))) + noise
x, y, warp = nonlinear_pairs(n=5000, d=20, sigma=0.01, seed=0)
train, test = np.arange(900), np.arange(4500, 5000)
for name, fit in (("lsq", baseline_least_squares), ("procrustes", baseline_procrustes)):
    rep = evaluate(fit(x[train], y[train]), x[test], y[test], ks=(1, 5, 10))
    print(f"{name:>10} on the warp:", {k: round(v, 3) for k, v in rep.precision.items()})
