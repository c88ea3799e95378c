"""
ABSent on the nonlinear synthetic benchmark
===========================================

5000 source points on the unit sphere in R^20 and targets produced by a random
``tanh(A2 relu(A1 x))`` warp. 10% of the pairs are held out; 20% of the rest are
labeled, the remainder are shown to the discriminators as unpaired pools.
Compares the adversarial model with the least-squares baseline fit on the same
labeled pairs. Takes about a minute per seed on one core.

    python demos/02_synthetic_benchmark.py [seed] [epochs]
"""

import sys
import time

from absent.corpus import split
from absent.evaluation import baseline_least_squares, evaluate
from absent.synthetic import nonlinear_pairs
from absent.training import TrainConfig, train

seed = int(sys.argv[1]) if len(sys.argv) > 1 else 0
epochs = int(sys.argv[2]) if len(sys.argv) > 2 else 30

x, y, _ = nonlinear_pairs(n=5000, d=20, sigma=0.01, seed=seed)
sp = split(5000, test_fraction=0.1, labeled_ratio=0.2, seed=seed)
print(f"{len(sp.labeled)} labeled, {len(sp.unlabeled)} unlabeled, {len(sp.test)} test pairs")

t0 = time.perf_counter()
config = TrainConfig(lam=1.0, epochs=epochs, seed=seed, saturating_generator=True)
report, model = train(sp, (x, y), config)
print(f"trained {epochs} epochs in {time.perf_counter() - t0:.0f}s")
for rec in report.records[:: max(1, len(report.records) // 6)]:
    print(f"  epoch {rec.epoch:>3}  L_d {rec.distance_loss:.4f}  g_loss {rec.g_loss:.3f}")

W = baseline_least_squares(x[sp.labeled], y[sp.labeled])
for name, mapping in (("absent", model), ("lsq", W)):
    rep = evaluate(mapping, x[sp.test], y[sp.test], ks=(1, 5, 10))
    print(f"{name:>7}:", {k: round(v, 3) for k, v in rep.precision.items()})
