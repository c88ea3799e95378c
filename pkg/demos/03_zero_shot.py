"""
Zero-shot retrieval between two source languages
================================================

Two source spaces X1 and X2 are each paired with a shared target space Y, but
never with each other. One model is trained on (X1, Y) and (X2, Y) batches in
alternation with a shared ``G_X``. At test time both X1 and X2 sentences are
mapped through ``G_X`` and X2 candidates are retrieved for X1 queries there.
Chance level is 1/500. Takes about 90 seconds on one core.

    python demos/03_zero_shot.py [seed]
"""

import sys

import numpy as np

from absent.corpus import make_split
from absent.evaluation import evaluate
from absent.model import project_corpus
from absent.synthetic import three_spaces
from absent.training import TrainConfig, train_multilingual

seed = int(sys.argv[1]) if len(sys.argv) > 1 else 0
n = 4500
data = three_spaces(n, n, 500, d=20, sigma=0.01, seed=seed)
(x1, y1), (x2, y2) = data["pair1"], data["pair2"]
x1_test, x2_test, y_test = data["test"]

# the first 20% of each training set is labeled, the rest feeds the pools
sp = make_split(np.arange(n), [], np.arange(n // 5), seed)
config = TrainConfig(lam=1.0, epochs=20, seed=seed, saturating_generator=True)
_, model = train_multilingual(sp, sp, x1, x2, y1, y2, config)

ks = (1, 5, 10)
print("X1 -> Y :", evaluate(model, x1_test, y_test, ks=ks).precision)
print("X2 -> Y :", evaluate(model, x2_test, y_test, ks=ks).precision)
zs = evaluate(model, x1_test, x2_test, ks=ks, direction="x1_to_x2", candidates=project_corpus(model, x2_test, "x_to_y"))
print("X1 -> X2:", zs.precision, f"(chance {1 / 500:.3f})")
