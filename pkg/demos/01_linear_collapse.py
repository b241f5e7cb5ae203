"""A linear separator boosted on noisy data flips to coin-toss accuracy once the margin gets small.

Run: python demos/01_linear_collapse.py
"""
import numpy as np

from properboost.datasets import LsDatasetSpec
from properboost.experiments import run_cell

gammas = np.geomspace(1e-3, 0.5, 12)
print("linear separator, eta = 1/4 (N = 3 clean copies per flipped copy)\n")
print(f"{'gamma':>9} " + " ".join(f"{name:>10}" for name in ("matusita", "log", "square", "asym1")))
for g in gammas:
    accs = []
    for name in ("matusita", "log", "square", "asym1"):
        rec, _ = run_cell(name, "ls", LsDatasetSpec.from_eta(float(g), 0.25))
        accs.append(f"{rec.accuracy_clean:>10.2f}")
    print(f"{g:9.4f} " + " ".join(accs))

# The loss barely matters: every column switches from 0.5 to 1.0 at about the same margin.
rec, state = run_cell("square", "ls", LsDatasetSpec.from_eta(0.02, 0.25))
print(f"\nsquare loss at gamma=0.02 gives up after {rec.weak_calls} weak calls ({rec.stop_reason}).")
print("coefficients:", [round(s.alpha, 4) for s in state.model.steps])
