"""Even the exact minimiser of a convex surrogate over linear scores can be no better than a coin.

Run: python demos/03_ideal_linear.py
"""
from properboost.datasets import LsDatasetSpec, make_clean, make_noisy
from properboost.experiments import ideal_linear_minimizer
from properboost.losses import make_loss

cases = [
    ("noisy, small margin", LsDatasetSpec(0.01, big_k=5, n_copies=2)),
    ("almost noiseless", LsDatasetSpec(0.1, big_k=5, n_copies=10**6 - 1)),
]
for title, spec in cases:
    print(f"{title}: gamma={spec.gamma}, K={spec.big_k}, eta={spec.eta:.2e}")
    for name in ("matusita", "log", "square", "asym1"):
        res = ideal_linear_minimizer(make_loss(name), make_noisy(spec), make_clean(spec))
        a1, a2 = res.alpha
        print(f"  {name:>9}: alpha=({a1:9.4f}, {a2:9.4f})  clean accuracy {res.clean_accuracy:.2f}"
              f"  ({res.iterations} Newton steps)")
    print()
