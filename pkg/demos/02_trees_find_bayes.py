"""Same data, same losses, different model classes: trees and nearest neighbours land on the Bayes posterior.

Run: python demos/02_trees_find_bayes.py
"""
from properboost.datasets import LsDatasetSpec
from properboost.experiments import run_cell

spec = LsDatasetSpec.from_eta(0.01, 0.25)
print(f"gamma = {spec.gamma}, eta = {spec.eta}; the Bayes posterior on every clean point is {1 - spec.eta}\n")
print(f"{'loss':>9} {'model':>5} {'calls':>5} {'accuracy':>8} {'posterior':>10}")
for name in ("matusita", "log", "square", "asym1"):
    for model in ("ls", "dt", "adt", "knn", "lbp"):
        rec, _ = run_cell(name, model, spec)
        print(f"{name:>9} {model:>5} {rec.weak_calls:>5} {rec.accuracy_clean:>8.2f} {rec.expected_posterior:>10.6f}")
    print()

# A tree needs a single call: the root constant already sits at the link of the label frequency.
# 1-NN needs one call per distinct observation, three in total.
