"""How many iterations each model class needs in the worst case, and how fast those numbers explode.

Run: python demos/04_rate_bounds.py
"""
import math

from properboost.experiments import b_ls, compute_rate_bound
from properboost.losses import make_loss

loss = make_loss("log")
print("log loss, theta = 0, weak learner edge 0.5\n")
print(f"{'epsilon':>8} {'linear':>12} {'tree':>12} {'alt. tree':>12} {'1-NN (m=100)':>13} {'branching':>12}")
for eps in (0.9, 0.7, 0.5, 0.3, 0.1):
    b = b_ls(loss, eps, 0.0, 0.5)
    n = max(1, round(math.sqrt(b)))
    row = [
        compute_rate_bound("ls", loss, eps, 0.0, 0.5),
        compute_rate_bound("dt", loss, eps, 0.0, 0.5),
        compute_rate_bound("adt", loss, eps, 0.0, 0.5, adt_outdegree=n),
        compute_rate_bound("knn", loss, eps, 0.0, 0.5, m=100, k_rec=1),
        compute_rate_bound("lbp", loss, eps, 0.0, 0.5, c=0.5),
    ]
    print(f"{eps:>8} " + " ".join(f"{v:>12.3g}" for v in row))

# The tree bound is exponential in the linear one; letting prediction nodes branch N = sqrt(b) ways
# brings it down by a factor exp(-c sqrt(b)), and merging leaves only costs a polynomial blow-up.
