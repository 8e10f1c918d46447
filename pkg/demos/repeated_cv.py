"""Repeated stratified K-fold pseudo-labeling on a tabular problem.

A binary dataset is shifted by rejection sampling on its first feature;
rows far from the minimum go to an out-of-distribution pool. Penalties are
chosen by fold-averaged naive, pseudo-label and oracle risk curves and the
winners are refit on all in-distribution rows.
"""

# %%
import numpy as np

from krglm import (LOGISTIC, Dataset, Polynomial, RejectionSplitSpec, cv_select,
                   glm_risk, rejection_split)
from krglm.experiments import standardize

rng = np.random.default_rng(3)
n = 600
X = rng.normal(size=(n, 4))
score = 0.8 * X[:, 0] * X[:, 1] - X[:, 2] + 0.5 * X[:, 3] ** 2 - 0.3
y = (rng.random(n) < LOGISTIC.mean(score)).astype(float)
data = Dataset(standardize(X), y)

id_data, ood = rejection_split(data, RejectionSplitSpec(shift_param=20.0), seed=0)
print(f"{len(id_data)} in-distribution rows (positive rate {id_data.y.mean():.2f}), "
      f"{len(ood)} shifted rows (positive rate {ood.y.mean():.2f})")
half = len(ood) // 2
sel, test = ood.subset(np.arange(half)), ood.subset(np.arange(half, len(ood)))

# %%
grid = list(np.geomspace(1e-4, 1e2, 13))
report = cv_select(id_data, sel.X, sel.y, LOGISTIC, Polynomial(2), grid,
                   imputer_lambda=1e-4, K=2, R=6, seed=0)
for rule, lam in report.chosen.items():
    model = report.models[rule]
    print(f"{rule:>7}: lambda={lam:.1e}  "
          f"test log-loss={glm_risk(model.predict_score(test.X), test.y, LOGISTIC):.4f}")

# %% the curves behind those choices
print(f"{'lambda':>8} " + " ".join(f"{r:>8}" for r in report.curves))
for j, lam in enumerate(grid):
    print(f"{lam:8.0e} " + " ".join(f"{c[j]:8.4f}" for c in report.curves.values()))
