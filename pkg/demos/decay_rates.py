"""Excess-risk decay of the three selection rules.

A small replication: a few sample sizes, a handful of trials each, a
log-log slope per rule and its cluster-bootstrap standard error. The
command ``krglm synth`` runs the same thing at full scale and in parallel.
"""

# %%
from collections import defaultdict

import numpy as np

from krglm import cluster_bootstrap_se, loglog_slope_fit
from krglm.experiments import SYNTH_RULES, run_synthetic

sizes = [250, 500, 1000, 2000]
records, failures = run_synthetic(sizes, trials=10, shift_exponent=0.4, seed=0)
print(f"{len(records) // 3} trials, {len(failures)} failures")

by_rule = defaultdict(lambda: defaultdict(list))
for n, trial, rule, risk in records:
    by_rule[rule][n].append(risk)

# %%
for rule in SYNTH_RULES:
    means = [(n, np.mean(by_rule[rule][n])) for n in sizes]
    alpha, _ = loglog_slope_fit(means)
    se = cluster_bootstrap_se(by_rule[rule], B=2000, seed=0)
    print(f"{rule:>7}: " + "  ".join(f"{m:.4f}" for _, m in means)
          + f"   alpha={alpha:.3f} ({se:.3f})")
