"""How many source labels is a shifted sample worth?

The empirical effective sample size compares the target second-moment
operator with the source one. With no shift it equals n; as the source
thins out over the region the target cares about it drops.
"""

# %%
import numpy as np

from krglm import Sobolev1, SyntheticScenario, effective_sample_size, gen_synthetic

n = 400
print(f"{'exponent':>8} {'B':>7} {'n_eff':>8} {'ratio':>6}")
for exponent in (0.0, 0.2, 0.4, 0.6, 0.8):
    sc = SyntheticScenario(n=n, shift_exponent=exponent, seed=0)
    source, target, _ = gen_synthetic(sc)
    ne = effective_sample_size(source.X, target.X, Sobolev1(), c=1.0)
    print(f"{exponent:8.1f} {sc.B:7.1f} {ne:8.1f} {ne / n:6.3f}")

# %% a target point mass at 1 is covered only through the source rows near it
for m in (0, 1, 5, 20):
    src = np.concatenate([np.full(n - m, 0.25), np.ones(m)])[:, None]
    ne = effective_sample_size(src, np.ones((50, 1)), Sobolev1(), c=1.0)
    print(f"{m:3d} source rows at x=1 -> n_eff = {ne:.2f}")
