"""Covariate-shift scenarios and evaluation diagnostics."""

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg

from .dataset import Dataset, as_matrix
from .family import LOGISTIC, Family
from .kernels import Kernel, Sobolev1


def cosine_truth(x):
    return 1.5 * np.cos(2 * np.pi * np.asarray(x, dtype=float))


@dataclass(frozen=True)
class SyntheticScenario:
    """Two-block mixture shift on [0, 1].

    With ``B = n ** shift_exponent`` the source puts mass ``B/(B+1)`` on
    U[0, 1/2] and the rest on U[1/2, 1]; the target mirrors the weights.
    """

    n: int
    shift_exponent: float = 0.4
    truth: Callable = cosine_truth
    family: Family = LOGISTIC
    kernel: Kernel = field(default_factory=Sobolev1)
    seed: int = 0

    def __post_init__(self):
        if self.n < 2 or self.n % 2:
            raise ValueError("n must be an even integer >= 2")
        if self.shift_exponent < 0:
            raise ValueError("shift_exponent must be nonnegative")

    @property
    def B(self):
        return self.n ** self.shift_exponent

    @property
    def source_left_mass(self):
        return self.B / (self.B + 1)


def _mixture(size, left_mass, rng):
    left = rng.random(size) < left_mass
    u = rng.random(size)
    return np.where(left, 0.5 * u, 0.5 + 0.5 * u)


def sample_source(scenario, size, rng):
    x = _mixture(size, scenario.source_left_mass, rng)
    f = scenario.truth(x)
    y = (rng.random(size) < scenario.family.mean(f)).astype(float)
    return Dataset(x[:, None], y)


def sample_target(scenario, size, rng):
    """Target covariates (size x 1) and the true scores there."""
    x = _mixture(size, 1.0 - scenario.source_left_mass, rng)
    return Dataset(x[:, None]), scenario.truth(x)


def gen_synthetic(scenario, rng=None):
    """Draw ``n`` labeled source rows and ``n`` unlabeled target rows.

    Returns ``(source, target_X, target_truth_scores)``.
    """
    if rng is None:
        rng = np.random.default_rng(scenario.seed)
    source = sample_source(scenario, scenario.n, rng)
    target, truth = sample_target(scenario, scenario.n, rng)
    return source, target, truth


@dataclass(frozen=True)
class RejectionSplitSpec:
    shift_param: float = 3.0
    pivot: int = 0

    def __post_init__(self):
        if not self.shift_param > 0:
            raise ValueError("shift parameter l must be positive")


def rejection_probabilities(X, spec):
    col = as_matrix(X)[:, spec.pivot]
    c = col.min()
    return np.minimum(1.0, (col - c) ** 2 / spec.shift_param)


def rejection_split(data, spec, seed, return_mask=False):
    """Send row i to the OOD set with probability ``min(1, (x_i - c)^2 / l)``.

    ``c`` is the minimum of the pivot column. Returns ``(id, ood)`` and,
    optionally, the boolean OOD mask.
    """
    p = rejection_probabilities(data.X, spec)
    ood = np.random.default_rng(seed).random(len(data)) < p
    out = (data.subset(np.flatnonzero(~ood)), data.subset(np.flatnonzero(ood)))
    return out + (ood,) if return_mask else out


def excess_risk_scores(scores, truth_scores, family):
    """Mean Bregman divergence ``D_a(f(x), f*(x))`` over the rows."""
    f = np.asarray(scores, dtype=float).ravel()
    g = np.asarray(truth_scores, dtype=float).ravel()
    if f.shape != g.shape:
        raise ValueError(f"length mismatch: {f.size} scores, {g.size} truths")
    return math.fsum(np.asarray(family.bregman(f, g)).ravel()) / f.size


def excess_risk(model, target_X, truth_scores, family=None):
    family = model.family if family is None else family
    return excess_risk_scores(model.predict_score(target_X), truth_scores, family)


def effective_sample_size(source_X, target_X, kernel, c=1.0, rank_tol=1e-12):
    """Empirical effective labeled sample size.

    Largest ``t <= n`` with ``t S0 <= n S + c I``, where ``S`` and ``S0`` are
    the empirical second-moment operators of the source and target feature
    maps. The pencil is solved in an orthonormal basis of the joint span of
    all feature vectors, obtained from the eigendecomposition of the joint
    Gram matrix; directions outside that span carry no target energy.
    """
    if not c > 0:
        raise ValueError("c must be positive")
    S = kernel.check(source_X)
    T = kernel.check(target_X)
    n, m = S.shape[0], T.shape[0]
    if n == 0 or m == 0:
        raise ValueError("source and target must be nonempty")
    G = kernel.gram(np.vstack([S, T]))
    evals, evecs = np.linalg.eigh(G)
    top = evals[-1]
    if not top > 0:
        return float(n)
    keep = evals > rank_tol * top
    coords = evecs[:, keep] * np.sqrt(evals[keep])
    Cs, Ct = coords[:n], coords[n:]
    lhs = Ct.T @ Ct / m
    rhs = Cs.T @ Cs + c * np.eye(coords.shape[1])
    try:
        theta = scipy.linalg.eigh(lhs, rhs, eigvals_only=True)
    except np.linalg.LinAlgError as exc:
        raise ArithmeticError(f"generalized eigenproblem failed: {exc}") from exc
    theta_max = theta[-1]
    if not theta_max > 0:
        return float(n)
    return float(min(n, 1.0 / theta_max))


def loglog_slope_fit(points):
    """Fit ``log risk = intercept - alpha log n``; returns ``(alpha, intercept)``."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 2:
        raise ValueError("need at least two (n, risk) points")
    if np.any(pts <= 0):
        raise ValueError("sample sizes and risks must be positive")
    slope, intercept = np.polyfit(np.log(pts[:, 0]), np.log(pts[:, 1]), 1)
    return float(-slope), float(intercept)


def cluster_bootstrap_se(trials, B=10000, seed=0):
    """Bootstrap standard error of the log-log decay exponent.

    ``trials`` maps each sample size to its per-trial excess risks. Each
    replicate resamples the trials of every sample size with replacement,
    recomputes the per-size means and refits the slope.
    """
    if B < 1:
        raise ValueError("B must be at least 1")
    sizes = sorted(trials)
    if len(sizes) < 2:
        raise ValueError("need at least two sample sizes")
    rng = np.random.default_rng(seed)
    means = np.empty((B, len(sizes)))
    for j, n in enumerate(sizes):
        vals = np.asarray(trials[n], dtype=float)
        if vals.size < 1:
            raise ValueError(f"no trials for n={n}")
        idx = rng.integers(0, vals.size, size=(B, vals.size))
        means[:, j] = vals[idx].mean(axis=1)
    if np.any(means <= 0):
        raise ValueError("excess risks must be positive")
    x = np.log(np.asarray(sizes, dtype=float))
    xc = x - x.mean()
    ly = np.log(means)
    slopes = (ly - ly.mean(axis=1, keepdims=True)) @ xc / (xc @ xc)
    alphas = -slopes
    if B == 1 or np.ptp(alphas) == 0:
        return 0.0
    return float(np.std(alphas, ddof=1))
