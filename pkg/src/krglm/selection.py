"""Pseudo-labeling model selection over a ridge-penalty grid.

Candidates are trained on one half of the source sample; an imputation
model trained on the other half supplies soft pseudo-labels ``a'(f~(x0))``
on the unlabeled target covariates, and the candidate minimising the GLM
risk against those labels is selected. Oracle (noiseless target labels)
and naive hold-out rules share the same candidates for comparison.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .solver import FittedModel, fit_krglm

logger = logging.getLogger(__name__)


class SelectionError(RuntimeError):
    pass


@dataclass(frozen=True)
class Pseudo:
    name = "pseudo"


@dataclass(frozen=True, eq=False)
class Oracle:
    """Scores candidates against noiseless target labels.

    Give either ``truth_scores`` (f* on the target rows; labels become
    ``a'(f*)``) or ``labels`` (observed target responses).
    """

    truth_scores: Optional[np.ndarray] = None
    labels: Optional[np.ndarray] = None
    name = "oracle"

    def __post_init__(self):
        if (self.truth_scores is None) == (self.labels is None):
            raise ValueError("Oracle needs exactly one of truth_scores, labels")

    def targets(self, family):
        if self.labels is not None:
            return np.asarray(self.labels, dtype=float)
        return np.asarray(family.mean(np.asarray(self.truth_scores, float)), float)


@dataclass(frozen=True)
class NaiveHoldout:
    name = "naive"


@dataclass(eq=False)
class SelectionReport:
    rule: str
    grid: list
    risks: np.ndarray
    chosen_lambda: float
    chosen_model: FittedModel
    imputer: Optional[FittedModel] = None
    split_seed: Optional[int] = None
    warnings: list = field(default_factory=list)
    candidates: list = field(default_factory=list, repr=False)


def glm_risk(scores, targets, family):
    """Empirical GLM risk ``mean(a(s) - t * s)``.

    With ``t`` equal to observed labels this is the hold-out risk; with soft
    pseudo-labels it is the pseudo-target risk.
    """
    s = np.asarray(scores, dtype=float).ravel()
    t = np.asarray(targets, dtype=float).ravel()
    if s.shape != t.shape:
        raise ValueError(f"length mismatch: {s.size} scores, {t.size} targets")
    if s.size == 0:
        raise ValueError("empty evaluation set")
    terms = np.asarray(family.log_partition(s)) - t * s
    # fsum is correctly rounded, hence independent of row order
    return math.fsum(terms) / s.size


def split_source(data, n1, seed):
    n = len(data)
    if not 1 <= n1 < n:
        raise ValueError(f"n1 must satisfy 1 <= n1 < n={n}, got {n1}")
    perm = np.random.default_rng(seed).permutation(n)
    idx1, idx2 = np.sort(perm[:n1]), np.sort(perm[n1:])
    return data.subset(idx1), data.subset(idx2)


def default_candidate_grid(n, style="experiment", mu2=1.0):
    """Geometric penalty grid.

    ``"theorem"``: ``2^(j-1) mu2 / n`` for ``j = 1 .. ceil(log2 n) + 1``.
    ``"experiment"``: ``2^k / (10 n)`` for ``k = 0 .. ceil(log2(10 n))``.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    style = style.lower()
    if style == "theorem":
        if not mu2 > 0:
            raise ValueError("mu2 must be positive")
        top = math.ceil(math.log2(n)) + 1
        grid = [2.0 ** (j - 1) * mu2 / n for j in range(1, top + 1)]
    elif style == "experiment":
        top = math.ceil(math.log2(10 * n))
        grid = [2.0 ** k / (10 * n) for k in range(top + 1)]
    else:
        raise ValueError(f"unknown grid style {style!r}")
    return sorted(set(grid))


def default_imputer_lambda(n, style="experiment", mu2=1.0, n0=None, delta=None):
    """Imputation penalty: ``1/(10 n)`` or ``mu2 log^7(n) log(n0/delta) / n``."""
    if n < 2:
        raise ValueError("n must be at least 2")
    style = style.lower()
    if style == "experiment":
        return 1.0 / (10 * n)
    if style != "theorem":
        raise ValueError(f"unknown imputer style {style!r}")
    if not mu2 > 0:
        raise ValueError("mu2 must be positive")
    if n0 is None or delta is None:
        raise ValueError("theorem style needs n0 and delta")
    if not 0 < delta <= 1 / math.e:
        raise ValueError("delta must lie in (0, 1/e]")
    if not n0 >= 1:
        raise ValueError("theorem style needs n0 >= 1")
    return mu2 * math.log(n) ** 7 * math.log(n0 / delta) / n


def argmin_smallest(risks, grid):
    """Index of the minimal risk; ties go to the smallest penalty."""
    risks = np.asarray(risks, dtype=float)
    best = np.min(risks)
    ties = np.flatnonzero(risks == best)
    return int(ties[np.argmin(np.asarray(grid)[ties])])


def _check_grid(grid):
    grid = [float(g) for g in grid]
    if not grid:
        raise ValueError("empty candidate grid")
    if any(not g > 0 for g in grid):
        raise ValueError("candidate penalties must be positive")
    return grid


def fit_candidates(data, family, kernel, grid, opts=None):
    return [fit_krglm(data, family, kernel, lam, opts) for lam in grid]


def select_many(source, target_X, family, kernel, grid, imputer_lambda, rules,
                n1=None, seed=0, opts=None, imputer_scores=None):
    """Run several selection rules on one shared set of candidates.

    ``imputer_scores`` replaces the trained imputation model by fixed scores
    on the target rows (used to inject the true function).
    Returns ``{rule.name: SelectionReport}``.
    """
    if not source.labeled:
        raise ValueError("source data must be labeled")
    grid = _check_grid(grid)
    rules = list(rules)
    names = [r.name for r in rules]
    if len(set(names)) != len(names):
        raise ValueError("duplicate selection rules")
    if n1 is None:
        n1 = len(source) // 2
    D1, D2 = split_source(source, n1, seed)

    candidates = fit_candidates(D1, family, kernel, grid, opts)
    warnings = [f"candidate lambda={m.lam:g} did not converge"
                for m in candidates if not m.converged]
    if warnings and len(warnings) == len(candidates):
        raise SelectionError("no candidate fit converged")
    for w in warnings:
        logger.warning(w)

    needs_target = any(not isinstance(r, NaiveHoldout) for r in rules)
    target_scores = None
    if needs_target:
        if target_X is None:
            raise ValueError("target covariates are required for this rule")
        target_scores = [m.predict_score(target_X) for m in candidates]

    reports = {}
    for rule in rules:
        imputer = None
        rule_warnings = list(warnings)
        if isinstance(rule, Pseudo):
            if imputer_scores is not None:
                pseudo_scores = np.asarray(imputer_scores, dtype=float)
            else:
                if not imputer_lambda > 0:
                    raise ValueError("imputer_lambda must be positive")
                imputer = fit_krglm(D2, family, kernel, imputer_lambda, opts)
                if not imputer.converged:
                    rule_warnings.append("imputation model did not converge")
                pseudo_scores = imputer.predict_score(target_X)
            labels = np.asarray(family.mean(pseudo_scores), dtype=float)
            risks = [glm_risk(s, labels, family) for s in target_scores]
        elif isinstance(rule, Oracle):
            labels = rule.targets(family)
            risks = [glm_risk(s, labels, family) for s in target_scores]
        elif isinstance(rule, NaiveHoldout):
            risks = [glm_risk(m.predict_score(D2.X), D2.y, family)
                     for m in candidates]
        else:
            raise TypeError(f"unknown selection rule {rule!r}")
        risks = np.asarray(risks, dtype=float)
        if not np.all(np.isfinite(risks)):
            raise SelectionError(f"non-finite risk under rule {rule.name}")
        best = argmin_smallest(risks, grid)
        reports[rule.name] = SelectionReport(
            rule=rule.name, grid=list(grid), risks=risks,
            chosen_lambda=grid[best], chosen_model=candidates[best],
            imputer=imputer, split_seed=seed, warnings=rule_warnings,
            candidates=candidates)
    return reports


def select(source, target_X, family, kernel, grid, imputer_lambda, rule,
           n1=None, seed=0, opts=None, imputer_scores=None):
    """Select a penalty from ``grid`` under a single rule; see :func:`select_many`."""
    return select_many(source, target_X, family, kernel, grid, imputer_lambda,
                       [rule], n1=n1, seed=seed, opts=opts,
                       imputer_scores=imputer_scores)[rule.name]
