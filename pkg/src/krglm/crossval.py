"""Repeated stratified K-fold pseudo-labeling.

For every fold ``(r, k)`` the fold itself trains the candidates, its
complement trains the imputation model, and three risk curves are recorded:
naive (candidates on the complement, observed labels), pseudo (OOD selection
set against soft pseudo-labels) and oracle (OOD selection set against its
true labels). Curves are averaged over all folds and repeats; each rule's
winning penalty is refit on all ID data.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .selection import SelectionError, argmin_smallest, glm_risk, _check_grid
from .solver import fit_krglm

logger = logging.getLogger(__name__)

RULES = ("naive", "pseudo", "oracle")


def _is_binary(labels):
    return np.all(np.isin(labels, (0.0, 1.0)))


def stratified_kfold(labels, K, seed):
    """Fold index per row, balancing each class across folds.

    Rows of each class are shuffled and dealt round-robin; the deal continues
    from class to class so overall fold sizes differ by at most one.
    """
    labels = np.asarray(labels, dtype=float).ravel()
    n = labels.size
    if K < 2:
        raise ValueError("K must be at least 2")
    if n < K:
        raise ValueError(f"cannot make {K} folds from {n} rows")
    if not _is_binary(labels):
        raise ValueError("stratified_kfold expects binary labels")
    rng = np.random.default_rng(seed)
    folds = np.empty(n, dtype=int)
    offset = 0
    for cls in (0.0, 1.0):
        members = np.flatnonzero(labels == cls)
        members = members[rng.permutation(members.size)]
        folds[members] = (offset + np.arange(members.size)) % K
        offset += members.size
    return folds


def shuffled_kfold(n, K, seed):
    if K < 2 or n < K:
        raise ValueError(f"cannot make {K} folds from {n} rows")
    folds = np.empty(n, dtype=int)
    folds[np.random.default_rng(seed).permutation(n)] = np.arange(n) % K
    return folds


@dataclass(frozen=True, eq=False)
class FoldPlan:
    repeats: int
    folds: int
    assignments: np.ndarray  # (repeats, n) fold index of each row
    seed: int

    def candidate_indices(self, r, k):
        return np.flatnonzero(self.assignments[r] == k)

    def imputer_indices(self, r, k):
        return np.flatnonzero(self.assignments[r] != k)

    def __iter__(self):
        for r in range(self.repeats):
            for k in range(self.folds):
                yield r, k


def make_fold_plan(labels, K, R, seed, repeat_seeds=None):
    """Draw ``R`` K-fold partitions, stratified when the labels are binary.

    Repeat ``r`` uses ``repeat_seeds[r]`` if given, else the entropy pair
    ``(seed, r)``.
    """
    labels = np.asarray(labels, dtype=float).ravel()
    if R < 1:
        raise ValueError("R must be at least 1")
    if repeat_seeds is None:
        repeat_seeds = [[seed, r] for r in range(R)]
    if len(repeat_seeds) != R:
        raise ValueError("need one seed per repeat")
    binary = _is_binary(labels)
    rows = []
    for s in repeat_seeds:
        if binary:
            rows.append(stratified_kfold(labels, K, s))
        else:
            rows.append(shuffled_kfold(labels.size, K, s))
    return FoldPlan(repeats=R, folds=K, assignments=np.vstack(rows), seed=seed)


@dataclass(eq=False)
class CvReport:
    grid: list
    curves: dict
    fold_curves: dict  # rule -> (K*R, m) array ordered by (r, k)
    chosen: dict
    models: dict
    plan: FoldPlan
    warnings: list = field(default_factory=list)


def cv_select(id_data, ood_sel_X, ood_sel_y, family, kernel, grid,
              imputer_lambda, K=2, R=6, seed=0, rules=None, opts=None,
              plan=None, imputer_scores=None):
    """Repeated K-fold pseudo-labeling selection with full-data refit.

    ``rules`` defaults to all three when ``ood_sel_y`` is given, otherwise
    naive and pseudo. ``imputer_scores`` (scores on ``ood_sel_X``) replaces
    every fold's imputation model.
    """
    if not id_data.labeled:
        raise ValueError("ID data must be labeled")
    grid = _check_grid(grid)
    if rules is None:
        rules = RULES if ood_sel_y is not None else ("naive", "pseudo")
    rules = tuple(rules)
    unknown = set(rules) - set(RULES)
    if unknown:
        raise ValueError(f"unknown rules {sorted(unknown)}")
    if "oracle" in rules and ood_sel_y is None:
        raise ValueError("the oracle rule needs OOD selection labels")
    uses_ood = "pseudo" in rules or "oracle" in rules
    if uses_ood and ood_sel_X is None:
        raise ValueError("OOD selection covariates are required")
    if plan is None:
        plan = make_fold_plan(id_data.y, K, R, seed)
    if plan.assignments.shape[1] != len(id_data):
        raise ValueError("fold plan does not match the ID data")
    if "pseudo" in rules and imputer_scores is None and not imputer_lambda > 0:
        raise ValueError("imputer_lambda must be positive")

    warnings = []
    per_fold = {rule: [] for rule in rules}
    for r, k in plan:
        cand = id_data.subset(plan.candidate_indices(r, k))
        held = id_data.subset(plan.imputer_indices(r, k))
        models = [fit_krglm(cand, family, kernel, lam, opts) for lam in grid]
        for m in models:
            if not m.converged:
                warnings.append(f"fold ({r},{k}) lambda={m.lam:g} did not converge")
        if all(not m.converged for m in models):
            raise SelectionError(f"no candidate converged in fold ({r},{k})")
        if uses_ood:
            ood_scores = [m.predict_score(ood_sel_X) for m in models]
        if "naive" in rules:
            per_fold["naive"].append(
                [glm_risk(m.predict_score(held.X), held.y, family) for m in models])
        if "pseudo" in rules:
            if imputer_scores is None:
                imputer = fit_krglm(held, family, kernel, imputer_lambda, opts)
                if not imputer.converged:
                    warnings.append(f"fold ({r},{k}) imputer did not converge")
                scores = imputer.predict_score(ood_sel_X)
            else:
                scores = np.asarray(imputer_scores, dtype=float)
            pseudo = np.asarray(family.mean(scores), dtype=float)
            per_fold["pseudo"].append([glm_risk(s, pseudo, family) for s in ood_scores])
        if "oracle" in rules:
            per_fold["oracle"].append(
                [glm_risk(s, ood_sel_y, family) for s in ood_scores])

    fold_curves = {rule: np.asarray(v, dtype=float) for rule, v in per_fold.items()}
    # correctly rounded column sums: the average does not depend on fold order
    curves = {rule: np.array([math.fsum(col) / v.shape[0] for col in v.T])
              for rule, v in fold_curves.items()}
    chosen = {rule: grid[argmin_smallest(curves[rule], grid)] for rule in rules}
    refits = {}
    models = {}
    for rule in rules:
        lam = chosen[rule]
        if lam not in refits:
            refits[lam] = fit_krglm(id_data, family, kernel, lam, opts)
        models[rule] = refits[lam]
    for w in warnings:
        logger.warning(w)
    return CvReport(grid=list(grid), curves=curves, fold_curves=fold_curves,
                    chosen=chosen, models=models, plan=plan, warnings=warnings)
