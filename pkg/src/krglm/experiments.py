"""Experiment drivers: synthetic shift replication and the real-data protocol.

Work items are independent and carry their own seeds; results are always
returned in task order, so output does not depend on the number of workers.
Each worker pins BLAS to one thread for bitwise reproducibility.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor

import numpy as np
from scipy import stats
from threadpoolctl import threadpool_limits

from .crossval import cv_select
from .dataset import Dataset
from .family import LOGISTIC
from .kernels import Affine
from .selection import (NaiveHoldout, Oracle, Pseudo, default_candidate_grid,
                        default_imputer_lambda, glm_risk, select_many)
from .shift_lab import (RejectionSplitSpec, SyntheticScenario, excess_risk,
                        gen_synthetic, rejection_split, sample_target)

logger = logging.getLogger(__name__)

SYNTH_RULES = ("pseudo", "oracle", "naive")
REAL_RULES = ("naive", "pseudo", "oracle")
SUMMARY_NAMES = {"naive": "naive", "pseudo": "pseudo-labeling", "oracle": "oracle"}


def sub_seed(*entropy):
    """Deterministic 63-bit seed derived from a tuple of integers."""
    state = np.random.SeedSequence([int(e) for e in entropy]).generate_state(2)
    return int((int(state[0]) << 31) ^ int(state[1])) & (2 ** 63 - 1)


def _init_worker():
    threadpool_limits(1)


def _call(args):
    func, item = args
    return func(item)


def run_tasks(func, items, jobs=1):
    """``[func(item) for item in items]``, optionally across processes."""
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        with threadpool_limits(1):
            return [func(item) for item in items]
    with ProcessPoolExecutor(max_workers=jobs, initializer=_init_worker) as pool:
        return list(pool.map(_call, [(func, item) for item in items]))


def synth_trial(task):
    """One replication at sample size ``n``.

    Returns ``(n, trial, {rule: excess_risk})`` or ``(n, trial, error)``.
    """
    n, trial, shift_exponent, seed, opts = task
    try:
        scenario = SyntheticScenario(n=n, shift_exponent=shift_exponent,
                                     seed=seed + trial)
        rng = np.random.default_rng([seed + trial, n])
        source, target, truth = gen_synthetic(scenario, rng)
        grid = default_candidate_grid(n, "experiment")
        reports = select_many(
            source, target, scenario.family, scenario.kernel, grid,
            default_imputer_lambda(n, "experiment"),
            [Pseudo(), Oracle(truth_scores=truth), NaiveHoldout()],
            n1=n // 2, seed=sub_seed(seed + trial, n, 1), opts=opts)
        eval_X, eval_truth = sample_target(
            scenario, n, np.random.default_rng([seed + trial, n, 2]))
        risks = {rule: excess_risk(reports[rule].chosen_model, eval_X,
                                   eval_truth, scenario.family)
                 for rule in SYNTH_RULES}
        return n, trial, risks
    except Exception as exc:  # recorded and skipped by the caller
        logger.warning("trial n=%d #%d failed: %s", n, trial, exc)
        return n, trial, f"{type(exc).__name__}: {exc}"


def run_synthetic(n_list, trials, shift_exponent=0.4, seed=0, jobs=1, opts=None):
    """All replications, sorted by ``(n, trial)``.

    Returns ``(records, failures)`` where ``records`` holds
    ``(n, trial, rule, excess_risk)`` tuples.
    """
    tasks = [(int(n), t, shift_exponent, seed, opts)
             for n in sorted(n_list) for t in range(trials)]
    records, failures = [], []
    for n, t, out in run_tasks(synth_trial, tasks, jobs):
        if isinstance(out, str):
            failures.append((n, t, out))
            continue
        for rule in SYNTH_RULES:
            records.append((n, t, rule, out[rule]))
    return records, failures


def standardize(X):
    X = np.asarray(X, dtype=float)
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std[std == 0] = 1.0
    return (X - mean) / std


def log_grid(lo, hi, num):
    if not 0 < lo <= hi:
        raise ValueError("need 0 < lambda_min <= lambda_max")
    if num < 1:
        raise ValueError("grid size must be positive")
    if num == 1:
        return [float(lo)]
    return [float(v) for v in np.geomspace(lo, hi, num)]


def real_seed(task):
    """Repeated K-fold selection for one seed on standardised data.

    Returns ``(seed, {rule: (test_risk, chosen_lambda)})`` or ``(seed, error)``.
    """
    (seed, data, family, kernel, l, K, R, ood_split, grid, imputer_lambda,
     opts) = task
    try:
        id_data, ood = rejection_split(data, RejectionSplitSpec(l),
                                       sub_seed(seed, 0))
        n0 = len(ood)
        if n0 < 2:
            raise ValueError(f"only {n0} OOD rows after rejection sampling")
        n_sel = min(n0 - 1, max(1, int(round(ood_split * n0))))
        perm = np.random.default_rng(sub_seed(seed, 1)).permutation(n0)
        sel = ood.subset(np.sort(perm[:n_sel]))
        test = ood.subset(np.sort(perm[n_sel:]))
        report = cv_select(id_data, sel.X, sel.y, family, kernel, grid,
                           imputer_lambda, K=K, R=R, seed=sub_seed(seed, 2),
                           rules=REAL_RULES, opts=opts)
        out = {}
        for rule in REAL_RULES:
            model = report.models[rule]
            out[rule] = (glm_risk(model.predict_score(test.X), test.y, family),
                         report.chosen[rule])
        return seed, out
    except Exception as exc:
        logger.warning("seed %d failed: %s", seed, exc)
        return seed, f"{type(exc).__name__}: {exc}"


def run_real(data, seeds, family=LOGISTIC, kernel=None, l=3.0, K=2, R=6,
             ood_split=0.5, grid=None, imputer_lambda=1e-4, jobs=1, opts=None):
    """Per-seed test risks for the three rules on standardised ``data``.

    ``seeds`` is an iterable of integer seeds. Returns ``(records, failures)``
    with records ``(seed, rule, test_risk, chosen_lambda)``.
    """
    kernel = Affine() if kernel is None else kernel
    grid = log_grid(1e-4, 1e2, 13) if grid is None else grid
    data = Dataset(standardize(data.X), data.y)
    tasks = [(s, data, family, kernel, l, K, R, ood_split, grid,
              imputer_lambda, opts) for s in seeds]
    records, failures = [], []
    for s, out in run_tasks(real_seed, tasks, jobs):
        if isinstance(out, str):
            failures.append((s, out))
            continue
        for rule in REAL_RULES:
            records.append((s, rule) + out[rule])
    return records, failures


def summarize(values, level=0.95):
    """Mean, two-sided t confidence interval and standard error."""
    v = np.asarray(values, dtype=float)
    mean = math.fsum(v) / v.size
    if v.size < 2:
        return mean, mean, mean, 0.0
    se = float(np.std(v, ddof=1) / math.sqrt(v.size))
    half = float(stats.t.ppf(0.5 + level / 2, v.size - 1)) * se
    return mean, mean - half, mean + half, se
