"""Kernel ridge GLMs with pseudo-labeling model selection under covariate shift."""

from .crossval import CvReport, FoldPlan, cv_select, make_fold_plan, stratified_kfold
from .dataset import Dataset
from .family import GAUSSIAN, LOGISTIC, POISSON, FamilyDomainError, get_family
from .kernels import (Affine, KernelDomainError, Linear, Polynomial, Sobolev1,
                      get_kernel)
from .selection import (NaiveHoldout, Oracle, Pseudo, SelectionError,
                        SelectionReport, default_candidate_grid,
                        default_imputer_lambda, glm_risk, select, select_many,
                        split_source)
from .shift_lab import (RejectionSplitSpec, SyntheticScenario,
                        cluster_bootstrap_se, effective_sample_size,
                        excess_risk, gen_synthetic, loglog_slope_fit,
                        rejection_split)
from .solver import (FittedModel, SolverError, SolverOptions, SPDViolation,
                     cg_solve, fit_krglm, predict_mean, predict_score,
                     regularized_objective)

__version__ = "0.1.0"

__all__ = [
    "Affine", "CvReport", "Dataset", "FamilyDomainError", "FittedModel",
    "FoldPlan", "GAUSSIAN", "KernelDomainError", "LOGISTIC", "Linear",
    "NaiveHoldout", "Oracle", "POISSON", "Polynomial", "Pseudo",
    "RejectionSplitSpec", "SPDViolation", "SelectionError", "SelectionReport",
    "Sobolev1", "SolverError", "SolverOptions", "SyntheticScenario", "cg_solve",
    "cluster_bootstrap_se", "cv_select", "default_candidate_grid",
    "default_imputer_lambda", "effective_sample_size", "excess_risk",
    "fit_krglm", "gen_synthetic", "get_family", "get_kernel", "glm_risk",
    "loglog_slope_fit", "make_fold_plan", "predict_mean", "predict_score",
    "regularized_objective", "rejection_split", "select", "select_many",
    "split_source", "stratified_kfold",
]
