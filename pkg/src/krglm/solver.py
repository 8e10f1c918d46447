"""Ridge-regularised kernel GLM fitting by Fisher scoring.

The iteration runs in function space ``f = K alpha``. Each step solves the
symmetrised system ``(S K S + n lam I) u = S K W z`` with ``S = W^(1/2)`` by
conjugate gradients and maps back with ``f = S^-1 u``. Because
``n lam f = K W (z - f)`` at the solution, the representer coefficients of
the new iterate are available in closed form,
``alpha = (W (eta - f) + y - a'(eta)) / (n lam)``; no extra solve against
``K`` is needed, which matters for rank-deficient kernels.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .dataset import Dataset, as_matrix
from .family import WEIGHT_FLOOR, Family, FamilyDomainError, Gaussian
from .kernels import Kernel

logger = logging.getLogger(__name__)

STAGNATION_WINDOW = 50
MAX_HALVINGS = 20


class SolverError(RuntimeError):
    """The inner linear solve failed."""


class SPDViolation(SolverError):
    """Conjugate gradients met a direction with nonpositive curvature."""


def cg_solve(apply_A, b, tol=1e-10, max_iter=None, x0=None, return_info=False):
    """Solve ``A x = b`` for symmetric positive definite ``A`` given as a matvec.

    Stops when ``||A x - b|| <= tol * ||b||``. Raises :class:`SPDViolation`
    on breakdown and :class:`SolverError` when the residual has not improved
    for 50 iterations or ``max_iter`` is exhausted.
    """
    b = np.asarray(b, dtype=float)
    if max_iter is None:
        max_iter = 10 * b.size
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float)
    r = b - apply_A(x) if x0 is not None else b.copy()
    bnorm = np.linalg.norm(b)
    target = tol * bnorm
    res = np.linalg.norm(r)
    if res <= target or bnorm == 0.0:
        return (x, {"iterations": 0, "residual": res}) if return_info else x

    p = r.copy()
    rs = r @ r
    best, since_best = res, 0
    for it in range(1, max_iter + 1):
        Ap = apply_A(p)
        curv = p @ Ap
        if not curv > 0.0:
            raise SPDViolation(
                f"pAp = {curv:.3e} at CG iteration {it}; operator is not SPD")
        step = rs / curv
        x += step * p
        r -= step * Ap
        rs_new = r @ r
        res = np.sqrt(rs_new)
        if res <= target:
            info = {"iterations": it, "residual": res}
            return (x, info) if return_info else x
        if res < best:
            best, since_best = res, 0
        else:
            since_best += 1
            if since_best >= STAGNATION_WINDOW:
                raise SolverError(
                    f"CG stagnated: best relative residual {best / bnorm:.3e} "
                    f"(target {tol:.1e}) unchanged for {STAGNATION_WINDOW} "
                    f"iterations at iteration {it}")
        p = r + (rs_new / rs) * p
        rs = rs_new
    raise SolverError(
        f"CG did not reach relative residual {tol:.1e} in {max_iter} "
        f"iterations (reached {res / bnorm:.3e})")


@dataclass(frozen=True)
class SolverOptions:
    irls_max_iter: int = 50
    irls_tol: float = 1e-8
    cg_max_iter: Optional[int] = None  # default min(10 n, 2000)
    cg_tol: float = 1e-13
    weight_floor: float = WEIGHT_FLOOR

    def __post_init__(self):
        if self.irls_max_iter < 1:
            raise ValueError("irls_max_iter must be >= 1")
        if self.cg_max_iter is not None and self.cg_max_iter < 1:
            raise ValueError("cg_max_iter must be >= 1")
        for name in ("irls_tol", "cg_tol", "weight_floor"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    def cg_cap(self, n):
        if self.cg_max_iter is not None:
            return self.cg_max_iter
        return min(10 * n, 2000)


@dataclass(frozen=True, eq=False)
class FittedModel:
    alpha: np.ndarray
    train_X: np.ndarray
    kernel: Kernel
    family: Family
    lam: float
    fitted_scores: np.ndarray
    converged: bool = True
    iterations: int = 0
    objective: float = float("nan")
    objective_path: tuple = field(default=(), repr=False)

    def predict_score(self, Z):
        return predict_score(self, Z)

    def predict_mean(self, Z):
        return predict_mean(self, Z)


def _objective_from_scores(family, y, f, alpha, lam):
    n = y.shape[0]
    loss = (np.sum(family.log_partition(f)) - y @ f) / n
    return float(loss + 0.5 * lam * (alpha @ f))


def regularized_objective(data, family, kernel, alpha, lam):
    """``(1/n)(1' a(K alpha) - y' K alpha) + (lam/2) alpha' K alpha``."""
    X = as_matrix(data)
    alpha = np.asarray(alpha, dtype=float)
    f = kernel.operator(X)(alpha)
    return _objective_from_scores(family, data.y, f, alpha, lam)


def fit_krglm(data, family, kernel, lam, opts=None):
    """Fit a kernel ridge GLM on ``data`` with penalty ``lam``.

    Returns a :class:`FittedModel`. Non-convergence within
    ``opts.irls_max_iter`` is reported through ``converged=False``.
    """
    if opts is None:
        opts = SolverOptions()
    if not isinstance(data, Dataset):
        raise TypeError("data must be a Dataset")
    if data.y is None:
        raise ValueError("fit_krglm needs responses")
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    X = kernel.check(data.X)
    y = family.check_response(data.y)
    n = X.shape[0]
    if n < 1:
        raise ValueError("empty training set")
    K = kernel.operator(X)
    nlam = n * lam
    cg_cap = opts.cg_cap(n)

    f = np.zeros(n)
    alpha = np.zeros(n)
    obj = _objective_from_scores(family, y, f, alpha, lam)
    path = [obj]
    converged = False
    it = 0
    for it in range(1, opts.irls_max_iter + 1):
        w, _ = family.irls_step_terms(f, y, opts.weight_floor)
        w = np.asarray(w, dtype=float).reshape(n)
        resid = y - np.asarray(family.mean(f)).reshape(n)
        s = np.sqrt(w)
        # W z = W eta + (y - mu), formed without the large pseudo-response
        wz = w * f + resid
        u = cg_solve(lambda v: s * K(s * v) + nlam * v, s * K(wz),
                     tol=opts.cg_tol, max_iter=cg_cap)
        f_prop = u / s
        alpha_new = (w * (f - f_prop) + resid) / nlam
        f_new = K(alpha_new)
        change = np.max(np.abs(f_new - f))

        step = 1.0
        accepted = False
        slack = 1e-12 * (1.0 + abs(obj))
        for _ in range(MAX_HALVINGS + 1):
            a_try = alpha + step * (alpha_new - alpha)
            f_try = f + step * (f_new - f)
            try:
                obj_try = _objective_from_scores(family, y, f_try, a_try, lam)
            except FamilyDomainError:
                obj_try = np.inf
            if obj_try <= obj + slack:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            # no decrease along the Newton direction: numerically stationary
            converged = change <= np.sqrt(opts.irls_tol) * (1.0 + np.max(np.abs(f)))
            if not converged:
                logger.warning("IRLS line search failed at iteration %d", it)
            break
        if step < 1.0:
            logger.debug("IRLS step halved to %g at iteration %d", step, it)
        alpha, f, obj = a_try, f_try, obj_try
        path.append(obj)
        if isinstance(family, Gaussian):
            # unit weights: one weighted least-squares solve is exact
            converged = True
            break
        if step * change <= opts.irls_tol * (1.0 + np.max(np.abs(f))):
            converged = True
            break

    if not converged:
        logger.warning("IRLS did not converge in %d iterations (lambda=%g)",
                       it, lam)
    return FittedModel(alpha=alpha, train_X=X, kernel=kernel, family=family,
                       lam=float(lam), fitted_scores=f, converged=bool(converged),
                       iterations=it, objective=obj, objective_path=tuple(path))


def predict_score(model, Z):
    """Scores ``sum_i alpha_i K(x_i, z)`` at the rows of ``Z``."""
    return model.kernel.cross_matvec(as_matrix(Z), model.train_X, model.alpha)


def predict_mean(model, Z):
    return np.asarray(model.family.mean(predict_score(model, Z)), dtype=float)
