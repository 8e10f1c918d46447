"""Kernels and Gram-matrix assembly.

Inner products are accumulated feature by feature in a fixed order, so
``gram`` is exactly symmetric and ``cross_gram(X, Z)`` is exactly the
transpose of ``cross_gram(Z, X)``.
"""

import numpy as np

from .dataset import as_matrix

_BLOCK = 2048


class KernelDomainError(ValueError):
    pass


def _inner(X, Z):
    out = np.zeros((X.shape[0], Z.shape[0]))
    for k in range(X.shape[1]):
        out += np.multiply.outer(X[:, k], Z[:, k])
    return out


class Kernel:
    name = "kernel"

    def __repr__(self):
        return f"{type(self).__name__}()"

    def __eq__(self, other):
        return type(self) is type(other) and vars(self) == vars(other)

    def __hash__(self):
        return hash((type(self), tuple(sorted(vars(self).items()))))

    def check(self, X):
        X = as_matrix(X)
        if not np.all(np.isfinite(X)):
            raise KernelDomainError("covariates must be finite")
        return X

    def _from_inner(self, S):
        raise NotImplementedError

    def _pairs(self, X, Z):
        return self._from_inner(_inner(X, Z))

    def eval(self, x, z):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        z = np.atleast_1d(np.asarray(z, dtype=float))
        if x.shape != z.shape or x.ndim != 1:
            raise KernelDomainError("eval expects two vectors of equal length")
        return float(self.cross_gram(x[None, :], z[None, :])[0, 0])

    def gram(self, X):
        X = self.check(X)
        if X.shape[0] == 0:
            raise KernelDomainError("empty covariate matrix")
        return self._pairs(X, X)

    def cross_gram(self, X, Z):
        X = self.check(X)
        Z = self.check(Z)
        if X.shape[1] != Z.shape[1]:
            raise KernelDomainError(
                f"dimension mismatch: {X.shape[1]} vs {Z.shape[1]}")
        return self._pairs(X, Z)

    def operator(self, X):
        """Return ``v -> K(X, X) v`` for repeated products on fixed data."""
        K = self.gram(X)
        return lambda v: K @ v

    def cross_matvec(self, Z, X, v):
        """``cross_gram(Z, X) @ v`` computed in row blocks of ``Z``."""
        Z = self.check(Z)
        X = self.check(X)
        v = np.asarray(v, dtype=float)
        out = np.empty(Z.shape[0])
        for start in range(0, Z.shape[0], _BLOCK):
            stop = start + _BLOCK
            out[start:stop] = self.cross_gram(Z[start:stop], X) @ v
        return out


class Linear(Kernel):
    name = "linear"

    def _from_inner(self, S):
        return S


class Affine(Kernel):
    name = "affine"

    def _from_inner(self, S):
        return 1.0 + S


class Polynomial(Kernel):
    name = "polynomial"

    def __init__(self, degree=2):
        if int(degree) != degree or degree < 1:
            raise ValueError("polynomial degree must be a positive integer")
        self.degree = int(degree)

    def __repr__(self):
        return f"Polynomial(degree={self.degree})"

    def _from_inner(self, S):
        return (1.0 + S) ** self.degree


class Sobolev1(Kernel):
    """First-order Sobolev kernel ``min(x, z)`` on [0, 1].

    Products with the Gram matrix use the sorted-prefix-sum identity
    ``sum_j min(z, x_j) v_j = sum_{x_j <= z} x_j v_j + z * sum_{x_j > z} v_j``,
    which costs O(n log n) instead of O(n^2).
    """

    name = "sobolev1"

    def check(self, X):
        X = super().check(X)
        if X.shape[1] != 1:
            raise KernelDomainError("Sobolev1 kernel requires scalar covariates")
        if X.size and (X.min() < 0.0 or X.max() > 1.0):
            raise KernelDomainError("Sobolev1 covariates must lie in [0, 1]")
        return X

    def _pairs(self, X, Z):
        return np.minimum.outer(X[:, 0], Z[:, 0])

    def _prefix(self, X, v):
        x = X[:, 0]
        order = np.argsort(x, kind="stable")
        xs = x[order]
        vs = np.asarray(v, dtype=float)[order]
        # lower[c] = sum of x_j v_j over the c smallest x; upper[c] = sum of the rest of v
        lower = np.concatenate(([0.0], np.cumsum(xs * vs)))
        upper = np.concatenate((np.cumsum(vs[::-1])[::-1], [0.0]))
        return xs, lower, upper

    def _apply(self, xs, lower, upper, z):
        c = np.searchsorted(xs, z, side="right")
        return lower[c] + z * upper[c]

    def operator(self, X):
        X = self.check(X)
        x = X[:, 0]

        def matvec(v):
            xs, lower, upper = self._prefix(X, v)
            return self._apply(xs, lower, upper, x)

        return matvec

    def cross_matvec(self, Z, X, v):
        Z = self.check(Z)
        X = self.check(X)
        xs, lower, upper = self._prefix(X, v)
        return self._apply(xs, lower, upper, Z[:, 0])


def get_kernel(name, degree=2):
    name = name.lower()
    if name == "linear":
        return Linear()
    if name == "affine":
        return Affine()
    if name in ("polynomial", "poly"):
        return Polynomial(degree)
    if name in ("sobolev1", "sobolev"):
        return Sobolev1()
    raise ValueError(f"unknown kernel {name!r}; "
                     "choose from linear, affine, polynomial, sobolev1")
