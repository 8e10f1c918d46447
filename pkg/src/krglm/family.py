"""Exponential families with canonical link.

Each family is described by its log-partition function ``a`` and the first
two derivatives: ``a'`` is the mean map and ``a''`` the variance (dispersion
fixed to one). All methods are vectorised over numpy arrays and return
python floats for scalar input.
"""

import numpy as np

WEIGHT_FLOOR = 1e-10
POISSON_MAX_SCORE = 50.0


class FamilyDomainError(ValueError):
    """Input outside the domain on which a family is evaluated."""


def _as_finite(u, name="u"):
    arr = np.asarray(u, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise FamilyDomainError(f"{name} must be finite")
    return arr


def _out(arr):
    return float(arr) if np.ndim(arr) == 0 else arr


class Family:
    """Base class; subclasses implement ``_a``, ``_mean`` and ``_var``."""

    name = "family"

    def __repr__(self):
        return f"{type(self).__name__}()"

    def __eq__(self, other):
        return type(self) is type(other)

    def __hash__(self):
        return hash(type(self))

    def _check(self, u):
        return _as_finite(u)

    def log_partition(self, u):
        return _out(self._a(self._check(u)))

    def mean(self, u):
        return _out(self._mean(self._check(u)))

    def variance(self, u):
        return _out(self._var(self._check(u)))

    def bregman(self, u, v):
        """D_a(u, v) = a(u) - a(v) - a'(v) (u - v), elementwise."""
        u = self._check(u)
        v = self._check(v)
        d = self._a(u) - self._a(v) - self._mean(v) * (u - v)
        # rounding can push the exact-zero case slightly negative
        return _out(np.maximum(d, 0.0))

    def check_response(self, y):
        y = np.asarray(y, dtype=float)
        if not np.all(np.isfinite(y)):
            raise FamilyDomainError("responses must be finite")
        return y

    def irls_step_terms(self, eta, y, weight_floor=WEIGHT_FLOOR):
        """Fisher-scoring weight and pseudo-response at scores ``eta``.

        With the canonical link dmu/deta equals the variance, so the weight
        is ``a''(eta)`` and the pseudo-response ``eta + (y - a'(eta)) / a''(eta)``.
        The weight is clipped below at ``weight_floor``.
        """
        eta = self._check(eta)
        y = self.check_response(y)
        w = np.maximum(self._var(eta), weight_floor)
        z = eta + (y - self._mean(eta)) / w
        if not np.all(np.isfinite(z)):
            raise FamilyDomainError("non-finite pseudo-response")
        return _out(w), _out(z)


class Gaussian(Family):
    name = "gaussian"

    def _a(self, u):
        return 0.5 * u * u

    def _mean(self, u):
        return u.copy() if isinstance(u, np.ndarray) else u

    def _var(self, u):
        return np.ones_like(u)

    def bregman(self, u, v):
        return _out(0.5 * (self._check(u) - self._check(v)) ** 2)


class Logistic(Family):
    name = "logistic"

    def _a(self, u):
        # log(1 + e^u) without overflow
        return np.maximum(u, 0.0) + np.log1p(np.exp(-np.abs(u)))

    def _mean(self, u):
        e = np.exp(-np.abs(u))
        return np.where(u >= 0, 1.0 / (1.0 + e), e / (1.0 + e))

    def _var(self, u):
        # s (1 - s) with s = sigmoid(-|u|) <= 1/2 rounds to at most 1/4
        e = np.exp(-np.abs(u))
        s = e / (1.0 + e)
        return s * (1.0 - s)

    def check_response(self, y):
        y = super().check_response(y)
        if np.any((y < 0) | (y > 1)):
            raise FamilyDomainError("logistic responses must lie in [0, 1]")
        return y


class Poisson(Family):
    name = "poisson"

    def _check(self, u):
        u = _as_finite(u)
        if np.any(u > POISSON_MAX_SCORE):
            raise FamilyDomainError(
                f"Poisson scores above {POISSON_MAX_SCORE} are not supported")
        return u

    def _a(self, u):
        return np.exp(u)

    def _mean(self, u):
        return np.exp(u)

    def _var(self, u):
        return np.exp(u)

    def check_response(self, y):
        y = super().check_response(y)
        if np.any(y < 0):
            raise FamilyDomainError("Poisson responses must be nonnegative")
        return y


GAUSSIAN = Gaussian()
LOGISTIC = Logistic()
POISSON = Poisson()

_FAMILIES = {"gaussian": GAUSSIAN, "linear": GAUSSIAN, "logistic": LOGISTIC,
             "poisson": POISSON}


def get_family(name):
    try:
        return _FAMILIES[name.lower()]
    except KeyError:
        raise ValueError(f"unknown family {name!r}; "
                         f"choose from gaussian, logistic, poisson") from None
