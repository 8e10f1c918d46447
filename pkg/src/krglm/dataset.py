from dataclasses import dataclass
from typing import Optional

import numpy as np


@dataclass(frozen=True)
class Dataset:
    """Covariate matrix ``X`` (n x d) with an optional response vector ``y``."""

    X: np.ndarray
    y: Optional[np.ndarray] = None

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if X.ndim != 2:
            raise ValueError("covariates must be a 2-d array")
        if not np.all(np.isfinite(X)):
            raise ValueError("covariates contain non-finite values")
        object.__setattr__(self, "X", X)
        if self.y is not None:
            y = np.asarray(self.y, dtype=float).ravel()
            if y.shape[0] != X.shape[0]:
                raise ValueError(
                    f"{y.shape[0]} responses for {X.shape[0]} covariate rows")
            if not np.all(np.isfinite(y)):
                raise ValueError("responses contain non-finite values")
            object.__setattr__(self, "y", y)

    def __len__(self):
        return self.X.shape[0]

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def d(self):
        return self.X.shape[1]

    @property
    def labeled(self):
        return self.y is not None

    def subset(self, idx):
        idx = np.asarray(idx)
        return Dataset(self.X[idx], None if self.y is None else self.y[idx])

    def unlabeled(self):
        return Dataset(self.X)


def as_matrix(X):
    """Covariates of a Dataset or array as a float (n, d) matrix."""
    if isinstance(X, Dataset):
        return X.X
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    return X
