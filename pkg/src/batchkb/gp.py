"""GP posterior over a growing sample set.

The Cholesky factor of ``K_t + lam * I`` is extended one row per added point.
Optionally a fixed set of query points is *tracked*: for those we keep
``V = L^{-1} k_t(X)`` up to date, so the posterior variance over the whole
set is available after every addition at O(m * t) cost.  This is what
max-variance sampling needs.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.linalg import solve_triangular

from .errors import ConfigError, InputError, LogicError, NumericalError
from .kernels import KernelSpec, gram_matrix

NEG_VARIANCE_TOL = 1e-10


def _clamp_variance(var: np.ndarray) -> np.ndarray:
    low = var.min(initial=0.0)
    if low < -NEG_VARIANCE_TOL:
        raise NumericalError(f"posterior variance {low:.3e} is negative beyond round-off", low)
    return np.clip(var, 0.0, None)


class GPPosterior:
    """Zero-mean GP posterior conditioned on an ordered list of points.

    The same point may be added several times (samples form a multiset).
    Observations are optional and only needed for the mean.
    """

    def __init__(self, kernel: KernelSpec, lam: float, tracked=None):
        if not lam > 0:
            raise ConfigError(f"regularizer lambda must be > 0, got {lam}")
        self.kernel = kernel
        self.lam = float(lam)
        self._n = 0
        self._dim = None
        self._points = np.empty((0, 0))
        self._L = np.empty((0, 0))
        self._y = None
        self._alpha = None
        self._w = None
        self._tracked = None
        self._V = None
        self._tvar = None
        if tracked is not None:
            self.track(tracked)

    # -- bookkeeping -------------------------------------------------------
    @property
    def n(self) -> int:
        return self._n

    @property
    def points(self) -> np.ndarray:
        return self._points[: self._n].copy()

    @property
    def factor(self) -> np.ndarray:
        """Lower-triangular factor of ``K_t + lam * I`` (copy)."""
        return self._L[: self._n, : self._n].copy()

    @property
    def has_observations(self) -> bool:
        return self._y is not None

    def _check_point(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.ndim != 1:
            raise InputError(f"expected a single point, got shape {x.shape}")
        if self._dim is None:
            self._dim = x.shape[0]
        elif x.shape[0] != self._dim:
            raise InputError(f"point has dimension {x.shape[0]}, expected {self._dim}")
        return x

    def _check_queries(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :] if self._dim is None or X.shape[0] == self._dim else X[:, None]
        if self._dim is None:
            self._dim = X.shape[1]
        elif X.shape[1] != self._dim:
            raise InputError(f"query dimension {X.shape[1]} does not match {self._dim}")
        return X

    def _grow(self):
        cap = max(8, 2 * self._L.shape[0])
        L = np.zeros((cap, cap))
        L[: self._n, : self._n] = self._L[: self._n, : self._n]
        P = np.zeros((cap, self._dim))
        P[: self._n] = self._points[: self._n]
        self._L, self._points = L, P
        if self._V is not None:
            V = np.zeros((self._V.shape[0], cap))
            V[:, : self._n] = self._V[:, : self._n]
            self._V = V

    def track(self, X):
        """Register query points whose variance is maintained incrementally."""
        X = self._check_queries(X)
        self._tracked = X.copy()
        cap = self._L.shape[0]
        self._V = np.zeros((X.shape[0], cap))
        if self._n:
            Kx = self.kernel.cross(self._points[: self._n], X)
            self._V[:, : self._n] = solve_triangular(self._L[: self._n, : self._n], Kx, lower=True).T
        self._tvar = 1.0 - np.sum(self._V[:, : self._n] ** 2, axis=1)
        return self

    # -- updates -----------------------------------------------------------
    def add_point(self, x) -> "GPPosterior":
        """Append ``x`` and extend the factor by one row (no refactorization)."""
        x = self._check_point(x)
        n = self._n
        if n >= self._L.shape[0] or self._points.shape[1] != self._dim:
            if n == 0:
                self._points = np.zeros((0, self._dim))
            self._grow()
        if n:
            kx = self.kernel.cross(self._points[:n], x[None, :])[:, 0]
            row = solve_triangular(self._L[:n, :n], kx, lower=True)
        else:
            row = np.empty(0)
        pivot = 1.0 + self.lam - row @ row
        if not pivot > 0:
            raise NumericalError(f"Cholesky extension failed: pivot {pivot:.3e} <= 0", pivot)
        d = math.sqrt(pivot)
        self._L[n, :n] = row
        self._L[n, n] = d
        self._points[n] = x
        if self._V is not None:
            kq = self.kernel.cross(self._tracked, x[None, :])[:, 0]
            col = (kq - self._V[:, :n] @ row) / d
            self._V[:, n] = col
            self._tvar -= col * col
        self._n = n + 1
        self._y = self._alpha = self._w = None
        self.last_pivot = pivot
        return self

    def set_observations(self, y) -> "GPPosterior":
        y = np.asarray(y, dtype=float).ravel()
        if y.shape[0] != self._n:
            raise InputError(f"got {y.shape[0]} observations for {self._n} sampled points")
        self._y = y.copy()
        if self._n:
            L = self._L[: self._n, : self._n]
            self._w = solve_triangular(L, y, lower=True)
            self._alpha = solve_triangular(L.T, self._w, lower=False)
        else:
            self._w = self._alpha = np.empty(0)
        return self

    # -- queries -----------------------------------------------------------
    def variance(self, X) -> np.ndarray:
        """Posterior variance at each row of ``X`` (clamped to >= 0)."""
        X = self._check_queries(X)
        if not self._n:
            return np.ones(X.shape[0])
        Kx = self.kernel.cross(self._points[: self._n], X)
        W = solve_triangular(self._L[: self._n, : self._n], Kx, lower=True)
        return _clamp_variance(1.0 - np.sum(W * W, axis=0))

    def mean(self, X) -> np.ndarray:
        X = self._check_queries(X)
        if not self._n:
            return np.zeros(X.shape[0])
        if self._alpha is None:
            raise LogicError("posterior mean requested before observations were set")
        return self.kernel.cross(X, self._points[: self._n]) @ self._alpha

    def tracked_variance(self) -> np.ndarray:
        if self._V is None:
            raise LogicError("no tracked query set")
        return _clamp_variance(self._tvar.copy())

    def tracked_mean(self) -> np.ndarray:
        if self._V is None:
            raise LogicError("no tracked query set")
        if not self._n:
            return np.zeros(self._tracked.shape[0])
        if self._w is None:
            raise LogicError("posterior mean requested before observations were set")
        return self._V[:, : self._n] @ self._w


def empty_posterior(kernel: KernelSpec, lam: float) -> GPPosterior:
    return GPPosterior(kernel, lam)


def posterior_variance(state: GPPosterior, x) -> float:
    return float(state.variance(np.atleast_1d(np.asarray(x, dtype=float))[None, :])[0])


def posterior_mean(state: GPPosterior, x) -> float:
    return float(state.mean(np.atleast_1d(np.asarray(x, dtype=float))[None, :])[0])


def empirical_info_gain(kernel: KernelSpec, noise_var: float, points) -> float:
    """Mutual information ``0.5 * log det(I + K / noise_var)`` of a point set (nats)."""
    if not noise_var > 0:
        raise ConfigError(f"noise variance must be > 0, got {noise_var}")
    K = gram_matrix(kernel, points)
    try:
        L = np.linalg.cholesky(np.eye(K.shape[0]) + K / noise_var)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"information gain factorization failed: {exc}") from None
    return float(np.sum(np.log(np.diag(L))))


def info_gain_constant(noise_sigma: float) -> float:
    """``2 / log(1 + sigma^-2)``, the sum-of-variances-to-information-gain ratio."""
    return 2.0 / math.log1p(noise_sigma ** -2)
