"""Normalized stationary kernels on Euclidean points.

Two families are supported: squared exponential and Matérn with half-integer
smoothness (closed forms only).  Every kernel satisfies ``k(x, x) = 1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, InputError

SUPPORTED_NU = (0.5, 1.5, 2.5)
_FAMILIES = ("se", "matern")


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family plus hyperparameters.

    Parameters
    ----------
    family : {"se", "matern"}
    lengthscale : float
        Positive, in domain-coordinate units.
    nu : float, optional
        Matérn smoothness; required iff ``family == "matern"``.
    """

    family: str
    lengthscale: float
    nu: float | None = None

    def __post_init__(self):
        fam = str(self.family).lower()
        object.__setattr__(self, "family", fam)
        if fam not in _FAMILIES:
            raise ConfigError(f"unknown kernel family {self.family!r}; expected one of {_FAMILIES}")
        if not self.lengthscale > 0:
            raise ConfigError(f"lengthscale must be > 0, got {self.lengthscale}")
        if fam == "matern":
            if self.nu is None or float(self.nu) not in SUPPORTED_NU:
                raise ConfigError(f"Matern nu={self.nu} unsupported; supported values are {SUPPORTED_NU}")
            object.__setattr__(self, "nu", float(self.nu))
        elif self.nu is not None:
            raise ConfigError("nu is only meaningful for the Matern family")
        object.__setattr__(self, "lengthscale", float(self.lengthscale))

    def of_distance(self, r):
        """Kernel value as a function of Euclidean distance (array-friendly)."""
        s = np.asarray(r, dtype=float) / self.lengthscale
        if self.family == "se":
            return np.exp(-0.5 * s * s)
        if self.nu == 0.5:
            return np.exp(-s)
        if self.nu == 1.5:
            u = np.sqrt(3.0) * s
            return (1.0 + u) * np.exp(-u)
        u = np.sqrt(5.0) * s
        return (1.0 + u + u * u / 3.0) * np.exp(-u)

    def cross(self, a, b) -> np.ndarray:
        """Matrix ``[k(a_i, b_j)]`` for point arrays of shape (n, d) and (m, d)."""
        a = _as_points(a)
        b = _as_points(b)
        if a.shape[1] != b.shape[1]:
            raise InputError(f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
        diff = a[:, None, :] - b[None, :, :]
        return self.of_distance(np.sqrt(np.einsum("ijk,ijk->ij", diff, diff)))

    def to_dict(self) -> dict:
        out = {"family": self.family, "lengthscale": self.lengthscale}
        if self.nu is not None:
            out["nu"] = self.nu
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "KernelSpec":
        try:
            return cls(data["family"], data["lengthscale"], data.get("nu"))
        except KeyError as exc:
            raise ConfigError(f"kernel config missing field {exc.args[0]!r}") from None


def _as_points(points) -> np.ndarray:
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or arr.shape[1] < 1:
        raise InputError(f"expected an (n, d) array of points, got shape {arr.shape}")
    return arr


def eval_kernel(spec: KernelSpec, x, x2) -> float:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    x2 = np.atleast_1d(np.asarray(x2, dtype=float))
    if x.shape != x2.shape or x.ndim != 1:
        raise InputError(f"points must share dimension, got shapes {x.shape} and {x2.shape}")
    return float(spec.of_distance(np.sqrt(np.sum((x - x2) ** 2))))


def gram_matrix(spec: KernelSpec, points) -> np.ndarray:
    """Symmetric Gram matrix with unit diagonal."""
    try:
        pts = np.asarray(points, dtype=float)
    except ValueError:
        raise InputError("points have inconsistent dimensions") from None
    if pts.size == 0:
        raise InputError("gram_matrix needs at least one point")
    K = spec.cross(pts, pts)
    # distances are symmetric elementwise, but enforce exactness anyway
    K = np.triu(K) + np.triu(K, 1).T
    np.fill_diagonal(K, 1.0)
    return K
