"""Finite domains, the noisy black-box oracle and perturbation neighborhoods."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.spatial.distance import cdist

from .errors import ConfigError, InputError

# grid coordinates come out of linspace; compare distances with slack
_DIST_SLACK = 1e-9


class Domain:
    """Finite ordered set of points in R^d."""

    def __init__(self, points):
        pts = np.asarray(points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] == 0 or pts.shape[1] == 0:
            raise InputError(f"domain needs a nonempty (n, d) point array, got shape {pts.shape}")
        self.points = pts
        self.points.setflags(write=False)
        self._index = {tuple(p): i for i, p in enumerate(pts.tolist())}
        if len(self._index) != len(pts):
            raise InputError("domain contains duplicate points")

    def __len__(self):
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def index_of(self, x) -> int:
        key = tuple(np.atleast_1d(np.asarray(x, dtype=float)).tolist())
        try:
            return self._index[key]
        except KeyError:
            raise InputError(f"point {list(key)} is not in the domain") from None

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        return self.points.min(axis=0), self.points.max(axis=0)

    def diameter(self) -> float:
        lo, hi = self.bounding_box()
        return float(np.linalg.norm(hi - lo))

    @classmethod
    def grid(cls, low, high, points_per_dim) -> "Domain":
        low = np.atleast_1d(np.asarray(low, dtype=float))
        high = np.atleast_1d(np.asarray(high, dtype=float))
        if low.shape != high.shape:
            raise ConfigError("grid low/high must have the same length")
        counts = np.broadcast_to(np.asarray(points_per_dim, dtype=int), low.shape)
        if np.any(counts < 1) or np.any(high < low):
            raise ConfigError("grid needs points_per_dim >= 1 and high >= low")
        axes = [np.linspace(lo, hi, n) for lo, hi, n in zip(low, high, counts)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return cls(np.stack([m.ravel() for m in mesh], axis=1))

    @classmethod
    def from_config(cls, cfg: dict) -> "Domain":
        if "grid" in cfg:
            g = cfg["grid"]
            try:
                return cls.grid(g["low"], g["high"], g["points_per_dim"])
            except KeyError as exc:
                raise ConfigError(f"domain.grid missing field {exc.args[0]!r}") from None
        if "points" in cfg:
            return cls(cfg["points"])
        raise ConfigError("domain config needs 'grid' or 'points'")


def function_values(domain: Domain, f) -> np.ndarray:
    """Values of ``f`` on the domain; ``f`` is a value array or a callable on points."""
    if callable(f):
        return np.array([float(f(p)) for p in domain.points])
    vals = np.asarray(f, dtype=float).ravel()
    if vals.shape[0] != len(domain):
        raise InputError(f"{vals.shape[0]} function values for a domain of {len(domain)} points")
    return vals


class Environment:
    """Noisy oracle with batched release of observations.

    The noise at time ``t`` comes from a generator seeded with
    ``(seed, t)``, so runs that query at the same time index see the same
    noise regardless of which point they picked.
    """

    def __init__(self, domain: Domain, f, noise_sigma: float, seed: int = 0):
        if noise_sigma < 0:
            raise ConfigError(f"noise_sigma must be >= 0, got {noise_sigma}")
        self.domain = domain
        self.values = function_values(domain, f)
        self.values.setflags(write=False)
        self.noise_sigma = float(noise_sigma)
        self.seed = int(seed)
        self._pending: list[tuple[int, int, float]] = []
        self._seen: set[int] = set()

    def noise(self, t: int) -> float:
        if self.noise_sigma == 0:
            return 0.0
        rng = np.random.default_rng([self.seed, int(t)])
        return self.noise_sigma * float(rng.standard_normal())

    def query_index(self, t: int, i: int) -> None:
        if not 0 <= i < len(self.domain):
            raise InputError(f"domain index {i} out of range")
        if t in self._seen:
            raise InputError(f"time step {t} already queried")
        self._seen.add(t)
        self._pending.append((int(t), int(i), float(self.values[i] + self.noise(t))))

    def query(self, t: int, x) -> None:
        self.query_index(t, self.domain.index_of(x))

    def close_batch(self) -> list[tuple[int, np.ndarray, float]]:
        """Release and clear pending observations as ``(t, x, y)`` in time order."""
        out = sorted(self._pending)
        self._pending = []
        return [(t, self.domain.points[i], y) for t, i, y in out]

    def close_batch_indices(self) -> list[tuple[int, int, float]]:
        out = sorted(self._pending)
        self._pending = []
        return out

    @property
    def pending_count(self) -> int:
        return len(self._pending)


def euclidean(x, y) -> float:
    return float(np.linalg.norm(np.asarray(x, dtype=float) - np.asarray(y, dtype=float)))


@dataclass(frozen=True)
class PerturbationSet:
    """Perturbations ``{x' - x : d(x, x') <= xi}`` over a finite domain."""

    xi: float
    distance: Callable = field(default=euclidean, compare=False)

    def __post_init__(self):
        if not self.xi >= 0:
            raise ConfigError(f"xi must be >= 0, got {self.xi}")

    @property
    def is_euclidean(self) -> bool:
        return self.distance is euclidean


def perturbation_neighborhood(ps: PerturbationSet, domain: Domain, x) -> list[np.ndarray]:
    idx = neighborhood_indices_of(ps, domain, domain.index_of(x))
    return [domain.points[j] for j in idx]


def neighborhood_indices_of(ps: PerturbationSet, domain: Domain, i: int) -> np.ndarray:
    x = domain.points[i]
    if ps.is_euclidean:
        d = np.linalg.norm(domain.points - x, axis=1)
    else:
        d = np.array([ps.distance(x, p) for p in domain.points])
    return np.flatnonzero(d <= ps.xi + _DIST_SLACK * max(1.0, ps.xi))


def neighborhood_indices(ps: PerturbationSet, domain: Domain) -> list[np.ndarray]:
    """Index lists of every point's neighborhood, in domain order."""
    if ps.is_euclidean:
        mask = cdist(domain.points, domain.points) <= ps.xi + _DIST_SLACK * max(1.0, ps.xi)
        return [np.flatnonzero(row) for row in mask]
    return [neighborhood_indices_of(ps, domain, i) for i in range(len(domain))]


def robust_values(domain: Domain, ps: PerturbationSet, f, neighborhoods=None) -> np.ndarray:
    """``min_{delta} f(x + delta)`` for every domain point."""
    vals = function_values(domain, f)
    nbhd = neighborhoods if neighborhoods is not None else neighborhood_indices(ps, domain)
    return np.array([vals[idx].min() for idx in nbhd])


def robust_value(domain: Domain, ps: PerturbationSet, f, x) -> float:
    vals = function_values(domain, f)
    idx = neighborhood_indices_of(ps, domain, domain.index_of(x))
    return float(vals[idx].min())
