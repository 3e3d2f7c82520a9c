"""Test functions: GP sample paths and "needle in a haystack" bump families."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .environment import Domain
from .errors import ConfigError, ConstructionError, NumericalError
from .kernels import KernelSpec

GP_JITTER = 1e-8
# bump support radius as a fraction of the half cell width
_SUPPORT_FRACTION = 0.9


@dataclass
class GPSampleInstance:
    kernel: KernelSpec
    seed: int
    values: np.ndarray


def sample_gp_function(domain: Domain, kernel: KernelSpec, seed: int, jitter: float = GP_JITTER) -> GPSampleInstance:
    """One joint draw from ``N(0, K + jitter * I)`` over all domain points."""
    K = kernel.cross(domain.points, domain.points)
    K[np.diag_indices_from(K)] += jitter
    try:
        L = np.linalg.cholesky(K)
    except np.linalg.LinAlgError:
        raise NumericalError(
            f"GP sample covariance is not positive definite with jitter {jitter:g}; try a larger jitter"
        ) from None
    z = np.random.default_rng(seed).standard_normal(len(domain))
    return GPSampleInstance(kernel, int(seed), L @ z)


def bump_profile(u):
    """Smooth compactly supported bump: 1 at u=0, 0 for u >= 1, decreasing in between."""
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    inside = u < 1.0
    ui = u[inside]
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - ui * ui))
    return out


@dataclass
class HardInstanceFamily:
    """M bump functions, one per congruent cell of the domain's bounding box.

    Every function has height ``2 * epsilon`` at the centre of its cell and
    vanishes outside a ball strictly inside that cell.
    """

    M: int
    epsilon: float
    low: np.ndarray
    high: np.ndarray
    centers: np.ndarray
    radius: float
    values: np.ndarray  # (M, |X|)
    family_index: int = 0
    checks: dict = field(default_factory=dict)

    def evaluate(self, m: int, x) -> float:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        r = np.linalg.norm(x - self.centers[m])
        return float(2.0 * self.epsilon * bump_profile(r / self.radius))

    def cell_of(self, x) -> int:
        """Index of the cell containing ``x`` (cells ordered like ``centers``)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        per_dim = round(self.M ** (1.0 / len(x)))
        width = (self.high - self.low) / per_dim
        cell = np.clip(np.floor((x - self.low) / width).astype(int), 0, per_dim - 1)
        return int(np.ravel_multi_index(tuple(cell), (per_dim,) * len(x)))


def _cells_per_dim(M: int, d: int) -> int:
    k = round(M ** (1.0 / d))
    for cand in (k - 1, k, k + 1):
        if cand >= 1 and cand**d == M:
            return cand
    raise ConfigError(f"M={M} is not a perfect {d}-th power; cannot tile a {d}-dimensional box")


def verify_family(fam: HardInstanceFamily, domain: Domain) -> dict:
    """Brute-force checks of the three testable family properties."""
    eps = fam.epsilon
    vals = fam.values
    in_range = bool(np.all(vals >= -2 * eps) and np.all(vals <= 2 * eps))
    # eps-optimal for f_m means f_m(x) > max f_m - eps = eps
    near_opt = vals > eps
    disjoint = bool(np.all(near_opt.sum(axis=0) <= 1))
    peak_ok = True
    for m in range(fam.M):
        centre_val = fam.evaluate(m, fam.centers[m])
        nearest = int(np.argmin(np.linalg.norm(domain.points - fam.centers[m], axis=1)))
        if not (math.isclose(centre_val, 2 * eps, rel_tol=0, abs_tol=1e-15)
                and vals[m].max() <= centre_val
                and vals[m, nearest] == vals[m].max()
                and fam.cell_of(fam.centers[m]) == m):
            peak_ok = False
    return {"value_range": in_range, "eps_optimal_disjoint": disjoint, "peak_at_center": peak_ok}


def make_hard_family(domain: Domain, M: int, epsilon: float, family_index: int = 0) -> HardInstanceFamily:
    if not epsilon > 0:
        raise ConfigError(f"epsilon must be > 0, got {epsilon}")
    if int(M) != M or M < 1:
        raise ConfigError(f"M must be a positive integer, got {M}")
    M = int(M)
    d = domain.dim
    per_dim = _cells_per_dim(M, d)
    low, high = domain.bounding_box()
    width = (high - low) / per_dim
    if np.any(width <= 0):
        raise ConfigError("domain bounding box is degenerate")
    grids = np.meshgrid(*[np.arange(per_dim)] * d, indexing="ij")
    cells = np.stack([g.ravel() for g in grids], axis=1)
    centers = low + (cells + 0.5) * width
    radius = _SUPPORT_FRACTION * 0.5 * float(width.min())
    dist = np.linalg.norm(domain.points[None, :, :] - centers[:, None, :], axis=2)
    values = 2.0 * epsilon * bump_profile(dist / radius)
    fam = HardInstanceFamily(M, float(epsilon), low, high, centers, radius, values, family_index)
    fam.checks = verify_family(fam, domain)
    failed = [name for name, ok in fam.checks.items() if not ok]
    if failed:
        raise ConstructionError(f"hard family (index {family_index}) violates: {', '.join(failed)}")
    return fam


def make_family_sequence(domain: Domain, B: int, epsilons, Ms) -> list[HardInstanceFamily]:
    epsilons, Ms = list(epsilons), list(Ms)
    if not (len(epsilons) == len(Ms) == B):
        raise ConfigError(f"need exactly B={B} epsilons and Ms, got {len(epsilons)} and {len(Ms)}")
    out = []
    for i, (eps, M) in enumerate(zip(epsilons, Ms), start=1):
        try:
            out.append(make_hard_family(domain, M, eps, family_index=i))
        except (ConfigError, ConstructionError) as exc:
            raise type(exc)(f"family {i}: {exc}") from None
    return out
