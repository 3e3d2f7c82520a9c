"""Robust-BPE: batched elimination against worst-case input perturbations.

Exploration covers every perturbed version ``x + delta`` of the active
points.  Elimination compares the worst-case UCB of each candidate with
the best worst-case LCB.  With ``pruned=True``, perturbed points whose
previous-batch LCB already exceeds the candidate's worst-case UCB are
skipped, because they cannot be the minimizing perturbation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bpe import (AlgorithmState, BatchRecord, ConfidenceParams, RunResult, check_schedule,
                  eliminate, resolve_lambda)
from .environment import Domain, Environment, PerturbationSet, neighborhood_indices, robust_values
from .errors import ConfigError, InputError, LogicError
from .gp import GPPosterior, empirical_info_gain
from .kernels import KernelSpec
from .metrics import RegretTrace
from .schedules import BatchSchedule

_OPT_TOL = 1e-12


@dataclass(frozen=True)
class RobustConfig:
    perturbation: PerturbationSet
    pruned_exploration: bool = False

    @classmethod
    def from_dict(cls, data: dict) -> "RobustConfig":
        if data.get("distance", "euclidean") != "euclidean":
            raise ConfigError(f"unsupported distance {data['distance']!r} (only 'euclidean' in configs)")
        return cls(PerturbationSet(float(data.get("xi", 0.0))), bool(data.get("pruned", False)))


def build_exploration_set(active, neighborhoods, prev_ucb=None, prev_lcb=None, pruned: bool = False) -> np.ndarray:
    """Sorted domain indices to sample from in this batch.

    ``prev_ucb`` / ``prev_lcb`` are domain-length arrays from the previous
    batch (NaN where not computed); they are required when ``pruned``.
    """
    active = np.asarray(active)
    if active.size == 0:
        raise LogicError("exploration set requested for an empty active set")
    if not pruned:
        return np.unique(np.concatenate([neighborhoods[x] for x in active]))
    if prev_ucb is None or prev_lcb is None:
        raise LogicError("pruned exploration needs the previous batch's bounds")
    keep = []
    for x in active:
        nb = neighborhoods[x]
        u, l = prev_ucb[nb], prev_lcb[nb]
        if np.isnan(u).any() or np.isnan(l).any():
            raise LogicError(f"previous bounds missing for the neighborhood of point {x}")
        keep.append(nb[l <= u.min()])
    return np.unique(np.concatenate(keep))


def charge_point(x: int, active, neighborhoods) -> int:
    """Active point that bears the regret of querying ``x``.

    ``x`` itself if it is active, otherwise the first active point (domain
    order) whose neighborhood contains it.
    """
    active = np.asarray(active)
    pos = np.searchsorted(active, x)
    if pos < active.size and active[pos] == x:
        return int(x)
    for a in active:
        nb = neighborhoods[a]
        j = np.searchsorted(nb, x)
        if j < nb.size and nb[j] == x:
            return int(a)
    raise LogicError(f"queried point {x} lies outside every active neighborhood")


def robust_bound(values, positions_by_point) -> np.ndarray:
    return np.array([values[pos].min() for pos in positions_by_point])


def run_robust_bpe(env: Environment, kernel: KernelSpec, schedule: BatchSchedule, conf: ConfidenceParams,
                   robust: RobustConfig, lam: float | None = None, neighborhoods=None) -> RunResult:
    check_schedule(env, schedule)
    lam = resolve_lambda(env, lam)
    domain = env.domain
    points = domain.points
    n_pts = len(points)
    if neighborhoods is None:
        neighborhoods = neighborhood_indices(robust.perturbation, domain)
    rvals = robust_values(domain, robust.perturbation, env.values, neighborhoods)
    best = rvals.max()
    beta = conf.beta(n_pts, schedule.B)
    root_beta = math.sqrt(beta)

    trace = RegretTrace(schedule.endpoints, robust=True)
    state = AlgorithmState(active=np.arange(n_pts))
    prev_ucb = prev_lcb = None
    t = 0
    for i, n_i in enumerate(schedule.sizes, start=1):
        state.batch_index = i
        active = state.active
        union = build_exploration_set(active, neighborhoods)
        if robust.pruned_exploration and i > 1:
            explore = build_exploration_set(active, neighborhoods, prev_ucb, prev_lcb, pruned=True)
        else:
            explore = union
        # variances tracked on the whole union: elimination needs bounds there
        explore_pos = np.searchsorted(union, explore)
        post = GPPosterior(kernel, lam, tracked=points[union])
        queried, charged, var_sum = [], [], 0.0
        for _ in range(n_i):
            var = post.tracked_variance()[explore_pos]
            k = int(np.argmax(var))
            var_sum += var[k]
            x = int(explore[k])
            t += 1
            env.query_index(t, x)
            post.add_point(points[x])
            queried.append(x)
            c = charge_point(x, active, neighborhoods)
            charged.append(c)
            trace.accumulate(t, c, best - rvals[c])
        obs = env.close_batch_indices()
        post.set_observations([y for _, _, y in obs])
        mu = post.tracked_mean()
        sd = np.sqrt(post.tracked_variance())
        ucb, lcb = mu + root_beta * sd, mu - root_beta * sd

        nb_pos = [np.searchsorted(union, neighborhoods[x]) for x in active]
        survivors = eliminate(active, robust_bound(ucb, nb_pos), robust_bound(lcb, nb_pos))
        state.history.append(BatchRecord(
            index=i, queried=queried, active=active, survivors=survivors, bound_indices=union,
            mean=mu, sd=sd, ucb=ucb, lcb=lcb, variance_sum=var_sum,
            info_gain=empirical_info_gain(kernel, lam, points[queried]),
            explored=explore, charged=charged,
        ))
        prev_ucb = np.full(n_pts, np.nan)
        prev_lcb = np.full(n_pts, np.nan)
        prev_ucb[union], prev_lcb[union] = ucb, lcb
        state.active = survivors

    last = trace.x_indices[-1]
    trace.report(last, best - rvals[last])
    return RunResult(trace, state, beta, lam)


def xi_regret(domain: Domain, ps: PerturbationSet, f, x_star, x) -> float:
    """``r_xi(x)``: robust value of the robust optimum minus that of ``x``."""
    rv = robust_values(domain, ps, f)
    i_star, i = domain.index_of(x_star), domain.index_of(x)
    if rv[i_star] < rv.max() - _OPT_TOL:
        raise InputError(f"x_star={list(domain.points[i_star])} is not a xi-robust optimizer")
    return float(rv[i_star] - rv[i])
