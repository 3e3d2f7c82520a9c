"""Batched Pure Exploration over a finite domain.

Each batch samples the point of maximal posterior variance among the active
candidates (variance computed from this batch's samples only), then observes
the whole batch and drops every candidate whose UCB falls below the best LCB.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .environment import Environment
from .errors import ConfigError, LogicError
from .gp import GPPosterior, empirical_info_gain
from .kernels import KernelSpec
from .metrics import RegretTrace
from .schedules import BatchSchedule


@dataclass(frozen=True)
class ConfidenceParams:
    """Width of the confidence bounds.

    ``beta_mode="theoretical"`` gives ``(psi + sqrt(2 log(|X| B / delta)))^2``;
    ``"fixed"`` uses ``beta_value`` as is.
    """

    psi: float = 1.0
    delta: float = 0.1
    beta_mode: str = "theoretical"
    beta_value: float | None = None

    def __post_init__(self):
        if self.beta_mode not in ("theoretical", "fixed"):
            raise ConfigError(f"beta_mode must be 'theoretical' or 'fixed', got {self.beta_mode!r}")
        if self.beta_mode == "fixed":
            if self.beta_value is None or not self.beta_value > 0:
                raise ConfigError("fixed beta_mode needs beta_value > 0")
        else:
            if not self.psi > 0:
                raise ConfigError(f"psi must be > 0, got {self.psi}")
            if not 0 < self.delta < 1:
                raise ConfigError(f"delta must lie in (0, 1), got {self.delta}")

    def beta(self, n_points: int, n_batches: int) -> float:
        if self.beta_mode == "fixed":
            return float(self.beta_value)
        return (self.psi + math.sqrt(2.0 * math.log(n_points * n_batches / self.delta))) ** 2

    @classmethod
    def from_dict(cls, data: dict) -> "ConfidenceParams":
        mode = data.get("beta_mode", "theoretical")
        value = data.get("beta")
        if isinstance(mode, dict):  # {"fixed": 2.0}
            (mode, value), = mode.items()
        return cls(float(data.get("psi", 1.0)), float(data.get("delta", 0.1)), mode,
                   None if value is None else float(value))


@dataclass
class BatchRecord:
    """What happened in one batch; bound arrays are aligned with ``bound_indices``."""

    index: int
    queried: list[int]
    active: np.ndarray
    survivors: np.ndarray
    bound_indices: np.ndarray
    mean: np.ndarray
    sd: np.ndarray
    ucb: np.ndarray
    lcb: np.ndarray
    variance_sum: float
    info_gain: float
    explored: np.ndarray | None = None
    charged: list[int] | None = None

    @property
    def size(self) -> int:
        return len(self.queried)

    def bounds_valid(self, values: np.ndarray) -> bool:
        f = values[self.bound_indices]
        return bool(np.all(self.lcb <= f) and np.all(f <= self.ucb))


@dataclass
class AlgorithmState:
    batch_index: int = 0
    active: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=int))
    history: list[BatchRecord] = field(default_factory=list)


@dataclass
class RunResult:
    trace: RegretTrace
    state: AlgorithmState
    beta: float
    lam: float

    @property
    def queries(self) -> list[int]:
        return [x for rec in self.state.history for x in rec.queried]

    @property
    def survivor_sets(self) -> list[tuple[int, ...]]:
        return [tuple(rec.survivors.tolist()) for rec in self.state.history]


def select_max_variance(posterior: GPPosterior, candidates=None) -> int:
    """Position of the candidate with largest posterior variance (first on ties).

    Without ``candidates`` the posterior's tracked query set is used.
    """
    var = posterior.tracked_variance() if candidates is None else posterior.variance(candidates)
    if var.size == 0:
        raise LogicError("max-variance selection over an empty candidate set")
    return int(np.argmax(var))


def eliminate(active, ucb, lcb) -> np.ndarray:
    """Keep the candidates whose UCB reaches the largest LCB (order preserved)."""
    active = np.asarray(active)
    ucb = np.asarray(ucb, dtype=float)
    lcb = np.asarray(lcb, dtype=float)
    if active.size == 0:
        raise LogicError("elimination over an empty active set")
    kept = active[ucb >= lcb.max()]
    if kept.size == 0:
        raise LogicError("elimination removed every candidate")
    return kept


def resolve_lambda(env: Environment, lam: float | None) -> float:
    if lam is not None:
        return float(lam)
    if env.noise_sigma <= 0:
        raise ConfigError("noiseless environment: pass an explicit regularizer lam > 0")
    return env.noise_sigma**2


def check_schedule(env: Environment, schedule: BatchSchedule) -> None:
    if not isinstance(schedule, BatchSchedule):
        raise ConfigError(f"expected a BatchSchedule, got {type(schedule).__name__}")
    if env.domain is None or len(env.domain) == 0:
        raise ConfigError("empty domain")


def run_bpe(env: Environment, kernel: KernelSpec, schedule: BatchSchedule, conf: ConfidenceParams,
            lam: float | None = None) -> RunResult:
    check_schedule(env, schedule)
    lam = resolve_lambda(env, lam)
    points = env.domain.points
    values = env.values
    best = values.max()
    beta = conf.beta(len(points), schedule.B)
    root_beta = math.sqrt(beta)

    trace = RegretTrace(schedule.endpoints)
    state = AlgorithmState(active=np.arange(len(points)))
    t = 0
    for i, n_i in enumerate(schedule.sizes, start=1):
        state.batch_index = i
        active = state.active
        post = GPPosterior(kernel, lam, tracked=points[active])
        queried, var_sum = [], 0.0
        for _ in range(n_i):
            var = post.tracked_variance()
            pos = int(np.argmax(var))
            var_sum += var[pos]
            x = int(active[pos])
            t += 1
            env.query_index(t, x)
            post.add_point(points[x])
            queried.append(x)
            trace.accumulate(t, x, best - values[x])
        obs = env.close_batch_indices()
        post.set_observations([y for _, _, y in obs])
        mu = post.tracked_mean()
        sd = np.sqrt(post.tracked_variance())
        ucb, lcb = mu + root_beta * sd, mu - root_beta * sd
        survivors = eliminate(active, ucb, lcb)
        state.history.append(BatchRecord(
            index=i, queried=queried, active=active, survivors=survivors, bound_indices=active,
            mean=mu, sd=sd, ucb=ucb, lcb=lcb, variance_sum=var_sum,
            info_gain=empirical_info_gain(kernel, lam, points[queried]),
        ))
        state.active = survivors

    last = trace.x_indices[-1]
    trace.report(last, best - values[last])
    return RunResult(trace, state, beta, lam)


def report_point(result: RunResult) -> int:
    """Domain index of the final selected point."""
    if not len(result.trace):
        raise LogicError("empty trace has no reported point")
    return int(result.trace.x_indices[-1])
