"""Config-driven experiment runner.

Trial ``j`` uses seed ``base_seed ^ j``; the instance draw and the noise
stream are derived from it independently, so every schedule compared on
trial ``j`` sees the same function and the same per-step noise.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .bpe import RunResult, run_bpe
from .config import ExperimentConfig
from .environment import Domain, Environment
from .errors import ConfigError
from .instances import make_hard_family, sample_gp_function
from .kernels import KernelSpec
from .metrics import RegretTrace, aggregate_trials, write_aggregate_csv, write_trace_csv
from .robust import run_robust_bpe
from .schedules import (BatchSchedule, OverflowReport, bad_batch_flags, make_schedule,
                        reference_endpoints, schedule_label)

log = logging.getLogger(__name__)

THREADS_ENV = "BATCHKB_THREADS"
_INSTANCE_TAG, _NOISE_TAG = 1, 2


def trial_seed(base_seed: int, j: int) -> int:
    return int(base_seed) ^ int(j)


def derived_seed(seed: int, tag: int) -> int:
    return int(np.random.SeedSequence([seed, tag]).generate_state(1)[0])


def build_instance(cfg: ExperimentConfig, domain: Domain, seed: int, trial: int) -> np.ndarray:
    spec = cfg.instance
    kind = spec.get("type")
    if kind == "gp_sample":
        ls = float(spec.get("sample_lengthscale", 2.0))
        kernel = KernelSpec(cfg.kernel.family, ls, cfg.kernel.nu)
        offset = int(spec.get("seed", 0))
        return sample_gp_function(domain, kernel, derived_seed(seed + offset, _INSTANCE_TAG)).values
    if kind == "hard_family":
        fam = make_hard_family(domain, int(spec["M"]), float(spec["epsilon"]))
        member = int(spec.get("member", trial % fam.M))
        return fam.values[member]
    if kind == "values":
        return np.asarray(spec["values"], dtype=float)
    raise ConfigError(f"instance.type must be 'gp_sample', 'hard_family' or 'values', got {kind!r}")


def resolve_schedule(cfg: ExperimentConfig, spec: dict) -> BatchSchedule:
    domain_dim = Domain.from_config(cfg.domain).dim
    sched = make_schedule(spec, cfg.T, cfg.kernel.family, domain_dim, cfg.kernel.nu)
    if isinstance(sched, OverflowReport):
        raise ConfigError(
            f"schedule {schedule_label(spec)} overflows: last batch size {sched.last_size} "
            f"(sizes {list(sched.leading_sizes)})"
        )
    if sched.horizon != cfg.T:
        raise ConfigError(f"schedule horizon {sched.horizon} != T={cfg.T}")
    return sched


def run_trial(cfg: ExperimentConfig, schedule: BatchSchedule, j: int) -> RunResult:
    domain = Domain.from_config(cfg.domain)
    seed = trial_seed(cfg.base_seed, j)
    values = build_instance(cfg, domain, seed, j)
    env = Environment(domain, values, cfg.noise_sigma, seed=derived_seed(seed, _NOISE_TAG))
    if cfg.algorithm == "robust_bpe":
        return run_robust_bpe(env, cfg.kernel, schedule, cfg.conf, cfg.robust, lam=cfg.lam)
    return run_bpe(env, cfg.kernel, schedule, cfg.conf, lam=cfg.lam)


def _trial_worker(args):
    cfg, schedule, j = args
    return run_trial(cfg, schedule, j)


def thread_count() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    return max(1, n)


def run_trials(cfg: ExperimentConfig, schedule: BatchSchedule) -> list[RunResult]:
    jobs = [(cfg, schedule, j) for j in range(cfg.n_trials)]
    workers = min(thread_count(), cfg.n_trials)
    if workers <= 1:
        return [_trial_worker(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_trial_worker, jobs))


@dataclass
class ExperimentResult:
    schedule: BatchSchedule
    results: list[RunResult]
    aggregate: list[dict]

    @property
    def traces(self) -> list[RegretTrace]:
        return [r.trace for r in self.results]


def run_experiment(cfg: ExperimentConfig, schedule_spec: dict | None = None, write: bool = True) -> ExperimentResult:
    schedule = resolve_schedule(cfg, schedule_spec or cfg.schedule)
    log.info("running %d trials, schedule %s", cfg.n_trials, list(schedule.sizes))
    results = run_trials(cfg, schedule)
    agg = aggregate_trials([r.trace for r in results], cfg.checkpoints)
    if write and cfg.output:
        out = Path(cfg.output)
        out.mkdir(parents=True, exist_ok=True)
        write_trace_csv(out / "trials.csv", [r.trace for r in results], cfg.provenance())
        write_aggregate_csv(out / "aggregate.csv", agg, cfg.provenance())
    return ExperimentResult(schedule, results, agg)


@dataclass
class ComparisonRow:
    label: str
    B: int
    sizes: tuple[int, ...]
    aggregate: list[dict]
    final_regret: np.ndarray  # per trial, at T


def compare_schedules(cfg: ExperimentConfig, schedule_list: list[dict] | None = None, write: bool = True) -> list[ComparisonRow]:
    specs = schedule_list if schedule_list is not None else cfg.schedules
    if len(specs) < 2:
        raise ConfigError("compare needs at least two schedules in 'schedules'")
    rows = []
    for spec in specs:
        res = run_experiment(cfg, spec, write=False)
        rows.append(ComparisonRow(
            schedule_label(spec), res.schedule.B, res.schedule.sizes, res.aggregate,
            np.array([tr.total for tr in res.traces]),
        ))
    if write and cfg.output:
        out = Path(cfg.output)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "compare.csv", "w", newline="") as fh:
            fh.write(f"# {cfg.provenance()}\n")
            fh.write("schedule,B,checkpoint,mean,stderr,n_trials\n")
            for row in rows:
                for a in row.aggregate:
                    fh.write(f"{row.label},{row.B},{a['checkpoint']},{a['mean']!r},{a['stderr']!r},{a['n_trials']}\n")
    return rows


def format_comparison(rows: list[ComparisonRow]) -> str:
    cps = [a["checkpoint"] for a in rows[0].aggregate]
    head = f"{'Algorithm':<24}" + "".join(f"{'T=' + str(c):>12}" for c in cps)
    lines = [head]
    for row in rows:
        name = f"BPE ({row.label}, B={row.B})"
        lines.append(f"{name:<24}" + "".join(f"{a['mean']:>12.2f}" for a in row.aggregate))
    return "\n".join(lines)


def diagnose_batches(schedule: BatchSchedule, kernel_class: str, T: int, B: int, d: int,
                     nu: float | None = None) -> dict:
    """Reference endpoints, bad-event flags and the bad batch indices."""
    refs = reference_endpoints(T, B, kernel_class, d, nu)
    flags = bad_batch_flags(schedule.endpoints, refs)
    return {
        "realized_endpoints": list(schedule.endpoints),
        "reference_endpoints": list(refs.endpoints),
        "flags": flags,
        "bad_batches": [i for i, f in enumerate(flags, start=1) if f],
    }


def verify_instance(cfg: ExperimentConfig) -> dict:
    spec = cfg.instance
    if spec.get("type") != "hard_family":
        raise ConfigError("instance verify needs instance.type = 'hard_family'")
    domain = Domain.from_config(cfg.domain)
    fam = make_hard_family(domain, int(spec["M"]), float(spec["epsilon"]))
    return {"M": fam.M, "epsilon": fam.epsilon, **fam.checks}
