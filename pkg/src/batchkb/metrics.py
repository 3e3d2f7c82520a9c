"""Regret bookkeeping and cross-trial aggregation."""

from __future__ import annotations

import csv
import math
from typing import Iterable, Sequence

import numpy as np

from .errors import InputError, LogicError

DEFAULT_CHECKPOINTS = (200, 400, 600, 800, 1000)
TRACE_COLUMNS = ("trial", "t", "batch_index", "x_index", "inst_regret", "cum_regret")
AGGREGATE_COLUMNS = ("checkpoint", "mean", "stderr", "n_trials")


class RegretTrace:
    """Per-step instantaneous regret with batch boundaries.

    ``boundaries`` are the batch endpoints ``t_1 < ... < t_B``; steps are
    1-based and must be appended consecutively.
    """

    def __init__(self, boundaries: Sequence[int], robust: bool = False):
        self.boundaries = tuple(int(b) for b in boundaries)
        self.robust = robust
        self._t: list[int] = []
        self._x: list[int] = []
        self._r: list[float] = []
        self.total = 0.0
        self.reported_index: int | None = None
        self.simple_regret: float | None = None

    def __len__(self):
        return len(self._r)

    def accumulate(self, t: int, x_index: int, r: float) -> "RegretTrace":
        if t != len(self._r) + 1:
            raise LogicError(f"expected step {len(self._r) + 1}, got {t}")
        if not r >= 0:
            raise InputError(f"instantaneous regret must be >= 0, got {r}")
        self._t.append(int(t))
        self._x.append(int(x_index))
        self._r.append(float(r))
        self.total += float(r)
        return self

    @property
    def horizon(self) -> int:
        return self.boundaries[-1] if self.boundaries else len(self)

    @property
    def instantaneous(self) -> np.ndarray:
        return np.asarray(self._r, dtype=float)

    @property
    def x_indices(self) -> np.ndarray:
        return np.asarray(self._x, dtype=int)

    @property
    def cumulative(self) -> np.ndarray:
        return np.cumsum(self.instantaneous)

    def batch_index(self, t: int) -> int:
        for i, end in enumerate(self.boundaries, start=1):
            if t <= end:
                return i
        raise InputError(f"t={t} lies beyond the last batch boundary")

    def per_batch(self) -> np.ndarray:
        """``R^i``: regret summed over ``(t_{i-1}, t_i]`` for each batch."""
        r = self.instantaneous
        out, prev = [], 0
        for end in self.boundaries:
            out.append(float(np.sum(r[prev:end])))
            prev = end
        return np.asarray(out)

    def cumulative_at(self, t: int) -> float:
        if not 1 <= t <= len(self):
            raise InputError(f"checkpoint {t} outside recorded steps 1..{len(self)}")
        return float(np.sum(self.instantaneous[:t]))

    def report(self, x_index: int, simple_regret: float) -> None:
        self.reported_index = int(x_index)
        self.simple_regret = float(simple_regret)

    def rows(self, trial: int) -> Iterable[tuple]:
        cum = self.cumulative
        for k, (t, x, r) in enumerate(zip(self._t, self._x, self._r)):
            yield (trial, t, self.batch_index(t), x, r, float(cum[k]))


def aggregate_trials(traces: Sequence[RegretTrace], checkpoints: Sequence[int] = DEFAULT_CHECKPOINTS) -> list[dict]:
    """Mean and standard error of cumulative regret at each checkpoint."""
    if not traces:
        raise InputError("no traces to aggregate")
    horizons = {len(tr) for tr in traces}
    if len(horizons) != 1:
        raise InputError(f"traces have mismatched horizons {sorted(horizons)}")
    n = len(traces)
    rows = []
    for c in checkpoints:
        vals = np.array([tr.cumulative_at(c) for tr in traces])
        se = float(np.std(vals, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        rows.append({"checkpoint": int(c), "mean": float(vals.mean()), "stderr": se, "n_trials": n})
    return rows


def write_trace_csv(path, traces: Sequence[RegretTrace], header: str | None = None) -> None:
    with open(path, "w", newline="") as fh:
        if header:
            fh.write(f"# {header}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for j, tr in enumerate(traces):
            for row in tr.rows(j):
                w.writerow([repr(v) if isinstance(v, float) else v for v in row])


def write_aggregate_csv(path, rows: Sequence[dict], header: str | None = None, extra: dict | None = None) -> None:
    cols = tuple(extra) + AGGREGATE_COLUMNS if extra else AGGREGATE_COLUMNS
    with open(path, "w", newline="") as fh:
        if header:
            fh.write(f"# {header}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for row in rows:
            full = {**(extra or {}), **row}
            w.writerow([repr(full[c]) if isinstance(full[c], float) else full[c] for c in cols])
