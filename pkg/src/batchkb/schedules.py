"""Batch-size schedules, reference endpoints and bad-batch classification.

All ``log T`` factors use the natural log unless ``log=math.log2`` is passed;
the choice only moves constants around.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .errors import ConfigError, InputError

LOG: Callable[[float], float] = math.log

# ceil() of a float that is an integer up to round-off should not jump by one
_CEIL_RTOL = 1e-12


def _ceil(x: float) -> int:
    r = round(x)
    if abs(x - r) <= _CEIL_RTOL * max(1.0, abs(x)):
        return int(r)
    return math.ceil(x)


def _ceil_sqrt(n: int) -> int:
    return 0 if n <= 0 else math.isqrt(n - 1) + 1


@dataclass(frozen=True)
class BatchSchedule:
    """Endpoints ``t_1 < ... < t_B = T`` (``t_0 = 0`` implicit)."""

    horizon: int
    endpoints: tuple[int, ...]
    rule: str
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        ends = tuple(int(t) for t in self.endpoints)
        object.__setattr__(self, "endpoints", ends)
        validate_endpoints(ends, self.horizon)

    @property
    def sizes(self) -> tuple[int, ...]:
        prev = (0,) + self.endpoints[:-1]
        return tuple(t - p for t, p in zip(self.endpoints, prev))

    @property
    def B(self) -> int:
        return len(self.endpoints)

    @classmethod
    def from_sizes(cls, sizes: Sequence[int], rule: str = "custom", **params) -> "BatchSchedule":
        if any(int(n) <= 0 for n in sizes):
            raise InputError(f"batch sizes must be positive, got {list(sizes)}")
        ends, acc = [], 0
        for n in sizes:
            acc += int(n)
            ends.append(acc)
        return cls(acc, tuple(ends), rule, dict(params))

    def batch_of(self, t: int) -> int:
        """1-based batch index containing time step ``t`` (1-based)."""
        for i, end in enumerate(self.endpoints, start=1):
            if t <= end:
                return i
        raise InputError(f"t={t} exceeds horizon {self.horizon}")

    def describe(self) -> dict:
        return {
            "rule": self.rule,
            **self.params,
            "T": self.horizon,
            "B": self.B,
            "sizes": list(self.sizes),
            "endpoints": list(self.endpoints),
        }


@dataclass(frozen=True)
class OverflowReport:
    """The fixed-B schedule of Li & Scarlett ran out of budget before batch B.

    ``last_size`` is the (non-positive) value ``T - sum(N_1..N_{B-1})`` and
    ``deficit`` its magnitude.
    """

    horizon: int
    B: int
    leading_sizes: tuple[int, ...]
    last_size: int
    rule: str = "fixed_li"

    @property
    def deficit(self) -> int:
        return -self.last_size


def validate_endpoints(endpoints: Sequence[int], horizon: int | None = None) -> None:
    if not endpoints:
        raise InputError("endpoint list is empty")
    prev = 0
    for t in endpoints:
        if t <= prev:
            raise InputError(f"endpoints must be strictly increasing and positive: {list(endpoints)}")
        prev = t
    if horizon is not None and endpoints[-1] != horizon:
        raise InputError(f"last endpoint {endpoints[-1]} != horizon {horizon}")


def _check_T(T: int) -> int:
    if int(T) != T or T < 2:
        raise ConfigError(f"horizon T must be an integer >= 2, got {T}")
    return int(T)


def growing_schedule_li(T: int) -> BatchSchedule:
    """``N_i = min(ceil(sqrt(T * N_{i-1})), remaining)`` with ``N_0 = 1``."""
    T = _check_T(T)
    sizes, prev, used = [], 1, 0
    while used < T:
        n = min(_ceil_sqrt(T * prev), T - used)
        sizes.append(n)
        used += n
        prev = n
    return BatchSchedule.from_sizes(sizes, "growing_li")


def growing_schedule_param(T: int, a: float) -> BatchSchedule:
    """``N_i = min(ceil(T^(1 - a^i)), remaining)``; B is whatever it takes to reach T."""
    T = _check_T(T)
    if not 0.0 < a < 1.0:
        raise ConfigError(f"a must lie in (0, 1), got {a}")
    sizes, used, i = [], 0, 0
    while used < T:
        i += 1
        n = min(_ceil(T ** (1.0 - a**i)), T - used)
        sizes.append(n)
        used += n
    return BatchSchedule.from_sizes(sizes, "growing_param", a=a)


def batch_count_bounds(T: int, a: float, log: Callable[[float], float] = LOG) -> tuple[int | None, int]:
    """(lower, upper) bounds on the number of batches of ``growing_schedule_param``.

    The lower bound is ``None`` where ``log log T <= 0`` makes it undefined.
    """
    upper = math.ceil(math.log(math.log2(T)) / math.log(1.0 / a)) + 1
    ll = log(log(T))
    lower = None
    if ll > 0:
        lower = math.floor(math.log(log(T) / ll) / math.log(1.0 / a))
    return lower, upper


def kernel_eta(kernel_class: str, d: int, nu: float | None = None) -> float:
    kc = kernel_class.lower()
    if kc == "se":
        return 0.5
    if kc == "matern":
        if nu is None or nu <= 0:
            raise ConfigError("Matern schedules need nu > 0")
        return nu / (2.0 * nu + d)
    raise ConfigError(f"unknown kernel class {kernel_class!r}")


def _fixed_common(T, B, kernel_class, d, nu):
    T = _check_T(T)
    if int(B) != B or B < 2 or B > T:
        raise ConfigError(f"need 2 <= B <= T, got B={B}, T={T}")
    if int(d) != d or d < 1:
        raise ConfigError(f"dimension d must be a positive integer, got {d}")
    return T, int(B), kernel_eta(kernel_class, d, nu)


def fixed_schedule_li(T: int, B: int, kernel_class: str, d: int, nu: float | None = None,
                      log: Callable[[float], float] = LOG) -> BatchSchedule | OverflowReport:
    T, B, eta = _fixed_common(T, B, kernel_class, d, nu)
    denom = 1.0 - eta**B
    sizes = []
    for i in range(1, B):
        val = T ** ((1.0 - eta**i) / denom)
        if kernel_class.lower() == "se":
            val *= log(T) ** (d * (eta**i - eta**B) / denom)
        sizes.append(_ceil(val))
    last = T - sum(sizes)
    if last <= 0:
        return OverflowReport(T, B, tuple(sizes), last)
    return BatchSchedule.from_sizes(sizes + [last], "fixed_li", B=B)


def fixed_schedule_refined(T: int, B: int, kernel_class: str, d: int, nu: float | None = None,
                           log: Callable[[float], float] = LOG) -> BatchSchedule:
    T, B, eta = _fixed_common(T, B, kernel_class, d, nu)
    denom = 1.0 - eta**B
    log_mult = d + 1 if kernel_class.lower() == "se" else 1
    ends = []
    for i in range(1, B):
        val = T ** ((1.0 - eta**i) / denom) * log(T) ** (log_mult * (eta**i - eta**B) / denom)
        ends.append(_ceil(val))
    ends.append(T)
    prev = 0
    for t in ends:
        if t <= prev:
            raise ConfigError(
                f"refined endpoints {ends} are not strictly increasing for T={T}, B={B}; try a smaller B"
            )
        prev = t
    return BatchSchedule(T, tuple(ends), "fixed_refined", {"B": B})


@dataclass(frozen=True)
class ReferenceEndpoints:
    """``T_0 = 0 < T_1 < ... < T_B = T`` used to classify bad batches."""

    horizon: int
    kernel_class: str
    endpoints: tuple[int, ...]  # T_1..T_B

    @property
    def B(self) -> int:
        return len(self.endpoints)

    def with_zero(self) -> tuple[int, ...]:
        return (0,) + self.endpoints


def reference_endpoints(T: int, B: int, kernel_class: str, d: int, nu: float | None = None,
                        log: Callable[[float], float] = LOG) -> ReferenceEndpoints:
    T, B, eta = _fixed_common(T, B, kernel_class, d, nu)
    denom = 1.0 - eta**B
    ends = []
    for i in range(1, B):
        val = T ** ((1.0 - eta**i) / denom)
        if kernel_class.lower() == "se":
            val *= log(T) ** (d * eta * (eta**i - eta**B) / denom)
        ends.append(_ceil(val))
    ends.append(T)
    return ReferenceEndpoints(T, kernel_class.lower(), tuple(ends))


def bad_batch_flags(realized: Sequence[int], refs: ReferenceEndpoints) -> list[bool]:
    """Evaluate the events A_1..A_B for realized endpoints against the references.

    A realized schedule with fewer batches than the references is padded with
    zero-length batches ending at T.
    """
    realized = [int(t) for t in realized]
    validate_endpoints(realized, refs.horizon)
    if len(realized) > refs.B:
        raise InputError(f"realized schedule has {len(realized)} batches, references only {refs.B}")
    t = [0] + realized + [refs.horizon] * (refs.B - len(realized))
    T_ref = refs.with_zero()
    flags = [t[1] >= T_ref[1]]
    for i in range(2, refs.B + 1):
        flags.append(t[i - 1] < T_ref[i - 1] and t[i] >= T_ref[i])
    return flags


def classify_bad_batch(realized: Sequence[int], refs: ReferenceEndpoints) -> list[int]:
    """1-based indices of the bad batches; never empty."""
    bad = [i for i, flag in enumerate(bad_batch_flags(realized, refs), start=1) if flag]
    if not bad:  # impossible: the events cover {t_B >= T}
        raise InputError(f"no bad batch for {list(realized)} vs {list(refs.endpoints)}")
    return bad


def make_schedule(spec: dict, T: int, kernel_class: str | None = None, d: int | None = None,
                  nu: float | None = None) -> BatchSchedule | OverflowReport:
    """Build a schedule from its config dict (``{"rule": ..., "a": ..., "B": ...}``)."""
    rule = spec.get("rule")
    if rule == "growing_li":
        return growing_schedule_li(T)
    if rule == "growing_param":
        if "a" not in spec:
            raise ConfigError("schedule rule growing_param needs field 'a'")
        return growing_schedule_param(T, float(spec["a"]))
    if rule in ("fixed_li", "fixed_refined"):
        if "B" not in spec:
            raise ConfigError(f"schedule rule {rule} needs field 'B'")
        if kernel_class is None or d is None:
            raise ConfigError(f"schedule rule {rule} needs the kernel class and dimension")
        fn = fixed_schedule_li if rule == "fixed_li" else fixed_schedule_refined
        return fn(T, int(spec["B"]), kernel_class, d, nu)
    if rule == "sizes":
        sched = BatchSchedule.from_sizes(spec["sizes"], "sizes")
        if sched.horizon != T:
            raise ConfigError(f"explicit sizes sum to {sched.horizon}, horizon is {T}")
        return sched
    raise ConfigError(f"unknown schedule rule {rule!r}")


def schedule_label(spec: dict) -> str:
    rule = spec.get("rule")
    if rule == "growing_li":
        return "Orig"
    if rule == "growing_param":
        return f"a={spec['a']}"
    if rule in ("fixed_li", "fixed_refined"):
        return f"{rule}(B={spec['B']})"
    return str(rule)
