"""Experiment configuration (a single JSON document)."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .bpe import ConfidenceParams
from .environment import Domain
from .errors import ConfigError
from .kernels import KernelSpec
from .metrics import DEFAULT_CHECKPOINTS
from .robust import RobustConfig

ALGORITHMS = ("bpe", "robust_bpe")


def _field(data: dict, name: str, cast, default=None, required=False):
    if name not in data or data[name] is None:
        if required:
            raise ConfigError(f"config field '{name}' is required")
        return default
    try:
        return cast(data[name])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"config field '{name}': {exc}") from None


@dataclass
class ExperimentConfig:
    domain: dict
    kernel: KernelSpec
    instance: dict
    schedule: dict
    T: int
    noise_sigma: float
    conf: ConfidenceParams
    algorithm: str = "bpe"
    robust: RobustConfig | None = None
    n_trials: int = 10
    base_seed: int = 0
    checkpoints: tuple[int, ...] = ()
    output: str | None = None
    lam: float | None = None
    schedules: list[dict] = field(default_factory=list)
    reference: dict | None = None
    raw: dict = field(default_factory=dict, repr=False)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        for key in ("domain", "kernel", "instance"):
            if not isinstance(data.get(key), dict):
                raise ConfigError(f"config field '{key}' must be an object")
        kernel = KernelSpec.from_dict(data["kernel"])
        T = _field(data, "T", int, required=True)
        if T < 2:
            raise ConfigError(f"config field 'T' must be >= 2, got {T}")
        sigma = _field(data, "noise_sigma", float, required=True)
        if sigma < 0:
            raise ConfigError("config field 'noise_sigma' must be >= 0")
        conf = ConfidenceParams.from_dict(data.get("conf", {}))
        if conf.beta_mode == "theoretical" and sigma <= 0:
            raise ConfigError("config field 'noise_sigma' must be > 0 for theoretical beta")
        algorithm = str(data.get("algorithm", "bpe")).lower()
        if algorithm not in ALGORITHMS:
            raise ConfigError(f"config field 'algorithm' must be one of {ALGORITHMS}, got {algorithm!r}")
        robust = None
        if algorithm == "robust_bpe":
            robust = RobustConfig.from_dict(data.get("robust", {}))
        n_trials = _field(data, "n_trials", int, 10)
        if n_trials < 1:
            raise ConfigError("config field 'n_trials' must be >= 1")
        base_seed = _field(data, "base_seed", int, 0)
        if base_seed < 0:
            raise ConfigError("config field 'base_seed' must be >= 0")
        checkpoints = data.get("checkpoints")
        if checkpoints is None:
            checkpoints = [c for c in DEFAULT_CHECKPOINTS if c <= T] or [T]
        checkpoints = tuple(int(c) for c in checkpoints)
        if any(not 1 <= c <= T for c in checkpoints):
            raise ConfigError(f"config field 'checkpoints' must lie in [1, T={T}]")
        schedule = data.get("schedule", {"rule": "growing_li"})
        schedules = data.get("schedules", [])
        if not isinstance(schedule, dict) or not all(isinstance(s, dict) for s in schedules):
            raise ConfigError("config fields 'schedule'/'schedules' must be objects")
        lam = _field(data, "lambda", float)
        if lam is not None and lam <= 0:
            raise ConfigError("config field 'lambda' must be > 0")
        if lam is None and sigma == 0:
            raise ConfigError("config field 'lambda' is required when noise_sigma is 0")
        Domain.from_config(data["domain"])  # fail early on a bad domain
        return cls(
            domain=data["domain"], kernel=kernel, instance=data["instance"], schedule=schedule, T=T,
            noise_sigma=sigma, conf=conf, algorithm=algorithm, robust=robust, n_trials=n_trials,
            base_seed=base_seed, checkpoints=checkpoints, output=data.get("output"), lam=lam,
            schedules=list(schedules), reference=data.get("reference"), raw=data,
        )

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
        except OSError as exc:
            raise ConfigError(f"{path}: {exc.strerror}") from None
        return cls.from_dict(data)

    def provenance(self) -> str:
        return "config: " + json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
