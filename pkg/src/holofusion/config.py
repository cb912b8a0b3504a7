"""Experiment configuration: defaults, YAML loading and validation."""
from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

import yaml

SCENARIOS = ("roc_design", "pd_vs_M", "pd_vs_K", "quantization", "power_table")

# RHS size used by each scenario when ``n_rhs`` is not given
DEFAULT_RHS = {"roc_design": 64, "pd_vs_K": 100, "quantization": 100}

# fields that affect how a run executes but not what it computes
EXECUTION_FIELDS = ("jobs", "output_dir")


@dataclass
class ExperimentConfig:
    scenario: str = "roc_design"
    seed: int = 20250501
    trials: int = 100_000
    redraws: int = 20
    jobs: int = 1
    output_dir: str = "results"
    target_pfa: float = 0.01

    # sensing
    n_sensors: int = 10
    pd: float = 0.5
    pf: float = 0.05
    alpha: float = 1.0

    # propagation
    mu_db: float = -30.0
    d0: float = 1.0
    nu: float = 2.0
    kappa_db: List[float] = field(default_factory=lambda: [3.0, 5.0])
    q: float = 1.5
    eta: float = 1.0
    noise_dbm: float = -50.0
    noise_watts: Optional[float] = None  # overrides noise_dbm when set

    # arrays
    n_rhs: Optional[int] = None
    n_feeds: int = 1
    n_digital: int = 100
    rhs_spacing: float = 1.0 / 3.0
    feed_spacing: float = 0.5

    # sweeps
    m_values: List[int] = field(default_factory=lambda: [25, 49, 64, 100, 144])
    n_values: List[int] = field(default_factory=lambda: [1, 2])
    k_values: List[int] = field(default_factory=lambda: list(range(5, 16)))
    bits: List[int] = field(default_factory=lambda: [1, 2, 3])

    # alternating optimization
    ao_max_iter: int = 200
    ao_rtol: float = 1e-6

    # power model, in units of the per-element RHS power
    eps_rhs: float = 1.0
    eps_rx_feed: float = 10.0
    eps_tx_sensor: float = 0.0
    eps_static: float = 0.0

    @property
    def noise_power(self) -> float:
        if self.noise_watts is not None:
            return float(self.noise_watts)
        return 10.0 ** ((self.noise_dbm - 30.0) / 10.0)

    @property
    def rhs_size(self) -> int:
        if self.n_rhs is not None:
            return self.n_rhs
        return DEFAULT_RHS.get(self.scenario, 64)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def result_dict(self) -> dict:
        """The fields that determine computed results."""
        d = self.to_dict()
        for k in EXECUTION_FIELDS:
            d.pop(k)
        return d

    def digest(self) -> str:
        blob = json.dumps(self.result_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **{k: v for k, v in changes.items() if v is not None})


def from_mapping(data: dict) -> ExperimentConfig:
    names = {f.name for f in dataclasses.fields(ExperimentConfig)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ValueError(f"unknown config keys: {', '.join(unknown)}")
    return ExperimentConfig(**data)


def load(path) -> ExperimentConfig:
    text = Path(path).read_text()
    try:
        data = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        raise ValueError(f"cannot parse {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ValueError(f"{path}: top level must be a mapping")
    return from_mapping(data)


LIST_FIELDS = ("kappa_db", "m_values", "n_values", "k_values", "bits")


def _is_number(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def _is_square(n) -> bool:
    return isinstance(n, int) and n >= 1 and int(round(n ** 0.5)) ** 2 == n


def validate(cfg: ExperimentConfig) -> List[str]:
    """Human-readable violations; empty iff the config is runnable."""
    v = []

    def need(cond, name, msg):
        if not cond:
            v.append(f"{name}: {msg}")

    # type pass first so the range checks below can compare freely
    for f in dataclasses.fields(cfg):
        val = getattr(cfg, f.name)
        if f.name in ("scenario", "output_dir"):
            need(isinstance(val, str), f.name, "must be a string")
        elif f.name in LIST_FIELDS:
            need(isinstance(val, list) and all(_is_number(x) for x in val), f.name,
                 "must be a list of numbers")
        elif f.name in ("n_rhs", "noise_watts"):
            need(val is None or _is_number(val), f.name, "must be a number or null")
        else:
            need(_is_number(val), f.name, "must be a number")
    if v:
        return v

    need(cfg.scenario in SCENARIOS, "scenario", f"must be one of {', '.join(SCENARIOS)}")
    need(isinstance(cfg.seed, int) and cfg.seed >= 0, "seed", "must be a non-negative integer")
    need(isinstance(cfg.trials, int) and cfg.trials >= 1, "trials", "must be an integer >= 1")
    need(isinstance(cfg.redraws, int) and cfg.redraws >= 1, "redraws", "must be an integer >= 1")
    need(isinstance(cfg.jobs, int) and cfg.jobs >= 1, "jobs", "must be an integer >= 1")
    need(0 < cfg.target_pfa < 1, "target_pfa", "must lie in (0, 1)")
    need(isinstance(cfg.n_sensors, int) and 1 <= cfg.n_sensors <= 20, "n_sensors",
         "must be an integer in [1, 20]")
    need(0 <= cfg.pf <= 1, "pf", "must lie in [0, 1]")
    need(0 <= cfg.pd <= 1, "pd", "must lie in [0, 1]")
    need(cfg.pf <= cfg.pd, "pf", "must not exceed pd")
    need(cfg.alpha > 0, "alpha", "must be positive")
    need(cfg.d0 > 0, "d0", "must be positive")
    need(cfg.nu >= 0, "nu", "must be >= 0")
    need(len(cfg.kappa_db) == 2 and cfg.kappa_db[0] <= cfg.kappa_db[1], "kappa_db",
         "must be [low, high] with low <= high")
    need(cfg.q >= 0, "q", "must be >= 0")
    need(0 <= cfg.eta <= 1, "eta", "must lie in [0, 1]")
    need(cfg.n_rhs is None or _is_square(cfg.n_rhs), "n_rhs", "must be a perfect square")
    need(isinstance(cfg.n_feeds, int) and cfg.n_feeds >= 1, "n_feeds", "must be an integer >= 1")
    need(_is_square(cfg.n_digital), "n_digital", "must be a perfect square")
    need(cfg.rhs_spacing > 0, "rhs_spacing", "must be positive")
    need(cfg.feed_spacing > 0, "feed_spacing", "must be positive")
    need(len(cfg.m_values) > 0 and all(_is_square(m) for m in cfg.m_values), "m_values",
         "must be a nonempty list of perfect squares")
    need(len(cfg.n_values) > 0 and all(isinstance(n, int) and n >= 1 for n in cfg.n_values),
         "n_values", "must be a nonempty list of integers >= 1")
    need(len(cfg.k_values) > 0 and all(isinstance(k, int) and 1 <= k <= 20 for k in cfg.k_values),
         "k_values", "must be a nonempty list of integers in [1, 20]")
    need(len(cfg.bits) > 0 and all(isinstance(b, int) and b >= 1 for b in cfg.bits), "bits",
         "must be a nonempty list of integers >= 1")
    need(isinstance(cfg.ao_max_iter, int) and cfg.ao_max_iter >= 1, "ao_max_iter",
         "must be an integer >= 1")
    need(cfg.ao_rtol > 0, "ao_rtol", "must be positive")
    for name in ("eps_rhs", "eps_rx_feed", "eps_tx_sensor", "eps_static"):
        need(getattr(cfg, name) >= 0, name, "must be >= 0")
    # noise_dbm is a log quantity; any finite value is a positive power
    need(cfg.noise_dbm == cfg.noise_dbm and abs(cfg.noise_dbm) != float("inf"), "noise_dbm",
         "must be finite")
    need(cfg.noise_watts is None or cfg.noise_watts > 0, "noise_watts", "must be positive")
    return v
