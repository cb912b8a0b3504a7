"""Monte Carlo ROC estimation, detection at fixed false-alarm rate, the
observation bound, and the receive-side power comparison."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from math import comb
from typing import Callable, Optional, Sequence

import numpy as np

from .fusion import FusionWeights, llr, wl_statistic
from .sensing import SensorStats, complex_gaussian, sample_decisions

BLOCK_SIZE = 4096


@dataclass(frozen=True)
class DetectionSystem:
    """A fixed effective channel (holographic G Theta H, or the digital H) with its sensing."""
    channel_eff: np.ndarray  # N x K
    stats: SensorStats
    noise_power: float

    @property
    def n_outputs(self) -> int:
        return self.channel_eff.shape[0]


class WidelyLinearRule:
    def __init__(self, weights: FusionWeights):
        self.weights = weights

    def __call__(self, system: DetectionSystem, y: np.ndarray) -> np.ndarray:
        return wl_statistic(self.weights, y)


class LikelihoodRatioRule:
    def __init__(self, pmf_tables=None):
        self.pmf_tables = pmf_tables

    def __call__(self, system: DetectionSystem, y: np.ndarray) -> np.ndarray:
        return llr(y, system.channel_eff, system.stats, system.noise_power, self.pmf_tables)


Rule = Callable[[DetectionSystem, np.ndarray], np.ndarray]


@dataclass
class RocCurve:
    gamma: np.ndarray  # ascending, first entry -inf
    pf0: np.ndarray
    pd0: np.ndarray
    n0: int
    n1: int
    provenance: dict = field(default_factory=dict)

    @property
    def se_pf0(self) -> np.ndarray:
        return np.sqrt(self.pf0 * (1 - self.pf0) / self.n0)

    @property
    def se_pd0(self) -> np.ndarray:
        return np.sqrt(self.pd0 * (1 - self.pd0) / self.n1)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["gamma", "pf0", "pd0", "se_pf0", "se_pd0"])
        for row in zip(self.gamma, self.pf0, self.pd0, self.se_pf0, self.se_pd0):
            w.writerow([format_float(v) for v in row])
        return buf.getvalue()


def format_float(v: float) -> str:
    return repr(float(v))


def empirical_roc(stat_h0: np.ndarray, stat_h1: np.ndarray, provenance=None) -> RocCurve:
    """Exact empirical ROC: thresholds at every pooled statistic value plus -inf."""
    s0 = np.sort(np.asarray(stat_h0, float))
    s1 = np.sort(np.asarray(stat_h1, float))
    if s0.size == 0 or s1.size == 0:
        raise ValueError("need at least one trial per hypothesis")
    if not (np.all(np.isfinite(s0)) and np.all(np.isfinite(s1))):
        raise ValueError("non-finite statistic")
    gamma = np.concatenate([[-np.inf], np.unique(np.concatenate([s0, s1]))])
    pf = 1.0 - np.searchsorted(s0, gamma, side="right") / s0.size
    pd = 1.0 - np.searchsorted(s1, gamma, side="right") / s1.size
    return RocCurve(gamma, pf, pd, s0.size, s1.size, dict(provenance or {}))


def simulate_statistics(system: DetectionSystem, rules: Sequence[Rule], trials: int,
                        seed: int, hypothesis: int, block_size: int = BLOCK_SIZE) -> np.ndarray:
    """Statistics of each rule over ``trials`` draws under one hypothesis.

    Trials are split into fixed blocks, each with its own substream keyed by
    (seed, hypothesis, block), so every rule sees the same decisions and
    noise and the result does not depend on how blocks are scheduled.
    Returns an array of shape (len(rules), trials).
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    out = np.empty((len(rules), trials))
    for b, start in enumerate(range(0, trials, block_size)):
        n = min(block_size, trials - start)
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(hypothesis, b)))
        x = sample_decisions(system.stats, hypothesis, rng, size=n)
        w = complex_gaussian(rng, (n, system.n_outputs), system.noise_power)
        y = (x * system.stats.alpha) @ system.channel_eff.T + w
        for r, rule in enumerate(rules):
            s = rule(system, y)
            bad = ~np.isfinite(s)
            if np.any(bad):
                raise FloatingPointError(
                    f"non-finite statistic for rule {r} at trial {start + np.flatnonzero(bad)[0]} "
                    f"(seed {seed}, hypothesis {hypothesis}, block {b})")
            out[r, start:start + n] = s
    return out


def roc_monte_carlo(system: DetectionSystem, rule: Rule, trials: int, seed: int,
                    block_size: int = BLOCK_SIZE) -> RocCurve:
    return roc_monte_carlo_many(system, [rule], trials, seed, block_size)[0]


def roc_monte_carlo_many(system: DetectionSystem, rules: Sequence[Rule], trials: int,
                         seed: int, block_size: int = BLOCK_SIZE):
    """One ROC per rule, all driven by common decisions and noise."""
    s0 = simulate_statistics(system, rules, trials, seed, 0, block_size)
    s1 = simulate_statistics(system, rules, trials, seed, 1, block_size)
    prov = {"seed": int(seed), "trials": int(trials), "block_size": int(block_size)}
    return [empirical_roc(a, b, prov) for a, b in zip(s0, s1)]


def roc_frontier(curve: RocCurve):
    """Unique P_F0 values (ascending) with the best P_D0 attained at each."""
    order = np.lexsort((-curve.pd0, curve.pf0))
    pf, pd = curve.pf0[order], curve.pd0[order]
    uniq, first = np.unique(pf, return_index=True)
    return uniq, pd[first]


def detection_at_pfa(curve: RocCurve, target_pfa: float) -> float:
    """P_D0 at ``target_pfa`` by linear interpolation between bracketing curve
    points (the randomized test mixing the two adjacent thresholds)."""
    pf, pd = roc_frontier(curve)
    if pf.size == 0:
        raise ValueError("empty curve")
    if not pf[0] <= target_pfa <= pf[-1]:
        raise ValueError(f"target P_F0={target_pfa} outside the curve range [{pf[0]}, {pf[-1]}]")
    return float(np.interp(target_pfa, pf, pd))


def interpolate_roc(curve: RocCurve, pf_grid: np.ndarray) -> np.ndarray:
    pf, pd = roc_frontier(curve)
    return np.interp(pf_grid, pf, pd)


def _tail(K: int, p: float) -> np.ndarray:
    terms = np.array([comb(K, i) * p ** i * (1 - p) ** (K - i) for i in range(K + 1)])
    return np.cumsum(terms[::-1])[::-1]


def observation_bound(K: int, pd: float, pf: float):
    """(P_F0, P_D0) of the counting rule 'at least nu local detections', nu = 0..K."""
    if not 0.0 <= pf <= pd <= 1.0:
        raise ValueError("need 0 <= P_F <= P_D <= 1")
    return list(zip(_tail(K, pf).tolist(), _tail(K, pd).tolist()))


def observation_bound_at_pfa(K: int, pd: float, pf: float, target_pfa: float) -> float:
    """Bound at a fixed P_F0, randomizing between adjacent counting thresholds."""
    pts = observation_bound(K, pd, pf)
    pfs = np.array([p[0] for p in pts])[::-1]
    pds = np.array([p[1] for p in pts])[::-1]
    return float(np.interp(target_pfa, pfs, pds))


@dataclass(frozen=True)
class PowerModel:
    eps_tx_sensor: float
    eps_rhs: float
    eps_rx_feed: float
    eps_static: float
    n_rhs: int
    n_feeds: int
    n_digital: int
    alpha: np.ndarray

    def __post_init__(self):
        for name in ("eps_tx_sensor", "eps_rhs", "eps_rx_feed", "eps_static"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")


def power_comparison(model: PowerModel):
    """Total holographic and digital power, and the digital/holographic receive-side ratio."""
    alpha = np.asarray(model.alpha, float)
    tx = float(np.sum(alpha ** 2) + alpha.size * model.eps_tx_sensor)
    rx_holo = model.n_rhs * model.eps_rhs + model.n_feeds * model.eps_rx_feed
    rx_dig = model.n_digital * model.eps_rx_feed
    return tx + rx_holo + model.eps_static, tx + rx_dig + model.eps_static, rx_dig / rx_holo
