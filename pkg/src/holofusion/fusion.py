"""Fusion statistics (LLR, widely-linear), deflection metrics and the
closed-form optimal widely-linear weights."""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy import linalg
from scipy.special import logsumexp

from .sensing import SensorStats, augment, conditional_moments, decision_vectors


class DesignKind(enum.Enum):
    FUC0 = "FuC-0"
    FUC1 = "FuC-1"
    IS = "IS"

    @property
    def hypothesis(self) -> int:
        """Hypothesis conditioning the deflection denominator (IS: either)."""
        return 1 if self is DesignKind.FUC1 else 0

    @property
    def full_characterization(self) -> bool:
        return self is not DesignKind.IS

    @classmethod
    def parse(cls, s) -> "DesignKind":
        if isinstance(s, cls):
            return s
        for k in cls:
            if s in (k.value, k.name, k.value.lower(), k.name.lower()):
                return k
        raise ValueError(f"unknown design kind {s!r}")


@dataclass(frozen=True)
class FusionWeights:
    a_aug: np.ndarray

    @classmethod
    def from_half(cls, a: np.ndarray) -> "FusionWeights":
        """Unit-norm conjugate-pair weights [a; conj(a)] / ||.||."""
        aa = augment(np.asarray(a, complex))
        nrm = np.linalg.norm(aa)
        if nrm == 0:
            raise ValueError("weights must be nonzero")
        return cls(aa / nrm)

    @property
    def a(self) -> np.ndarray:
        return self.a_aug[: self.a_aug.size // 2]

    @property
    def n(self) -> int:
        return self.a_aug.size // 2


def signal_direction(channel_eff: np.ndarray, stats: SensorStats, target: np.ndarray) -> np.ndarray:
    """Augmented vector augment(H_eff D_alpha target)."""
    return augment(channel_eff @ (stats.alpha * target))


# ---------------------------------------------------------------- statistics

def llr(y: np.ndarray, channel_eff: np.ndarray, stats: SensorStats, noise_power: float,
        pmf_tables=None) -> np.ndarray:
    """Optimal log-likelihood ratio by enumeration of all 2^K decision vectors.

    ``y`` may be a single N-vector or a (T, N) batch. ``pmf_tables`` is an
    optional (Pr(x|H1), Pr(x|H0)) pair ordered like ``decision_vectors``.
    """
    if noise_power <= 0:
        raise ValueError("noise power must be positive")
    K = stats.n_sensors
    if pmf_tables is None:
        p1, p0 = stats.pmf(1), stats.pmf(0)
    else:
        p1, p0 = (np.asarray(t, float) for t in pmf_tables)
    for t in (p1, p0):
        if t.shape != (2 ** K,) or abs(t.sum() - 1.0) > 1e-9 or np.any(t < 0):
            raise ValueError("pmf tables must be normalized over 2^K entries")
    y = np.asarray(y, complex)
    single = y.ndim == 1
    Y = np.atleast_2d(y)
    S = (decision_vectors(K) * stats.alpha) @ channel_eff.T  # (2^K, N) noiseless points
    # -||y - s||^2 with the y-only term dropped (it cancels in the ratio)
    e = (2.0 * (Y @ S.conj().T).real - np.sum(np.abs(S) ** 2, axis=1)) / noise_power
    with np.errstate(divide="ignore"):
        l1, l0 = np.log(p1), np.log(p0)
    out = logsumexp(e + l1, axis=1) - logsumexp(e + l0, axis=1)
    # near zero the difference of two log-sums cancels; log1p of the relative
    # excess sum((p1 - p0) w) / sum(p0 w) keeps full relative accuracy there
    near = np.abs(out) < 0.5
    if np.any(near):
        w = np.exp(e[near] - e[near].max(axis=1, keepdims=True))
        out[near] = np.log1p((w @ (p1 - p0)) / (w @ p0))
    return out[0] if single else out


def wl_statistic(weights: FusionWeights, y: np.ndarray) -> np.ndarray:
    """Real widely-linear statistic a_aug^H [y; conj(y)] for one or a batch of y."""
    y = np.asarray(y, complex)
    if y.shape[-1] != weights.n:
        raise ValueError(f"y has {y.shape[-1]} entries, weights expect {weights.n}")
    a = weights.a
    # a_aug^H y_aug = a^H y + a^T conj(y) = 2 Re(a^H y) for conjugate-pair weights
    val = y @ np.conj(a) + np.conj(y) @ np.conj(weights.a_aug[weights.n:])
    scale = np.linalg.norm(y, axis=-1) + 1e-300
    if np.any(np.abs(val.imag) > 1e-10 * scale):
        raise ValueError("statistic is not real: weights lack conjugate-pair structure")
    return val.real


def threshold_test(statistic, gamma):
    """1 (decide H1) iff statistic > gamma; ties go to H0."""
    return (np.asarray(statistic) > gamma).astype(int)


# ---------------------------------------------------------------- deflections

def deflection(kind, weights: FusionWeights, channel_eff: np.ndarray, stats: SensorStats,
               noise_power: float) -> float:
    """Deflection of the WL statistic for design ``kind`` on a given effective channel."""
    kind = DesignKind.parse(kind)
    a = weights.a_aug
    if kind is DesignKind.IS:
        num = np.abs(np.vdot(a, signal_direction(channel_eff, stats, np.ones(stats.n_sensors)))) ** 2
        den = noise_power * np.vdot(a, a).real
        if den <= 0:
            raise ValueError("zero denominator")
        return float(4.0 * num / den)
    num = np.abs(np.vdot(a, signal_direction(channel_eff, stats, stats.rho10))) ** 2
    C = conditional_moments(channel_eff, stats, noise_power, kind.hypothesis).aug_cov
    den = np.vdot(a, C @ a).real
    if den <= 0:
        raise ValueError("zero denominator")
    return float(4.0 * num / den)


def optimal_weights_fuc(hypothesis: int, channel_eff: np.ndarray, stats: SensorStats,
                        noise_power: float) -> FusionWeights:
    """Whitened matched direction Cov(y_aug|H_i)^{-1} augment(H_eff D_alpha rho10)."""
    v = signal_direction(channel_eff, stats, stats.rho10)
    C = conditional_moments(channel_eff, stats, noise_power, hypothesis).aug_cov
    try:
        w = linalg.solve(C, v, assume_a="pos")
    except linalg.LinAlgError as exc:
        raise ValueError("augmented covariance is singular") from exc
    if not np.any(w):
        raise ValueError("zero signal direction")
    return FusionWeights.from_half(w[: w.size // 2])


def optimal_weights_is(channel_eff: np.ndarray, stats: SensorStats) -> FusionWeights:
    """Matched direction augment(H_eff D_alpha 1)/||.||."""
    v = channel_eff @ stats.alpha
    if not np.any(v):
        raise ValueError("effective channel sum is zero")
    return FusionWeights.from_half(v)


def optimal_weights(kind, channel_eff: np.ndarray, stats: SensorStats,
                    noise_power: float) -> FusionWeights:
    kind = DesignKind.parse(kind)
    if kind is DesignKind.IS:
        return optimal_weights_is(channel_eff, stats)
    return optimal_weights_fuc(kind.hypothesis, channel_eff, stats, noise_power)


def max_deflection(kind, channel_eff: np.ndarray, stats: SensorStats, noise_power: float) -> float:
    """Deflection achieved by the optimal weights; used as a scalar design score."""
    return deflection(kind, optimal_weights(kind, channel_eff, stats, noise_power),
                      channel_eff, stats, noise_power)


__all__ = [
    "DesignKind", "FusionWeights", "llr", "wl_statistic", "threshold_test", "deflection",
    "optimal_weights_fuc", "optimal_weights_is", "optimal_weights", "max_deflection",
]
