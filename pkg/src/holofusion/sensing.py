"""Local sensor decisions, the BPSK-over-MAC received signal, and its
conditional second-order (widely-linear) description."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

MAX_TABLE_SENSORS = 20


def decision_vectors(n_sensors: int) -> np.ndarray:
    """All 2^K decision vectors in {-1,+1}^K; row b has x_k = +1 iff bit k of b is set."""
    if n_sensors > MAX_TABLE_SENSORS:
        raise ValueError(f"explicit enumeration limited to K <= {MAX_TABLE_SENSORS}")
    bits = (np.arange(2 ** n_sensors)[:, None] >> np.arange(n_sensors)[None, :]) & 1
    return 2.0 * bits - 1.0


def iid_pmf_table(p: np.ndarray) -> np.ndarray:
    """Joint pmf over decision_vectors(K) for independent sensors with Pr(x_k=+1) = p_k."""
    x = decision_vectors(len(p))
    ones = x > 0
    return np.prod(np.where(ones, p, 1.0 - p), axis=1)


def _check_pmf(table: np.ndarray, n_sensors: int) -> np.ndarray:
    table = np.asarray(table, float)
    if table.shape != (2 ** n_sensors,):
        raise ValueError(f"pmf table must have 2^{n_sensors} entries")
    if np.any(table < 0) or abs(table.sum() - 1.0) > 1e-9:
        raise ValueError("pmf table must be nonnegative and sum to 1")
    return table


@dataclass(frozen=True)
class SensorStats:
    rho1: np.ndarray  # P_D,k
    rho0: np.ndarray  # P_F,k
    cov_x_h1: np.ndarray
    cov_x_h0: np.ndarray
    alpha: np.ndarray
    iid: bool = True
    pmf_h1: Optional[np.ndarray] = None
    pmf_h0: Optional[np.ndarray] = None

    def __post_init__(self):
        for name in ("rho1", "rho0"):
            v = getattr(self, name)
            if np.any(v < 0) or np.any(v > 1):
                raise ValueError(f"{name} must lie in [0, 1]")
        if np.any(self.rho0 > self.rho1 + 1e-12):
            raise ValueError("need P_F,k <= P_D,k for every sensor")
        if np.any(self.alpha <= 0):
            raise ValueError("transmit amplitudes must be positive")

    @classmethod
    def independent(cls, pd, pf, alpha=1.0, n_sensors: Optional[int] = None) -> "SensorStats":
        """Conditionally independent sensors; scalars broadcast to ``n_sensors``."""
        if n_sensors is None:
            n_sensors = np.broadcast(np.asarray(pd), np.asarray(pf), np.asarray(alpha)).size
        pd = np.broadcast_to(np.asarray(pd, float), (n_sensors,)).copy()
        pf = np.broadcast_to(np.asarray(pf, float), (n_sensors,)).copy()
        alpha = np.broadcast_to(np.asarray(alpha, float), (n_sensors,)).copy()
        return cls(rho1=pd, rho0=pf, cov_x_h1=np.diag(4 * pd * (1 - pd)),
                   cov_x_h0=np.diag(4 * pf * (1 - pf)), alpha=alpha, iid=True)

    @classmethod
    def from_pmf(cls, pmf_h1, pmf_h0, alpha) -> "SensorStats":
        """General joint pmfs given as tables over ``decision_vectors(K)``."""
        alpha = np.asarray(alpha, float)
        K = alpha.size
        x = decision_vectors(K)
        t1, t0 = _check_pmf(pmf_h1, K), _check_pmf(pmf_h0, K)

        def moments(t):
            m = t @ x
            c = (x * t[:, None]).T @ x - np.outer(m, m)
            return (m + 1) / 2, c

        r1, c1 = moments(t1)
        r0, c0 = moments(t0)
        return cls(rho1=r1, rho0=r0, cov_x_h1=c1, cov_x_h0=c0, alpha=alpha,
                   iid=False, pmf_h1=t1, pmf_h0=t0)

    @property
    def n_sensors(self) -> int:
        return self.alpha.size

    @property
    def rho10(self) -> np.ndarray:
        return self.rho1 - self.rho0

    def rho(self, hypothesis: int) -> np.ndarray:
        return self.rho1 if hypothesis else self.rho0

    def cov_x(self, hypothesis: int) -> np.ndarray:
        return self.cov_x_h1 if hypothesis else self.cov_x_h0

    def pmf(self, hypothesis: int) -> np.ndarray:
        table = self.pmf_h1 if hypothesis else self.pmf_h0
        if table is None:
            table = iid_pmf_table(self.rho(hypothesis))
        return table

    def ideal(self) -> "SensorStats":
        """Perfect local sensing with the same amplitudes."""
        return SensorStats.independent(1.0, 0.0, self.alpha, self.n_sensors)


def sample_decisions(stats: SensorStats, hypothesis: int, rng: np.random.Generator,
                     size: Optional[int] = None) -> np.ndarray:
    """Draw x in {-1,+1}^K under H_i; ``size`` adds a leading batch axis."""
    n = 1 if size is None else size
    K = stats.n_sensors
    if stats.iid:
        p = stats.rho(hypothesis)
        x = np.where(rng.random((n, K)) < p, 1.0, -1.0)
    else:
        idx = rng.choice(2 ** K, size=n, p=stats.pmf(hypothesis))
        x = decision_vectors(K)[idx]
    return x[0] if size is None else x


def complex_gaussian(rng: np.random.Generator, shape, variance: float) -> np.ndarray:
    """Circularly-symmetric complex normal samples with E|w|^2 = variance."""
    s = np.sqrt(variance / 2.0)
    return s * rng.standard_normal(shape) + 1j * s * rng.standard_normal(shape)


def received_signal(channel_eff: np.ndarray, stats: SensorStats, x: np.ndarray,
                    noise_power: float, rng: np.random.Generator) -> np.ndarray:
    """y = H_eff D_alpha x + w. A batch x of shape (T, K) yields y of shape (T, N)."""
    if noise_power < 0:
        raise ValueError("noise power must be >= 0")
    x = np.asarray(x, float)
    clean = (x * stats.alpha) @ channel_eff.T
    if noise_power == 0:
        return clean.astype(complex)
    return clean + complex_gaussian(rng, clean.shape, noise_power)


def augment(v: np.ndarray) -> np.ndarray:
    """[v; conj(v)] along the first axis."""
    v = np.asarray(v)
    return np.concatenate([v, np.conj(v)], axis=0)


def augment_matrix(A: np.ndarray) -> np.ndarray:
    return np.vstack([A, np.conj(A)])


@dataclass(frozen=True)
class ConditionalMoments:
    mean_y: np.ndarray
    cov_y: np.ndarray
    pcov_y: np.ndarray
    aug_cov: np.ndarray


def conditional_moments(channel_eff: np.ndarray, stats: SensorStats, noise_power: float,
                        hypothesis: int) -> ConditionalMoments:
    if channel_eff.shape[1] != stats.n_sensors:
        raise ValueError(f"channel has {channel_eff.shape[1]} columns for {stats.n_sensors} sensors")
    N = channel_eff.shape[0]
    B = channel_eff * stats.alpha[None, :]
    C = stats.cov_x(hypothesis)
    mean = B @ (2 * stats.rho(hypothesis) - 1)
    BC = B @ C
    cov = BC @ B.conj().T + noise_power * np.eye(N)
    pcov = BC @ B.T
    pcov = 0.5 * (pcov + pcov.T)
    cov = 0.5 * (cov + cov.conj().T)
    Ba = augment_matrix(B)
    aug = Ba @ C @ Ba.conj().T + noise_power * np.eye(2 * N)
    aug = 0.5 * (aug + aug.conj().T)
    return ConditionalMoments(mean_y=mean, cov_y=cov, pcov_y=pcov, aug_cov=aug)
