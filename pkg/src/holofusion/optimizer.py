"""Metasurface phase design: quadratic-form matrices of the deflection in the
phase vector, closed-form minorize-maximize updates, and the alternating
optimization that interleaves them with the optimal fusion weights."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy import linalg

from .channel import ChannelSet
from .fusion import DesignKind, FusionWeights, deflection, optimal_weights
from .sensing import SensorStats, augment

log = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class PhaseConfig:
    phi: np.ndarray

    def __post_init__(self):
        phi = np.mod(np.asarray(self.phi, float), TWO_PI)
        phi[phi >= TWO_PI] = 0.0  # mod can round up to exactly 2*pi
        object.__setattr__(self, "phi", phi)

    @classmethod
    def from_theta(cls, theta: np.ndarray) -> "PhaseConfig":
        return cls(np.angle(theta))

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> "PhaseConfig":
        return cls(rng.uniform(0.0, TWO_PI, size=n))

    @property
    def theta(self) -> np.ndarray:
        return np.exp(1j * self.phi)

    @property
    def theta_aug(self) -> np.ndarray:
        return augment(self.theta)

    @property
    def m(self) -> int:
        return self.phi.size


# ------------------------------------------------------------ matrix builders

def build_signature_matrix(channels: ChannelSet, stats: SensorStats,
                           target: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """N_r = G diag(H D_alpha target) and its 2N x 2M block-diagonal augmentation.

    Satisfies augment(H_eff(theta) D_alpha target) = N_aug @ augment(theta).
    """
    if channels.H.shape[1] != np.size(target):
        raise ValueError("target length must equal the number of sensors")
    Nr = channels.G * (channels.H @ (stats.alpha * np.asarray(target, float)))[None, :]
    n, m = Nr.shape
    N_aug = np.zeros((2 * n, 2 * m), complex)
    N_aug[:n, :m] = Nr
    N_aug[n:, m:] = np.conj(Nr)
    return Nr, N_aug


def build_xi(weights: FusionWeights, N_aug: np.ndarray) -> np.ndarray:
    """Rank-one numerator matrix (N^H a)(N^H a)^H."""
    u = N_aug.conj().T @ weights.a_aug
    return np.outer(u, u.conj())


def build_delta0(weights: FusionWeights, channels: ChannelSet) -> np.ndarray:
    """[conj(D_r), D_r] with D_r = H^H diag(G^H a), a the first half of the weights."""
    Dr = channels.H.conj().T * (channels.G.conj().T @ weights.a)[None, :]
    return np.hstack([np.conj(Dr), Dr])


def build_psi(weights: FusionWeights, channels: ChannelSet, stats: SensorStats,
              noise_power: float, hypothesis: int) -> np.ndarray:
    """Denominator matrix: theta_aug^H Psi theta_aug = a_aug^H Cov(y_aug|H_i) a_aug."""
    if noise_power <= 0:
        raise ValueError("noise power must be positive")
    D0 = build_delta0(weights, channels)
    m2 = D0.shape[1]
    A = stats.alpha[:, None] * stats.cov_x(hypothesis) * stats.alpha[None, :]
    Psi = D0.conj().T @ A @ D0
    Psi += (noise_power / m2) * np.vdot(weights.a_aug, weights.a_aug).real * np.eye(m2)
    return 0.5 * (Psi + Psi.conj().T)


def lambda_max(Psi: np.ndarray, tol: float = 1e-12, max_iter: int = 500) -> float:
    """Largest eigenvalue of a Hermitian PSD matrix.

    Power iteration from a fixed start vector; falls back to a dense
    Hermitian eigensolver if the residual has not converged within
    ``max_iter`` steps.
    """
    Psi = np.asarray(Psi)
    scale = np.abs(Psi).max() if Psi.size else 0.0
    if scale == 0.0:
        return 0.0
    if np.abs(Psi - Psi.conj().T).max() > 1e-8 * scale:
        raise ValueError("matrix is not Hermitian")
    n = Psi.shape[0]
    k = np.arange(n)
    v = (1.0 + 0.5 * np.cos(k)) * np.exp(1j * 0.618 * k)
    v = v / np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        w = Psi @ v
        lam = np.vdot(v, w).real
        r = np.linalg.norm(w - lam * v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            break
        if r <= tol * max(abs(lam), 1e-300):
            # Rayleigh quotient error is O(r^2 / gap); r alone is a safe bound
            return float(lam + r)
        v = w / nw
    return float(linalg.eigvalsh(Psi, subset_by_index=[n - 1, n - 1])[0])


# ------------------------------------------------------------ MM updates

def _first_half_angles(v: np.ndarray, fallback: np.ndarray) -> PhaseConfig:
    m = v.size // 2
    top = v[:m]
    phi = np.where(top != 0, np.angle(top), fallback)
    return PhaseConfig(phi)


def mm_update_fuc(phases: PhaseConfig, Xi: np.ndarray, Psi: np.ndarray,
                  lam: Optional[float] = None) -> PhaseConfig:
    """Maximizer of the linearized minorizer of theta^H Xi theta / theta^H Psi theta."""
    t = phases.theta_aug
    c = np.vdot(t, Psi @ t).real
    if c <= 0:
        raise ValueError("zero denominator quadratic form")
    x = np.vdot(t, Xi @ t).real
    if lam is None:
        lam = lambda_max(Psi)
    v = Xi @ t / c - (x / c ** 2) * (Psi @ t - lam * t)
    return _first_half_angles(v, phases.phi)


def mm_update_is(phases: PhaseConfig, Xi_t: np.ndarray) -> PhaseConfig:
    """Phase alignment with Xi_t theta (first-order minorizer of the convex IS objective)."""
    return _first_half_angles(Xi_t @ phases.theta_aug, phases.phi)


def surrogate_fuc(phases: PhaseConfig, anchor: PhaseConfig, Xi: np.ndarray,
                  Psi: np.ndarray) -> float:
    """Minorizer of the FuC ratio built at ``anchor`` (touches it there)."""
    t, tl = phases.theta_aug, anchor.theta_aug
    c = np.vdot(tl, Psi @ tl).real
    x = np.vdot(tl, Xi @ tl).real
    return float(2.0 * np.vdot(tl, Xi @ t).real / c - x / c ** 2 * np.vdot(t, Psi @ t).real)


def surrogate_is(phases: PhaseConfig, anchor: PhaseConfig, Xi_t: np.ndarray,
                 weight_norm_sq: float = 1.0) -> float:
    """Tangent-plane minorizer of theta^H Xi_t theta / ||a||^2 at ``anchor``."""
    t, tl = phases.theta_aug, anchor.theta_aug
    x = np.vdot(tl, Xi_t @ tl).real
    return float((2.0 * np.vdot(tl, Xi_t @ t).real - x) / weight_norm_sq)


def ratio_objective(phases: PhaseConfig, Xi: np.ndarray, Psi: np.ndarray) -> float:
    t = phases.theta_aug
    return float(np.vdot(t, Xi @ t).real / np.vdot(t, Psi @ t).real)


# ------------------------------------------------------------ AO driver

@dataclass
class AOOptions:
    max_iter: int = 200
    rtol: float = 1e-6
    inner_steps: int = 1
    keep_snapshots: bool = False


@dataclass
class AOTrace:
    objective: List[float] = field(default_factory=list)
    wall_time: List[float] = field(default_factory=list)
    snapshots: List[Tuple[np.ndarray, np.ndarray]] = field(default_factory=list)
    iterations: int = 0
    reason: str = ""

    def is_monotone(self, rtol: float = 1e-9) -> bool:
        o = np.asarray(self.objective)
        return bool(np.all(o[1:] >= o[:-1] - rtol * np.abs(o[:-1])))

    def to_dict(self) -> dict:
        return {"iterations": self.iterations, "reason": self.reason,
                "records": [{"iteration": i, "objective": o, "wall_time": w}
                            for i, (o, w) in enumerate(zip(self.objective, self.wall_time))]}


def design_objective(kind: DesignKind, weights: FusionWeights, channels: ChannelSet,
                     phases: PhaseConfig, stats: SensorStats, noise_power: float) -> float:
    return deflection(kind, weights, channels.effective(phases.theta), stats, noise_power)


def step_b(kind: DesignKind, weights: FusionWeights, phases: PhaseConfig, channels: ChannelSet,
           stats: SensorStats, noise_power: float, n_steps: int = 1,
           N_aug: Optional[np.ndarray] = None) -> PhaseConfig:
    """MM phase update(s) with the fusion weights held fixed."""
    if N_aug is None:
        target = np.ones(stats.n_sensors) if kind is DesignKind.IS else stats.rho10
        N_aug = build_signature_matrix(channels, stats, target)[1]
    Xi = build_xi(weights, N_aug)
    if kind is DesignKind.IS:
        for _ in range(n_steps):
            phases = mm_update_is(phases, Xi)
        return phases
    Psi = build_psi(weights, channels, stats, noise_power, kind.hypothesis)
    lam = lambda_max(Psi)
    for _ in range(n_steps):
        phases = mm_update_fuc(phases, Xi, Psi, lam)
    return phases


def ao_joint_design(kind, channels: ChannelSet, stats: SensorStats, noise_power: float,
                    init: Optional[PhaseConfig] = None, opts: Optional[AOOptions] = None,
                    rng: Optional[np.random.Generator] = None):
    """Alternate optimal fusion weights (step A) and MM phase updates (step B).

    Returns ``(weights, phases, trace)``. ``trace.objective[0]`` is the
    deflection at the initial phases with their optimal weights; each later
    entry follows one full B-then-A iteration, so the final weights are
    optimal for the final phases.
    """
    kind = DesignKind.parse(kind)
    opts = opts or AOOptions()
    _, M, K = channels.shape
    if init is None:
        init = PhaseConfig.random(M, rng if rng is not None else np.random.default_rng())
    if init.m != M:
        raise ValueError(f"initial phases have {init.m} entries, RHS has {M}")
    target = np.ones(K) if kind is DesignKind.IS else stats.rho10
    N_aug = build_signature_matrix(channels, stats, target)[1]
    trace = AOTrace()
    t0 = time.perf_counter()

    phases = init
    h_eff = channels.effective(phases.theta)
    if not np.any(N_aug):
        trace.objective.append(0.0)
        trace.wall_time.append(time.perf_counter() - t0)
        trace.reason = "degenerate: zero signal"
        return None, phases, trace

    weights = optimal_weights(kind, h_eff, stats, noise_power)
    obj = deflection(kind, weights, h_eff, stats, noise_power)
    trace.objective.append(obj)
    trace.wall_time.append(time.perf_counter() - t0)
    if opts.keep_snapshots:
        trace.snapshots.append((weights.a_aug.copy(), phases.phi.copy()))

    trace.reason = "max_iter"
    for it in range(1, opts.max_iter + 1):
        new_phases = step_b(kind, weights, phases, channels, stats, noise_power,
                            opts.inner_steps, N_aug)
        h_eff = channels.effective(new_phases.theta)
        new_weights = optimal_weights(kind, h_eff, stats, noise_power)
        new_obj = deflection(kind, new_weights, h_eff, stats, noise_power)
        if new_obj < obj * (1 - 1e-9):
            log.warning("AO objective decreased from %.17g to %.17g", obj, new_obj)
        trace.objective.append(new_obj)
        trace.wall_time.append(time.perf_counter() - t0)
        if opts.keep_snapshots:
            trace.snapshots.append((new_weights.a_aug.copy(), new_phases.phi.copy()))
        trace.iterations = it
        converged = abs(new_obj - obj) <= opts.rtol * max(abs(obj), 1e-300)
        phases, weights, obj = new_phases, new_weights, new_obj
        if converged:
            trace.reason = "tolerance"
            break
    return weights, phases, trace


def quantize_phases(phases: PhaseConfig, bits: int) -> PhaseConfig:
    """Round each phase to the nearest of 2^bits uniformly spaced levels (wrap-aware)."""
    if bits < 1:
        raise ValueError("bits must be >= 1")
    levels = 2 ** bits
    step = TWO_PI / levels
    k = np.mod(np.round(phases.phi / step), levels)
    return PhaseConfig(k * step)
