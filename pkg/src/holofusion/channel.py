"""Channel synthesis: far-field Rician sensor->RHS links, the deterministic
near-field RHS->feed matrix, and the fully-digital baseline."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .geometry import Scene, direction_angles

log = logging.getLogger(__name__)

WAVELENGTH = 1.0


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, float) / 10.0)


def dbm_to_watts(dbm):
    return 10.0 ** ((np.asarray(dbm, float) - 30.0) / 10.0)


@dataclass(frozen=True)
class FadingParams:
    mu: float  # linear path loss at d0
    d0: float
    nu: float
    rician_factors: np.ndarray  # kappa_k, linear
    eta: float = 1.0

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError("mu must be positive")
        if not self.d0 > 0:
            raise ValueError("d0 must be positive")
        if self.nu < 0:
            raise ValueError("nu must be >= 0")
        if np.any(np.asarray(self.rician_factors) < 0):
            raise ValueError("Rician factors must be >= 0")
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError("eta must lie in [0, 1]")

    @property
    def b(self) -> np.ndarray:
        kappa = np.asarray(self.rician_factors, float)
        return np.sqrt(kappa / (1.0 + kappa))

    @classmethod
    def draw(cls, n_sensors: int, rng: np.random.Generator, mu_db: float = -30.0,
             d0: float = 1.0, nu: float = 2.0, kappa_db_range=(3.0, 5.0),
             eta: float = 1.0) -> "FadingParams":
        """Rician factors drawn uniformly in dB over ``kappa_db_range``."""
        lo, hi = kappa_db_range
        kappa = db_to_linear(rng.uniform(lo, hi, size=n_sensors))
        return cls(mu=float(db_to_linear(mu_db)), d0=d0, nu=nu, rician_factors=kappa, eta=eta)


def path_loss(d, params: FadingParams):
    d = np.asarray(d, float)
    if np.any(d <= 0):
        raise ValueError("distance must be positive")
    return params.mu * (d / params.d0) ** (-params.nu)


def upa_steering(theta: float, phi: float, grid_dims: Tuple[int, int],
                 spacings: Tuple[float, float]) -> np.ndarray:
    """Uniform planar array response, row-major with the horizontal index fastest."""
    nh, nv = grid_dims
    dh, dv = spacings
    k = 2 * np.pi / WAVELENGTH
    mx = np.tile(np.arange(nh), nv)
    my = np.repeat(np.arange(nv), nh)
    return np.exp(1j * k * (mx * dh * np.sin(theta) * np.cos(phi)
                            + my * dv * np.sin(theta) * np.sin(phi)))


def _rician_matrix(scene: Scene, grid_dims, spacing: float, params: FadingParams,
                   rng: np.random.Generator) -> np.ndarray:
    K = scene.n_sensors
    M = grid_dims[0] * grid_dims[1]
    b = params.b
    if b.shape != (K,):
        raise ValueError(f"need {K} Rician factors, got {b.shape}")
    theta, phi, front = direction_angles(scene, scene.sensor_positions)
    dist = np.linalg.norm(scene.sensor_positions - scene.rhs_center, axis=1)
    amp = np.sqrt(path_loss(dist, params))

    tau = rng.uniform(0.0, 2 * np.pi, size=K)
    scatter = (rng.standard_normal((M, K)) + 1j * rng.standard_normal((M, K))) / np.sqrt(2)

    H = np.empty((M, K), complex)
    for k in range(K):
        los = upa_steering(theta[k], phi[k], grid_dims, (spacing, spacing)) * np.exp(1j * tau[k])
        H[:, k] = amp[k] * (b[k] * los + np.sqrt(1.0 - b[k] ** 2) * scatter[:, k])
    if not np.all(front):
        log.warning("sensors %s lie behind the RHS plane; their columns are zeroed",
                    np.flatnonzero(~front).tolist())
        H[:, ~front] = 0.0
    return H


def sensor_rhs_channel(scene: Scene, params: FadingParams, rng: np.random.Generator) -> np.ndarray:
    """M x K Rician matrix; distances are taken to the RHS center."""
    return _rician_matrix(scene, scene.rhs_grid_dims, scene.rhs_spacing, params, rng)


def digital_channel(scene: Scene, params: FadingParams, rng: np.random.Generator) -> np.ndarray:
    """N_dig x K Rician matrix over the lambda/2 baseline grid, same b_k."""
    return _rician_matrix(scene, scene.digital_grid_dims, scene.digital_spacing, params, rng)


def directivity(q: float, cos_theta):
    """Normalized power pattern 2(2q+1) cos^{2q}(theta), zero in the rear half-space."""
    if q < 0:
        raise ValueError("q must be >= 0")
    c = np.asarray(cos_theta, float)
    front = c >= 0
    out = np.where(front, 2.0 * (2.0 * q + 1.0) * np.power(np.clip(c, 0.0, 1.0), 2.0 * q), 0.0)
    return out if out.ndim else float(out)


def rhs_feed_channel(scene: Scene, params: FadingParams,
                     feed_aperture: Optional[float] = None) -> np.ndarray:
    """N x M spherical-wave matrix with element and feed directivity gains.

    Effective apertures are physical element areas (spacing squared) scaled by
    the directivity factor; the feed cosine is taken between unit vectors from
    the feed to the RHS center and from the feed to the element.
    """
    lam = WAVELENGTH
    q = scene.directivity_exponent
    diff = scene.feed_positions[:, None, :] - scene.rhs_element_positions[None, :, :]  # n, m
    dist = np.linalg.norm(diff, axis=2)
    if np.any(dist == 0):
        raise ValueError("a feed coincides with an RHS element")
    unit = diff / dist[..., None]  # element -> feed

    cos_rhs = unit @ scene.rhs_boresight
    cos_fc = np.einsum("nmk,nk->nm", -unit, scene.feed_boresights)

    a_rhs = scene.rhs_spacing ** 2 * directivity(q, cos_rhs)
    fa = scene.feed_spacing ** 2 if feed_aperture is None else feed_aperture
    a_fc = fa * directivity(q, cos_fc)
    gain_rhs = 4 * np.pi / lam ** 2 * a_rhs
    gain_fc = 4 * np.pi / lam ** 2 * a_fc
    return (lam / (4 * np.pi)) * np.sqrt(params.eta * gain_rhs * gain_fc) \
        * np.exp(-1j * 2 * np.pi / lam * dist) / dist


def g_magnitude_bound(scene: Scene, params: FadingParams) -> float:
    """Upper bound on |g_nm| from peak directivity and the minimum distance."""
    q = scene.directivity_exponent
    peak = 2.0 * (2.0 * q + 1.0)
    g_rhs = 4 * np.pi * scene.rhs_spacing ** 2 * peak
    g_fc = 4 * np.pi * scene.feed_spacing ** 2 * peak
    d = np.linalg.norm(scene.feed_positions[:, None] - scene.rhs_element_positions[None], axis=2)
    return float(np.sqrt(params.eta * g_rhs * g_fc) / (4 * np.pi) / d.min())


@dataclass(frozen=True)
class ChannelSet:
    H: np.ndarray  # M x K
    G: np.ndarray  # N x M
    H_dig: Optional[np.ndarray] = None  # N_dig x K
    blocked: Optional[np.ndarray] = None  # sensors behind the RHS plane

    def __post_init__(self):
        if self.G.shape[1] != self.H.shape[0]:
            raise ValueError(f"G is {self.G.shape} but H is {self.H.shape}")
        for m in (self.H, self.G, self.H_dig):
            if m is not None and not np.all(np.isfinite(m)):
                raise ValueError("channel entries must be finite")

    @property
    def shape(self):
        """(N, M, K)."""
        return self.G.shape[0], self.G.shape[1], self.H.shape[1]

    def effective(self, theta: np.ndarray) -> np.ndarray:
        """G diag(theta) H for unit-modulus reflection coefficients ``theta``."""
        return (self.G * theta[None, :]) @ self.H

    def to_dict(self) -> dict:
        def enc(m):
            if m is None:
                return None
            return {"rows": m.shape[0], "cols": m.shape[1],
                    "re": m.real.ravel().tolist(), "im": m.imag.ravel().tolist()}
        return {"H": enc(self.H), "G": enc(self.G), "H_dig": enc(self.H_dig),
                "blocked": None if self.blocked is None else self.blocked.tolist()}

    def dumps(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "ChannelSet":
        def dec(e):
            if e is None:
                return None
            return (np.asarray(e["re"]) + 1j * np.asarray(e["im"])).reshape(e["rows"], e["cols"])
        blocked = None if d.get("blocked") is None else np.asarray(d["blocked"], bool)
        return cls(H=dec(d["H"]), G=dec(d["G"]), H_dig=dec(d.get("H_dig")), blocked=blocked)


def synthesize_channels(scene: Scene, params: FadingParams, rng_rhs: np.random.Generator,
                        rng_digital: Optional[np.random.Generator] = None) -> ChannelSet:
    H = sensor_rhs_channel(scene, params, rng_rhs)
    G = rhs_feed_channel(scene, params)
    H_dig = None if rng_digital is None else digital_channel(scene, params, rng_digital)
    _, _, front = direction_angles(scene, scene.sensor_positions)
    return ChannelSet(H=H, G=G, H_dig=H_dig, blocked=~front)

