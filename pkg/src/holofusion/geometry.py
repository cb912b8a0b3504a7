"""Scene construction: sensors, metasurface grid, receive feeds, and the
fully-digital baseline array. All lengths are in wavelengths."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

Vec3 = Tuple[float, float, float]


@dataclass(frozen=True)
class SceneConfig:
    n_sensors: int = 10
    n_rhs: int = 64
    n_feeds: int = 1
    n_digital: int = 100
    rhs_spacing: float = 1.0 / 3.0
    feed_spacing: float = 0.5
    digital_spacing: float = 0.5
    sensor_box: Tuple[Tuple[float, float], ...] = ((0.0, 40.0), (0.0, 40.0), (0.0, 3.0))
    rhs_center: Vec3 = (70.0, 20.0, 10.0)
    # RHS lies in the y-z plane and faces the sensor box (-x).
    rhs_boresight: Vec3 = (-1.0, 0.0, 0.0)
    rhs_horizontal: Vec3 = (0.0, 1.0, 0.0)
    rhs_vertical: Vec3 = (0.0, 0.0, 1.0)
    feed_center: Vec3 = (68.0, 18.0, 10.0)
    feed_axis: Vec3 = (1.0, 0.0, 0.0)
    directivity_exponent: float = 1.5

    def validate(self) -> None:
        for name in ("n_sensors", "n_rhs", "n_feeds", "n_digital"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        for name in ("n_rhs", "n_digital"):
            v = getattr(self, name)
            if math.isqrt(v) ** 2 != v:
                raise ValueError(f"{name}={v} is not a perfect square")
        for name in ("rhs_spacing", "feed_spacing", "digital_spacing"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if len(self.sensor_box) != 3 or any(hi <= lo for lo, hi in self.sensor_box):
            raise ValueError("sensor_box must give three (lo, hi) pairs with hi > lo")
        if self.directivity_exponent < 0:
            raise ValueError("directivity_exponent must be >= 0")
        frame = np.array([self.rhs_horizontal, self.rhs_vertical, self.rhs_boresight], float)
        if not np.allclose(frame @ frame.T, np.eye(3), atol=1e-12):
            raise ValueError("RHS frame axes must be orthonormal")
        if not np.linalg.norm(self.feed_axis) > 0:
            raise ValueError("feed_axis must be nonzero")


@dataclass(frozen=True)
class Scene:
    sensor_positions: np.ndarray  # (K, 3)
    rhs_element_positions: np.ndarray  # (M, 3), row-major, horizontal index fastest
    rhs_center: np.ndarray
    rhs_boresight: np.ndarray
    rhs_horizontal: np.ndarray
    rhs_vertical: np.ndarray
    feed_positions: np.ndarray  # (N, 3)
    feed_boresights: np.ndarray  # (N, 3)
    digital_array_positions: np.ndarray  # (N_dig, 3)
    rhs_spacing: float
    feed_spacing: float
    digital_spacing: float
    directivity_exponent: float
    frame_note: str = field(
        default="RHS in the y-z plane, boresight -x; horizontal axis +y, vertical +z; "
        "elements enumerated row-major with the horizontal index fastest"
    )

    @property
    def n_sensors(self) -> int:
        return self.sensor_positions.shape[0]

    @property
    def n_rhs(self) -> int:
        return self.rhs_element_positions.shape[0]

    @property
    def n_feeds(self) -> int:
        return self.feed_positions.shape[0]

    @property
    def n_digital(self) -> int:
        return self.digital_array_positions.shape[0]

    @property
    def rhs_grid_dims(self) -> Tuple[int, int]:
        s = math.isqrt(self.n_rhs)
        return s, s

    @property
    def digital_grid_dims(self) -> Tuple[int, int]:
        s = math.isqrt(self.n_digital)
        return s, s

    @property
    def feed_center(self) -> np.ndarray:
        return self.feed_positions.mean(axis=0)

    def to_dict(self) -> dict:
        out = {}
        for k, v in self.__dict__.items():
            out[k] = v.tolist() if isinstance(v, np.ndarray) else v
        return out


def planar_grid(center, horizontal, vertical, side: int, spacing: float) -> np.ndarray:
    """Centers of a side x side grid, row-major with the horizontal index fastest."""
    offsets = (np.arange(side) - (side - 1) / 2.0) * spacing
    mv, mh = np.meshgrid(offsets, offsets, indexing="ij")
    return (np.asarray(center, float)
            + mh.reshape(-1, 1) * np.asarray(horizontal, float)
            + mv.reshape(-1, 1) * np.asarray(vertical, float))


def build_scene(config: SceneConfig, rng: np.random.Generator) -> Scene:
    """Place sensors uniformly in the configured box and lay out the RHS,
    feed line and digital baseline grid around their fixed centers."""
    config.validate()
    box = np.asarray(config.sensor_box, float)
    sensors = box[:, 0] + rng.random((config.n_sensors, 3)) * (box[:, 1] - box[:, 0])

    center = np.asarray(config.rhs_center, float)
    h = np.asarray(config.rhs_horizontal, float)
    v = np.asarray(config.rhs_vertical, float)
    rhs = planar_grid(center, h, v, math.isqrt(config.n_rhs), config.rhs_spacing)
    digital = planar_grid(center, h, v, math.isqrt(config.n_digital), config.digital_spacing)

    axis = np.asarray(config.feed_axis, float)
    axis = axis / np.linalg.norm(axis)
    n = config.n_feeds
    feeds = np.asarray(config.feed_center, float) + (
        (np.arange(n) - (n - 1) / 2.0) * config.feed_spacing)[:, None] * axis
    to_center = center - feeds
    dist = np.linalg.norm(to_center, axis=1, keepdims=True)
    if np.any(dist == 0):
        raise ValueError("a feed coincides with the RHS center")
    boresights = to_center / dist

    return Scene(
        sensor_positions=sensors,
        rhs_element_positions=rhs,
        rhs_center=center,
        rhs_boresight=np.asarray(config.rhs_boresight, float),
        rhs_horizontal=h,
        rhs_vertical=v,
        feed_positions=feeds,
        feed_boresights=boresights,
        digital_array_positions=digital,
        rhs_spacing=float(config.rhs_spacing),
        feed_spacing=float(config.feed_spacing),
        digital_spacing=float(config.digital_spacing),
        directivity_exponent=float(config.directivity_exponent),
    )


def fraunhofer_distance(n_rhs: int, n_feeds: int, rhs_spacing: float,
                        feed_spacing: float) -> float:
    """Far-field boundary 2 D^2 / lambda of the larger of the square RHS
    aperture and the linear feed aperture (lambda = 1)."""
    if n_rhs < 1 or n_feeds < 1:
        raise ValueError("element counts must be >= 1")
    if rhs_spacing <= 0 or feed_spacing <= 0:
        raise ValueError("spacings must be positive")
    return 2.0 * max(n_rhs * rhs_spacing ** 2, (n_feeds * feed_spacing) ** 2)


def direction_angles(scene: Scene, points: np.ndarray):
    """Polar angle from the RHS boresight and azimuth in the RHS plane for the
    direction from the RHS center to each point. Returns (theta, phi, in_front)."""
    d = np.atleast_2d(points) - scene.rhs_center
    d = d / np.linalg.norm(d, axis=1, keepdims=True)
    c = d @ scene.rhs_boresight
    theta = np.arccos(np.clip(c, -1.0, 1.0))
    phi = np.mod(np.arctan2(d @ scene.rhs_vertical, d @ scene.rhs_horizontal), 2 * np.pi)
    return theta, phi, c > 0


def arrival_angles(scene: Scene, sensor_index: int) -> Tuple[float, float]:
    """(theta, phi) of sensor ``sensor_index`` in the RHS local frame.

    theta is measured from the boresight, phi in the RHS plane from the
    horizontal axis. Sensors behind the plane still get angles; the channel
    synthesis zeroes them.
    """
    theta, phi, _ = direction_angles(scene, scene.sensor_positions[sensor_index])
    return float(theta[0]), float(phi[0])


def sensors_in_front(scene: Scene) -> np.ndarray:
    return direction_angles(scene, scene.sensor_positions)[2]
