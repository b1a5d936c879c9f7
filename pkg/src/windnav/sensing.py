"""Synthetic sensors: 2D LiDAR, IMU, motion capture, and gust generation.

Raycasting intersects building edge segments exactly rather than
marching a grid, so range geometry is testable in closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import SensorPlacementError
from .rotations import euler_from_matrix
from .vehicle import RigidState
from .worldgen import ObstacleMap

D_MIN_DEFAULT = 0.25   # m
D_MAX_DEFAULT = 100.0  # m


@dataclass
class LidarScan:
    ranges: np.ndarray          # (n_rays,), m, clipped to [d_min, d_max]
    angles: np.ndarray          # (n_rays,), rad, world frame
    fov: float                  # deg
    d_min: float
    d_max: float
    hits: np.ndarray = field(default=None, repr=False)  # bool, pre-noise hit mask

    @property
    def angular_resolution(self):
        return self.fov / len(self.ranges)

    def point_cloud(self):
        """Relative (x, y) positions of ray hits; misses are excluded."""
        sel = self.hits if self.hits is not None else np.ones(len(self.ranges), bool)
        r = self.ranges[sel]
        a = self.angles[sel]
        return np.column_stack([r * np.cos(a), r * np.sin(a)])


def _ray_segment_distances(origin, angles, segments):
    """Min hit distance per ray against all segments (inf = miss)."""
    d = np.column_stack([np.cos(angles), np.sin(angles)])  # (R, 2)
    p0 = segments[:, 0, :]  # (S, 2)
    e = segments[:, 1, :] - p0  # (S, 2)
    rel = p0[None, :, :] - origin[None, None, :]  # (1, S, 2)

    # Solve origin + t*d = p0 + s*e via 2x2 cross products.
    denom = d[:, None, 0] * (-e[None, :, 1]) - d[:, None, 1] * (-e[None, :, 0])
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (rel[:, :, 0] * (-e[None, :, 1]) - rel[:, :, 1] * (-e[None, :, 0])) / denom
        s = (d[:, None, 0] * rel[:, :, 1] - d[:, None, 1] * rel[:, :, 0]) / denom
    valid = (np.abs(denom) > 1e-15) & (t >= 0.0) & (s >= -1e-12) & (s <= 1.0 + 1e-12)
    t = np.where(valid, t, np.inf)
    return t.min(axis=1)


def lidar_scan(
    pos,
    obstacle_map: ObstacleMap,
    n_rays=360,
    fov=360.0,
    noise_std=0.0,
    clip=(D_MIN_DEFAULT, D_MAX_DEFAULT),
    seed=None,
    rng=None,
):
    """Cast `n_rays` rays over `fov` degrees from `pos` against building edges.

    Misses return d_max; Gaussian noise is added before clipping to
    [d_min, d_max].  Raises SensorPlacementError from inside a building.
    """
    pos = np.asarray(pos, dtype=float)
    if obstacle_map.contains_point(pos[0], pos[1]):
        raise SensorPlacementError(f"sensor at {pos} is inside an obstacle")
    d_min, d_max = clip
    angles = np.radians(np.arange(n_rays) * (fov / n_rays))

    segs = [seg for b in obstacle_map.buildings for seg in b.edges()]
    if segs:
        segments = np.asarray(segs, dtype=float)
        dist = _ray_segment_distances(pos[:2], angles, segments)
    else:
        dist = np.full(n_rays, np.inf)

    hits = np.isfinite(dist) & (dist <= d_max)
    ranges = np.where(hits, dist, d_max)
    if noise_std > 0:
        if rng is None:
            rng = np.random.default_rng(seed)
        ranges = ranges + rng.normal(0.0, noise_std, n_rays)
    ranges = np.clip(ranges, d_min, d_max)
    return LidarScan(ranges=ranges, angles=angles, fov=fov, d_min=d_min, d_max=d_max, hits=hits)


@dataclass(frozen=True)
class ImuConfig:
    accel_bias: np.ndarray = field(default_factory=lambda: np.zeros(3))
    gyro_bias: np.ndarray = field(default_factory=lambda: np.zeros(3))
    lever_arm: np.ndarray = field(default_factory=lambda: np.zeros(3))   # r_IMU, m
    mount_rotation: np.ndarray = field(default_factory=lambda: np.eye(3))  # R_I^B
    accel_noise_std: float = 0.0
    gyro_noise_std: float = 0.0


@dataclass
class ImuSample:
    accel: np.ndarray  # m/s^2
    gyro: np.ndarray   # rad/s


def imu_measure(state: RigidState, vdot_world, cfg: ImuConfig = ImuConfig(), g=9.81, rng=None):
    """Accelerometer and gyroscope sample for a given world acceleration.

    accel = R_I^B R^T (vdot + g z) + Omega x (Omega x r_IMU) + b_a + noise
    """
    vdot = np.asarray(vdot_world, dtype=float)
    specific = state.R.T @ (vdot + np.array([0.0, 0.0, g]))
    centripetal = np.cross(state.omega, np.cross(state.omega, cfg.lever_arm))
    accel = cfg.mount_rotation @ specific + centripetal + cfg.accel_bias
    gyro = state.omega + cfg.gyro_bias
    if rng is not None:
        accel = accel + rng.normal(0.0, cfg.accel_noise_std, 3)
        gyro = gyro + rng.normal(0.0, cfg.gyro_noise_std, 3)
    return ImuSample(accel=accel, gyro=gyro)


def mocap_measure(state: RigidState, vel_noise_std=0.0, att_noise_std=0.0, rng=None):
    """World-frame ground velocity and ZYX Euler attitude, plus noise."""
    v = state.v.copy()
    theta = euler_from_matrix(state.R)
    if rng is not None:
        v = v + rng.normal(0.0, vel_noise_std, 3)
        theta = theta + rng.normal(0.0, att_noise_std, 3)
    return v, theta


@dataclass(frozen=True)
class GustSpec:
    """Mean wind plus per-axis colored gusts.

    sigma_w is a dimensionless turbulence-intensity knob: the stationary
    gust standard deviation is sigma_w * max(|w_avg|, 1 m/s) per axis.
    """

    w_avg: tuple = (0.0, 0.0, 0.0)
    sigma_w: float = 0.0
    correlation_time: float = 2.0  # s
    seed: int = 0

    def __post_init__(self):
        if self.correlation_time <= 0:
            raise ValueError("correlation time must be positive")


class DrydenGust:
    """First-order (Ornstein-Uhlenbeck) colored gusts about a mean wind.

    Evaluate with monotonically non-decreasing times; a given (spec,
    query sequence) is fully deterministic.
    """

    def __init__(self, spec: GustSpec):
        self.spec = spec
        self.w_avg = np.asarray(spec.w_avg, dtype=float)
        self.std = spec.sigma_w * max(float(np.linalg.norm(self.w_avg)), 1.0)
        self._rng = np.random.default_rng(spec.seed)
        self._x = self._rng.normal(0.0, 1.0, 3) * self.std
        self._t = 0.0

    def at(self, t):
        if t < self._t - 1e-12:
            raise ValueError(f"gust stream evaluated backwards in time ({t} < {self._t})")
        dt = max(t - self._t, 0.0)
        if dt > 0 and self.std > 0:
            a = math.exp(-dt / self.spec.correlation_time)
            self._x = a * self._x + math.sqrt(max(1.0 - a * a, 0.0)) * self.std * self._rng.normal(
                0.0, 1.0, 3
            )
        elif dt > 0:
            self._x = np.zeros(3)
        self._t = max(t, self._t)
        return self.w_avg + self._x


def dryden_gust(spec: GustSpec, times):
    """Gust series sampled at a monotone time grid, shape (len(times), 3)."""
    stream = DrydenGust(spec)
    return np.array([stream.at(t) for t in np.atleast_1d(np.asarray(times, dtype=float))])


# --- CSV logs -------------------------------------------------------------


def write_scan_log(path, times, scans):
    n_r = len(scans[0].ranges)
    header = "time_s," + ",".join(f"range_{i}" for i in range(n_r))
    with open(path, "w") as f:
        f.write(header + "\n")
        for t, s in zip(times, scans):
            f.write(",".join([repr(float(t))] + [repr(float(r)) for r in s.ranges]) + "\n")


def write_gust_log(path, times, winds):
    with open(path, "w") as f:
        f.write("time_s,wx,wy,wz\n")
        for t, w in zip(times, winds):
            f.write(",".join(repr(float(x)) for x in (t, w[0], w[1], w[2])) + "\n")
