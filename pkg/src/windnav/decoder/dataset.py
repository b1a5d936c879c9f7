"""Training data for the local wind-field decoding task.

Each example pairs a noisy range scan and two sparse wind measurements
(upstream freestream and at-robot) with the time-averaged wind sampled
on a square grid centered on the robot.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from ..errors import WindnavError
from ..fluidsim.solver import TimeAveragedField
from ..fluidsim.analysis import sample_wind
from ..sensing import D_MAX_DEFAULT, D_MIN_DEFAULT, lidar_scan
from ..worldgen import ObstacleMap


class WindowError(WindnavError):
    """Prediction window extends outside the simulated domain."""


@dataclass
class LocalWindField:
    """Time-averaged (u, v) on a (side, side) grid centered on the robot."""

    u: np.ndarray
    v: np.ndarray
    window: float  # H, m
    delta: float   # grid spacing, m

    @property
    def side(self):
        return self.u.shape[0]

    def flat(self):
        return np.concatenate([self.u.ravel(), self.v.ravel()])

    @classmethod
    def from_flat(cls, z, window, delta):
        side = int(round(window / delta))
        z = np.asarray(z, dtype=float)
        u = z[: side * side].reshape(side, side)
        v = z[side * side :].reshape(side, side)
        return cls(u=u, v=v, window=window, delta=delta)


def grid_side(window, delta):
    return int(round(window / delta))


def window_offsets(window, delta):
    """Cell-center offsets from the robot along one axis."""
    side = grid_side(window, delta)
    return (np.arange(side) - (side - 1) / 2.0) * delta


@dataclass
class GridSpec:
    window: float
    delta: float
    n_rays: int
    d_max: float = D_MAX_DEFAULT

    @property
    def side(self):
        return grid_side(self.window, self.delta)


@dataclass
class TrainingExample:
    ranges: np.ndarray   # (n_rays,)
    w_up: np.ndarray     # (2,)
    w_robot: np.ndarray  # (2,)
    target: LocalWindField


def sample_local_field(field: TimeAveragedField, obstacle_map: ObstacleMap, pos, window, delta):
    """Bilinear samples of the averaged field on the robot-centered grid;
    cells inside buildings are zeroed (no-penetration)."""
    pos = np.asarray(pos, dtype=float)
    off = window_offsets(window, delta)
    gx, gy = np.meshgrid(pos[0] + off, pos[1] + off, indexing="ij")
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    w = sample_wind(field, pts)
    side = grid_side(window, delta)
    u = w[:, 0].reshape(side, side)
    v = w[:, 1].reshape(side, side)
    for b in obstacle_map.buildings:
        inside = (gx >= b.xmin) & (gx <= b.xmax) & (gy >= b.ymin) & (gy <= b.ymax)
        u[inside] = 0.0
        v[inside] = 0.0
    return LocalWindField(u=u, v=v, window=window, delta=delta)


def sample_training_example(
    field: TimeAveragedField,
    obstacle_map: ObstacleMap,
    pos,
    spec: GridSpec,
    noise_std=0.35,
    rng=None,
):
    """One labeled example at `pos`; the window must fit inside the domain."""
    pos = np.asarray(pos, dtype=float)
    half = spec.window / 2.0
    lx, ly = obstacle_map.domain
    if not (half <= pos[0] <= lx - half and half <= pos[1] <= ly - half):
        raise WindowError(f"prediction window at {pos} leaves the domain")
    scan = lidar_scan(
        pos, obstacle_map, n_rays=spec.n_rays,
        noise_std=noise_std, clip=(D_MIN_DEFAULT, spec.d_max), rng=rng,
    )
    target = sample_local_field(field, obstacle_map, pos, spec.window, spec.delta)
    w_robot = sample_wind(field, pos)
    w_up = field.inlet.vector if field.inlet is not None else np.zeros(2)
    return TrainingExample(ranges=scan.ranges, w_up=w_up, w_robot=w_robot, target=target)


class WindDataset:
    """Flat arrays of examples plus the grid spec they were sampled with."""

    def __init__(self, spec: GridSpec, ranges, winds, targets):
        self.spec = spec
        self.ranges = np.asarray(ranges, dtype=float)    # (M, n_rays)
        self.winds = np.asarray(winds, dtype=float)      # (M, 4): w_up, w_robot
        self.targets = np.asarray(targets, dtype=float)  # (M, 2*side^2)

    def __len__(self):
        return len(self.ranges)

    @classmethod
    def from_examples(cls, spec: GridSpec, examples):
        return cls(
            spec,
            np.array([e.ranges for e in examples]),
            np.array([np.concatenate([e.w_up, e.w_robot]) for e in examples]),
            np.array([e.target.flat() for e in examples]),
        )

    def subset(self, idx):
        return WindDataset(self.spec, self.ranges[idx], self.winds[idx], self.targets[idx])

    def concatenated(self, other):
        assert other.spec.side == self.spec.side and other.spec.n_rays == self.spec.n_rays
        return WindDataset(
            self.spec,
            np.vstack([self.ranges, other.ranges]),
            np.vstack([self.winds, other.winds]),
            np.vstack([self.targets, other.targets]),
        )


_DS_MAGIC = b"WDST"
_DS_HEADER = struct.Struct("<4sIIIIfff")
_DS_VERSION = 1


def save_dataset(ds: WindDataset, path):
    m = len(ds)
    with open(path, "wb") as f:
        f.write(
            _DS_HEADER.pack(
                _DS_MAGIC, _DS_VERSION, m, ds.spec.n_rays, ds.spec.side,
                ds.spec.window, ds.spec.delta, ds.spec.d_max,
            )
        )
        rec = np.hstack([ds.ranges, ds.winds, ds.targets]).astype("<f4")
        f.write(np.ascontiguousarray(rec).tobytes())


def load_dataset(path):
    with open(path, "rb") as f:
        magic, version, m, n_rays, side, window, delta, d_max = _DS_HEADER.unpack(
            f.read(_DS_HEADER.size)
        )
        if magic != _DS_MAGIC or version != _DS_VERSION:
            raise ValueError("not a windnav dataset file")
        rec_len = n_rays + 4 + 2 * side * side
        data = np.frombuffer(f.read(4 * m * rec_len), dtype="<f4").reshape(m, rec_len)
    spec = GridSpec(window=window, delta=delta, n_rays=n_rays, d_max=d_max)
    return WindDataset(
        spec,
        data[:, :n_rays].astype(float),
        data[:, n_rays : n_rays + 4].astype(float),
        data[:, n_rays + 4 :].astype(float),
    )


def free_window_positions(obstacle_map: ObstacleMap, window, n, rng, max_tries=100_000):
    """Random robot positions whose prediction window fits the domain and
    that are not inside a building."""
    half = window / 2.0
    lx, ly = obstacle_map.domain
    out = []
    tries = 0
    while len(out) < n and tries < max_tries:
        tries += 1
        x = rng.uniform(half, lx - half)
        y = rng.uniform(half, ly - half)
        if not obstacle_map.contains_point(x, y):
            out.append((x, y))
    if len(out) < n:
        raise WindowError("could not place enough free sampling positions")
    return np.array(out)
