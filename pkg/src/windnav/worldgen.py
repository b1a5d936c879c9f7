"""Procedural 2D urban maps: rectangular buildings on an open domain.

Maps are generated by uniform rejection sampling with a minimum
footprint clearance, rasterized to cell masks for the flow solver, and
classified into street-canyon flow regimes by their height-to-street
aspect ratio.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import PlacementError

RETRY_CAP = 10_000

DEFAULT_HEIGHT_RANGE = (10.0, 60.0)


@dataclass(frozen=True)
class Building:
    """Axis-aligned rectangular footprint with a height carried as metadata."""

    cx: float
    cy: float
    width: float   # extent along x, m
    length: float  # extent along y, m
    height: float  # m; unused by the 2D solver

    @property
    def xmin(self):
        return self.cx - 0.5 * self.width

    @property
    def xmax(self):
        return self.cx + 0.5 * self.width

    @property
    def ymin(self):
        return self.cy - 0.5 * self.length

    @property
    def ymax(self):
        return self.cy + 0.5 * self.length

    def contains(self, x, y):
        return (self.xmin <= x <= self.xmax) and (self.ymin <= y <= self.ymax)

    def edges(self):
        """Footprint boundary as four (p0, p1) segments, counterclockwise."""
        x0, x1, y0, y1 = self.xmin, self.xmax, self.ymin, self.ymax
        return [
            ((x0, y0), (x1, y0)),
            ((x1, y0), (x1, y1)),
            ((x1, y1), (x0, y1)),
            ((x0, y1), (x0, y0)),
        ]


@dataclass(frozen=True)
class ObstacleMap:
    domain: tuple[float, float]  # (Lx, Ly) in meters
    buildings: tuple[Building, ...]
    seed: int

    def contains_point(self, x, y):
        """True when (x, y) lies inside any building footprint."""
        return any(b.contains(x, y) for b in self.buildings)

    def in_domain(self, x, y):
        return 0.0 <= x <= self.domain[0] and 0.0 <= y <= self.domain[1]


@dataclass
class CellMask:
    """Rasterized occupancy: cell (i, j) spans [i*dx,(i+1)*dx] x [j*dx,(j+1)*dx]."""

    nx: int
    ny: int
    dx: float
    occupied: np.ndarray = field(repr=False)  # bool (nx, ny)
    obstacle_id: np.ndarray = field(repr=False, default=None)  # int (nx, ny), -1 = free

    def cell_centers(self):
        xs = (np.arange(self.nx) + 0.5) * self.dx
        ys = (np.arange(self.ny) + 0.5) * self.dx
        return xs, ys


class CanyonRegime(enum.Enum):
    ISOLATED_ROUGHNESS = "isolated_roughness"
    WAKE_INTERFERENCE = "wake_interference"
    SKIMMING_FLOW = "skimming_flow"


def classify_canyon_regime(h, s):
    """Street-canyon flow regime as a total function of the ratio h/s.

    Boundary ties (h/s == 0.3 or 0.7) fall into the middle band.
    """
    if h <= 0 or s <= 0:
        raise ValueError(f"height and street width must be positive, got h={h}, s={s}")
    ratio = h / s
    if ratio < 0.3:
        return CanyonRegime.ISOLATED_ROUGHNESS
    if ratio <= 0.7:
        return CanyonRegime.WAKE_INTERFERENCE
    return CanyonRegime.SKIMMING_FLOW


def footprint_clearance(a: Building, b: Building):
    """Euclidean gap between two axis-aligned rectangles (0 when overlapping)."""
    gx = max(0.0, abs(a.cx - b.cx) - 0.5 * (a.width + b.width))
    gy = max(0.0, abs(a.cy - b.cy) - 0.5 * (a.length + b.length))
    return math.hypot(gx, gy)


def generate_city(
    seed,
    domain=(600.0, 600.0),
    n_buildings=(9, 16),
    size=(10.0, 50.0),
    min_spacing=15.0,
    height_range=DEFAULT_HEIGHT_RANGE,
    retry_cap=RETRY_CAP,
):
    """Place `n_buildings` random rectangles with pairwise clearance >= min_spacing.

    Deterministic in (seed, parameters).  Raises PlacementError when the
    retry budget runs out, which signals an over-constrained layout.
    """
    rng = np.random.default_rng(seed)
    if isinstance(n_buildings, int):
        n_target = n_buildings
    else:
        lo, hi = n_buildings
        n_target = int(rng.integers(lo, hi + 1))

    placed: list[Building] = []
    attempts = 0
    while len(placed) < n_target:
        if attempts >= retry_cap:
            raise PlacementError(
                f"could not place {n_target} buildings after {retry_cap} attempts "
                f"(domain {domain}, spacing {min_spacing})"
            )
        attempts += 1
        w = rng.uniform(size[0], size[1])
        l = rng.uniform(size[0], size[1])
        h = rng.uniform(height_range[0], height_range[1])
        cx = rng.uniform(0.5 * w, domain[0] - 0.5 * w)
        cy = rng.uniform(0.5 * l, domain[1] - 0.5 * l)
        cand = Building(cx, cy, w, l, h)
        if all(footprint_clearance(cand, b) >= min_spacing for b in placed):
            placed.append(cand)

    return ObstacleMap(domain=tuple(domain), buildings=tuple(placed), seed=int(seed))


def rasterize(obstacle_map: ObstacleMap, dx):
    """Occupancy by the cell-center containment rule; ceiling cell counts."""
    if dx <= 0:
        raise ValueError(f"dx must be positive, got {dx}")
    nx = int(math.ceil(obstacle_map.domain[0] / dx - 1e-9))
    ny = int(math.ceil(obstacle_map.domain[1] / dx - 1e-9))
    occupied = np.zeros((nx, ny), dtype=bool)
    obstacle_id = np.full((nx, ny), -1, dtype=np.int32)
    xs = (np.arange(nx) + 0.5) * dx
    ys = (np.arange(ny) + 0.5) * dx
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    for k, b in enumerate(obstacle_map.buildings):
        inside = (gx >= b.xmin) & (gx <= b.xmax) & (gy >= b.ymin) & (gy <= b.ymax)
        occupied |= inside
        obstacle_id[inside] = k
    return CellMask(nx=nx, ny=ny, dx=float(dx), occupied=occupied, obstacle_id=obstacle_id)


def waypoint_pairs(obstacle_map: ObstacleMap, separation, n_pairs, seed, retry_cap=RETRY_CAP):
    """Sample (start, goal) pairs exactly `separation` apart in free space."""
    if separation > math.hypot(*obstacle_map.domain):
        raise ValueError("separation exceeds the domain diagonal")
    rng = np.random.default_rng(seed)
    pairs = []
    attempts = 0
    while len(pairs) < n_pairs:
        if attempts >= retry_cap:
            raise PlacementError(
                f"could not place {n_pairs} waypoint pairs after {retry_cap} attempts"
            )
        attempts += 1
        sx = rng.uniform(0.0, obstacle_map.domain[0])
        sy = rng.uniform(0.0, obstacle_map.domain[1])
        theta = rng.uniform(0.0, 2.0 * math.pi)
        gx = sx + separation * math.cos(theta)
        gy = sy + separation * math.sin(theta)
        if not obstacle_map.in_domain(gx, gy):
            continue
        if obstacle_map.contains_point(sx, sy) or obstacle_map.contains_point(gx, gy):
            continue
        pairs.append(((sx, sy), (gx, gy)))
    return pairs


# --- map file format -------------------------------------------------------
#
# Structured text, TOML-compatible.  All lengths in meters.  Floats are
# written with repr() so the round trip is lossless.


def _fmt(v):
    return repr(float(v))


def save_map(obstacle_map: ObstacleMap, path):
    lines = [
        "[domain]",
        f"size_x = {_fmt(obstacle_map.domain[0])}",
        f"size_y = {_fmt(obstacle_map.domain[1])}",
        f"seed = {obstacle_map.seed}",
        "",
    ]
    for b in obstacle_map.buildings:
        lines += [
            "[[buildings]]",
            f"center_x = {_fmt(b.cx)}",
            f"center_y = {_fmt(b.cy)}",
            f"width = {_fmt(b.width)}",
            f"length = {_fmt(b.length)}",
            f"height = {_fmt(b.height)}",
            "",
        ]
    with open(path, "w") as f:
        f.write("\n".join(lines))


def load_map(path):
    import tomllib

    with open(path, "rb") as f:
        data = tomllib.load(f)
    dom = data["domain"]
    buildings = tuple(
        Building(b["center_x"], b["center_y"], b["width"], b["length"], b["height"])
        for b in data.get("buildings", [])
    )
    return ObstacleMap(
        domain=(dom["size_x"], dom["size_y"]), buildings=buildings, seed=int(dom["seed"])
    )
