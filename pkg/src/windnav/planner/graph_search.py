"""Global wind-aware graph-search baseline.

Dijkstra over an 8-connected grid of free cells.  Each edge is traversed
at the best of a discrete set of ground speeds; the edge cost is the
energy P(airspeed) * length / speed with the airspeed taken against the
local time-averaged wind.  Unlike the receding-horizon planner, this
baseline sees the whole map and the whole averaged wind field.
"""

from __future__ import annotations

import heapq
import math

import numpy as np

from ..energetics import PowerCurve
from ..errors import NoPathError
from ..fluidsim.analysis import sample_wind
from ..fluidsim.solver import TimeAveragedField
from ..worldgen import ObstacleMap, rasterize

SPEED_BOUNDS = (0.5, 20.0)  # m/s ground-speed envelope
N_SPEEDS = 8

_NEIGHBORS = [
    (1, 0), (-1, 0), (0, 1), (0, -1),
    (1, 1), (1, -1), (-1, 1), (-1, -1),
]


def _power(curve, va):
    c0, c1, c2, c3 = curve.coeffs
    return c0 + va * (c1 + va * (c2 + va * c3))


def gs_baseline(
    obstacle_map: ObstacleMap,
    avg_field: TimeAveragedField,
    start,
    goal,
    curve: PowerCurve,
    speed_bounds=SPEED_BOUNDS,
    grid_dx=4.0,
    n_speeds=N_SPEEDS,
):
    """Minimum-energy path from start to goal.

    Returns (path (M, 2) world positions, total energy in J).  Raises
    NoPathError when the goal is unreachable.
    """
    mask = rasterize(obstacle_map, grid_dx)
    nx, ny = mask.nx, mask.ny
    blocked = mask.occupied
    speeds = np.geomspace(speed_bounds[0], speed_bounds[1], n_speeds)

    def cell_of(p):
        i = min(max(int(p[0] / grid_dx), 0), nx - 1)
        j = min(max(int(p[1] / grid_dx), 0), ny - 1)
        return i, j

    def center(c):
        return np.array([(c[0] + 0.5) * grid_dx, (c[1] + 0.5) * grid_dx])

    s_cell, g_cell = cell_of(start), cell_of(goal)
    if blocked[s_cell] or blocked[g_cell]:
        raise NoPathError("start or goal cell is inside an obstacle")

    # Wind at every cell center, sampled once.
    xs = (np.arange(nx) + 0.5) * grid_dx
    ys = (np.arange(ny) + 0.5) * grid_dx
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    wind = sample_wind(avg_field, np.column_stack([gx.ravel(), gy.ravel()])).reshape(nx, ny, 2)

    def edge_cost(ca, cb):
        di, dj = cb[0] - ca[0], cb[1] - ca[1]
        length = grid_dx * math.hypot(di, dj)
        direction = np.array([di, dj]) / math.hypot(di, dj)
        w = 0.5 * (wind[ca] + wind[cb])
        va = np.linalg.norm(direction[None, :] * speeds[:, None] - w[None, :], axis=1)
        energy = _power(curve, va) * (length / speeds)
        return float(energy.min())

    dist = {s_cell: 0.0}
    prev = {}
    heap = [(0.0, s_cell)]
    visited = set()
    while heap:
        d, cell = heapq.heappop(heap)
        if cell in visited:
            continue
        visited.add(cell)
        if cell == g_cell:
            break
        for di, dj in _NEIGHBORS:
            nb = (cell[0] + di, cell[1] + dj)
            if not (0 <= nb[0] < nx and 0 <= nb[1] < ny) or blocked[nb]:
                continue
            # Diagonal moves must not cut a blocked corner.
            if di and dj and (blocked[cell[0] + di, cell[1]] or blocked[cell[0], cell[1] + dj]):
                continue
            nd = d + edge_cost(cell, nb)
            if nd < dist.get(nb, math.inf):
                dist[nb] = nd
                prev[nb] = cell
                heapq.heappush(heap, (nd, nb))

    if g_cell not in visited:
        raise NoPathError("goal unreachable on the planning grid")

    cells = [g_cell]
    while cells[-1] != s_cell:
        cells.append(prev[cells[-1]])
    cells.reverse()
    path = np.array([center(c) for c in cells])
    return path, dist[g_cell]


def straight_line_energy_per_meter(curve: PowerCurve, speed_bounds=SPEED_BOUNDS, n_grid=10_000):
    """Dense-sweep oracle: min over ground speed of P(V)/V in still air."""
    vs = np.linspace(speed_bounds[0], speed_bounds[1], n_grid)
    return float((_power(curve, vs) / vs).min())
