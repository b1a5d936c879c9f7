"""Unsteady 2D incompressible flow on a staggered grid with obstacle masking.

Velocity components live on cell faces: u on vertical faces, shape
(nx+1, ny); v on horizontal faces, shape (nx, ny+1).  Cell (i, j) spans
[i*dx, (i+1)*dx] x [j*dx, (j+1)*dx].  Each step performs semi-Lagrangian
self-advection, re-applies boundary conditions, and projects the field
onto the divergence-free space with a red-black SOR pressure solve.

Boundary conditions: Dirichlet inlet velocity on the upwind domain
edge(s) resolved from the inlet direction, zero-gradient outflow on the
remaining edges, and exact zero normal velocity on solid faces.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from ..errors import NumericError
from ..worldgen import CellMask, ObstacleMap, rasterize
from . import kernels

CFL_ADVISORY = 5.0


@dataclass(frozen=True)
class InletSpec:
    """Freestream inlet: speed (m/s) and direction (degrees from world +x)."""

    magnitude: float
    direction: float = 0.0

    def __post_init__(self):
        if self.magnitude < 0:
            raise ValueError("inlet magnitude must be >= 0")

    @property
    def vector(self):
        rad = math.radians(self.direction)
        return np.array([self.magnitude * math.cos(rad), self.magnitude * math.sin(rad)])


@dataclass
class WindGrid:
    """Instantaneous staggered-grid velocity field."""

    u: np.ndarray  # (nx+1, ny)
    v: np.ndarray  # (nx, ny+1)
    mask: CellMask
    dx: float
    t: float = 0.0
    inlet: InletSpec | None = None

    def cell_centered(self):
        """Velocity averaged to cell centers, two (nx, ny) arrays."""
        uc = 0.5 * (self.u[:-1, :] + self.u[1:, :])
        vc = 0.5 * (self.v[:, :-1] + self.v[:, 1:])
        return uc, vc


@dataclass
class TimeAveragedField:
    """Arithmetic mean of cell-centered velocity over an averaging window."""

    u: np.ndarray  # (nx, ny)
    v: np.ndarray  # (nx, ny)
    dx: float
    n_samples: int
    window: float  # seconds
    inlet: InletSpec | None = None
    mask: CellMask | None = None


@dataclass
class ForceHistory:
    """Per-obstacle pressure-proxy force series recorded once per step."""

    forces: np.ndarray  # (n_obstacles, n_steps, 2)
    dt: float

    @property
    def n_steps(self):
        return self.forces.shape[1]


def _bilinear(f, fx, fy):
    """Sample array f at fractional indices (fx, fy), clamped to the grid."""
    nx, ny = f.shape
    fx = np.clip(fx, 0.0, nx - 1.0)
    fy = np.clip(fy, 0.0, ny - 1.0)
    i0 = np.minimum(fx.astype(np.int64), nx - 2) if nx > 1 else np.zeros_like(fx, dtype=np.int64)
    j0 = np.minimum(fy.astype(np.int64), ny - 2) if ny > 1 else np.zeros_like(fy, dtype=np.int64)
    i1 = np.minimum(i0 + 1, nx - 1)
    j1 = np.minimum(j0 + 1, ny - 1)
    ax = fx - i0
    ay = fy - j0
    return (
        (1 - ax) * (1 - ay) * f[i0, j0]
        + ax * (1 - ay) * f[i1, j0]
        + (1 - ax) * ay * f[i0, j1]
        + ax * ay * f[i1, j1]
    )


def default_omega(nx, ny):
    """Near-optimal SOR relaxation factor for a Poisson problem on this grid."""
    n = max(nx, ny)
    return 2.0 / (1.0 + math.sin(math.pi / max(n, 2)))


class FluidSolver:
    """Owns one flow state and the precomputed projection structure."""

    def __init__(self, mask: CellMask, inlet: InletSpec, iters=300, omega=None):
        self.mask = mask
        self.inlet = inlet
        self.iters = int(iters)
        self.dx = mask.dx
        self.nx, self.ny = mask.nx, mask.ny
        self.omega = default_omega(self.nx, self.ny) if omega is None else float(omega)
        self.t = 0.0
        self.last_residual = np.nan

        solid = mask.occupied
        # Solid faces: adjacent to at least one solid cell.
        self.u_solid = np.zeros((self.nx + 1, self.ny), dtype=bool)
        self.u_solid[:-1, :] |= solid
        self.u_solid[1:, :] |= solid
        self.v_solid = np.zeros((self.nx, self.ny + 1), dtype=bool)
        self.v_solid[:, :-1] |= solid
        self.v_solid[:, 1:] |= solid

        # Upwind edges get Dirichlet inlet velocity; the rest are outflow.
        w = inlet.vector
        tol = 1e-12
        self.inlet_edges = {
            "west": w[0] > tol,
            "east": w[0] < -tol,
            "south": w[1] > tol,
            "north": w[1] < -tol,
        }

        self.u_inlet = np.zeros((self.nx + 1, self.ny), dtype=bool)
        self.v_inlet = np.zeros((self.nx, self.ny + 1), dtype=bool)
        if self.inlet_edges["west"]:
            self.u_inlet[0, :] = True
        if self.inlet_edges["east"]:
            self.u_inlet[-1, :] = True
        if self.inlet_edges["south"]:
            self.v_inlet[:, 0] = True
        if self.inlet_edges["north"]:
            self.v_inlet[:, -1] = True

        self._build_projection(self.u_solid | self.u_inlet, self.v_solid | self.v_inlet)
        self._build_force_faces()

        # Start from uniform freestream, zeroed at solids.
        self.u = np.full((self.nx + 1, self.ny), w[0])
        self.v = np.full((self.nx, self.ny + 1), w[1])
        self._apply_boundary()
        self._zero_solid_faces()

    # -- projection structure -------------------------------------------

    def _build_projection(self, u_fixed, v_fixed):
        """Coefficient and neighbor masks for the pressure Poisson solve.

        A face is correctable unless solid or inlet-Dirichlet.  Correctable
        faces between two fluid cells couple their pressures; correctable
        domain-boundary faces see a ghost cell with zero pressure.
        """
        solid = self.mask.occupied
        fluid = ~solid
        u_corr = ~u_fixed
        v_corr = ~v_fixed

        coef = np.zeros((self.nx, self.ny))
        # West/east faces of each cell.
        coef += u_corr[:-1, :]
        coef += u_corr[1:, :]
        coef += v_corr[:, :-1]
        coef += v_corr[:, 1:]

        # Neighbor terms only across interior fluid-fluid faces.
        self.open_w = np.zeros((self.nx, self.ny), dtype=bool)
        self.open_e = np.zeros((self.nx, self.ny), dtype=bool)
        self.open_s = np.zeros((self.nx, self.ny), dtype=bool)
        self.open_n = np.zeros((self.nx, self.ny), dtype=bool)
        self.open_w[1:, :] = u_corr[1:-1, :] & fluid[:-1, :] & fluid[1:, :]
        self.open_e[:-1, :] = self.open_w[1:, :]
        self.open_s[:, 1:] = v_corr[:, 1:-1] & fluid[:, :-1] & fluid[:, 1:]
        self.open_n[:, :-1] = self.open_s[:, 1:]

        coef[solid] = 0.0
        self.active = fluid & (coef > 0)
        with np.errstate(divide="ignore"):
            self.coef_inv = np.where(coef > 0, 1.0 / np.maximum(coef, 1e-300), 0.0)
        self.u_corr = u_corr
        self.v_corr = v_corr

    def _build_force_faces(self):
        """Index lists of fluid/solid face pairs, grouped for np.add.at."""
        solid = self.mask.occupied
        oid = self.mask.obstacle_id
        if oid is None:
            oid = np.where(solid, 0, -1).astype(np.int32)
        entries = []  # (component, fluid_i, fluid_j, sign, obstacle)
        fl_w, fl_e = ~solid[:-1, :] & solid[1:, :], solid[:-1, :] & ~solid[1:, :]
        ii, jj = np.nonzero(fl_w)  # fluid west of solid: +x force on obstacle
        entries.append(("p", ii, jj, 1.0, oid[ii + 1, jj]))
        ii, jj = np.nonzero(fl_e)  # fluid east of solid
        entries.append(("p", ii + 1, jj, -1.0, oid[ii, jj]))
        fl_s, fl_n = ~solid[:, :-1] & solid[:, 1:], solid[:, :-1] & ~solid[:, 1:]
        ii, jj = np.nonzero(fl_s)
        entries.append(("q", ii, jj, 1.0, oid[ii, jj + 1]))
        ii, jj = np.nonzero(fl_n)
        entries.append(("q", ii, jj + 1, -1.0, oid[ii, jj]))
        self._force_faces = entries
        self.n_obstacles = int(oid.max()) + 1 if oid is not None else 0

    # -- boundary handling ------------------------------------------------

    def _apply_boundary(self):
        w = self.inlet.vector
        u, v = self.u, self.v
        if self.inlet_edges["west"]:
            u[0, :] = w[0]
            v[0, :] = w[1]
        else:
            u[0, :] = u[1, :]
        if self.inlet_edges["east"]:
            u[-1, :] = w[0]
            v[-1, :] = w[1]
        else:
            u[-1, :] = u[-2, :]
        if self.inlet_edges["south"]:
            v[:, 0] = w[1]
            u[:, 0] = w[0]
        else:
            v[:, 0] = v[:, 1]
        if self.inlet_edges["north"]:
            v[:, -1] = w[1]
            u[:, -1] = w[0]
        else:
            v[:, -1] = v[:, -2]

    def _zero_solid_faces(self):
        self.u[self.u_solid] = 0.0
        self.v[self.v_solid] = 0.0

    # -- dynamics ----------------------------------------------------------

    def _advect(self, dt):
        dx, nx, ny = self.dx, self.nx, self.ny
        u, v = self.u, self.v
        lx, ly = nx * dx, ny * dx

        # u faces at (i*dx, (j+0.5)*dx)
        iu, ju = np.meshgrid(np.arange(nx + 1), np.arange(ny), indexing="ij")
        xu = iu * dx
        yu = (ju + 0.5) * dx
        v_at_u = _bilinear(v, np.clip(iu - 0.5, 0, nx - 1), ju + 0.5)
        bx = np.clip(xu - dt * u, 0.0, lx)
        by = np.clip(yu - dt * v_at_u, 0.0, ly)
        new_u = _bilinear(u, bx / dx, by / dx - 0.5)

        # v faces at ((i+0.5)*dx, j*dx)
        iv, jv = np.meshgrid(np.arange(nx), np.arange(ny + 1), indexing="ij")
        xv = (iv + 0.5) * dx
        yv = jv * dx
        u_at_v = _bilinear(u, iv + 0.5, np.clip(jv - 0.5, 0, ny - 1))
        bx = np.clip(xv - dt * u_at_v, 0.0, lx)
        by = np.clip(yv - dt * v, 0.0, ly)
        new_v = _bilinear(v, bx / dx - 0.5, by / dx)

        self.u, self.v = new_u, new_v

    def divergence(self):
        """Discrete divergence at every cell, in 1/s."""
        return (self.u[1:, :] - self.u[:-1, :] + self.v[:, 1:] - self.v[:, :-1]) / self.dx

    def _project(self):
        div = self.divergence()
        phi = np.zeros((self.nx, self.ny))
        rhs = -div * self.dx * self.dx
        rhs[~self.active] = 0.0
        kernels.sor_sweeps(
            phi, rhs, self.coef_inv,
            self.open_w, self.open_e, self.open_s, self.open_n,
            self.active, self.omega, self.iters,
        )
        # Subtract the pressure gradient from correctable faces; ghost
        # pressure outside the domain is zero.
        phi_w = np.zeros((self.nx + 1, self.ny))
        phi_e = np.zeros((self.nx + 1, self.ny))
        phi_w[1:, :] = phi
        phi_e[:-1, :] = phi
        self.u -= np.where(self.u_corr, (phi_e - phi_w) / self.dx, 0.0)
        phi_s = np.zeros((self.nx, self.ny + 1))
        phi_n = np.zeros((self.nx, self.ny + 1))
        phi_s[:, 1:] = phi
        phi_n[:, :-1] = phi
        self.v -= np.where(self.v_corr, (phi_n - phi_s) / self.dx, 0.0)
        self._zero_solid_faces()
        self._phi = phi
        res = self.divergence()
        res[self.mask.occupied] = 0.0
        self.last_residual = float(np.abs(res).max()) if res.size else 0.0

    def obstacle_forces(self):
        """Net pressure-proxy force per obstacle from the last projection."""
        out = np.zeros((max(self.n_obstacles, 1), 2))
        phi = self._phi
        for comp, ii, jj, sign, oids in self._force_faces:
            contrib = sign * phi[ii, jj] * self.dx
            np.add.at(out[:, 0 if comp == "p" else 1], oids, contrib)
        return out[: self.n_obstacles]

    def step(self, dt):
        if dt <= 0:
            raise ValueError("dt must be positive")
        speed = max(np.abs(self.u).max(), np.abs(self.v).max(), 0.0)
        if speed * dt / self.dx > CFL_ADVISORY:
            warnings.warn(
                f"advective CFL {speed * dt / self.dx:.1f} exceeds advisory {CFL_ADVISORY}",
                RuntimeWarning,
                stacklevel=2,
            )
        self._apply_boundary()
        self._advect(dt)
        self._apply_boundary()
        self._project()
        if not (np.isfinite(self.u).all() and np.isfinite(self.v).all()):
            raise NumericError("non-finite velocity after step")
        self.t += dt

    def grid(self):
        return WindGrid(
            u=self.u.copy(), v=self.v.copy(), mask=self.mask,
            dx=self.dx, t=self.t, inlet=self.inlet,
        )

    def load_grid(self, grid: WindGrid):
        self.u = grid.u.copy()
        self.v = grid.v.copy()
        self.t = grid.t


def step(grid: WindGrid, inlet: InletSpec, dt, iters=300):
    """Advance a WindGrid one step (functional wrapper around FluidSolver)."""
    solver = FluidSolver(grid.mask, inlet, iters=iters)
    solver.load_grid(grid)
    solver.step(dt)
    return solver.grid()


def project(u, v, mask: CellMask, iters, omega=None):
    """Project face velocities to the divergence-free space.

    All domain-boundary faces are treated as open (ghost pressure zero).
    Returns (u, v, residual) where residual is the max free-cell
    divergence after the solve.
    """
    if iters < 1:
        raise ValueError("iters must be >= 1")
    inlet = InletSpec(0.0)
    solver = FluidSolver(mask, inlet, iters=iters, omega=omega)
    solver.u = np.asarray(u, dtype=float).copy()
    solver.v = np.asarray(v, dtype=float).copy()
    solver._zero_solid_faces()
    solver._project()
    return solver.u, solver.v, solver.last_residual


def simulate(
    obstacle_map: ObstacleMap,
    inlet: InletSpec,
    dx=1.0,
    dt=0.25,
    dev_steps=100,
    avg_steps=200,
    iters=300,
    omega=None,
    snapshot_every=0,
):
    """Run development then averaging; return the time-averaged field,
    per-obstacle force histories over the averaging window, and optional
    instantaneous snapshots.
    """
    mask = rasterize(obstacle_map, dx)
    solver = FluidSolver(mask, inlet, iters=iters, omega=omega)
    for _ in range(dev_steps):
        solver.step(dt)

    acc_u = np.zeros((mask.nx, mask.ny))
    acc_v = np.zeros((mask.nx, mask.ny))
    forces = np.zeros((max(solver.n_obstacles, 1), avg_steps, 2))
    snapshots = []
    for k in range(avg_steps):
        solver.step(dt)
        uc, vc = solver.grid().cell_centered()
        acc_u += uc
        acc_v += vc
        forces[:, k, :] = solver.obstacle_forces()
        if snapshot_every and (k + 1) % snapshot_every == 0:
            snapshots.append((solver.t, uc, vc))

    n = max(avg_steps, 1)
    avg = TimeAveragedField(
        u=acc_u / n, v=acc_v / n, dx=dx, n_samples=avg_steps,
        window=avg_steps * dt, inlet=inlet, mask=mask,
    )
    history = ForceHistory(forces=forces[: solver.n_obstacles], dt=dt)
    return avg, history, snapshots
