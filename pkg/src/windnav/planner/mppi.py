"""Energy-aware sampling-based receding-horizon control (MPPI).

The vehicle is a fully-actuated point mass in the plan frame: positions
are relative to the plan origin, accelerations are the control input,
and quadratic airspeed drag couples the wind into the dynamics.  Each
planning step perturbs the previous optimal control sequence, rolls the
samples out under forward Euler, scores them with non-dimensionalized
progress/obstacle/energy costs, and blends them with exponential
importance weights.

All planner variants (wind-aware or not, energy-aware or not) are pure
configuration of this one code path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..energetics import PowerCurve
from ..errors import PlannerStuckError
from .. import energetics

OBSTACLE_COST_CAP = 1e6
GRAVITY = 9.81


@dataclass(frozen=True)
class MppiConfig:
    n_rollouts: int = 100          # N_tau
    horizon: int = 187             # N_k
    dt: float = 0.25               # s
    f_plan: float = 10.0           # Hz
    lam: float = 0.79              # importance-weight temperature
    sigma_u: float = 5.15          # control noise std, m/s^2
    sigma_gf: float = 5.97         # smoothing kernel std, in steps
    q_obs: float = 1.25            # Q_O
    q_energy: float = 0.0          # Q_E
    d_max: float = 100.0           # LiDAR perception radius, m
    wind_window: float = 0.0       # H, m; 0 disables wind lookups
    drag_c: float = 0.0            # point-mass quadratic drag, 1/m
    a_min: float = -2.0 * GRAVITY
    a_max: float = 2.0 * GRAVITY
    sampling: str = "gaussian"     # or "uniform" (hardware-style)

    def __post_init__(self):
        if self.lam <= 0 or self.dt <= 0 or self.n_rollouts < 1 or self.horizon < 1:
            raise ValueError("invalid MPPI configuration")
        if self.q_obs < 0 or self.q_energy < 0:
            raise ValueError("cost weights must be non-negative")


# Simulated nominal hyperparameters (full-scale preset).
FULLSCALE_CONFIG = MppiConfig()


def sample_local_wind(wind, rel_pos):
    """Wind at relative positions (..., 2) from a robot-centered window.

    `wind` is a decoder-style LocalWindField whose grid is centered at
    the plan origin; positions outside the window, or a missing field,
    give zero wind.
    """
    pts = np.asarray(rel_pos, dtype=float)
    flat = pts.reshape(-1, 2)
    out = np.zeros_like(flat)
    if wind is None:
        return out.reshape(pts.shape)
    side = wind.side
    half = wind.window / 2.0
    inside = (np.abs(flat[:, 0]) <= half) & (np.abs(flat[:, 1]) <= half)
    if inside.any():
        # Fractional index of the window grid (cell centers at
        # (i - (side-1)/2) * delta relative to the robot).
        fx = flat[inside, 0] / wind.delta + (side - 1) / 2.0
        fy = flat[inside, 1] / wind.delta + (side - 1) / 2.0
        fx = np.clip(fx, 0.0, side - 1.0)
        fy = np.clip(fy, 0.0, side - 1.0)
        i0 = np.minimum(fx.astype(int), side - 2) if side > 1 else np.zeros(len(fx), int)
        j0 = np.minimum(fy.astype(int), side - 2) if side > 1 else np.zeros(len(fy), int)
        ax, ay = fx - i0, fy - j0
        i1 = np.minimum(i0 + 1, side - 1)
        j1 = np.minimum(j0 + 1, side - 1)
        for k, g in ((0, wind.u), (1, wind.v)):
            out[inside, k] = (
                (1 - ax) * (1 - ay) * g[i0, j0]
                + ax * (1 - ay) * g[i1, j0]
                + (1 - ax) * ay * g[i0, j1]
                + ax * ay * g[i1, j1]
            )
    return out.reshape(pts.shape)


def rollout_batch(x0, seqs, wind, cfg: MppiConfig):
    """Forward-Euler integration of (B, N_k, 2) control sequences.

    Returns (positions (B, N_k+1, 2), velocities (B, N_k+1, 2),
    winds (B, N_k+1, 2)).  x0 = (p_rel (2,), v (2,)).
    """
    seqs = np.asarray(seqs, dtype=float)
    b, n_k, _ = seqs.shape
    pos = np.empty((b, n_k + 1, 2))
    vel = np.empty((b, n_k + 1, 2))
    wnd = np.empty((b, n_k + 1, 2))
    pos[:, 0] = np.asarray(x0[0], dtype=float)
    vel[:, 0] = np.asarray(x0[1], dtype=float)
    for k in range(n_k):
        w_k = sample_local_wind(wind, pos[:, k])
        wnd[:, k] = w_k
        va = vel[:, k] - w_k
        drag = -cfg.drag_c * np.linalg.norm(va, axis=-1, keepdims=True) * va
        pos[:, k + 1] = pos[:, k] + vel[:, k] * cfg.dt
        vel[:, k + 1] = vel[:, k] + (seqs[:, k] + drag) * cfg.dt
    wnd[:, n_k] = sample_local_wind(wind, pos[:, n_k])
    return pos, vel, wnd


def rollout(x0, seq, wind, cfg: MppiConfig):
    """Single-sequence rollout; returns (positions, velocities)."""
    pos, vel, _ = rollout_batch(x0, np.asarray(seq, dtype=float)[None], wind, cfg)
    return pos[0], vel[0]


def project_goal(rel_goal, d_max):
    """Pull a far goal onto the perception radius, preserving direction."""
    g = np.asarray(rel_goal, dtype=float)
    norm = float(np.linalg.norm(g))
    if norm < d_max:
        return g.copy()
    return g * (d_max / norm)


def costs(pos, vel, wnd, rel_goal, scan_points, curve: PowerCurve, cfg: MppiConfig):
    """Non-dimensional cost terms for a batch of trajectories.

    Positions are normalized by the perception radius and power by the
    hover power, so the cost weights stay interpretable across scales.
    Returns (j_prog, j_obs, j_energy, j_total), each (B,).
    """
    p_bar = pos / cfg.d_max
    g_bar = np.asarray(rel_goal, dtype=float) / cfg.d_max
    diff = p_bar - g_bar[None, None, :]
    j_prog = np.sum(diff[..., 0] ** 2 + diff[..., 1] ** 2, axis=1)

    if scan_points is not None and len(scan_points) > 0:
        o_bar = np.asarray(scan_points, dtype=float) / cfg.d_max
        d2 = (
            (p_bar[:, :, None, 0] - o_bar[None, None, :, 0]) ** 2
            + (p_bar[:, :, None, 1] - o_bar[None, None, :, 1]) ** 2
        )
        min_d2 = d2.min(axis=(1, 2))
        with np.errstate(divide="ignore"):
            j_obs = np.minimum(1.0 / min_d2, OBSTACLE_COST_CAP)
    else:
        j_obs = np.zeros(pos.shape[0])

    airspeed = np.linalg.norm(vel - wnd, axis=-1)
    p_bar_power = np.clip(
        _power_no_warn(curve, airspeed) / curve.p_hover, 0.0, None
    )
    j_energy = p_bar_power.sum(axis=1) * cfg.dt

    j_total = j_prog + cfg.q_obs * j_obs + cfg.q_energy * j_energy
    return j_prog, j_obs, j_energy, j_total


def _power_no_warn(curve, va):
    c0, c1, c2, c3 = curve.coeffs
    return c0 + va * (c1 + va * (c2 + va * c3))


def _smooth_sequences(seqs, sigma_steps):
    """Gaussian smoothing along the horizon with edge renormalization.

    The kernel is normalized per output index, so smoothing is a convex
    combination and respects the control bounds.
    """
    if sigma_steps <= 0:
        return seqs
    radius = max(1, int(math.ceil(3.0 * sigma_steps)))
    offs = np.arange(-radius, radius + 1)
    kern = np.exp(-0.5 * (offs / sigma_steps) ** 2)
    b, n_k, dim = seqs.shape
    out = np.zeros_like(seqs)
    norm = np.zeros(n_k)
    for o, w in zip(offs, kern):
        lo_src, hi_src = max(0, -o), min(n_k, n_k - o)
        lo_dst, hi_dst = max(0, o), min(n_k, n_k + o)
        out[:, lo_dst:hi_dst] += w * seqs[:, lo_src:hi_src]
        norm[lo_dst:hi_dst] += w
    return out / norm[None, :, None]


def mppi_step(x0, prev_opt, sensors, curve: PowerCurve, cfg: MppiConfig, seed):
    """One receding-horizon planning step.

    sensors: dict with "goal" (relative goal position), optional "scan"
    (relative obstacle points) and "wind" (LocalWindField or None).
    Returns (a_cmd, warm_start, diagnostics); the warm start is the
    weighted sequence shifted by one step with the last action repeated.
    Deterministic per (inputs, seed).
    """
    rng = np.random.default_rng(seed)
    prev = np.asarray(prev_opt, dtype=float)
    n_k = cfg.horizon
    if prev.shape != (n_k, 2):
        raise ValueError(f"warm-start shape {prev.shape} != ({n_k}, 2)")

    if cfg.sampling == "uniform":
        seqs = rng.uniform(cfg.a_min, cfg.a_max, (cfg.n_rollouts, n_k, 2))
    else:
        noise = rng.normal(0.0, cfg.sigma_u, (cfg.n_rollouts, n_k, 2))
        seqs = np.clip(prev[None] + noise, cfg.a_min, cfg.a_max)
    seqs = _smooth_sequences(seqs, cfg.sigma_gf)

    goal = project_goal(sensors["goal"], cfg.d_max)
    wind = sensors.get("wind")
    scan = sensors.get("scan")
    pos, vel, wnd = rollout_batch(x0, seqs, wind, cfg)
    j_prog, j_obs, j_energy, j_total = costs(pos, vel, wnd, goal, scan, curve, cfg)

    finite = np.isfinite(j_total)
    if not finite.any():
        raise PlannerStuckError("all rollouts had non-finite cost")
    j_min = j_total[finite].min()
    weights = np.where(finite, np.exp(-(j_total - j_min) / cfg.lam), 0.0)
    weights = weights / weights.sum()

    blended = np.einsum("b,bkd->kd", weights, seqs)
    a_cmd = np.clip(blended[0].copy(), cfg.a_min, cfg.a_max)
    warm = np.vstack([blended[1:], blended[-1:]])
    diagnostics = {
        "j_prog": j_prog,
        "j_obs": j_obs,
        "j_energy": j_energy,
        "j_total": j_total,
        "weights": weights,
        "best_index": int(np.argmin(np.where(finite, j_total, np.inf))),
    }
    return a_cmd, warm, diagnostics
