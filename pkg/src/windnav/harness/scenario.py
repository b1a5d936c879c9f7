"""Closed-loop scenario execution: sensing -> wind source -> planner ->
plant, with the termination rules and per-trial metrics.

Variants are pure configuration of the one MPPI code path: the EA-
variants enable the energy cost weight, the +W variants attach a local
wind window (oracle-sampled or decoder-predicted).  GS variants run the
global graph-search baseline instead of the closed loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..decoder.dataset import sample_local_field
from ..decoder.mlp import MlpModel, mlp_forward
from ..energetics import PowerCurve
from ..errors import WindnavError
from ..fluidsim.analysis import sample_wind
from ..fluidsim.solver import TimeAveragedField
from ..planner.graph_search import gs_baseline
from ..planner.mppi import MppiConfig, mppi_step
from ..sensing import lidar_scan
from ..worldgen import ObstacleMap

VARIANTS = ("MPPI", "MPPI+W", "EA-MPPI", "EA-MPPI+W", "GS", "GS+W")

SUCCESS_RADIUS = 5.0   # m
SUCCESS_SPEED = 2.0    # m/s
HOVER_SPEED = 1.0      # m/s
HOLD_TIME = 5.0        # s
TIMEOUT = 120.0        # simulated s


@dataclass
class ScenarioConfig:
    obstacle_map: ObstacleMap
    wind_field: TimeAveragedField
    start: tuple
    goal: tuple
    variant: str
    curve: PowerCurve
    mppi: MppiConfig
    seed: int = 0
    q_energy: float = 3.0          # applied when the variant is energy-aware
    wind_window: float = 60.0      # H for +W variants, m
    wind_delta: float = 2.0        # oracle window resolution, m
    wind_source: str = "oracle"    # or "decoder"
    decoder_model: MlpModel = None
    n_scan_rays: int = 90
    scan_noise_std: float = 0.14
    plant: str = "point-mass"      # or "rigid-body"
    plant_dt: float = 0.02
    timeout: float = TIMEOUT

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")


@dataclass
class TrialRecord:
    outcome: str            # success | hover | collision | timeout | error
    energy_kj: float
    mean_cmd_acc: float     # m/s^2
    time_to_goal: float     # s (elapsed time at termination)
    distance: float         # m traveled
    variant: str = ""
    seed: int = 0
    cause: str = ""

    CSV_HEADER = "variant,seed,outcome,energy_kj,mean_cmd_acc,time_to_goal_s,distance_m,cause"

    def csv_row(self):
        return ",".join(
            [
                self.variant,
                str(self.seed),
                self.outcome,
                repr(float(self.energy_kj)),
                repr(float(self.mean_cmd_acc)),
                repr(float(self.time_to_goal)),
                repr(float(self.distance)),
                self.cause.replace(",", ";"),
            ]
        )


LOG_HEADER = (
    "time_s,px,py,vx,vy,ax_cmd,ay_cmd,wind_x,wind_y,power_W,J_prog,J_obs,J_energy"
)


def _variant_flags(variant):
    energy_aware = variant.startswith("EA-")
    wind_aware = variant.endswith("+W")
    return energy_aware, wind_aware


def _planner_config(cfg: ScenarioConfig):
    energy_aware, wind_aware = _variant_flags(cfg.variant)
    return replace(
        cfg.mppi,
        q_energy=cfg.q_energy if energy_aware else 0.0,
        wind_window=cfg.wind_window if wind_aware else 0.0,
    )


def _wind_window(cfg: ScenarioConfig, pos, rng):
    """Local wind knowledge handed to the planner for +W variants."""
    if cfg.wind_source == "decoder":
        model = cfg.decoder_model
        if model is None:
            raise WindnavError("decoder wind source requires a model")
        scan = lidar_scan(
            pos, cfg.obstacle_map, n_rays=model.spec.n_rays,
            noise_std=cfg.scan_noise_std, clip=(0.25, model.spec.d_max), rng=rng,
        )
        w_up = cfg.wind_field.inlet.vector if cfg.wind_field.inlet else np.zeros(2)
        w_robot = sample_wind(cfg.wind_field, pos)
        return mlp_forward(model, scan.ranges, w_up, w_robot)
    return sample_local_field(
        cfg.wind_field, cfg.obstacle_map, pos, cfg.wind_window, cfg.wind_delta
    )


def run_scenario(cfg: ScenarioConfig, log_path=None):
    """Execute one trial and return its TrialRecord.

    Module errors are captured as outcome="error" with the cause.  The
    whole trial is deterministic in (cfg, seed).
    """
    try:
        if cfg.variant.startswith("GS"):
            return _run_graph_search(cfg)
        return _run_closed_loop(cfg, log_path)
    except WindnavError as exc:
        return TrialRecord(
            outcome="error", energy_kj=0.0, mean_cmd_acc=0.0, time_to_goal=0.0,
            distance=0.0, variant=cfg.variant, seed=cfg.seed, cause=str(exc),
        )


def _run_graph_search(cfg: ScenarioConfig):
    field_ = cfg.wind_field
    if cfg.variant == "GS":  # wind-blind: plan against still air
        field_ = TimeAveragedField(
            u=np.zeros_like(field_.u), v=np.zeros_like(field_.v),
            dx=field_.dx, n_samples=0, window=0.0,
        )
    path, energy = gs_baseline(
        cfg.obstacle_map, field_, cfg.start, cfg.goal, cfg.curve
    )
    # Re-price the path against the true averaged wind to get time and
    # the energy actually spent (matters for the wind-blind variant).
    from ..planner.graph_search import SPEED_BOUNDS

    speeds = np.geomspace(SPEED_BOUNDS[0], SPEED_BOUNDS[1], 8)
    total_e, total_t, total_d = 0.0, 0.0, 0.0
    for a, b in zip(path[:-1], path[1:]):
        seg = b - a
        length = float(np.linalg.norm(seg))
        if length == 0:
            continue
        direction = seg / length
        w = sample_wind(cfg.wind_field, 0.5 * (a + b))
        va = np.linalg.norm(direction[None, :] * speeds[:, None] - w[None, :], axis=1)
        c0, c1, c2, c3 = cfg.curve.coeffs
        p = c0 + va * (c1 + va * (c2 + va * c3))
        e = p * (length / speeds)
        k = int(np.argmin(e))
        total_e += float(e[k])
        total_t += length / float(speeds[k])
        total_d += length
    return TrialRecord(
        outcome="success", energy_kj=total_e / 1e3, mean_cmd_acc=0.0,
        time_to_goal=total_t, distance=total_d, variant=cfg.variant, seed=cfg.seed,
    )


class PointMassPlant:
    """Planner-consistent 2D plant: forward Euler with quadratic drag."""

    def __init__(self, start, drag_c):
        self.pos = np.asarray(start, dtype=float).copy()
        self.vel = np.zeros(2)
        self.drag_c = drag_c

    def step(self, a_cmd, wind, dt):
        va = self.vel - wind
        drag = -self.drag_c * np.linalg.norm(va) * va
        self.pos = self.pos + self.vel * dt
        self.vel = self.vel + (a_cmd + drag) * dt


class RigidBodyPlant:
    """Full 6-DoF plant with the geometric acceleration-tracking inner loop."""

    def __init__(self, start, params, altitude=30.0):
        from ..vehicle import RigidState

        self.params = params
        self.state = RigidState.at_rest(params.n_rotors)
        self.state.p = np.array([start[0], start[1], altitude])
        self.state.eta = np.full(params.n_rotors, params.hover_rotor_speed())
        self.altitude = altitude
        from .control import AccelTrackingController

        self.controller = AccelTrackingController(params)

    @property
    def pos(self):
        return self.state.p[:2]

    @property
    def vel(self):
        return self.state.v[:2]

    def step(self, a_cmd, wind, dt):
        from ..vehicle import aero_wrench, control_wrench, motor_step, step_rigid_body

        # Altitude-hold PD closes the third axis the planner does not command.
        a_z = 2.0 * (self.altitude - self.state.p[2]) - 2.0 * self.state.v[2]
        a_ref = np.array([a_cmd[0], a_cmd[1], a_z])
        eta_c = self.controller.rotor_commands(self.state, a_ref)
        wind3 = np.array([wind[0], wind[1], 0.0])
        f_c, tau_c = control_wrench(self.state.eta, self.params)
        f_a, tau_a = aero_wrench(self.state, wind3, self.params)
        new = step_rigid_body(self.state, f_c + f_a, tau_c + tau_a, dt, self.params)
        new.eta = motor_step(self.state.eta, eta_c, self.params.tau_m, dt)
        self.state = new


def _run_closed_loop(cfg: ScenarioConfig, log_path=None):
    plan_cfg = _planner_config(cfg)
    _, wind_aware = _variant_flags(cfg.variant)
    steps_per_plan = max(1, int(round(1.0 / (plan_cfg.f_plan * cfg.plant_dt))))
    dt = cfg.plant_dt
    n_steps = int(round(cfg.timeout / dt))

    if cfg.plant == "rigid-body":
        from ..vehicle import preset

        plant = RigidBodyPlant(cfg.start, preset("hummingbird-sim"))
    else:
        plant = PointMassPlant(cfg.start, plan_cfg.drag_c)
    goal = np.asarray(cfg.goal, dtype=float)
    warm = np.zeros((plan_cfg.horizon, 2))
    a_cmd = np.zeros(2)
    diag = {"j_prog": np.zeros(1), "j_obs": np.zeros(1), "j_energy": np.zeros(1),
            "weights": np.ones(1)}

    energy_j = 0.0
    distance = 0.0
    cmd_acc_sum, cmd_count = 0.0, 0
    success_hold = 0.0
    hover_hold = 0.0
    outcome = "timeout"
    t = 0.0
    rows = []

    for k in range(n_steps):
        pos, vel = plant.pos.copy(), plant.vel.copy()
        if k % steps_per_plan == 0:
            plan_idx = k // steps_per_plan
            scan_rng = np.random.default_rng([cfg.seed, 1001, plan_idx])
            scan = lidar_scan(
                pos, cfg.obstacle_map, n_rays=cfg.n_scan_rays,
                noise_std=cfg.scan_noise_std, clip=(0.25, plan_cfg.d_max), rng=scan_rng,
            )
            wind = _wind_window(cfg, pos, scan_rng) if wind_aware else None
            sensors = {"goal": goal - pos, "scan": scan.point_cloud(), "wind": wind}
            a_cmd, warm, diag = mppi_step(
                (np.zeros(2), vel), warm, sensors, cfg.curve, plan_cfg,
                seed=[cfg.seed, 2002, plan_idx],
            )
            cmd_acc_sum += float(np.linalg.norm(a_cmd))
            cmd_count += 1

        w_true = sample_wind(cfg.wind_field, pos)
        airspeed = float(np.linalg.norm(vel - w_true))
        c0, c1, c2, c3 = cfg.curve.coeffs
        power = c0 + airspeed * (c1 + airspeed * (c2 + airspeed * c3))
        energy_j += power * dt
        plant.step(a_cmd, w_true, dt)
        distance += float(np.linalg.norm(plant.pos - pos))
        pos, vel = plant.pos.copy(), plant.vel.copy()
        t = (k + 1) * dt

        if log_path is not None:
            w_mean = float(np.sum(diag["weights"] * diag["j_prog"]))
            w_obs = float(np.sum(diag["weights"] * diag["j_obs"]))
            w_en = float(np.sum(diag["weights"] * diag["j_energy"]))
            rows.append(
                ",".join(
                    repr(float(x))
                    for x in (
                        t, pos[0], pos[1], vel[0], vel[1], a_cmd[0], a_cmd[1],
                        w_true[0], w_true[1], power, w_mean, w_obs, w_en,
                    )
                )
            )

        if cfg.obstacle_map.contains_point(pos[0], pos[1]):
            outcome = "collision"
            break
        speed = float(np.linalg.norm(vel))
        near_goal = float(np.linalg.norm(pos - goal)) <= SUCCESS_RADIUS
        if near_goal and speed <= SUCCESS_SPEED:
            success_hold += dt
        else:
            success_hold = 0.0
        if (not near_goal) and speed <= HOVER_SPEED:
            hover_hold += dt
        else:
            hover_hold = 0.0
        if success_hold >= HOLD_TIME:
            outcome = "success"
            break
        if hover_hold >= HOLD_TIME:
            outcome = "hover"
            break

    if log_path is not None:
        with open(log_path, "w") as f:
            f.write(LOG_HEADER + "\n")
            f.write("\n".join(rows) + ("\n" if rows else ""))

    return TrialRecord(
        outcome=outcome,
        energy_kj=energy_j / 1e3,
        mean_cmd_acc=cmd_acc_sum / max(cmd_count, 1),
        time_to_goal=t,
        distance=distance,
        variant=cfg.variant,
        seed=cfg.seed,
    )
