"""Randomized filter evaluation: sample a vehicle, calibrate its
aerodynamic coefficients from simulated flight data, then estimate
gusty winds with the UKF and score the wind RMSE.

The randomization ranges follow the filter-validation table (mass, drag
coefficients around a 0.66 kg quadrotor, mean winds in +-3 m/s).  The
turbulence knob is a dimensionless intensity: gust std = sigma_w *
max(|w_avg|, 1 m/s).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ..errors import WindnavError
from ..sensing import DrydenGust, GustSpec, ImuConfig, imu_measure, mocap_measure
from ..vehicle import (
    AeroParams,
    RigidState,
    aero_wrench,
    control_wrench,
    motor_step,
    preset,
    step_rigid_body,
)
from ..windukf import (
    FilterState,
    calibrate_aero,
    calibrate_rotor_drag,
    default_config,
    measurement_slices,
    predict,
    update,
)
from .control import AccelTrackingController

# Randomized parameter ranges (min, max).
PARAM_RANGES = {
    "m": (0.375, 0.9375),
    "c_dx": (0.0, 1.0e-3),
    "c_dy": (0.0, 1.0e-3),
    "c_dz": (0.0, 2.0e-2),
    "k_d": (0.0, 1.19e-3),
    "k_z": (0.0, 2.32e-3),
    "w_avg": (-3.0, 3.0),
    "sigma_w": (0.3, 0.6),
}

MEAS_NOISE = {
    "accel": 0.02,   # m/s^2
    "gyro": 0.005,   # rad/s
    "vel": 0.01,     # m/s
    "theta": 0.005,  # rad
    "eta": 5.0,      # rad/s
}

SIM_DT = 0.01  # 100 Hz plant, measurement, and filter rate


def sample_vehicle(rng, ranges=PARAM_RANGES, drag_fraction=None):
    """Randomized vehicle around the nominal quadrotor.

    drag_fraction, when given, confines the drag-like coefficients to
    the upper [lo, hi] fraction of their ranges (e.g. (0.5, 1.0) for
    mid-to-upper).
    """
    base = preset("hummingbird-sim")

    def draw(name):
        lo, hi = ranges[name]
        if drag_fraction is not None and name in ("c_dx", "c_dy", "c_dz", "k_d", "k_z"):
            f_lo, f_hi = drag_fraction
            lo, hi = lo + f_lo * (hi - lo), lo + f_hi * (hi - lo)
        return rng.uniform(lo, hi)

    return replace(
        base,
        m=draw("m"),
        C=np.array([draw("c_dx"), draw("c_dy"), draw("c_dz")]),
        k_d=draw("k_d"),
        k_z=draw("k_z"),
    )


class _TruthSim:
    """Rigid-body truth with the inner-loop controller and gusty wind."""

    def __init__(self, params: AeroParams, gusts: DrydenGust):
        self.params = params
        self.gusts = gusts
        self.state = RigidState.at_rest(params.n_rotors)
        self.state.eta = np.full(params.n_rotors, params.hover_rotor_speed())
        self.controller = AccelTrackingController(params)
        self.t = 0.0
        self.eta_cmd = self.state.eta.copy()
        self.wind = gusts.at(0.0)

    def vdot_world(self):
        f_c, _ = control_wrench(self.state.eta, self.params)
        f_a, _ = aero_wrench(self.state, self.wind, self.params)
        return (self.state.R @ (f_c + f_a)) / self.params.m - np.array(
            [0.0, 0.0, self.params.g]
        )

    def step(self, accel_ref, dt=SIM_DT):
        self.eta_cmd = self.controller.rotor_commands(self.state, accel_ref)
        f_c, tau_c = control_wrench(self.state.eta, self.params)
        f_a, tau_a = aero_wrench(self.state, self.wind, self.params)
        new = step_rigid_body(self.state, f_c + f_a, tau_c + tau_a, dt, self.params)
        new.eta = motor_step(self.state.eta, self.eta_cmd, self.params.tau_m, dt)
        self.state = new
        self.t += dt
        self.wind = self.gusts.at(self.t)

    def hold_position(self, p_ref):
        return 2.0 * (np.asarray(p_ref) - self.state.p) - 2.5 * self.state.v


def calibration_flight(params: AeroParams, seed, settle=1.0, hold=2.0):
    """Still-air velocity segments along each axis; returns the
    (eta, body airspeed, specific force) samples used for fitting."""
    gusts = DrydenGust(GustSpec())  # zero wind
    sim = _TruthSim(params, gusts)
    rng = np.random.default_rng(seed)
    segments = [
        np.array(v)
        for v in [
            (0.5, 0, 0), (1.5, 0, 0), (3.0, 0, 0), (-2.0, 0, 0),
            (0, 1.0, 0), (0, -2.5, 0),
            (0, 0, 0.8), (0, 0, -0.8), (1.5, 0, 0.8), (2.5, 0, -0.8),
            (0, 0, 0),
        ]
    ]
    etas, vas, accels = [], [], []
    for v_ref in segments:
        n_steps = int(round((settle + hold) / SIM_DT))
        for k in range(n_steps):
            a_ref = 2.0 * (v_ref - sim.state.v)
            vdot = sim.vdot_world()
            if k * SIM_DT >= settle:
                imu = imu_measure(sim.state, vdot, ImuConfig(accel_noise_std=0.01), rng=rng)
                etas.append(sim.state.eta.copy())
                vas.append(sim.state.R.T @ sim.state.v)  # no wind in calibration
                accels.append(imu.accel)
            sim.step(a_ref)
    return np.array(etas), np.array(vas), np.array(accels)


def calibrate_from_flight(params: AeroParams, seed):
    """Fit (k_eta, k_z, k_h, k_d) from a scripted calibration flight."""
    etas, vas, accels = calibration_flight(params, seed)
    (k_eta, k_z, k_h), _ = calibrate_aero(etas, vas, accels[:, 2], params.m)
    lateral = np.abs(vas[:, 0]) > 0.2
    if lateral.sum() < 10:
        raise WindnavError("calibration flight lacks lateral excitation")
    k_d, _, _ = calibrate_rotor_drag(
        etas[lateral], vas[lateral], accels[lateral, 0], params.m, axis=0
    )
    return k_eta, k_z, k_h, k_d


@dataclass
class McTrial:
    seed: int
    rmse: float
    params: dict
    fitted: dict


def run_ukf_trial(truth_params: AeroParams, gust_spec: GustSpec, seed,
                  duration=30.0, fitted=None):
    """One filter evaluation; returns per-component wind RMSE (m/s)."""
    if fitted is None:
        fitted = calibrate_from_flight(truth_params, seed)
    k_eta, k_z, k_h, k_d = fitted
    filter_params = replace(
        truth_params,
        k_eta=max(k_eta, 1e-12),
        k_z=k_z,
        k_h=k_h,
        k_d=max(k_d, 1e-9),
    )

    gusts = DrydenGust(gust_spec)
    sim = _TruthSim(truth_params, gusts)
    rng = np.random.default_rng([seed, 17])
    cfg = default_config(truth_params.n_rotors, dt=SIM_DT)

    n = 12 + truth_params.n_rotors
    mean0 = np.zeros(n)
    mean0[12:] = sim.state.eta
    p0 = np.diag(
        np.concatenate(
            [np.full(3, 1e-4), np.full(3, 1e-4), np.full(3, 1e-2),
             np.full(3, 4.0), np.full(truth_params.n_rotors, 100.0)]
        )
    )
    fs = FilterState(mean=mean0, cov=p0)

    n_steps = int(round(duration / SIM_DT))
    imu_cfg = ImuConfig(accel_noise_std=MEAS_NOISE["accel"], gyro_noise_std=MEAS_NOISE["gyro"])
    err_sq_sum, n_err = 0.0, 0
    estimates = []
    for _ in range(n_steps):
        vdot = sim.vdot_world()
        imu = imu_measure(sim.state, vdot, imu_cfg, rng=rng)
        v_meas, theta_meas = mocap_measure(
            sim.state, MEAS_NOISE["vel"], MEAS_NOISE["theta"], rng=rng
        )
        eta_meas = sim.state.eta + rng.normal(0.0, MEAS_NOISE["eta"], truth_params.n_rotors)
        z = np.concatenate([imu.accel, imu.gyro, v_meas, theta_meas, eta_meas])

        fs = predict(fs, sim.eta_cmd, cfg, filter_params)
        fs = update(fs, z, cfg, filter_params)

        w_hat = fs.wind_world()
        err = w_hat - sim.wind
        err_sq_sum += float(err @ err)
        n_err += 3
        estimates.append(w_hat)

        a_ref = sim.hold_position(np.zeros(3))
        sim.step(a_ref)

    rmse = float(np.sqrt(err_sq_sum / n_err))
    return rmse, np.array(estimates)


def ukf_monte_carlo(
    n_trials,
    seed=0,
    ranges=PARAM_RANGES,
    drag_fraction=(0.5, 1.0),
    duration=30.0,
):
    """Randomized trials; returns a list of McTrial records."""
    trials = []
    for k in range(n_trials):
        rng = np.random.default_rng([seed, k])
        params = sample_vehicle(rng, ranges, drag_fraction)
        w_avg = rng.uniform(*ranges["w_avg"], 3)
        sigma_w = rng.uniform(*ranges["sigma_w"])
        spec = GustSpec(w_avg=tuple(w_avg), sigma_w=sigma_w, seed=int(rng.integers(2**31)))
        fitted = calibrate_from_flight(params, seed=[seed, k, 3])
        rmse, _ = run_ukf_trial(params, spec, seed=[seed, k, 5], duration=duration,
                                fitted=fitted)
        trials.append(
            McTrial(
                seed=k,
                rmse=rmse,
                params={"m": params.m, "k_d": params.k_d, "k_z": params.k_z,
                        "c_dx": params.C[0], "c_dz": params.C[2]},
                fitted={"k_eta": fitted[0], "k_z": fitted[1], "k_h": fitted[2],
                        "k_d": fitted[3]},
            )
        )
    return trials


def write_mc_csv(trials, path):
    with open(path, "w") as f:
        f.write("trial,rmse_mps,m_kg,k_d,k_z,fitted_k_eta,fitted_k_d\n")
        for t in trials:
            f.write(
                ",".join(
                    repr(float(x))
                    for x in (
                        t.seed, t.rmse, t.params["m"], t.params["k_d"], t.params["k_z"],
                        t.fitted["k_eta"], t.fitted["k_d"],
                    )
                )
                + "\n"
            )
