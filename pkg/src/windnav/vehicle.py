"""6-DoF rigid-body UAV dynamics with lumped-parameter aerodynamics.

World frame is z-up; gravity acts along -z.  The rotation matrix R maps
body coordinates to world coordinates.  All rotors are aligned with the
body z axis and share thrust/drag-torque coefficients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import NumericError

GRAVITY = 9.81

E3 = np.array([0.0, 0.0, 1.0])


@dataclass
class RigidState:
    p: np.ndarray       # world position, m (3,)
    v: np.ndarray       # world velocity, m/s (3,)
    R: np.ndarray       # body->world rotation (3, 3)
    omega: np.ndarray   # body angular rate, rad/s (3,)
    eta: np.ndarray     # rotor speeds, rad/s (N,)

    @classmethod
    def at_rest(cls, n_rotors=4, p=None):
        return cls(
            p=np.zeros(3) if p is None else np.asarray(p, dtype=float),
            v=np.zeros(3),
            R=np.eye(3),
            omega=np.zeros(3),
            eta=np.zeros(n_rotors),
        )


@dataclass(frozen=True)
class AeroParams:
    """Mass, inertia, and lumped aerodynamic coefficients (SI units)."""

    m: float
    J: np.ndarray                     # (3, 3) inertia tensor, kg m^2
    k_eta: float                      # static thrust, N/(rad/s)^2
    k_tau: float                      # rotor drag torque, N m/(rad/s)^2
    C: np.ndarray                     # parasitic drag diag (3,), N/(m/s)^2
    k_d: float                        # lateral rotor drag, N s^2/(m rad)
    k_z: float                        # vertical inflow coefficient, same units
    k_h: float                        # translational lift, N s^2/m^2
    k_flap: float                     # blade flapping coefficient
    rotor_positions: np.ndarray       # (N, 3), m from CoM
    spin_directions: np.ndarray       # (N,), each +-1
    tau_m: float                      # motor time constant, s
    g: float = GRAVITY

    def __post_init__(self):
        if self.m <= 0 or self.tau_m <= 0:
            raise ValueError("mass and motor time constant must be positive")
        J = np.asarray(self.J, dtype=float)
        if not np.allclose(J, J.T) or np.any(np.linalg.eigvalsh(J) <= 0):
            raise ValueError("J must be symmetric positive definite")

    @property
    def n_rotors(self):
        return len(self.spin_directions)

    @property
    def K(self):
        """Rotor-drag diagonal (k_d, k_d, k_z)."""
        return np.array([self.k_d, self.k_d, self.k_z])

    def hover_rotor_speed(self):
        return math.sqrt(self.m * self.g / (self.n_rotors * self.k_eta))


@dataclass(frozen=True)
class MotorCal:
    """Commanded-PWM to steady-state rotor speed calibration."""

    k_v: float    # (rad/s)/V lumped gain
    v_0: float    # V
    dz: float     # PWM counts dead zone

    def __post_init__(self):
        if self.dz < 0:
            raise ValueError("dead zone must be >= 0")


def control_wrench(eta, params: AeroParams):
    """Nominal thrust and torque from the rotors, in the body frame."""
    eta = np.asarray(eta, dtype=float)
    eta2 = eta**2
    f_c = params.k_eta * eta2.sum() * E3
    tau_yaw = params.k_tau * float(params.spin_directions @ eta2) * E3
    thrust_i = params.k_eta * eta2[:, None] * E3
    tau_arm = np.cross(params.rotor_positions, thrust_i).sum(axis=0)
    return f_c, tau_yaw + tau_arm


def aero_wrench(state: RigidState, wind, params: AeroParams):
    """Aerodynamic force and torque in the body frame.

    Parasitic drag is quadratic in airspeed; rotor drag is bilinear in
    airspeed and rotor speed; translational lift grows with the square
    of the horizontal airspeed; blade flapping contributes a
    longitudinal moment only.
    """
    va = state.R.T @ (state.v - np.asarray(wind, dtype=float))
    d_p = -params.C * np.linalg.norm(va) * va
    sum_eta = float(np.sum(state.eta))
    d_r = -params.K * sum_eta * va  # summed over rotors
    vh2 = va[0] ** 2 + va[1] ** 2
    lift = params.n_rotors * params.k_h * vh2 * E3
    f_a = d_p + d_r + lift

    tau_flap = -params.k_flap * sum_eta * np.cross(va, E3)
    d_r_each = -params.K * state.eta[:, None] * va
    tau_drag = np.cross(params.rotor_positions, d_r_each).sum(axis=0)
    return f_a, tau_flap + tau_drag


def _orthonormalize(R):
    """Gram-Schmidt on the columns, preserving right-handedness."""
    c0 = R[:, 0] / np.linalg.norm(R[:, 0])
    c1 = R[:, 1] - (c0 @ R[:, 1]) * c0
    c1 /= np.linalg.norm(c1)
    c2 = np.cross(c0, c1)
    return np.column_stack([c0, c1, c2])


def _hat(w):
    return np.array([[0.0, -w[2], w[1]], [w[2], 0.0, -w[0]], [-w[1], w[0], 0.0]])


def step_rigid_body(state: RigidState, f_body, tau_body, dt, params: AeroParams):
    """One RK4 step of the Newton-Euler equations under a constant wrench.

    Forces and torques are body-frame; gravity is applied in the world
    frame.  R is re-orthonormalized after the step.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    f_body = np.asarray(f_body, dtype=float)
    tau_body = np.asarray(tau_body, dtype=float)
    J = np.asarray(params.J, dtype=float)
    J_inv = np.linalg.inv(J)

    def deriv(p, v, R, omega):
        dp = v
        dv = (R @ f_body) / params.m - params.g * E3
        dR = R @ _hat(omega)
        domega = J_inv @ (tau_body - np.cross(omega, J @ omega))
        return dp, dv, dR, domega

    p, v, R, om = state.p, state.v, state.R, state.omega
    k1 = deriv(p, v, R, om)
    k2 = deriv(p + 0.5 * dt * k1[0], v + 0.5 * dt * k1[1], R + 0.5 * dt * k1[2], om + 0.5 * dt * k1[3])
    k3 = deriv(p + 0.5 * dt * k2[0], v + 0.5 * dt * k2[1], R + 0.5 * dt * k2[2], om + 0.5 * dt * k2[3])
    k4 = deriv(p + dt * k3[0], v + dt * k3[1], R + dt * k3[2], om + dt * k3[3])

    def comb(i):
        return (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) * (dt / 6.0)

    new = RigidState(
        p=p + comb(0),
        v=v + comb(1),
        R=_orthonormalize(R + comb(2)),
        omega=om + comb(3),
        eta=state.eta.copy(),
    )
    if not all(np.isfinite(x).all() for x in (new.p, new.v, new.R, new.omega)):
        raise NumericError("non-finite rigid-body state")
    return new


def motor_step(eta, eta_cmd, tau_m, dt):
    """Exact discretization of the first-order motor response."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    a = math.exp(-dt / tau_m)
    return np.asarray(eta_cmd, dtype=float) + (np.asarray(eta, dtype=float) - eta_cmd) * a


def pwm_to_rotor_speed(pwm, v_supply, cal: MotorCal):
    """Steady-state rotor speed for a PWM command; zero below the dead zone."""
    pwm = np.asarray(pwm, dtype=float)
    excess = np.maximum(pwm - cal.dz, 0.0)
    out = cal.k_v * (v_supply + cal.v_0) * excess ** (2.0 / 3.0)
    return float(out) if out.ndim == 0 else out


def _x_layout(arm):
    """Standard X quad geometry: rotor arms at 45 deg, alternating spin."""
    a = arm / math.sqrt(2.0)
    positions = np.array(
        [[a, a, 0.0], [-a, a, 0.0], [-a, -a, 0.0], [a, -a, 0.0]]
    )
    spins = np.array([-1.0, 1.0, -1.0, 1.0])
    return positions, spins


def _make_hummingbird():
    # Mid-range values of the randomized filter-validation table; the
    # geometry, inertia, and thrust constants are nominal for a ~0.66 kg
    # quadrotor since the table does not pin them.
    pos, spins = _x_layout(0.17)
    return AeroParams(
        m=0.65625,
        J=np.diag([3.6e-3, 3.6e-3, 7.0e-3]),
        k_eta=5.57e-6,
        k_tau=1.36e-7,
        C=np.array([5.0e-4, 5.0e-4, 1.0e-2]),
        k_d=5.95e-4,
        k_z=1.16e-3,
        k_h=0.0,
        k_flap=0.0,
        rotor_positions=pos,
        spin_directions=spins,
        tau_m=0.05,
    )


def _make_crazyflie():
    # Identified lumped coefficients from free-flight wind-tunnel data.
    # k_tau and k_flap were never identified for this airframe; the
    # values below are placeholders and flagged uncalibrated.
    pos, spins = _x_layout(0.046)
    return AeroParams(
        m=0.030,
        J=np.diag([1.66e-5, 1.66e-5, 2.93e-5]),
        k_eta=4.26e-8,
        k_tau=3.4e-10,      # uncalibrated placeholder
        C=np.array([2.0e-4, 2.0e-4, 4.0e-4]),
        k_d=5.09e-6,
        k_z=1.19e-5,
        k_h=1.11e-3,
        k_flap=0.0,         # uncalibrated placeholder
        rotor_positions=pos,
        spin_directions=spins,
        tau_m=0.03,
    )


CRAZYFLIE_MOTOR_CAL = MotorCal(k_v=0.3637, v_0=0.5535, dz=4673.0)

PRESETS = {
    "hummingbird-sim": _make_hummingbird,
    "crazyflie": _make_crazyflie,
}

UNCALIBRATED_FIELDS = {
    "hummingbird-sim": ("k_h", "k_flap", "k_tau"),
    "crazyflie": ("k_tau", "k_flap"),
}


def preset(name) -> AeroParams:
    try:
        return PRESETS[name]()
    except KeyError:
        raise KeyError(f"unknown vehicle preset {name!r}; have {sorted(PRESETS)}") from None


# --- vehicle parameter file ---------------------------------------------


def save_params(params: AeroParams, path):
    def fmt_list(a):
        return "[" + ", ".join(repr(float(x)) for x in np.asarray(a).ravel()) + "]"

    lines = [
        "[vehicle]",
        f"m = {repr(params.m)}",
        f"g = {repr(params.g)}",
        f"J = {fmt_list(params.J)}",
        f"k_eta = {repr(params.k_eta)}",
        f"k_tau = {repr(params.k_tau)}",
        f"C = {fmt_list(params.C)}",
        f"k_d = {repr(params.k_d)}",
        f"k_z = {repr(params.k_z)}",
        f"k_h = {repr(params.k_h)}",
        f"k_flap = {repr(params.k_flap)}",
        f"rotor_positions = {fmt_list(params.rotor_positions)}",
        f"spin_directions = {fmt_list(params.spin_directions)}",
        f"tau_m = {repr(params.tau_m)}",
    ]
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def load_params(path) -> AeroParams:
    import tomllib

    with open(path, "rb") as f:
        d = tomllib.load(f)["vehicle"]
    n = len(d["spin_directions"])
    return AeroParams(
        m=d["m"],
        J=np.array(d["J"]).reshape(3, 3),
        k_eta=d["k_eta"],
        k_tau=d["k_tau"],
        C=np.array(d["C"]),
        k_d=d["k_d"],
        k_z=d["k_z"],
        k_h=d["k_h"],
        k_flap=d["k_flap"],
        rotor_positions=np.array(d["rotor_positions"]).reshape(n, 3),
        spin_directions=np.array(d["spin_directions"]),
        tau_m=d["tau_m"],
        g=d.get("g", GRAVITY),
    )
