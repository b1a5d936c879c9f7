"""Lower-level controller: tracks an acceleration reference with the full
rigid-body vehicle.

The acceleration command is converted to a desired thrust vector, the
thrust vector to a desired attitude (yaw held at zero), and attitude and
body-rate proportional loops produce the torque, which a mixer turns
into per-rotor speed commands.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..vehicle import AeroParams, RigidState

E3 = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class ControllerGains:
    k_rot: float = 9.0     # attitude error
    k_omega: float = 2.2   # body-rate error
    k_vel: float = 2.0     # velocity tracking (used by velocity mode)


def _vee(m):
    return np.array([m[2, 1], m[0, 2], m[1, 0]])


class AccelTrackingController:
    """Geometric acceleration-tracking inner loop with a rotor mixer."""

    def __init__(self, params: AeroParams, gains: ControllerGains = ControllerGains()):
        self.params = params
        self.gains = gains
        pos = params.rotor_positions
        eps = params.spin_directions
        # Rows: total thrust, roll, pitch, yaw from per-rotor thrusts f_i.
        alloc = np.zeros((4, params.n_rotors))
        alloc[0, :] = 1.0
        alloc[1, :] = pos[:, 1]
        alloc[2, :] = -pos[:, 0]
        alloc[3, :] = eps * (params.k_tau / params.k_eta) if params.k_eta > 0 else 0.0
        self._alloc_inv = np.linalg.pinv(alloc)

    def rotor_commands(self, state: RigidState, accel_ref):
        """Commanded rotor speeds to realize a world-frame acceleration."""
        p = self.params
        f_des = p.m * (np.asarray(accel_ref, dtype=float) + p.g * E3)
        norm = np.linalg.norm(f_des)
        if norm < 1e-9:
            f_des = p.m * p.g * 1e-3 * E3
            norm = np.linalg.norm(f_des)

        b3d = f_des / norm
        # Desired attitude with yaw = 0.
        b1_ref = np.array([1.0, 0.0, 0.0])
        b2d = np.cross(b3d, b1_ref)
        b2n = np.linalg.norm(b2d)
        if b2n < 1e-6:  # thrust parallel to x: fall back to y reference
            b2d = np.array([0.0, 1.0, 0.0])
            b2n = 1.0
        b2d = b2d / b2n
        b1d = np.cross(b2d, b3d)
        r_des = np.column_stack([b1d, b2d, b3d])

        thrust = float(f_des @ (state.R @ E3))
        e_rot = 0.5 * _vee(r_des.T @ state.R - state.R.T @ r_des)
        e_om = state.omega
        j_om = self.params.J @ state.omega
        tau = (
            -self.gains.k_rot * self.params.J @ e_rot
            - self.gains.k_omega * self.params.J @ e_om
            + np.cross(state.omega, j_om)
        )

        wrench = np.array([max(thrust, 0.0), tau[0], tau[1], tau[2]])
        f_i = self._alloc_inv @ wrench
        eta_sq = np.maximum(f_i / p.k_eta, 0.0)
        return np.sqrt(eta_sq)

    def velocity_commands(self, state: RigidState, vel_ref):
        """Rotor commands tracking a world velocity reference."""
        accel = self.gains.k_vel * (np.asarray(vel_ref, dtype=float) - state.v)
        return self.rotor_commands(state, accel)
