"""Z-Y-X Euler angle <-> rotation matrix conversions with a gimbal guard.

Theta = (psi, theta, phi) = (yaw, pitch, roll); R = Rz(psi) Ry(theta)
Rx(phi) maps body to world.  Extraction fails loudly within
GIMBAL_MARGIN of the pitch singularity instead of silently degrading.
"""

import math

import numpy as np

from .errors import GimbalLockError

GIMBAL_MARGIN = 0.1  # rad


def matrix_from_euler(theta):
    psi, th, phi = theta
    cps, sps = math.cos(psi), math.sin(psi)
    ct, st = math.cos(th), math.sin(th)
    cph, sph = math.cos(phi), math.sin(phi)
    return np.array(
        [
            [cps * ct, cps * st * sph - sps * cph, cps * st * cph + sps * sph],
            [sps * ct, sps * st * sph + cps * cph, sps * st * cph - cps * sph],
            [-st, ct * sph, ct * cph],
        ]
    )


def euler_from_matrix(R, margin=GIMBAL_MARGIN):
    st = -R[2, 0]
    ct = math.hypot(R[2, 1], R[2, 2])
    if ct < math.sin(margin):
        raise GimbalLockError(f"pitch within {margin} rad of +-pi/2")
    return np.array(
        [
            math.atan2(R[1, 0], R[0, 0]),
            math.asin(max(-1.0, min(1.0, st))),
            math.atan2(R[2, 1], R[2, 2]),
        ]
    )


def euler_rate_matrix(theta, margin=GIMBAL_MARGIN):
    """Maps body angular rate to Euler angle rates: Theta_dot = E @ Omega."""
    _, th, phi = theta
    ct = math.cos(th)
    if abs(ct) < math.sin(margin):
        raise GimbalLockError(f"pitch within {margin} rad of +-pi/2")
    sph, cph = math.sin(phi), math.cos(phi)
    tt = math.tan(th)
    return np.array(
        [
            [0.0, sph / ct, cph / ct],
            [0.0, cph, -sph],
            [1.0, sph * tt, cph * tt],
        ]
    )
