"""Indirect wind estimation with an unscented Kalman filter.

The filter state is x = [Theta (ZYX Euler), Omega (body), v (body),
w (body wind), eta (rotor speeds)] of dimension 12+N.  Rotor drag and
translational lift couple the wind into the accelerometer signal, which
is what makes the wind observable without a dedicated sensor.  Body
rates and wind are modeled as static states driven by process noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import CalibrationError, DecompositionError, GimbalLockError, UpdateError
from .rotations import euler_rate_matrix, matrix_from_euler
from .vehicle import AeroParams

E3 = np.array([0.0, 0.0, 1.0])

PITCH_MARGIN = 0.1  # rad; hard error short of the Euler singularity

CHOLESKY_JITTER = 1e-12
CHOLESKY_TRIES = 3


@dataclass
class FilterState:
    mean: np.ndarray  # (12+N,)
    cov: np.ndarray   # (12+N, 12+N)

    @property
    def n(self):
        return len(self.mean)

    @property
    def theta(self):
        return self.mean[0:3]

    @property
    def omega(self):
        return self.mean[3:6]

    @property
    def v_body(self):
        return self.mean[6:9]

    @property
    def w_body(self):
        return self.mean[9:12]

    @property
    def eta(self):
        return self.mean[12:]

    def wind_world(self):
        return matrix_from_euler(self.theta) @ self.w_body


@dataclass(frozen=True)
class UkfConfig:
    q_diag: np.ndarray
    r_diag: np.ndarray
    dt: float
    alpha: float = 0.001
    beta: float = 2.0
    kappa: float = -1.0

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")


def default_config(n_rotors=4, dt=0.01):
    """Hand-tuned diagonal Q/R for the 100 Hz simulation setting."""
    n = 12 + n_rotors
    q = np.zeros(n)
    q[0:3] = 1e-7        # Euler angles
    q[3:6] = 1e-2        # body rates (static-state model)
    q[6:9] = 1e-4        # body velocity
    q[9:12] = 2e-3       # body wind (static-state model)
    q[12:] = 25.0        # rotor speeds
    r = np.concatenate([
        np.full(3, 0.02**2),   # accel, (m/s^2)^2
        np.full(3, 0.005**2),  # gyro
        np.full(3, 0.01**2),   # mocap velocity
        np.full(3, 0.005**2),  # mocap attitude
        np.full(n_rotors, 5.0**2),  # rotor speed pseudo-measurements
    ])
    return UkfConfig(q_diag=q, r_diag=r, dt=dt)


# --- models ----------------------------------------------------------------


def specific_force_body(x, params: AeroParams):
    """Modeled accelerometer signal (thrust + lift + rotor drag) / m."""
    v_b = x[6:9]
    w_b = x[9:12]
    eta = x[12:]
    va = v_b - w_b
    vh2 = va[0] ** 2 + va[1] ** 2
    thrust = params.k_eta * float(eta @ eta) + params.n_rotors * params.k_h * vh2
    drag = -params.K * float(eta.sum()) * va
    return (thrust * E3 + drag) / params.m


def process_derivative(x, u, params: AeroParams):
    """Continuous-time filter dynamics x_dot = f(x, u).

    Parasitic drag is deliberately absent: rotor drag and translational
    lift dominate at the filter's speed range.
    """
    theta = x[0:3]
    if abs(theta[1]) >= math.pi / 2 - PITCH_MARGIN:
        raise GimbalLockError("pitch exceeded the filter's gimbal guard")
    omega = x[3:6]
    v_b = x[6:9]
    eta = x[12:]

    R = matrix_from_euler(theta)
    dx = np.zeros_like(x)
    dx[0:3] = euler_rate_matrix(theta, margin=PITCH_MARGIN) @ omega
    # Omega and body wind are static states (indices 3:6 and 9:12 stay 0).
    dx[6:9] = specific_force_body(x, params) - params.g * (R.T @ E3) - np.cross(omega, v_b)
    dx[12:] = (np.asarray(u, dtype=float) - eta) / params.tau_m
    return dx


def rk4_step(x, u, dt, params: AeroParams):
    k1 = process_derivative(x, u, params)
    k2 = process_derivative(x + 0.5 * dt * k1, u, params)
    k3 = process_derivative(x + 0.5 * dt * k2, u, params)
    k4 = process_derivative(x + dt * k3, u, params)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


MEASUREMENT_BLOCKS = ("accel", "gyro", "v_world", "theta", "eta")


def measurement_model(x, params: AeroParams, present=None):
    """Predicted measurement vector in the fixed (accel, gyro, v_world,
    theta, eta) ordering, restricted to the `present` blocks."""
    theta = x[0:3]
    R = matrix_from_euler(theta)
    blocks = {
        "accel": specific_force_body(x, params),
        "gyro": x[3:6],
        "v_world": R @ x[6:9],
        "theta": theta,
        "eta": x[12:],
    }
    names = MEASUREMENT_BLOCKS if present is None else [b for b in MEASUREMENT_BLOCKS if b in present]
    return np.concatenate([blocks[b] for b in names])


def measurement_slices(n_rotors, present=None):
    sizes = {"accel": 3, "gyro": 3, "v_world": 3, "theta": 3, "eta": n_rotors}
    names = MEASUREMENT_BLOCKS if present is None else [b for b in MEASUREMENT_BLOCKS if b in present]
    out = {}
    k = 0
    for b in names:
        out[b] = slice(k, k + sizes[b])
        k += sizes[b]
    return out, k


# --- unscented transform ----------------------------------------------------


def _cholesky_with_jitter(P):
    jitter = 0.0
    for attempt in range(CHOLESKY_TRIES + 1):
        try:
            return np.linalg.cholesky(P + jitter * np.eye(P.shape[0]))
        except np.linalg.LinAlgError:
            jitter = CHOLESKY_JITTER * (10.0**attempt)
    raise DecompositionError("covariance not positive definite after jitter rescue")


def sigma_points(mean, cov, alpha=0.001, beta=2.0, kappa=-1.0):
    """Scaled sigma points and weights: 2n+1 points matching the first
    two moments of N(mean, cov) exactly."""
    mean = np.asarray(mean, dtype=float)
    cov = np.asarray(cov, dtype=float)
    n = len(mean)
    lam = alpha**2 * (n + kappa) - n
    if abs(n + lam) < 1e-12:
        raise ValueError("n + lambda must be nonzero")
    L = _cholesky_with_jitter((n + lam) * cov)
    pts = np.empty((2 * n + 1, n))
    pts[0] = mean
    pts[1 : n + 1] = mean[None, :] + L.T
    pts[n + 1 :] = mean[None, :] - L.T
    wm = np.full(2 * n + 1, 1.0 / (2.0 * (n + lam)))
    wc = wm.copy()
    wm[0] = lam / (n + lam)
    wc[0] = lam / (n + lam) + (1.0 - alpha**2 + beta)
    return pts, wm, wc


def unscented_moments(points, wm, wc, noise_diag=None):
    # Anchoring the weighted sum at the central point avoids the
    # catastrophic cancellation the huge scaled-UT weights cause.
    mean = points[0] + wm @ (points - points[0][None, :])
    dev = points - mean[None, :]
    cov = (dev * wc[:, None]).T @ dev
    if noise_diag is not None:
        cov = cov + np.diag(noise_diag)
    return mean, 0.5 * (cov + cov.T)


# --- predict / update -------------------------------------------------------


def predict(fs: FilterState, u, cfg: UkfConfig, params: AeroParams):
    pts, wm, wc = sigma_points(fs.mean, fs.cov, cfg.alpha, cfg.beta, cfg.kappa)
    prop = np.array([rk4_step(p, u, cfg.dt, params) for p in pts])
    mean, cov = unscented_moments(prop, wm, wc, noise_diag=cfg.q_diag)
    return FilterState(mean=mean, cov=cov)


def _psd_project(P):
    P = 0.5 * (P + P.T)
    w = np.linalg.eigvalsh(P)
    if w.min() < 0:
        vals, vecs = np.linalg.eigh(P)
        vals = np.clip(vals, 0.0, None)
        P = (vecs * vals) @ vecs.T
        P = 0.5 * (P + P.T)
    return P


def update(fs: FilterState, z, cfg: UkfConfig, params: AeroParams, present=None):
    """Measurement update with the fixed block ordering; `present` names
    the blocks included in z for partial (per-source) updates."""
    n_rotors = params.n_rotors
    _, m_dim = measurement_slices(n_rotors, present)
    z = np.asarray(z, dtype=float)
    if len(z) != m_dim:
        raise ValueError(f"measurement length {len(z)} != expected {m_dim}")
    r_diag = _restrict_r(cfg.r_diag, n_rotors, present)

    pts, wm, wc = sigma_points(fs.mean, fs.cov, cfg.alpha, cfg.beta, cfg.kappa)
    zs = np.array([measurement_model(p, params, present) for p in pts])
    z_mean, p_zz = unscented_moments(zs, wm, wc, noise_diag=r_diag)
    dev_x = pts - fs.mean[None, :]  # pts[0] is exactly the current mean
    dev_z = zs - z_mean[None, :]
    p_xz = (dev_x * wc[:, None]).T @ dev_z
    try:
        gain = np.linalg.solve(p_zz, p_xz.T).T
    except np.linalg.LinAlgError as exc:
        raise UpdateError(f"singular innovation covariance: {exc}") from exc
    mean = fs.mean + gain @ (z - z_mean)
    cov = _psd_project(fs.cov - gain @ p_zz @ gain.T)
    return FilterState(mean=mean, cov=cov)


def _restrict_r(r_diag, n_rotors, present):
    if present is None:
        return r_diag
    full, _ = measurement_slices(n_rotors, None)
    keep = [np.arange(s.start, s.stop) for b, s in full.items() if b in present]
    return r_diag[np.concatenate(keep)]


# --- calibration -------------------------------------------------------------


def calibrate_aero(eta, va, accel_z, m):
    """Joint least squares for (k_eta, k_z, k_h) from hover-or-cruise data.

    Model: m*a_z = k_eta*sum(eta^2) - k_z*V_z*sum(eta) + N*k_h*V_h^2,
    with V the body-frame airspeed.  Returns ((k_eta, k_z, k_h), r2).
    """
    eta = np.asarray(eta, dtype=float)
    va = np.asarray(va, dtype=float)
    y = m * np.asarray(accel_z, dtype=float)
    n_rotors = eta.shape[1]
    A = np.column_stack([
        (eta**2).sum(axis=1),
        -va[:, 2] * eta.sum(axis=1),
        n_rotors * (va[:, 0] ** 2 + va[:, 1] ** 2),
    ])
    coeffs, r2 = _lstsq_r2(A, y)
    return tuple(coeffs), r2


def calibrate_rotor_drag(eta, va, accel_lat, m, axis=0):
    """Lateral-drag slope fit: m*a = -k_d*(V * sum(eta)) + bias.

    Returns (k_d, bias, r2)."""
    eta = np.asarray(eta, dtype=float)
    va = np.asarray(va, dtype=float)
    y = m * np.asarray(accel_lat, dtype=float)
    x = va[:, axis] * eta.sum(axis=1)
    A = np.column_stack([x, np.ones_like(x)])
    (slope, bias), r2 = _lstsq_r2(A, y)
    return -slope, bias, r2


def _lstsq_r2(A, y):
    coeffs, _, rank, _ = np.linalg.lstsq(A, y, rcond=None)
    if rank < A.shape[1]:
        raise CalibrationError("rank-deficient design matrix")
    resid = y - A @ coeffs
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return coeffs, r2


# --- a priori wind uncertainty (linearized propagation) ----------------------


def wind_measurement_uncertainty(
    a_bar, b_bar, m_bar, c_d_bar, t_bar,
    sigma_a, sigma_b, sigma_v, sigma_cd, sigma_m, sigma_t,
):
    """Diagonal of the propagated wind-measurement covariance.

    Linearizes w_xy = (m/c)(a - b) + v and w_z = (m/c)(a - b) + v - T/c
    about the nominal operating point; every Jacobian term is kept.
    Zero drag coefficients yield infinite variance on that axis.
    """
    a_bar = np.asarray(a_bar, dtype=float)
    b_bar = np.asarray(b_bar, dtype=float)
    c = np.asarray(c_d_bar, dtype=float)
    sigma_a = np.asarray(sigma_a, dtype=float)
    sigma_b = np.asarray(sigma_b, dtype=float)
    sigma_v = np.asarray(sigma_v, dtype=float)
    sigma_cd = np.asarray(sigma_cd, dtype=float)

    out = np.empty(3)
    for k in range(3):
        if c[k] == 0.0:
            out[k] = np.inf
            continue
        ab = a_bar[k] - b_bar[k]
        numer = m_bar * ab - (t_bar if k == 2 else 0.0)
        out[k] = (
            numer**2 * sigma_cd[k] ** 2 / c[k] ** 4
            + (m_bar**2 * (sigma_a[k] ** 2 + sigma_b[k] ** 2) + ab**2 * sigma_m**2) / c[k] ** 2
            + sigma_v[k] ** 2
        )
        if k == 2:
            out[k] += sigma_t**2 / c[k] ** 2
    return out


# --- estimate log -------------------------------------------------------------


def write_estimate_log(path, times, states):
    """CSV: time, the full state mean, then the covariance diagonal."""
    n = states[0].n
    head = ["time_s"]
    head += [f"x{i}" for i in range(n)]
    head += [f"p{i}" for i in range(n)]
    with open(path, "w") as f:
        f.write(",".join(head) + "\n")
        for t, s in zip(times, states):
            row = [repr(float(t))]
            row += [repr(float(v)) for v in s.mean]
            row += [repr(float(v)) for v in np.diag(s.cov)]
            f.write(",".join(row) + "\n")
