"""Steady-state power modeling and similitude utilities.

The power model is a cubic in airspeed, P(Va) = c0 + c1*Va + c2*Va^2 +
c3*Va^3, fitted empirically.  Optimal-speed computations treat wind as a
shift of the curve: with along-track wind W (positive = tailwind), the
energy per unit ground distance is P(V - W) / V and the max-range ground
speed is its minimizer.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import FitError


@dataclass(frozen=True)
class PowerCurve:
    coeffs: tuple[float, float, float, float]  # c0..c3, W with Va in m/s
    v_max: float = 20.0  # upper end of the fitted airspeed range, m/s

    @property
    def p_hover(self):
        return self.coeffs[0]

    def __call__(self, airspeed):
        return total_power(self, airspeed)


def total_power(curve: PowerCurve, airspeed):
    """Evaluate the fitted cubic; warns outside the fitted range."""
    va = np.asarray(airspeed, dtype=float)
    if np.any(va < 0) or np.any(va > curve.v_max):
        warnings.warn(
            f"airspeed outside fitted range [0, {curve.v_max}]; extrapolating",
            RuntimeWarning,
            stacklevel=2,
        )
    c0, c1, c2, c3 = curve.coeffs
    out = c0 + va * (c1 + va * (c2 + va * c3))
    return float(out) if np.isscalar(airspeed) else out


def fit_power_curve(samples, v_max=None):
    """Least-squares cubic through (airspeed, power) samples.

    Returns (PowerCurve, rms_residual).  Requires >= 4 samples spanning
    at least 4 distinct airspeeds.
    """
    pts = np.asarray(samples, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 4:
        raise FitError("need at least 4 (airspeed, power) samples")
    va, p = pts[:, 0], pts[:, 1]
    if np.unique(va).size < 4:
        raise FitError("samples must span at least 4 distinct airspeeds")
    A = np.vander(va, 4, increasing=True)
    coeffs, _, rank, _ = np.linalg.lstsq(A, p, rcond=None)
    if rank < 4:
        raise FitError("rank-deficient design matrix")
    resid = A @ coeffs - p
    rms = float(np.sqrt(np.mean(resid**2)))
    curve = PowerCurve(coeffs=tuple(float(c) for c in coeffs),
                       v_max=float(v_max if v_max is not None else va.max()))
    return curve, rms


def _golden_min(f, a, b, tol=1e-9):
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def _grid_golden_argmin(f, lo, hi, n_grid=200):
    """Coarse grid scan followed by golden-section refinement."""
    vs = np.linspace(lo, hi, n_grid)
    vals = np.array([f(v) for v in vs])
    k = int(np.argmin(vals))
    a = vs[max(k - 1, 0)]
    b = vs[min(k + 1, n_grid - 1)]
    return _golden_min(f, a, b)


def max_range_speed(curve: PowerCurve, wind_along_track=0.0, v_floor=1e-3):
    """Ground and air speeds minimizing energy per unit ground distance.

    wind_along_track > 0 is a tailwind.  Returns (V_ground, V_air,
    boundary_flag); the flag is set when the minimizer sits at the edge
    of the searchable ground-speed interval.
    """
    w = float(wind_along_track)
    hi = curve.v_max + max(w, 0.0)

    def per_meter(v):
        return total_power(curve, abs(v - w)) / v

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        v_g = _grid_golden_argmin(per_meter, v_floor, hi)
    boundary = v_g <= v_floor * 1.01 or v_g >= hi * 0.999
    return float(v_g), float(v_g - w), bool(boundary)


def max_endurance_speed(curve: PowerCurve):
    """Airspeed minimizing instantaneous power over the fitted range."""
    v = _grid_golden_argmin(lambda va: total_power(curve, va), 0.0, curve.v_max)
    # Snap to the boundary when the interior refinement hugs it.
    if v < 1e-6:
        return 0.0
    return float(v)


def similitude(U, L, nu=1.48e-5, f=None, g=9.81):
    """Dimensionless numbers (Re, St, Fr) for speed U and length L.

    St is None when no frequency is given.  nu defaults to air at 15 C.
    """
    if U <= 0 or L <= 0 or nu <= 0 or g <= 0:
        raise ValueError("U, L, nu, g must all be positive")
    re = U * L / nu
    st = (f * L / U) if f is not None else None
    fr = U * U / (g * L)
    return re, st, fr


def froude_velocity_scale(length_ratio):
    """Velocity scaling factor sqrt(lambda) under Froude similarity."""
    if length_ratio <= 0:
        raise ValueError("length ratio must be positive")
    return math.sqrt(length_ratio)


def froude_mass_scale(full_scale_mass, length_ratio):
    """Model mass under volumetric (lambda^3) Froude mass scaling."""
    if length_ratio <= 0:
        raise ValueError("length ratio must be positive")
    return full_scale_mass / length_ratio**3


# --- power-curve file format -------------------------------------------


def save_power_curve(curve: PowerCurve, path):
    lines = ["[power_curve]"]
    for k, c in enumerate(curve.coeffs):
        lines.append(f"c{k} = {repr(float(c))}")
    lines.append(f"v_max = {repr(float(curve.v_max))}")
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def load_power_curve(path):
    import tomllib

    with open(path, "rb") as f:
        data = tomllib.load(f)["power_curve"]
    return PowerCurve(
        coeffs=(data["c0"], data["c1"], data["c2"], data["c3"]), v_max=data["v_max"]
    )


def _anchored_cubic(p_hover, v_end, p_end, v_range, v_max):
    """Cubic through P(0)=p_hover with minimum (v_end, p_end) and origin
    tangency at v_range; used to freeze reference curves from reported
    operating points."""
    A = np.array(
        [
            [v_end, v_end**2, v_end**3],
            [1.0, 2.0 * v_end, 3.0 * v_end**2],
            [0.0, v_range**2, 2.0 * v_range**3],
        ]
    )
    b = np.array([p_end - p_hover, 0.0, p_hover])
    c1, c2, c3 = np.linalg.solve(A, b)
    return PowerCurve(coeffs=(p_hover, float(c1), float(c2), float(c3)), v_max=v_max)


# Crazyflie 2.1-brushless curve frozen from wind-tunnel operating points:
# 10.56 W at hover, 10.12 W minimum at 4.15 m/s, no-wind max-range speed
# 7.73 m/s.
CRAZYFLIE_CURVE = _anchored_cubic(10.56, 4.15, 10.12, 7.73, v_max=12.0)

# Full-scale reference: 247 W hover; dip depth and speeds chosen to give a
# rotorcraft-shaped curve within the planner's [0.5, 20] m/s envelope.
FULLSCALE_CURVE = _anchored_cubic(247.0, 8.0, 222.0, 13.0, v_max=25.0)

PRESET_CURVES = {
    "crazyflie": CRAZYFLIE_CURVE,
    "fullscale": FULLSCALE_CURVE,
}
