"""Field sampling and spectral analysis of solver output."""

from __future__ import annotations

import numpy as np

from ..errors import NoPeakError
from .solver import TimeAveragedField, WindGrid, _bilinear


def sample_wind(field, pos, t=None):
    """Bilinear sample of cell-centered wind at a world position.

    Accepts a TimeAveragedField or a WindGrid.  Positions outside the
    domain return the freestream inlet vector (documented fallback; zero
    when the field has no inlet attached).
    """
    if isinstance(field, WindGrid):
        uc, vc = field.cell_centered()
        dx, inlet = field.dx, field.inlet
    elif isinstance(field, TimeAveragedField):
        uc, vc = field.u, field.v
        dx, inlet = field.dx, field.inlet
    else:
        raise TypeError(f"cannot sample wind from {type(field).__name__}")

    pos = np.asarray(pos, dtype=float)
    scalar = pos.ndim == 1
    pts = pos.reshape(-1, 2)
    nx, ny = uc.shape
    lx, ly = nx * dx, ny * dx

    fx = pts[:, 0] / dx - 0.5
    fy = pts[:, 1] / dx - 0.5
    wx = _bilinear(uc, fx, fy)
    wy = _bilinear(vc, fx, fy)

    outside = (pts[:, 0] < 0) | (pts[:, 0] > lx) | (pts[:, 1] < 0) | (pts[:, 1] > ly)
    if outside.any():
        fallback = inlet.vector if inlet is not None else np.zeros(2)
        wx = np.where(outside, fallback[0], wx)
        wy = np.where(outside, fallback[1], wy)

    out = np.stack([wx, wy], axis=-1)
    return out[0] if scalar else out


def dominant_frequency(series, dt, flatness_ratio=4.0):
    """Dominant nonzero-frequency spectral peak of a time series, in Hz.

    Raises NoPeakError when the spectrum has no clear peak (flat to
    within `flatness_ratio` of the median magnitude).
    """
    x = np.asarray(series, dtype=float)
    x = x - x.mean()
    n = x.size
    if n < 8:
        raise NoPeakError("force history too short for spectral analysis")
    spec = np.abs(np.fft.rfft(x))
    freqs = np.fft.rfftfreq(n, d=dt)
    spec[0] = 0.0  # DC excluded
    k = int(np.argmax(spec))
    med = np.median(spec[1:])
    if spec[k] <= 0 or (med > 0 and spec[k] < flatness_ratio * med):
        raise NoPeakError("no dominant spectral peak (flat spectrum)")
    if med == 0 and spec[k] == 0:
        raise NoPeakError("zero spectrum")
    return float(freqs[k])


def strouhal(history, char_length, freestream, obstacle=0, inlet_direction=0.0):
    """Strouhal number f*L/U from the cross-stream force component.

    `history` is a ForceHistory; the component perpendicular to the
    inlet direction (degrees) is analyzed.  The history should span at
    least ~5 shedding periods for a reliable peak.
    """
    if freestream <= 0 or char_length <= 0:
        raise ValueError("char_length and freestream must be positive")
    f = history.forces[obstacle]
    rad = np.radians(inlet_direction)
    cross = -np.sin(rad) * f[:, 0] + np.cos(rad) * f[:, 1]
    f_peak = dominant_frequency(cross, history.dt)
    return f_peak * char_length / freestream
