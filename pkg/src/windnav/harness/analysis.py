"""Spatial binning of wind samples and flow-unsteadiness metrics."""

from __future__ import annotations

import numpy as np


def bin_flow_field(samples, bin_size, bounds=None):
    """Per-bin arithmetic mean of wind samples.

    samples: iterable of (pos (2,), wind (d,)) pairs.  Returns a dict
    with bin edges, the mean field (nx, ny, d) holding NaN in empty
    bins, and the per-bin counts.
    """
    if bin_size <= 0:
        raise ValueError("bin size must be positive")
    pos = np.array([np.asarray(p, dtype=float) for p, _ in samples])
    wind = np.array([np.asarray(w, dtype=float) for _, w in samples])
    if len(pos) == 0:
        raise ValueError("no samples to bin")
    if bounds is None:
        lo = np.floor(pos.min(axis=0) / bin_size) * bin_size
        hi = np.ceil(pos.max(axis=0) / bin_size + 1e-9) * bin_size
    else:
        lo, hi = (np.asarray(b, dtype=float) for b in bounds)
    nx = max(int(round((hi[0] - lo[0]) / bin_size)), 1)
    ny = max(int(round((hi[1] - lo[1]) / bin_size)), 1)
    ii = np.clip(((pos[:, 0] - lo[0]) / bin_size).astype(int), 0, nx - 1)
    jj = np.clip(((pos[:, 1] - lo[1]) / bin_size).astype(int), 0, ny - 1)

    d = wind.shape[1]
    acc = np.zeros((nx, ny, d))
    cnt = np.zeros((nx, ny))
    np.add.at(acc, (ii, jj), wind)
    np.add.at(cnt, (ii, jj), 1.0)
    with np.errstate(invalid="ignore"):
        mean = np.where(cnt[..., None] > 0, acc / np.maximum(cnt[..., None], 1), np.nan)
    return {"origin": lo, "bin_size": bin_size, "mean": mean, "count": cnt}


def unsteadiness_metrics(positions, lateral_force_cmd, body_rates, bin_size, bounds=None):
    """Per-bin std of the commanded lateral force and mean body-rate
    magnitude, as heat-map grids (NaN where a bin is empty).
    """
    pos = np.asarray(positions, dtype=float)
    f_lat = np.asarray(lateral_force_cmd, dtype=float)
    om = np.asarray(body_rates, dtype=float)
    om_mag = np.abs(om) if om.ndim == 1 else np.linalg.norm(om, axis=1)

    if bounds is None:
        lo = np.floor(pos.min(axis=0) / bin_size) * bin_size
        hi = np.ceil(pos.max(axis=0) / bin_size + 1e-9) * bin_size
    else:
        lo, hi = (np.asarray(b, dtype=float) for b in bounds)
    nx = max(int(round((hi[0] - lo[0]) / bin_size)), 1)
    ny = max(int(round((hi[1] - lo[1]) / bin_size)), 1)
    ii = np.clip(((pos[:, 0] - lo[0]) / bin_size).astype(int), 0, nx - 1)
    jj = np.clip(((pos[:, 1] - lo[1]) / bin_size).astype(int), 0, ny - 1)

    cnt = np.zeros((nx, ny))
    s1 = np.zeros((nx, ny))
    s2 = np.zeros((nx, ny))
    om_sum = np.zeros((nx, ny))
    np.add.at(cnt, (ii, jj), 1.0)
    np.add.at(s1, (ii, jj), f_lat)
    np.add.at(s2, (ii, jj), f_lat**2)
    np.add.at(om_sum, (ii, jj), om_mag)

    with np.errstate(invalid="ignore"):
        mean = s1 / np.maximum(cnt, 1)
        var = np.maximum(s2 / np.maximum(cnt, 1) - mean**2, 0.0)
        std_f = np.where(cnt > 0, np.sqrt(var), np.nan)
        mean_om = np.where(cnt > 0, om_sum / np.maximum(cnt, 1), np.nan)
    return {"origin": lo, "bin_size": bin_size, "std_lateral_force": std_f,
            "mean_body_rate": mean_om, "count": cnt}
