"""Eigen-flow analysis, uniform baselines, and prediction error metrics."""

from __future__ import annotations

import numpy as np

from .dataset import GridSpec, LocalWindField

DIRECTION_MAG_THRESHOLD = 0.1  # m/s; arccos is ill-conditioned near zero


def pca_eigenflows(targets, k):
    """Principal components of flattened (u, v) target fields.

    Returns (components (k, d), explained_variance_ratio (k,)).  The
    ratio is relative to the total variance, so its cumulative sum is
    non-decreasing in k.
    """
    x = np.asarray(targets, dtype=float)
    if x.ndim != 2 or len(x) < 1:
        raise ValueError("targets must be a (n_samples, d) matrix")
    k = min(k, min(x.shape))
    mu = x.mean(axis=0)
    xc = x - mu
    _, s, vt = np.linalg.svd(xc, full_matrices=False)
    var = s**2
    total = var.sum()
    if total <= 0:
        # Degenerate all-identical dataset: a single zero-variance component.
        comps = np.zeros((1, x.shape[1]))
        comps[0, 0] = 1.0
        return comps, np.array([1.0])
    return vt[:k], var[:k] / total


def components_for_variance(targets, fraction):
    """Smallest k whose cumulative explained variance reaches `fraction`."""
    _, ratio = pca_eigenflows(targets, k=min(np.asarray(targets).shape))
    cum = np.cumsum(ratio)
    idx = np.searchsorted(cum, fraction - 1e-12)
    return int(idx) + 1


def baseline_predict(kind, w_up, w_robot, spec: GridSpec):
    """Uniform-flow baseline: the whole window equals one measurement."""
    if kind == "upstream":
        w = np.asarray(w_up, dtype=float)
    elif kind == "local":
        w = np.asarray(w_robot, dtype=float)
    else:
        raise ValueError(f"unknown baseline kind {kind!r}")
    side = spec.side
    return LocalWindField(
        u=np.full((side, side), w[0]),
        v=np.full((side, side), w[1]),
        window=spec.window,
        delta=spec.delta,
    )


def field_errors(pred: LocalWindField, truth: LocalWindField):
    """Per-cell speed and direction errors plus their means.

    e_V is the absolute difference of magnitudes; e_phi (degrees) is the
    angle between vectors, with cells where |truth| < 0.1 m/s excluded
    from the direction statistics.
    """
    if pred.u.shape != truth.u.shape:
        raise ValueError("prediction and truth grids differ in shape")
    mag_p = np.hypot(pred.u, pred.v)
    mag_t = np.hypot(truth.u, truth.v)
    e_v = np.abs(mag_p - mag_t)

    dot = pred.u * truth.u + pred.v * truth.v
    denom = mag_p * mag_t
    with np.errstate(divide="ignore", invalid="ignore"):
        cosang = np.where(denom > 0, dot / np.maximum(denom, 1e-300), 1.0)
    e_phi = np.degrees(np.arccos(np.clip(cosang, -1.0, 1.0)))
    valid = mag_t >= DIRECTION_MAG_THRESHOLD

    mean_phi = float(e_phi[valid].mean()) if valid.any() else 0.0
    return e_v, e_phi, {"mean_e_v": float(e_v.mean()), "mean_e_phi": mean_phi,
                        "n_direction_cells": int(valid.sum())}


def dataset_errors(predict_fn, ds):
    """Mean errors of a predictor over a dataset.

    predict_fn(ranges, w_up, w_robot) -> LocalWindField.
    """
    ev, ephi, nphi = 0.0, 0.0, 0
    for i in range(len(ds)):
        truth = LocalWindField.from_flat(ds.targets[i], ds.spec.window, ds.spec.delta)
        pred = predict_fn(ds.ranges[i], ds.winds[i, 0:2], ds.winds[i, 2:4])
        e_v, e_phi, stats = field_errors(pred, truth)
        ev += e_v.sum()
        mag_t = np.hypot(truth.u, truth.v)
        valid = mag_t >= DIRECTION_MAG_THRESHOLD
        ephi += e_phi[valid].sum()
        nphi += int(valid.sum())
    n_cells = len(ds) * ds.spec.side**2
    return {
        "mean_e_v": ev / n_cells,
        "mean_e_phi": (ephi / nphi) if nphi else 0.0,
    }


def field_gradients(field: LocalWindField):
    """(du/dx, du/dy, dv/dx, dv/dy): central differences inside, one-sided
    at the edges.  Axis 0 of the grids is x."""
    if field.side < 3:
        raise ValueError("gradients need at least a 3x3 grid")
    du_dx, du_dy = np.gradient(field.u, field.delta)
    dv_dx, dv_dy = np.gradient(field.v, field.delta)
    return du_dx, du_dy, dv_dx, dv_dy


def divergence_magnitude(field: LocalWindField):
    du_dx, _, _, dv_dy = field_gradients(field)
    return np.abs(du_dx + dv_dy)


def mosaic(predictions, positions, domain, delta):
    """Overlap-average local predictions into a global field.

    predictions: list of LocalWindField; positions: (M, 2) robot
    positions.  Returns (u, v, count) arrays on a ceil(domain/delta)
    grid; cells never covered hold NaN.
    """
    nx = int(np.ceil(domain[0] / delta))
    ny = int(np.ceil(domain[1] / delta))
    acc_u = np.zeros((nx, ny))
    acc_v = np.zeros((nx, ny))
    count = np.zeros((nx, ny))
    for pred, pos in zip(predictions, positions):
        side = pred.side
        off = (np.arange(side) - (side - 1) / 2.0) * pred.delta
        cx = np.clip(np.round((pos[0] + off) / delta - 0.5).astype(int), 0, nx - 1)
        cy = np.clip(np.round((pos[1] + off) / delta - 0.5).astype(int), 0, ny - 1)
        ix, iy = np.meshgrid(cx, cy, indexing="ij")
        np.add.at(acc_u, (ix, iy), pred.u)
        np.add.at(acc_v, (ix, iy), pred.v)
        np.add.at(count, (ix, iy), 1.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        u = np.where(count > 0, acc_u / np.maximum(count, 1), np.nan)
        v = np.where(count > 0, acc_v / np.maximum(count, 1), np.nan)
    return u, v, count
