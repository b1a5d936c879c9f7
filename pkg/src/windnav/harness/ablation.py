"""Batch scenario execution and per-variant aggregation."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

import numpy as np

from .scenario import ScenarioConfig, TrialRecord, run_scenario

FAILURE_OUTCOMES = ("collision", "hover", "timeout", "error")


def ablation_suite(scenarios, workers=1):
    """Run every scenario; returns records sorted deterministically.

    Trials are independent and may run in parallel; aggregation is
    order-independent.
    """
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(run_scenario, scenarios))
    else:
        records = [run_scenario(s) for s in scenarios]
    records.sort(key=lambda r: (r.variant, r.seed))
    return records


def aggregate_records(records):
    """Per-variant means/stds of the Table-style metrics.

    Energy, command acceleration, time, and distance are aggregated over
    successful trials; failure rates are split by cause over all trials.
    """
    out = {}
    variants = sorted({r.variant for r in records})
    for v in variants:
        rs = [r for r in records if r.variant == v]
        ok = [r for r in rs if r.outcome == "success"]
        n = len(rs)

        def stats(vals):
            if not vals:
                return (float("nan"), float("nan"))
            arr = np.asarray(vals, dtype=float)
            return float(arr.mean()), float(arr.std())

        e_mean, e_std = stats([r.energy_kj for r in ok])
        a_mean, a_std = stats([r.mean_cmd_acc for r in ok])
        t_mean, t_std = stats([r.time_to_goal for r in ok])
        d_mean, d_std = stats([r.distance for r in ok])
        out[v] = {
            "n_trials": n,
            "n_success": len(ok),
            "energy_kj_mean": e_mean,
            "energy_kj_std": e_std,
            "cmd_acc_mean": a_mean,
            "cmd_acc_std": a_std,
            "time_mean": t_mean,
            "time_std": t_std,
            "distance_mean": d_mean,
            "distance_std": d_std,
            "failure_rate": sum(r.outcome in FAILURE_OUTCOMES for r in rs) / max(n, 1),
            "collision_rate": sum(r.outcome == "collision" for r in rs) / max(n, 1),
            "hover_rate": sum(r.outcome in ("hover", "timeout") for r in rs) / max(n, 1),
        }
    return out


def format_table(agg):
    """Human-readable summary, one variant per row."""
    lines = [
        f"{'Variant':<12} {'Energy (kJ)':>14} {'Cmd Acc (m/s2)':>16} "
        f"{'Time (s)':>12} {'Dist (m)':>12} {'Fail (col,hov) %':>20}"
    ]
    for v, s in agg.items():
        lines.append(
            f"{v:<12} {s['energy_kj_mean']:>7.2f}+-{s['energy_kj_std']:<5.2f} "
            f"{s['cmd_acc_mean']:>8.2f}+-{s['cmd_acc_std']:<6.2f} "
            f"{s['time_mean']:>6.1f}+-{s['time_std']:<4.1f} "
            f"{s['distance_mean']:>6.1f}+-{s['distance_std']:<4.1f} "
            f"{100 * s['failure_rate']:>6.1f} ({100 * s['collision_rate']:.1f},"
            f"{100 * s['hover_rate']:.1f})"
        )
    return "\n".join(lines)


def write_trials_csv(records, path):
    with open(path, "w") as f:
        f.write(TrialRecord.CSV_HEADER + "\n")
        for r in records:
            f.write(r.csv_row() + "\n")


def read_trials_csv(path):
    records = []
    with open(path) as f:
        header = f.readline()
        assert header.strip() == TrialRecord.CSV_HEADER
        for line in f:
            parts = line.rstrip("\n").split(",")
            records.append(
                TrialRecord(
                    variant=parts[0], seed=int(parts[1]), outcome=parts[2],
                    energy_kj=float(parts[3]), mean_cmd_acc=float(parts[4]),
                    time_to_goal=float(parts[5]), distance=float(parts[6]),
                    cause=parts[7] if len(parts) > 7 else "",
                )
            )
    return records


def build_variant_scenarios(base: ScenarioConfig, variants, seeds=None):
    """The same scenario under several planner variants (and seeds)."""
    out = []
    for v in variants:
        for s in seeds if seeds is not None else [base.seed]:
            out.append(replace(base, variant=v, seed=s))
    return out
