"""Deterministic report files: report.json plus CSV renderings.

Schema version 1. ``report.json`` holds the full run; ``metrics.csv`` the
per-slot throughput and hop series; ``edges.csv`` per-slot link lists
(1-based UAV ids); ``powers.csv`` the transmit schedule; ``plan.json`` the
routes. Infinite metrics serialize as the string "inf" (the JSON spec has
no infinity literal). Re-emitting the same report writes identical bytes.
"""

from __future__ import annotations

import csv
import json
import math
import os

import numpy as np

from .simulator import RunReport

SCHEMA_VERSION = 1


def _jsonable(value):
    if isinstance(value, float) and math.isinf(value):
        return "inf"
    if isinstance(value, (np.floating, np.integer)):
        return _jsonable(value.item())
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    return value


def _csv_number(value) -> str:
    return value if value == "inf" else repr(float(value))


def report_to_dict(report: RunReport) -> dict:
    edges = []
    n_slots = report.matrices.shape[0]
    a_count = report.matrices.shape[1]
    for n in range(n_slots):
        for a in range(a_count):
            for b in range(a + 1, a_count):
                if report.matrices[n, a, b]:
                    edges.append([n, a + 1, b + 1])
    doc = {
        "schema_version": SCHEMA_VERSION,
        "scenario": report.scenario,
        "seed": report.seed,
        "planner": report.planner_choice,
        "topology_algorithm": report.topo_choice,
        "n_dc": report.n_dc,
        "plan": {
            "routes": report.routes,
            "total_length_m": report.total_length_m,
        },
        "slots": {
            "count": report.n_slots,
            "duration_s": report.slot_duration_s,
        },
        "edges": edges,
        "positions_m": report.positions,
        "powers_w": report.powers,
        "power_intervals_w": None if report.p_min is None else {
            "p_min": report.p_min,
            "p_max": report.p_max,
        },
        "throughput_bps": {
            "per_slot": report.throughput_per_slot,
            "total": report.throughput_total,
        },
        "connectivity_rate": report.connectivity,
        "average_hops": report.avg_hops,
        "hops_per_slot": report.hops_slots,
        "energy_j": report.energy_j,
        "violations": list(report.violations),
    }
    return _jsonable(doc)


def write_csvs_from_doc(doc: dict, out_dir) -> list[str]:
    """Render metrics.csv, edges.csv, powers.csv and plan.json from a report doc."""
    os.makedirs(out_dir, exist_ok=True)
    written = []

    def path(name: str) -> str:
        written.append(name)
        return os.path.join(out_dir, name)

    per_slot = doc["throughput_bps"]["per_slot"]
    hops = doc["hops_per_slot"]
    with open(path("metrics.csv"), "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["slot", "throughput_bps", "hops"])
        for n, (tp, h) in enumerate(zip(per_slot, hops)):
            writer.writerow([n, _csv_number(tp), _csv_number(h)])

    with open(path("edges.csv"), "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["slot", "a", "b"])
        writer.writerows(doc["edges"])

    positions = doc["positions_m"]
    with open(path("positions.csv"), "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["slot", "uav", "x", "y", "z"])
        for n in range(len(positions[0])):
            for a in range(len(positions)):
                x, y, z = positions[a][n]
                writer.writerow([n, a + 1, _csv_number(x), _csv_number(y),
                                 _csv_number(z)])

    powers = doc["powers_w"]
    with open(path("powers.csv"), "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["slot", "uav", "p_w"])
        for n in range(len(powers[0])):
            for a in range(len(powers)):
                writer.writerow([n, a + 1, _csv_number(powers[a][n])])

    with open(path("plan.json"), "w") as f:
        json.dump(doc["plan"], f, indent=2, sort_keys=True)
        f.write("\n")
    return written


def emit_report(report: RunReport, out_dir) -> list[str]:
    """Write report.json and the CSV renderings; returns file names."""
    os.makedirs(out_dir, exist_ok=True)
    doc = report_to_dict(report)
    with open(os.path.join(out_dir, "report.json"), "w") as f:
        json.dump(doc, f, indent=2, sort_keys=True)
        f.write("\n")
    return ["report.json"] + write_csvs_from_doc(doc, out_dir)
