"""Serialization of trial trajectories and operating characteristics.

Trajectory dumps are JSON files with a ``Trial_Overview`` section (platform
level summary) and a ``Stage_Data`` section (full per-cohort records
including per-patient outcomes and per-analysis rule traces).  Dumps and OC
files are written with sorted keys and fixed float formatting so identical
runs produce byte-identical files.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import time
from typing import Iterable, Mapping, Sequence

from .config import ScenarioSpec, scenario_to_dict
from .engine import TrialResult
from .ocs import OperatingCharacteristics


def trial_result_to_dump(result: TrialResult) -> dict:
    d = dataclasses.asdict(result)
    overview = {
        "scenario_id": d["scenario_id"],
        "Total_N": d["total_n"],
        "successes": d["successes"],
        "n_cohorts": len(d["cohorts"]),
        "first_success": d["first_success"],
        "entry_closed_index": d["entry_closed_index"],
        "recruitment_halt_index": d["recruitment_halt_index"],
        "safety_stops": d["safety_stops"],
        "soc_slot_patients": d["soc_slot_patients"],
        "patients_per_arm": {},
        "bio_responders_per_arm": {},
        "hist_responders_per_arm": {},
        "cohort_statuses": [c["status"] for c in d["cohorts"]],
    }
    for c in d["cohorts"]:
        for arm, rec in c["per_arm"].items():
            overview["patients_per_arm"][arm] = overview["patients_per_arm"].get(arm, 0) + rec["n"]
            overview["bio_responders_per_arm"][arm] = \
                overview["bio_responders_per_arm"].get(arm, 0) + rec["bio_responders"]
            overview["hist_responders_per_arm"][arm] = \
                overview["hist_responders_per_arm"].get(arm, 0) + rec["hist_responders"]
    return {"Trial_Overview": overview, "Stage_Data": {"cohorts": d["cohorts"]}}


def dump_trajectory(result: TrialResult) -> str:
    return json.dumps(trial_result_to_dump(result), sort_keys=True, indent=1)


def write_trajectory(path, result: TrialResult) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dump_trajectory(result))
        fh.write("\n")


def read_trajectory(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        dump = json.load(fh)
    if "Trial_Overview" not in dump or "Stage_Data" not in dump:
        raise ValueError(f"{path}: not a trajectory dump (missing sections)")
    return dump


# ---------------------------------------------------------------------------
# plot data: rates per cohort/arm and interim-vs-final outcome pair counts


RATES_COLUMNS = ("cohort", "arm", "n", "bio_responders", "hist_responders",
                 "emp_bio_rate", "emp_hist_rate", "true_hist_rate")
PAIRS_COLUMNS = ("cohort", "arm", "n00", "n01", "n10", "n11")


def plot_data_tables(dump: Mapping) -> tuple[list[dict], list[dict]]:
    """Tables behind trajectory plots: empirical interim/final response rates
    with the true final rate per cohort-arm, and the joint outcome-pair
    counts (interim vs final endpoint)."""
    rates: list[dict] = []
    pairs: list[dict] = []
    for c in dump["Stage_Data"]["cohorts"]:
        for arm in sorted(c["per_arm"]):
            rec = c["per_arm"][arm]
            n = rec["n"]
            rates.append({
                "cohort": c["id"], "arm": arm, "n": n,
                "bio_responders": rec["bio_responders"],
                "hist_responders": rec["hist_responders"],
                "emp_bio_rate": rec["bio_responders"] / n if n else "",
                "emp_hist_rate": rec["hist_responders"] / n if n else "",
                "true_hist_rate": rec["true_rate"],
            })
            n00, n01, n10, n11 = rec["pairs"]
            pairs.append({"cohort": c["id"], "arm": arm,
                          "n00": n00, "n01": n01, "n10": n10, "n11": n11})
    return rates, pairs


def write_csv(path, columns: Sequence[str], rows: Iterable[Mapping]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(columns))
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


# ---------------------------------------------------------------------------
# operating characteristics files


def ocs_csv_columns(axis_names: Sequence[str] = ()) -> list[str]:
    cols = list(axis_names) + ["scenario_id", "iterations"]
    cols += list(OperatingCharacteristics.SCALAR_COLUMNS)
    cols += [f"{m}_undefined" for m in OperatingCharacteristics.FLAGGED_METRICS]
    return cols


def ocs_csv_row(scenario_id: str, ocs: OperatingCharacteristics,
                axis_values: Mapping[str, object] | None = None) -> dict:
    row = dict(axis_values or {})
    row["scenario_id"] = scenario_id
    row.update(ocs.scalar_row())
    return row


def write_ocs_csv(path, rows: Sequence[Mapping], axis_names: Sequence[str] = ()) -> None:
    write_csv(path, ocs_csv_columns(axis_names), rows)


def write_ocs_json(path, scenario_id: str, ocs: OperatingCharacteristics,
                   extra: Mapping | None = None) -> None:
    doc = {"scenario_id": scenario_id, **ocs.to_json_dict()}
    if extra:
        doc.update(extra)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, indent=1)
        fh.write("\n")


# ---------------------------------------------------------------------------
# run manifest


def spec_hash(spec: ScenarioSpec) -> str:
    canonical = json.dumps(scenario_to_dict(spec), sort_keys=True)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def write_manifest(path, payload: Mapping) -> None:
    import numpy
    import scipy

    doc = {
        "created_unix": int(time.time()),
        "versions": {"platformsim": _package_version(), "numpy": numpy.__version__,
                     "scipy": scipy.__version__},
    }
    doc.update(payload)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, indent=1)
        fh.write("\n")


def _package_version() -> str:
    try:
        from importlib.metadata import version
        return version("platformsim")
    except Exception:
        return "unknown"
