"""Seeded sweeps: run grids expanded deterministically, executed serially
or across processes, and written as versioned CSVs.

Per-run seeds are derived by hashing (master seed, cell, seed index), so a
sweep's outcome is independent of execution order and worker count, and any
single run can be reproduced in isolation from its row.
"""

from __future__ import annotations

import csv
import hashlib
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from statistics import fmean
from typing import Any, Mapping

import yaml

from .config import (
    PRIORITY_PUSH,
    SCHEMA_VERSION,
    ConfigError,
    SimulationConfig,
)
from .engine import RunResult, run as run_engine
from .metrics import delay_profile, failed_pieces, pieces_reached
from .version import VERSION

__all__ = [
    "AXIS_FIELDS",
    "REACH_DELTA",
    "REACH_WINDOW_FACTOR",
    "SweepSpec",
    "RunPlan",
    "load_sweep",
    "derive_seed",
    "expand",
    "execute",
    "summarize_run",
    "aggregate",
    "run_sweep",
    "write_rows_csv",
    "RUN_COLUMNS",
    "AGGREGATE_COLUMNS",
]

# Sweep axis names -> config fields.  Axes use the short names that appear
# in result tables; everything else in a sweep file sits under `base`.
AXIS_FIELDS = {
    "n": "n",
    "k": "k",
    "m": "contact_list_size",
    "l": "spacing",
    "protocol": "protocol",
    "constraint": "constraint",
    "initial_state": "initial_state",
    "eta": "eta",
}

# Convention for the per-piece reach diagnostic recorded for spaced-push
# runs: a piece "reaches" when ceil((1 - e^{-l} - REACH_DELTA) n) users hold
# it within ceil(REACH_WINDOW_FACTOR * log2 n) slots of its release.  This
# is the desk-scale relaxation of the (1 - e^{-l} - delta, (1 + delta)
# log2 n) coverage guarantee checked by `verify --theorem thm5`.
REACH_DELTA = 0.08
REACH_WINDOW_FACTOR = 1.3

RUN_COLUMNS = (
    "schema_version",
    "tool_version",
    "run_id",
    "protocol",
    "n",
    "k",
    "constraint",
    "contact_model",
    "contact_list_size",
    "initial_state",
    "eta",
    "spacing",
    "seed_index",
    "seed",
    "completed",
    "completion_slot",
    "slots",
    "delay_limit",
    "failed_piece_count",
    "reach_fraction",
    "wall_time_s",
)

AGGREGATE_COLUMNS = (
    "schema_version",
    "tool_version",
    "protocol",
    "n",
    "k",
    "constraint",
    "contact_model",
    "contact_list_size",
    "initial_state",
    "eta",
    "spacing",
    "runs",
    "completed_runs",
    "mean_completion",
    "min_completion",
    "max_completion",
    "mean_delay_limit",
)

_CELL_KEY = (
    "protocol",
    "n",
    "k",
    "constraint",
    "contact_model",
    "contact_list_size",
    "initial_state",
    "eta",
    "spacing",
)


@dataclass
class SweepSpec:
    """A base config, a grid of axes, and a seed plan."""

    base: dict[str, Any]
    axes: list[tuple[str, list[Any]]]
    seeds: int
    master_seed: int

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any], where: str = "sweep") -> "SweepSpec":
        if not isinstance(data, Mapping):
            raise ConfigError(f"{where}: expected a mapping")
        unknown = sorted(set(data) - {"base", "axes", "seeds", "master_seed"})
        if unknown:
            raise ConfigError(f"{where}: unknown keys {unknown}")
        base = data.get("base")
        if not isinstance(base, Mapping):
            raise ConfigError(f"{where}: 'base' must be a mapping")
        axes_raw = data.get("axes") or {}
        if not isinstance(axes_raw, Mapping):
            raise ConfigError(f"{where}: 'axes' must be a mapping of axis -> list")
        axes = []
        for name, values in axes_raw.items():
            if name not in AXIS_FIELDS:
                raise ConfigError(
                    f"{where}: unknown axis {name!r}; known: {sorted(AXIS_FIELDS)}"
                )
            if not isinstance(values, list) or not values:
                raise ConfigError(f"{where}: axis {name!r} needs a non-empty list")
            axes.append((name, list(values)))
        seeds = data.get("seeds", 1)
        if not isinstance(seeds, int) or seeds < 1:
            raise ConfigError(f"{where}: 'seeds' must be an integer >= 1")
        master_seed = data.get("master_seed", 0)
        if not isinstance(master_seed, int) or master_seed < 0:
            raise ConfigError(f"{where}: 'master_seed' must be an integer >= 0")
        return cls(base=dict(base), axes=axes, seeds=seeds, master_seed=master_seed)


def load_sweep(path: str | Path) -> SweepSpec:
    """Load a sweep spec from a YAML file (schema-versioned like configs)."""
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: expected a mapping at top level")
    version = raw.pop("schema_version", None)
    if version != SCHEMA_VERSION:
        raise ConfigError(
            f"{path}: schema_version must be {SCHEMA_VERSION}, got {version!r}"
        )
    return SweepSpec.from_mapping(raw, where=str(path))


@dataclass(frozen=True)
class RunPlan:
    """One fully specified run within a sweep."""

    run_id: str
    cell: tuple
    seed_index: int
    config: SimulationConfig


def derive_seed(master_seed: int, cell, seed_index: int) -> int:
    """Stable 64-bit seed for one (cell, seed index) pair."""
    tag = (
        f"{master_seed}|"
        + ",".join(f"{name}={value}" for name, value in cell)
        + f"|{seed_index}"
    )
    return int.from_bytes(hashlib.sha256(tag.encode()).digest()[:8], "big")


def _cell_product(axes: list) -> list:
    cells = [()]
    for name, values in axes:
        cells = [cell + ((name, v),) for cell in cells for v in values]
    return cells


def expand(spec: SweepSpec) -> list[RunPlan]:
    """All run plans for a sweep, validated up front so bad cells fail
    before any simulation starts."""
    plans = []
    for cell in _cell_product(spec.axes):
        overrides = {AXIS_FIELDS[name]: value for name, value in cell}
        for seed_index in range(spec.seeds):
            seed = derive_seed(spec.master_seed, cell, seed_index)
            data = dict(spec.base)
            data.update(overrides)
            data["seed"] = seed
            where = "sweep cell " + ",".join(f"{a}={v}" for a, v in cell)
            config = SimulationConfig.from_mapping(data, where=where)
            tag = f"{spec.master_seed}|{cell}|{seed_index}"
            run_id = hashlib.sha256(tag.encode()).hexdigest()[:12]
            plans.append(
                RunPlan(run_id=run_id, cell=cell, seed_index=seed_index, config=config)
            )
    return plans


def summarize_run(plan: RunPlan, result: RunResult, wall_time: float) -> dict:
    """Flatten one run into a result row."""
    cfg = result.config
    row = {
        "schema_version": SCHEMA_VERSION,
        "tool_version": VERSION,
        "run_id": plan.run_id,
        "protocol": cfg.protocol,
        "n": cfg.n,
        "k": cfg.k,
        "constraint": cfg.constraint,
        "contact_model": cfg.contact_model,
        "contact_list_size": cfg.contact_list_size,
        "initial_state": cfg.initial_state,
        "eta": cfg.eta,
        "spacing": cfg.spacing,
        "seed_index": plan.seed_index,
        "seed": cfg.seed,
        "completed": result.completed,
        "completion_slot": result.completion_slot,
        "slots": result.slots,
        "delay_limit": round(delay_profile(result).limit, 6),
        "failed_piece_count": (
            len(failed_pieces(result)) if result.release_slots is not None else None
        ),
        "reach_fraction": None,
        "wall_time_s": round(wall_time, 3),
    }
    if cfg.protocol == PRIORITY_PUSH:
        fraction = 1.0 - math.exp(-cfg.spacing) - REACH_DELTA
        window = math.ceil(REACH_WINDOW_FACTOR * math.log2(cfg.n))
        row["reach_fraction"] = round(pieces_reached(result, fraction, window), 6)
    return row


def _execute_plan(plan: RunPlan) -> dict:
    start = time.perf_counter()
    result = run_engine(plan.config)
    return summarize_run(plan, result, time.perf_counter() - start)


def execute(plans: list, jobs: int = 1) -> list:
    """Run all plans, serially or with a process pool; row order follows
    plan order either way."""
    if jobs <= 1 or len(plans) <= 1:
        return [_execute_plan(plan) for plan in plans]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_execute_plan, plans))


def aggregate(rows: list) -> list:
    """Per-cell mean/min/max summary over seeds."""
    groups: dict = {}
    for row in rows:
        groups.setdefault(tuple(row[c] for c in _CELL_KEY), []).append(row)
    out = []
    for key, members in groups.items():
        completions = [
            r["completion_slot"] for r in members if r["completion_slot"] is not None
        ]
        agg = dict(zip(_CELL_KEY, key))
        agg["schema_version"] = SCHEMA_VERSION
        agg["tool_version"] = VERSION
        agg["runs"] = len(members)
        agg["completed_runs"] = sum(1 for r in members if r["completed"])
        agg["mean_completion"] = round(fmean(completions), 3) if completions else None
        agg["min_completion"] = min(completions) if completions else None
        agg["max_completion"] = max(completions) if completions else None
        agg["mean_delay_limit"] = round(
            fmean(r["delay_limit"] for r in members), 6
        )
        out.append(agg)
    return out


def run_sweep(spec: SweepSpec, jobs: int = 1):
    """Expand, execute, aggregate: returns (run rows, aggregate rows)."""
    rows = execute(expand(spec), jobs=jobs)
    return rows, aggregate(rows)


def write_rows_csv(rows: list, path: str | Path, columns) -> Path:
    """Write rows as CSV with the fixed, versioned column set."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns)
        writer.writeheader()
        for row in rows:
            writer.writerow(
                {c: ("" if row.get(c) is None else row.get(c)) for c in columns}
            )
    return path
