"""Combine sweep CSVs and compute descriptive statistics."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd

from .experiment import CSV_HEADER

log = logging.getLogger(__name__)

KEY_COLUMNS = (
    "scenario_cls",
    "AdoptingPolicyCls",
    "PolicyCls",
    "BasePolicyCls",
    "deployment_type",
    "percent_adopt",
    "outcome",
)
GROUP_KEYS = ("AdoptingPolicyCls", "scenario_cls", "deployment_type")
STAT_NAMES = ("mean", "median", "std", "min", "max")


class SchemaError(ValueError):
    pass


def adoption_numeric(labels: pd.Series) -> pd.Series:
    """Percent adoption as a number; the single-adopter level maps to 0."""
    return labels.map(lambda s: 0.0 if s == "only_one" else float(s))


def _level_sort_key(col: pd.Series) -> pd.Series:
    if col.name == "percent_adopt":
        return adoption_numeric(col) - (col == "only_one").astype(float)
    return col


def normalize(table: pd.DataFrame) -> pd.DataFrame:
    return table.sort_values(list(KEY_COLUMNS), key=_level_sort_key, kind="mergesort").reset_index(drop=True)


def read_table(path) -> pd.DataFrame:
    path = Path(path)
    df = pd.read_csv(
        path,
        dtype={c: str for c in KEY_COLUMNS},
        float_precision="round_trip",
        keep_default_na=False,
    )
    missing = [c for c in CSV_HEADER if c not in df.columns]
    extra = [c for c in df.columns if c not in CSV_HEADER]
    if missing or extra:
        bad = ", ".join(missing + extra)
        raise SchemaError(f"{path}: schema mismatch (column(s) {bad})")
    for col in ("value", "yerr"):
        try:
            df[col] = pd.to_numeric(df[col]).astype(float)
        except (ValueError, TypeError) as exc:
            raise SchemaError(f"{path}: column {col} is not numeric") from exc
    return df[list(CSV_HEADER)]


def combine_csv(input_dir) -> pd.DataFrame:
    """Concatenate every ``*.csv`` under ``input_dir`` into one sorted table."""
    files = sorted(Path(input_dir).glob("*.csv"))
    if not files:
        raise FileNotFoundError(f"no CSV files in {input_dir}")
    frames = [read_table(f) for f in files]
    return normalize(pd.concat(frames, ignore_index=True))


def write_table(table: pd.DataFrame, path) -> None:
    table.to_csv(path, index=False, float_format=None, lineterminator="\n", columns=list(CSV_HEADER))


def victim_success(table: pd.DataFrame) -> pd.DataFrame:
    return table[table["outcome"] == "VICTIM_SUCCESS"]


def policy_failure(table: pd.DataFrame) -> pd.DataFrame:
    """Rows of 100 - VictimSuccess; disconnections count as failures too."""
    vs = victim_success(table).copy()
    vs["value"] = 100.0 - vs["value"]
    vs["outcome"] = "POLICY_FAILURE"
    return vs


def summarize(
    table: pd.DataFrame,
    group_keys: Sequence[str] = GROUP_KEYS,
    outcome: str | None = "VICTIM_SUCCESS",
) -> pd.DataFrame:
    """mean/median/std/min/max of value, yerr and adoption per group.

    Standard deviation uses the n-1 denominator and is 0 for a single row.
    """
    df = table if outcome is None else table[table["outcome"] == outcome]
    if df.empty:
        raise ValueError("nothing to summarize")
    df = df.assign(adoption=adoption_numeric(df["percent_adopt"]))
    rows = []
    for key, grp in df.groupby(list(group_keys), sort=True):
        key = key if isinstance(key, tuple) else (key,)
        row = dict(zip(group_keys, key))
        row["n"] = len(grp)
        for col in ("value", "yerr", "adoption"):
            vals = np.sort(grp[col].to_numpy(dtype=float))
            row[f"{col}_mean"] = float(np.mean(vals))
            row[f"{col}_median"] = float(np.median(vals))
            row[f"{col}_std"] = float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0
            row[f"{col}_min"] = float(vals[0])
            row[f"{col}_max"] = float(vals[-1])
        rows.append(row)
    return pd.DataFrame(rows)


def adoption_correlation(table: pd.DataFrame) -> pd.DataFrame:
    """Pearson r between adoption percent and victim success per (scenario, policy)."""
    vs = victim_success(table).assign(adoption=lambda d: adoption_numeric(d["percent_adopt"]))
    rows = []
    for (scen, pol), grp in vs.groupby(["scenario_cls", "AdoptingPolicyCls"], sort=True):
        x = grp["adoption"].to_numpy(dtype=float)
        y = grp["value"].to_numpy(dtype=float)
        if len(x) < 2 or np.std(x) == 0 or np.std(y) == 0:
            r = float("nan")
        else:
            r = float(np.corrcoef(x, y)[0, 1])
        rows.append({"scenario_cls": scen, "AdoptingPolicyCls": pol, "pearson_r": r})
    return pd.DataFrame(rows, columns=["scenario_cls", "AdoptingPolicyCls", "pearson_r"])
