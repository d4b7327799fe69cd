"""SVG figures for the six chart families, each with companion CSVs.

Every rendered ``<stem>.svg`` is accompanied by ``<stem>.csv`` (the exact
rows of the combined table it was drawn from) and ``<stem>.plotted.csv``
(the numbers actually drawn).
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

from .analysis import adoption_correlation, adoption_numeric, normalize, victim_success, write_table  # noqa: E402

log = logging.getLogger(__name__)

PLOT_KINDS = ("bar", "scenario_bar", "heatmap2d", "correlation_heatmap", "crossbar_yerr", "multiline")

DEPLOYMENT_ORDER = ("InputClique", "Stubs", "Multihomed", "NoDeploymentType")
DEPLOYMENT_COLORS = {
    "InputClique": "#1b9e77",
    "Stubs": "#d95f02",
    "Multihomed": "#7570b3",
    "NoDeploymentType": "#e7298a",
}

STYLE = {
    "svg.hashsalt": "bgpdeploy",
    "svg.fonttype": "none",
    "font.size": 9,
    "axes.titlesize": 10,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "figure.dpi": 100,
}


@dataclass(frozen=True)
class PlotSpec:
    kind: str
    out_dir: Path
    policy: str | None = None
    scenario: str | None = None

    def __post_init__(self):
        if self.kind not in PLOT_KINDS:
            raise ValueError(f"unknown plot kind {self.kind!r}")

    @property
    def stem(self) -> str:
        parts = [self.kind] + [p for p in (self.scenario, self.policy) if p]
        return re.sub(r"[^A-Za-z0-9_.-]", "_", "__".join(parts))


def _deployments(df: pd.DataFrame) -> list[str]:
    present = set(df["deployment_type"])
    return [d for d in DEPLOYMENT_ORDER if d in present] + sorted(present - set(DEPLOYMENT_ORDER))


def _levels(df: pd.DataFrame) -> list[str]:
    labels = df["percent_adopt"].drop_duplicates()
    return list(labels.iloc[np.argsort(adoption_numeric(labels).to_numpy() - (labels == "only_one").to_numpy(), kind="stable")])


def _select(spec: PlotSpec, table: pd.DataFrame) -> pd.DataFrame:
    df = table
    if spec.policy is not None:
        df = df[df["AdoptingPolicyCls"] == spec.policy]
    if spec.scenario is not None:
        df = df[df["scenario_cls"] == spec.scenario]
    if spec.kind != "crossbar_yerr":
        df = victim_success(df)
    return normalize(df)


def _title(spec: PlotSpec, what: str) -> str:
    scope = " / ".join(p for p in (spec.scenario, spec.policy) if p)
    return f"{what} ({scope})" if scope else what


def _bar(spec, df, ax):
    deps = _deployments(df)
    means = [float(df.loc[df["deployment_type"] == d, "value"].mean()) for d in deps]
    ax.bar(deps, means, color=[DEPLOYMENT_COLORS.get(d, "#666666") for d in deps])
    ax.set_ylabel("victim success (%)")
    ax.set_ylim(0, 100)
    ax.set_title(_title(spec, "Mean victim success by deployment"))
    return pd.DataFrame({"deployment_type": deps, "value": means})


def _scenario_bar(spec, df, ax):
    deps = _deployments(df)
    policies = sorted(df["AdoptingPolicyCls"].unique())
    width = 0.8 / max(len(deps), 1)
    x = np.arange(len(policies))
    rows = []
    for i, d in enumerate(deps):
        vals = []
        for p in policies:
            sel = df[(df["deployment_type"] == d) & (df["AdoptingPolicyCls"] == p)]["value"]
            v = float(sel.mean()) if len(sel) else float("nan")
            vals.append(v)
            rows.append({"AdoptingPolicyCls": p, "deployment_type": d, "value": v})
        ax.bar(x + i * width, vals, width, label=d, color=DEPLOYMENT_COLORS.get(d, "#666666"))
    ax.set_xticks(x + width * (len(deps) - 1) / 2, policies)
    ax.set_ylabel("victim success (%)")
    ax.set_ylim(0, 100)
    ax.legend(fontsize=7, frameon=False)
    ax.set_title(_title(spec, "Victim success by policy and deployment"))
    return pd.DataFrame(rows)


def _heatmap2d(spec, df, ax):
    deps = _deployments(df)
    levels = _levels(df)
    grid = np.full((len(deps), len(levels)), np.nan)
    rows = []
    for i, d in enumerate(deps):
        for j, lv in enumerate(levels):
            sel = df[(df["deployment_type"] == d) & (df["percent_adopt"] == lv)]["value"]
            if len(sel):
                grid[i, j] = float(sel.iloc[0])
                rows.append({"deployment_type": d, "percent_adopt": lv, "value": grid[i, j]})
    im = ax.imshow(grid, cmap="viridis", vmin=0, vmax=100, aspect="auto")
    ax.set_xticks(range(len(levels)), levels)
    ax.set_yticks(range(len(deps)), deps)
    ax.set_xlabel("percent adopt")
    for (i, j), v in np.ndenumerate(grid):
        if not np.isnan(v):
            ax.text(j, i, f"{v:.1f}", ha="center", va="center", fontsize=7, color="w" if v < 60 else "k")
    ax.figure.colorbar(im, ax=ax, label="victim success (%)")
    ax.set_title(_title(spec, "Victim success heatmap"))
    return pd.DataFrame(rows)


def _correlation_heatmap(spec, df, ax):
    corr = adoption_correlation(df)
    scenarios = sorted(corr["scenario_cls"].unique())
    policies = sorted(corr["AdoptingPolicyCls"].unique())
    grid = np.full((len(policies), len(scenarios)), np.nan)
    for _, r in corr.iterrows():
        grid[policies.index(r["AdoptingPolicyCls"]), scenarios.index(r["scenario_cls"])] = r["pearson_r"]
    im = ax.imshow(grid, cmap="coolwarm", vmin=-1, vmax=1, aspect="auto")
    ax.set_xticks(range(len(scenarios)), scenarios, rotation=20, ha="right")
    ax.set_yticks(range(len(policies)), policies)
    for (i, j), v in np.ndenumerate(grid):
        ax.text(j, i, "n/a" if np.isnan(v) else f"{v:.2f}", ha="center", va="center", fontsize=7)
    ax.figure.colorbar(im, ax=ax, label="Pearson r (adoption vs victim success)")
    ax.set_title(_title(spec, "Adoption / victim success correlation"))
    return corr


def _crossbar_yerr(spec, df, ax):
    deps = _deployments(df)
    rows = []
    for i, d in enumerate(deps):
        vals = df.loc[df["deployment_type"] == d, "yerr"].to_numpy(dtype=float)
        lo, mid, hi = float(vals.min()), float(np.median(vals)), float(vals.max())
        color = DEPLOYMENT_COLORS.get(d, "#666666")
        ax.add_patch(plt.Rectangle((i - 0.3, lo), 0.6, hi - lo, fill=False, edgecolor=color))
        ax.hlines(mid, i - 0.3, i + 0.3, colors=color, linewidth=2)
        rows.append({"deployment_type": d, "min": lo, "median": mid, "max": hi})
    ax.set_xlim(-0.6, len(deps) - 0.4)
    top = max((r["max"] for r in rows), default=1.0)
    ax.set_ylim(0, top * 1.1 if top > 0 else 1.0)
    ax.set_xticks(range(len(deps)), deps)
    ax.set_ylabel("yerr (90% CI half-width)")
    ax.set_title(_title(spec, "yerr distribution by deployment"))
    return pd.DataFrame(rows)


def _multiline(spec, df, ax):
    levels = _levels(df)
    xs = {lv: i for i, lv in enumerate(levels)}
    rows = []
    for d in _deployments(df):
        sel = df[df["deployment_type"] == d]
        pts = sorted((xs[lv], v, e, lv) for lv, v, e in zip(sel["percent_adopt"], sel["value"], sel["yerr"]))
        ax.errorbar(
            [p[0] for p in pts],
            [p[1] for p in pts],
            yerr=[p[2] for p in pts],
            label=d,
            color=DEPLOYMENT_COLORS.get(d, "#666666"),
            marker="o",
            capsize=2,
        )
        rows.extend({"deployment_type": d, "percent_adopt": p[3], "value": p[1], "yerr": p[2]} for p in pts)
    ax.set_xticks(range(len(levels)), levels)
    ax.set_xlabel("percent adopt")
    ax.set_ylabel("victim success (%)")
    ax.set_ylim(0, 100)
    ax.legend(fontsize=7, frameon=False)
    ax.set_title(_title(spec, "Victim success vs adoption"))
    return pd.DataFrame(rows)


_DRAW = {
    "bar": _bar,
    "scenario_bar": _scenario_bar,
    "heatmap2d": _heatmap2d,
    "correlation_heatmap": _correlation_heatmap,
    "crossbar_yerr": _crossbar_yerr,
    "multiline": _multiline,
}


def render(spec: PlotSpec, table: pd.DataFrame) -> tuple[Path, pd.DataFrame] | None:
    """Draw one figure; returns (svg path, plotted numbers) or None if nothing matched."""
    df = _select(spec, table)
    if df.empty:
        log.warning("%s: selection is empty, nothing rendered", spec.stem)
        return None
    out = Path(spec.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(6.4, 4.0))
        try:
            plotted = _DRAW[spec.kind](spec, df, ax)
            fig.tight_layout()
            svg = out / f"{spec.stem}.svg"
            fig.savefig(svg, format="svg", metadata={"Date": None})
        finally:
            plt.close(fig)
    write_table(df, out / f"{spec.stem}.csv")
    plotted.to_csv(out / f"{spec.stem}.plotted.csv", index=False, lineterminator="\n")
    return svg, plotted


def specs_for(kind: str, table: pd.DataFrame, out_dir) -> list[PlotSpec]:
    """One spec per figure the chart family produces for ``table``."""
    kinds = PLOT_KINDS if kind == "all" else (kind,)
    specs = []
    pairs = sorted(set(zip(table["scenario_cls"], table["AdoptingPolicyCls"])))
    for k in kinds:
        if k in ("bar", "heatmap2d", "multiline"):
            specs.extend(PlotSpec(k, Path(out_dir), policy=p, scenario=s) for s, p in pairs)
        elif k == "scenario_bar":
            specs.extend(PlotSpec(k, Path(out_dir), scenario=s) for s in sorted(set(table["scenario_cls"])))
        else:
            specs.append(PlotSpec(k, Path(out_dir)))
    return specs


def render_all(kind: str, table: pd.DataFrame, out_dir) -> list[Path]:
    written = []
    for spec in specs_for(kind, table, out_dir):
        res = render(spec, table)
        if res is not None:
            written.append(res[0])
    return written
