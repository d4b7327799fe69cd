import csv
import math
import random
import statistics
import xml.etree.ElementTree as ET

import pandas as pd
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bgpdeploy.analysis import (
    KEY_COLUMNS,
    SchemaError,
    adoption_correlation,
    adoption_numeric,
    combine_csv,
    policy_failure,
    read_table,
    summarize,
    write_table,
)
from bgpdeploy.experiment import CSV_HEADER
from bgpdeploy.plotting import PLOT_KINDS, PlotSpec, render, render_all, specs_for

LEVELS = ["only_one", "10", "20", "40", "80", "99"]
DEPS = ["InputClique", "Stubs", "Multihomed", "NoDeploymentType"]
OUTCOMES = ["ATTACKER_SUCCESS", "VICTIM_SUCCESS", "DISCONNECTED"]


def synth_rows(scenario, policy, deployment, rng, levels=LEVELS):
    rows = []
    for lv in levels:
        a = rng.uniform(0, 100)
        v = rng.uniform(0, 100 - a)
        vals = {"ATTACKER_SUCCESS": a, "VICTIM_SUCCESS": v, "DISCONNECTED": 100 - a - v}
        for o in OUTCOMES:
            rows.append([scenario, policy, "BGP", "BGP", lv, o, repr(vals[o]), repr(rng.uniform(0, 5)), deployment])
    return rows


def write_csv(path, rows, header=CSV_HEADER):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


@pytest.fixture
def table_dir(tmp_path):
    rng = random.Random(4)
    d = tmp_path / "in"
    d.mkdir()
    for scen in ("PrefixHijack", "AccidentalRouteLeak"):
        for pol in ("ROV", "ASPA"):
            for dep in DEPS:
                write_csv(d / f"{scen}__{pol}__{dep}.csv", synth_rows(scen, pol, dep, rng))
    return d


def test_combine_two_files(tmp_path):
    rng = random.Random(0)
    write_csv(tmp_path / "a.csv", synth_rows("PrefixHijack", "ROV", "Stubs", rng))
    write_csv(tmp_path / "b.csv", synth_rows("PrefixHijack", "ASPA", "Stubs", rng))
    t = combine_csv(tmp_path)
    assert len(t) == 36
    assert list(t.columns) == list(CSV_HEADER)
    out = tmp_path / "out"
    out.mkdir()
    write_table(t, out / "combined.csv")
    text = (out / "combined.csv").read_text().splitlines()
    assert text[0] == ",".join(CSV_HEADER) and len(text) == 37
    assert text.count(text[0]) == 1


def test_combine_rejects_missing_yerr(tmp_path):
    header = [c for c in CSV_HEADER if c != "yerr"]
    rows = [r[:7] + r[8:] for r in synth_rows("PrefixHijack", "ROV", "Stubs", random.Random(0))]
    write_csv(tmp_path / "broken.csv", rows, header)
    with pytest.raises(SchemaError, match="broken.csv.*yerr"):
        combine_csv(tmp_path)


def test_combine_empty_dir(tmp_path):
    with pytest.raises(FileNotFoundError):
        combine_csv(tmp_path)


def test_values_roundtrip_exactly(table_dir, tmp_path):
    t = combine_csv(table_dir)
    raw = {}
    for f in table_dir.glob("*.csv"):
        with open(f, newline="") as fh:
            for r in csv.DictReader(fh):
                raw[tuple(r[k] for k in KEY_COLUMNS)] = (float(r["value"]), float(r["yerr"]))
    for _, r in t.iterrows():
        assert raw[tuple(r[k] for k in KEY_COLUMNS)] == (r["value"], r["yerr"])
    write_table(t, tmp_path / "c.csv")
    again = read_table(tmp_path / "c.csv")
    pd.testing.assert_frame_equal(again, t)


def test_combine_order_is_normalized(table_dir):
    t = combine_csv(table_dir)
    sel = t[(t["scenario_cls"] == "PrefixHijack") & (t["AdoptingPolicyCls"] == "ROV") & (t["deployment_type"] == "Stubs")]
    assert list(dict.fromkeys(sel["percent_adopt"])) == LEVELS


def test_summarize_two_points():
    t = pd.DataFrame(
        [
            ["PrefixHijack", "ROV", "BGP", "BGP", "10", "VICTIM_SUCCESS", 0.0, 1.0, "Stubs"],
            ["PrefixHijack", "ROV", "BGP", "BGP", "20", "VICTIM_SUCCESS", 100.0, 3.0, "Stubs"],
        ],
        columns=list(CSV_HEADER),
    )
    s = summarize(t).iloc[0]
    assert s["value_mean"] == 50 and s["value_median"] == 50
    assert math.isclose(s["value_std"], 70.71067811865476, rel_tol=1e-12)
    assert s["value_min"] == 0 and s["value_max"] == 100
    assert s["adoption_mean"] == 15


def test_summarize_single_row_std_zero():
    t = pd.DataFrame(
        [["PrefixHijack", "ROV", "BGP", "BGP", "only_one", "VICTIM_SUCCESS", 42.0, 0.0, "Stubs"]],
        columns=list(CSV_HEADER),
    )
    s = summarize(t).iloc[0]
    assert s["value_std"] == 0 and s["value_median"] == 42 and s["adoption_mean"] == 0


def _oracle_stats(vals):
    vals = sorted(vals)
    n = len(vals)
    mid = vals[n // 2] if n % 2 else (vals[n // 2 - 1] + vals[n // 2]) / 2
    return {
        "mean": math.fsum(vals) / n,
        "median": mid,
        "std": statistics.stdev(vals) if n > 1 else 0.0,
        "min": vals[0],
        "max": vals[-1],
    }


def test_summarize_matches_independent_recomputation(table_dir):
    t = combine_csv(table_dir)
    s = summarize(t)
    groups = {}
    for f in table_dir.glob("*.csv"):
        with open(f, newline="") as fh:
            for r in csv.DictReader(fh):
                if r["outcome"] == "VICTIM_SUCCESS":
                    key = (r["AdoptingPolicyCls"], r["scenario_cls"], r["deployment_type"])
                    groups.setdefault(key, []).append(r)
    assert len(s) == len(groups)
    for _, row in s.iterrows():
        rs = groups[(row["AdoptingPolicyCls"], row["scenario_cls"], row["deployment_type"])]
        for col in ("value", "yerr"):
            want = _oracle_stats([float(r[col]) for r in rs])
            for stat, v in want.items():
                assert abs(row[f"{col}_{stat}"] - v) <= 1e-9
        adopt = [0.0 if r["percent_adopt"] == "only_one" else float(r["percent_adopt"]) for r in rs]
        assert abs(row["adoption_mean"] - statistics.mean(adopt)) <= 1e-9


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 5))
def test_summarize_order_independent(seed, split):
    rng = random.Random(seed)
    rows = []
    for pol in ("ROV", "ASPA"):
        rows += synth_rows("PrefixHijack", pol, rng.choice(DEPS), rng)
    t = pd.DataFrame(rows, columns=list(CSV_HEADER)).astype({"value": float, "yerr": float})
    shuffled = t.sample(frac=1, random_state=seed).reset_index(drop=True)
    a, b = shuffled.iloc[: split * 3], shuffled.iloc[split * 3 :]
    union = pd.concat([b, a], ignore_index=True)
    pd.testing.assert_frame_equal(summarize(union), summarize(t), check_exact=False, rtol=1e-12)


def test_summary_invariants(table_dir):
    s = summarize(combine_csv(table_dir), outcome=None)
    for col in ("value", "yerr", "adoption"):
        assert (s[f"{col}_min"] <= s[f"{col}_median"]).all()
        assert (s[f"{col}_median"] <= s[f"{col}_max"]).all()
        assert (s[f"{col}_std"] >= 0).all()


def test_policy_failure_and_adoption_numeric():
    t = pd.DataFrame(
        [["PrefixHijack", "ROV", "BGP", "BGP", "only_one", "VICTIM_SUCCESS", 30.0, 0.0, "Stubs"]],
        columns=list(CSV_HEADER),
    )
    assert policy_failure(t)["value"].tolist() == [70.0]
    assert adoption_numeric(pd.Series(["only_one", "10", "99"])).tolist() == [0.0, 10.0, 99.0]


def test_correlation():
    rows = []
    for lv, v in zip(LEVELS, [5, 15, 25, 45, 85, 104]):
        rows.append(["PrefixHijack", "ROV", "BGP", "BGP", lv, "VICTIM_SUCCESS", float(v) * 0.9, 0.0, "Stubs"])
        rows.append(["PrefixHijack", "ASPA", "BGP", "BGP", lv, "VICTIM_SUCCESS", 50.0, 0.0, "Stubs"])
    t = pd.DataFrame(rows, columns=list(CSV_HEADER))
    c = adoption_correlation(t).set_index("AdoptingPolicyCls")["pearson_r"]
    x = [0, 10, 20, 40, 80, 99]
    y = [v * 0.9 for v in (5, 15, 25, 45, 85, 104)]
    assert math.isclose(c["ROV"], statistics.correlation(x, y), rel_tol=1e-12)
    assert math.isnan(c["ASPA"])


def _parse_svg(path):
    root = ET.parse(path).getroot()
    assert root.tag.endswith("svg")
    return root


def test_every_kind_renders_valid_svg_with_subset_companion(table_dir, tmp_path):
    table = combine_csv(table_dir)
    keyed = {tuple(r[k] for k in KEY_COLUMNS): (r["value"], r["yerr"]) for _, r in table.iterrows()}
    out = tmp_path / "figs"
    written = render_all("all", table, out)
    assert len(written) == len(specs_for("all", table, out))
    for svg in written:
        _parse_svg(svg)
        companion = read_table(svg.with_suffix(".csv"))
        assert len(companion) > 0
        for _, r in companion.iterrows():
            assert keyed[tuple(r[k] for k in KEY_COLUMNS)] == (r["value"], r["yerr"])


def test_bar_values_equal_companion(table_dir, tmp_path):
    table = combine_csv(table_dir)
    svg, plotted = render(PlotSpec("bar", tmp_path, policy="ROV", scenario="PrefixHijack"), table)
    companion = read_table(svg.with_suffix(".csv"))
    on_disk = pd.read_csv(svg.with_suffix(".plotted.csv"), float_precision="round_trip")
    for _, r in on_disk.iterrows():
        vals = companion[companion["deployment_type"] == r["deployment_type"]]["value"]
        assert r["value"] == vals.mean()
    pd.testing.assert_frame_equal(on_disk, plotted)


def test_multiline_four_by_six(table_dir, tmp_path):
    table = combine_csv(table_dir)
    svg, plotted = render(PlotSpec("multiline", tmp_path, policy="ASPA", scenario="AccidentalRouteLeak"), table)
    assert sorted(plotted["deployment_type"].unique()) == sorted(DEPS)
    assert plotted.groupby("deployment_type").size().tolist() == [6, 6, 6, 6]
    root = _parse_svg(svg)
    text = ET.tostring(root, encoding="unicode")
    for d in DEPS:
        assert d in text


def test_constant_heatmap(tmp_path):
    rows = []
    for dep in DEPS:
        for lv in LEVELS:
            rows.append(["PrefixHijack", "ROV", "BGP", "BGP", lv, "VICTIM_SUCCESS", 37.5, 0.0, dep])
    t = pd.DataFrame(rows, columns=list(CSV_HEADER))
    svg, plotted = render(PlotSpec("heatmap2d", tmp_path, policy="ROV", scenario="PrefixHijack"), t)
    assert plotted["value"].unique().tolist() == [37.5]
    text = svg.read_text()
    assert text.count(">37.5<") == len(DEPS) * len(LEVELS)


def test_empty_selection_is_noop(table_dir, tmp_path, caplog):
    table = combine_csv(table_dir)
    assert render(PlotSpec("bar", tmp_path / "x", policy="BGPsec"), table) is None
    assert not (tmp_path / "x").exists()


def test_multiline_figure_count(table_dir, tmp_path):
    table = combine_csv(table_dir)
    # 2 scenarios x 2 policies
    assert len(render_all("multiline", table, tmp_path)) == 4


def test_svg_deterministic(table_dir, tmp_path):
    table = combine_csv(table_dir)
    a = render_all("heatmap2d", table, tmp_path / "a")
    b = render_all("heatmap2d", table, tmp_path / "b")
    for x, y in zip(a, b):
        assert x.read_bytes() == y.read_bytes()


def test_plot_spec_rejects_unknown_kind(tmp_path):
    assert "multiline" in PLOT_KINDS
    with pytest.raises(ValueError):
        PlotSpec("pie", tmp_path)
