"""Command layer: tables, plots, reports, files.

Table rows are frozen byte-for-byte where the numbers are small, and
field-by-field where the exact rationals are too long to inline.  Plot
and distribution runs use a small class so the whole file stays fast;
determinism is asserted by running commands twice.
"""

import csv
import io
import json
from fractions import Fraction as Q
from pathlib import Path

import pytest

from roundflow.cli import (
    _decimal15,
    _int_list,
    _out_path,
    _parse_resolution,
    _str_list,
    cmd_agreement,
    cmd_distribution,
    cmd_period_profile,
    cmd_phase_plot,
    cmd_twist_table,
    main,
    resolve_lambda,
)
from roundflow.integrable import polygon_class
from roundflow.returnmap import build_A


def rows_of(csv_text):
    rows = list(csv.reader(io.StringIO(csv_text)))
    return rows[0], [dict(zip(rows[0], r)) for r in rows[1:]]


# ---------------------------------------------------------------------------
# helpers


def test_decimal15_rendering():
    assert _decimal15(Q(3, 2)) == "1.5"
    assert _decimal15(Q(1, 3)) == "0.333333333333333"
    assert _decimal15(Q(-188, 1617)) == "-0.116264687693259"
    assert _decimal15(Q(7)) == "7"


def test_out_path_appends_never_replaces():
    assert _out_path(Path("runs/v1.2/table"), ".csv") == Path("runs/v1.2/table.csv")
    assert _out_path(Path("a.b"), ".manifest.json") == Path("a.b.manifest.json")


def test_arg_parsers():
    assert _parse_resolution("283x72") == (283, 72)
    assert _parse_resolution("16X16") == (16, 16)
    with pytest.raises(Exception):
        _parse_resolution("283")
    assert _int_list("1,2,3") == (1, 2, 3)
    assert _str_list("1/10, auto,") == ("1/10", "auto")


def test_resolve_lambda():
    cls = polygon_class(25)
    assert resolve_lambda("1/400", cls, 1).lam == Q(1, 400)
    dom = resolve_lambda("auto", cls, 1)
    assert dom.lam == Q(1, 293)
    assert dom.base_point == (1035, 1035)
    assert len(build_A(dom, 1)) > 0
    assert resolve_lambda("auto", polygon_class(10000), 1).lam == Q(1, 73944)


# ---------------------------------------------------------------------------
# tables


def test_twist_table_small_class_row_frozen():
    text = cmd_twist_table([1], ["0"])
    assert text.splitlines()[1] == \
        "1,0,1,2,3/2,1.5,-4/3,-1.33333333333333,2/3,0.666666666666667,3/2,1.5"
    assert "\r\n" in text


def test_twist_table_large_class_fields_frozen():
    _, rows = rows_of(cmd_twist_table([100, 400], ["0", "3/10"]))
    assert len(rows) == 4
    at = {(r["n"], r["b"]): r for r in rows}
    r100 = at[("100", "0")]
    assert (r100["e"], r100["e_next"]) == ("10000", "10001")
    assert r100["e_mean_decimal"] == "10000.5"
    assert r100["t_prime_decimal"] == "-0.000378666379156529"
    assert r100["kappa_decimal"] == "3.76413314200548"
    assert r100["rho_star_decimal"] == "0.265665416783641"
    r400 = at[("400", "3/10")]
    assert r400["e"] == "160234"
    assert r400["kappa_decimal"] == "0.000243596076290731"
    assert r400["rho_star_decimal"] == "4105.15643448421"
    # the exact columns reproduce the decimals
    assert _decimal15(Q(r400["rho_star"])) == r400["rho_star_decimal"]
    assert Q(r100["kappa"]) * Q(r100["rho_star"]) == 1


def test_period_profile_grid():
    header, rows = rows_of(cmd_period_profile(2, 5))
    assert header == ["b", "alpha", "period", "period_decimal",
                      "scaled_deviation", "profile", "abs_gap"]
    assert len(rows) == 5
    # level 4 is critical: period cells are empty, the profile is not
    assert rows[0]["alpha"] == "4"
    assert rows[0]["period"] == "" and rows[0]["abs_gap"] == ""
    assert rows[0]["profile"] == "0.333333333333333"
    assert rows[1]["alpha"] == "121/25"
    assert rows[1]["period"] == "3412/1125"
    assert rows[1]["period_decimal"] == "3.03288888888889"
    for r in rows[1:]:
        gap = abs(float(r["scaled_deviation"]) - float(r["profile"]))
        assert gap == pytest.approx(float(r["abs_gap"]), rel=1e-12)


def test_period_profile_rejects_bad_args():
    with pytest.raises(ValueError):
        cmd_period_profile(0, 10)
    with pytest.raises(ValueError):
        cmd_period_profile(10, 0)


def test_agreement_row_frozen():
    text = cmd_agreement("5", ["1/20"])
    assert text.splitlines()[1] == \
        "1/20,0.05,26120,39601,26120/39601,0.659579303552941"


# ---------------------------------------------------------------------------
# phase plot


def test_phase_plot_small_run_and_determinism():
    first = cmd_phase_plot(25, 1, "auto", (16, 16), 8, cap=2000)
    again = cmd_phase_plot(25, 1, "auto", (16, 16), 8, cap=2000, threads=3)
    assert first.ppm == again.ppm
    assert first.points_csv == again.points_csv
    assert first.manifest == again.manifest

    assert first.ppm.startswith(b"P6\n16 16\n255\n")
    assert len(first.ppm) == 13 + 3 * 16 * 16
    mf = first.manifest
    assert mf["lambda"] == "1/293"
    counts = mf["counts"]
    assert counts["seeds_traced"] == len(mf["seed_outcomes"])
    assert counts["closed"] + counts["escaped"] + counts["orbit_cap"] \
        == counts["seeds_traced"]
    assert counts["closed"] > 0
    assert sum(o["points_in_window"] for o in mf["seed_outcomes"]) \
        == counts["points_in_window"]
    occ = mf["occupancy"]
    assert 0 < occ["site_global_occupancy"] <= 1
    assert occ["sites_occupied"] <= occ["site_rows"] * occ["site_cols"]

    header, rows = rows_of(first.points_csv)
    assert header == ["seed_index", "seed_x", "seed_y",
                      "theta", "theta_decimal", "rho", "rho_decimal"]
    assert len(rows) == counts["points_in_window"]
    for r in rows:
        assert Q(-1, 2) <= Q(r["theta"]) < Q(1, 2)
        assert _decimal15(Q(r["rho"])) == r["rho_decimal"]
    # white pixel count equals the number of distinct lit cells
    assert first.ppm.count(b"\xff") % 3 == 0
    assert first.ppm.count(b"\xff") > 0


def test_phase_plot_empty_and_validation():
    res = cmd_phase_plot(25, 1, "auto", (16, 16), 0)
    assert res.ppm == b"P6\n16 16\n255\n" + bytes(3 * 16 * 16)
    assert res.manifest["counts"]["seeds_traced"] == 0
    with pytest.raises(ValueError):
        cmd_phase_plot(25, 1, "auto", (15, 16), 8)
    with pytest.raises(ValueError):
        cmd_phase_plot(25, 1, "auto", (16, 16), -1)


# ---------------------------------------------------------------------------
# distribution


def test_distribution_small_run():
    first = cmd_distribution(25, 2, ("auto",), 2, cap=10 ** 5)
    again = cmd_distribution(25, 2, ("auto",), 2, cap=10 ** 5, threads=2)
    assert first.report == again.report
    assert first.samples_csv == again.samples_csv

    rep = first.report
    assert rep["e"] == 25 and rep["m"] == 2
    assert rep["warn_not_square"] is False
    assert len(rep["runs"]) == 2
    for run in rep["runs"]:
        assert run["count_A_bar"] >= run["count_A"] > 0
        assert run["g"] > 0 and run["unresolved"] == 0
        g, h = run["g"], run["h"]
        assert Q(run["gamma"]) == Q(2 * run["count_A_bar"], g + h)
        assert 0 <= run["symmetric_fraction"] <= 1
    agg = rep["aggregate"]
    assert agg["runs"] == 2
    assert agg["l1_gap"]["min"] <= agg["l1_gap"]["mean"] <= agg["l1_gap"]["max"]
    assert agg["unresolved_total"] == 0

    header, rows = rows_of(first.samples_csv)
    assert header == ["run", "lambda", "z0_x", "z0_y",
                      "x", "empirical", "reference"]
    assert len(rows) == 2 * 321  # full grid per run
    last = rows[320]
    assert last["x"] == "16" and float(last["empirical"]) == 1.0
    assert first.manifest["wall_total_s"] >= 0


def test_distribution_warns_on_non_square(capsys):
    res = cmd_distribution(2, 1, ("auto",), 1, cap=10 ** 5)
    assert res.report["warn_not_square"] is True
    assert "not a perfect square" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# entry point and files


def manifest_of(base: Path) -> dict:
    doc = json.loads(_out_path(base, ".manifest.json").read_text())
    assert set(doc) == {"config", "resolved", "versions", "wall_s"}
    assert "roundflow" in doc["versions"]
    assert doc["wall_s"] >= 0
    return doc


def test_main_twist_table_csv_and_json(tmp_path):
    base = tmp_path / "tw"
    assert main(["twist-table", "--n", "1,2", "--b", "0,1/2",
                 "--out", str(base)]) == 0
    text = _out_path(base, ".csv").read_bytes().decode()
    assert text.count("\r\n") == 5  # header + 4 rows
    assert manifest_of(base)["config"]["command"] == "twist-table"

    jbase = tmp_path / "tw.json.run"
    assert main(["twist-table", "--n", "1", "--format", "json",
                 "--out", str(jbase)]) == 0
    doc = json.loads(_out_path(jbase, ".json").read_text())
    assert isinstance(doc, list) and doc[0]["e"] == "1"
    assert doc[0]["rho_star_decimal"] == "1.5"


def test_main_period_profile(tmp_path):
    base = tmp_path / "pp"
    assert main(["period-profile", "--n", "2", "--grid", "3",
                 "--out", str(base)]) == 0
    _, rows = rows_of(_out_path(base, ".csv").read_text())
    assert len(rows) == 3
    assert manifest_of(base)["config"]["grid"] == 3


def test_main_agreement(tmp_path):
    base = tmp_path / "ag"
    assert main(["agreement", "--r", "2", "--lambda", "1/10,1/25",
                 "--out", str(base)]) == 0
    _, rows = rows_of(_out_path(base, ".csv").read_text())
    assert [r["lambda"] for r in rows] == ["1/10", "1/25"]
    for r in rows:
        assert Q(r["fraction"]) == Q(int(r["count_agree"]), int(r["count_total"]))
    assert manifest_of(base)["config"]["r"] == "2"


def test_main_phase_plot(tmp_path):
    base = tmp_path / "ph"
    assert main(["phase-plot", "--e", "25", "--m", "1", "--lambda", "auto",
                 "--res", "16x16", "--seeds", "4", "--cap", "500",
                 "--threads", "2", "--out", str(base)]) == 0
    assert _out_path(base, ".ppm").read_bytes().startswith(b"P6\n16 16\n255\n")
    assert _out_path(base, ".points.csv").exists()
    doc = manifest_of(base)
    assert doc["config"]["resolution"] == [16, 16]
    assert doc["resolved"]["lambda"] == "1/293"


def test_main_distribution(tmp_path):
    base = tmp_path / "di"
    assert main(["distribution", "--e", "25", "--m", "1", "--lambda", "auto",
                 "--z0-count", "1", "--cap", "100000",
                 "--out", str(base)]) == 0
    rep = json.loads(_out_path(base, ".json").read_text())
    assert rep["aggregate"]["runs"] == 1
    _, rows = rows_of(_out_path(base, ".samples.csv").read_text())
    assert len(rows) == 321
    assert manifest_of(base)["config"]["z0_count"] == 1
