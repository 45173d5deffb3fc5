import json
import math

import pytest

from app import main, parse_range
from src.cayley import MarkovCayleyTree, cayley_entropy_estimate, count_ball_cayley
from src.grid_axial import GridAxialSpec, entropy_estimate_grid
from src.mis_surface import MultiplicativeSystem, count_mis, mis_entropy, tree_surface_correction
from src.reports import read_report
from src.sft1d import TransitionMatrix

LN2 = math.log(2)
GOLDEN = TransitionMatrix.golden_mean()


def _run_csv(capsys, *argv):
    status = main(["--format", "csv", *argv])
    out = capsys.readouterr().out
    return status, read_report(out, "csv")


# === Exit status ===

@pytest.mark.parametrize("argv,expected", [
    (["grid", "--axes", "golden_mean", "--d", "2", "--box", "2x2"], 0),
    (["grid", "--axes", "no_such_matrix", "--d", "2", "--box", "2x2"], 2),
    (["grid", "--axes", '{"size": 2, "rows": [[1, 1]', "--box", "2"], 2),
    (["grid", "--axes", "golden_mean", "--d", "2", "--box", "9x9", "--exact"], 1),
    ([], 2),
    (["grid", "--d", "2"], 2),
    (["sweep", "--m", "3..1"], 2),
    (["sweep", "--family", "other"], 2),
])
def test_exit_status(argv, expected, capsys):
    assert main(argv) == expected


def test_help_exits_cleanly(capsys):
    assert main(["--help"]) == 0
    assert "axial-entropy" in capsys.readouterr().out


def test_parse_range():
    assert parse_range("1..3") == [1, 2, 3]
    assert parse_range("4") == [4]
    with pytest.raises(ValueError):
        parse_range("a..b")


# === Subcommands ===

def test_hard_square_box(capsys):
    status, frame = _run_csv(capsys, "grid", "--axes", "golden_mean", "--d", "2", "--box", "2x2")
    assert status == 0
    assert frame["count"].tolist() == [7]
    assert frame["log_count"].iloc[0] == pytest.approx(math.log(7))


def test_report_flag_selects_the_format(capsys):
    assert main(["grid", "--axes", "full:2", "--d", "2", "--box", "2x3", "--report", "json"]) == 0
    records = json.loads(capsys.readouterr().out)
    assert records[0]["count"] == 64


def test_tree_estimate_against_closed_form(capsys):
    status, frame = _run_csv(capsys, "tree", "--d", "2", "--axes", "thm21:1,2", "identity:3",
                             "--series", "--r", "0", "--depth", "25")
    assert status == 0
    assert frame["closed_form"].iloc[-1] == pytest.approx(LN2 / 4, abs=1e-15)
    assert frame["estimate"].iloc[-1] == pytest.approx(LN2 / 4, abs=1e-3)


def test_tree_partition_verification(capsys):
    status, frame = _run_csv(capsys, "tree", "--d", "3", "--r", "1", "--axes", "golden_mean",
                             "--verify-partition", "--partition-depth", "3", "--depth", "4")
    assert status == 0
    assert frame.loc[frame["quantity"] == "partition_identity", "holds"].astype(bool).all()


def test_grid_sweep(capsys):
    status, frame = _run_csv(capsys, "sweep", "--family", "thm21", "--m", "1..2", "--n", "1..3", "--jobs", "2")
    assert status == 0
    assert len(frame) == 6
    assert frame["verified"].astype(bool).all()
    expected = [m * LN2 / n for m, n in zip(frame["m"], frame["n"])]
    assert frame["entropy"].tolist() == pytest.approx(expected)


def test_tree_sweep(capsys):
    status, frame = _run_csv(capsys, "sweep", "--lattice", "tree", "--m", "1", "--n", "1..2")
    assert status == 0
    assert sorted(frame["entropy"]) == pytest.approx([LN2 / 4, LN2 / 2])


def test_cayley_closed_forms(capsys):
    status, frame = _run_csv(capsys, "cayley", "--adjacency", "golden_mean", "--axes", "full:2", "identity:2",
                             "--closed-form", "gm", "--depth", "30")
    assert status == 0
    assert frame["quantity"].tolist() == ["E_times_X", "X_times_E"]
    for row in frame.itertuples():
        assert row.estimate == pytest.approx(row.closed_form, abs=1e-2)


def test_cayley_gm_needs_golden_adjacency(capsys):
    assert main(["cayley", "--adjacency", "g1", "--axes", "golden_mean", "--closed-form", "gm"]) == 2


def test_mis_counts(capsys):
    status, frame = _run_csv(capsys, "mis", "--omega", "golden_mean", "--x", "4,8")
    assert status == 0
    assert frame["count"].tolist() == [10, 96]
    assert frame["entropy"].iloc[0] == pytest.approx(0.5713, abs=2e-3)


def test_mis_residuals(capsys):
    status, frame = _run_csv(capsys, "mis", "--omega", "full:2", "--residuals", "--x", "2^n+1,n=4..6")
    assert status == 0
    assert frame["residual"].abs().max() < 1e-9


def test_mis_tree_surface(capsys):
    status, frame = _run_csv(capsys, "mis", "--omega", "golden_mean", "--tree-surface", "--d", "3", "--depth", "5")
    assert status == 0
    expected = tree_surface_correction(TransitionMatrix.golden_mean(), 3, 5)
    assert frame["n"].tolist() == list(range(6))
    assert frame["log_count"].tolist() == pytest.approx(expected["log_count"].tolist(), rel=1e-12)
    assert frame["dp_match"].astype(bool).all()
    assert frame["surface"].tolist() == pytest.approx(expected["surface"].tolist(), rel=1e-12)


# === Reports carry the computed values ===

def test_grid_report_matches_estimator(capsys):
    status, frame = _run_csv(capsys, "grid", "--axes", "golden_mean", "--d", "2", "--max-box", "5")
    assert status == 0
    report = entropy_estimate_grid(GridAxialSpec((GOLDEN, GOLDEN)), 5)
    assert frame["size"].tolist() == report.sizes
    assert frame["estimate"].tolist() == pytest.approx(report.estimates, rel=1e-12)


def test_mis_report_matches_counter(capsys):
    status, frame = _run_csv(capsys, "mis", "--omega", "golden_mean", "--p", "3", "--x", "9,27,40")
    assert status == 0
    system = MultiplicativeSystem(GOLDEN, 3)
    assert frame["count"].tolist() == [count_mis(system, x).exact for x in (9, 27, 40)]
    assert frame["entropy"].tolist() == pytest.approx([mis_entropy(system)] * 3, rel=1e-12)


def test_cayley_report_matches_counter(capsys):
    status, frame = _run_csv(capsys, "cayley", "--adjacency", "g1", "--axes", "full:2", "golden_mean",
                             "--depth", "4")
    assert status == 0
    tree = MarkovCayleyTree.g1()
    axes = (TransitionMatrix.full(2), GOLDEN)
    assert frame["count"].tolist() == [count_ball_cayley(tree, axes, 4).total_exact]
    assert frame["estimate"].tolist() == pytest.approx([cayley_entropy_estimate(tree, axes, 4)], rel=1e-12)


@pytest.mark.parametrize("argv", [
    ["--lattice", "grid", "--axes", "golden_mean", "--d", "2", "--box", "2x3"],
    ["--lattice", "tree", "--axes", "golden_mean", "--d", "2", "--depth", "2"],
    ["--lattice", "cayley", "--adjacency", "g1", "--axes", "full:2", "golden_mean", "--depth", "2"],
    ["--lattice", "mis", "--omega", "golden_mean", "--x", "8"],
])
def test_oracle_subcommand(argv, capsys):
    status, frame = _run_csv(capsys, "oracle", *argv)
    assert status == 0
    assert frame["match"].astype(bool).all()


def test_oracle_budget(capsys):
    assert main(["--budget", "10", "oracle", "--lattice", "grid", "--axes", "full:2", "--d", "2", "--box", "3x3"]) == 1


# === Output handling ===

def test_reports_are_deterministic(capsys):
    argv = ["--format", "csv", "grid", "--axes", "golden_mean", "--d", "2", "--max-box", "4"]
    main(argv)
    first = capsys.readouterr().out
    main(argv)
    assert capsys.readouterr().out == first


def test_json_and_csv_reports_agree(capsys):
    argv = ["grid", "--axes", "golden_mean", "--d", "2", "--max-box", "4"]
    main(["--format", "csv", *argv])
    from_csv = read_report(capsys.readouterr().out, "csv")
    main(["--format", "json", *argv])
    from_json = read_report(capsys.readouterr().out, "json")
    assert from_csv["estimate"].tolist() == from_json["estimate"].tolist()


def test_log_base_two(capsys):
    status, frame = _run_csv(capsys, "--log-base", "2", "grid", "--axes", "full:2", "--d", "2", "--max-box", "3")
    assert status == 0
    assert frame["estimate"].tolist() == pytest.approx([1.0, 1.0, 1.0])


def test_output_file(tmp_path, capsys):
    target = tmp_path / "report.csv"
    assert main(["--format", "csv", "--output", str(target), "grid", "--axes", "golden_mean", "--d", "2",
                 "--box", "2x2"]) == 0
    assert capsys.readouterr().out == ""
    assert read_report(target.read_text(), "csv")["count"].tolist() == [7]


def test_timestamps_column(capsys):
    status, frame = _run_csv(capsys, "--timestamps", "grid", "--axes", "golden_mean", "--d", "2", "--box", "1x1")
    assert status == 0
    assert "generated_at" in frame.columns


def test_config_file(tmp_path, capsys):
    run = tmp_path / "run.json"
    run.write_text(json.dumps({
        "subcommand": "grid",
        "format": "csv",
        "options": {"axes": ["golden_mean"], "d": 2, "box": "2x2", "exact": True},
    }))
    assert main(["--config", str(run)]) == 0
    assert read_report(capsys.readouterr().out, "csv")["count"].tolist() == [7]


def test_malformed_config_file(tmp_path, capsys):
    run = tmp_path / "run.json"
    run.write_text("{not json")
    assert main(["--config", str(run)]) == 2
    run.write_text(json.dumps({"options": {}}))
    assert main(["--config", str(run)]) == 2
