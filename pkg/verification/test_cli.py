#!/usr/bin/env python3
"""
Tests for the command-line front end: exit codes, console output and result files.
"""

import csv
import json
import sys
from pathlib import Path

# Add parent directory to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from kneadlab.cli import _signed_point, main
from kneadlab.models import Side

SYSTEMS = Path(__file__).parent.parent / "systems"


def system(name):
    return str(SYSTEMS / f"{name}.json")


def test_determinant_prints_polynomial(tmp_path, capsys):
    code = main(["determinant", system("scaling"), "-M", "8", "--output-dir", str(tmp_path)])
    out = capsys.readouterr().out
    assert code == 0
    assert "1 - 2t" in out.splitlines()
    payload = json.loads((tmp_path / "determinant_scaling.json").read_text())
    assert payload["rendered"] == "1 - 2t"
    assert payload["determinant"][:3] == ["1", "-2", "0"]


def test_verify_tent_passes(tmp_path, capsys):
    code = main(["verify", system("tent"), "-m", "8", "-M", "8", "--output-dir", str(tmp_path)])
    out = capsys.readouterr().out
    assert code == 0, out
    with open(tmp_path / "suite_tent.csv", newline="") as f:
        rows = list(csv.reader(f))
    assert rows[0] == ["check", "system", "residual", "passed"]
    assert {row[0] for row in rows[1:]} == {
        "ld_identity", "column_relation", "determinant_columns", "increment_jump",
        "cylinders", "lap_recursion", "L_gamma", "tri_bijection",
    }
    assert all(row[3] == "True" for row in rows[1:])


def test_compare_contractions(tmp_path, capsys):
    code = main([
        "compare", system("contractions"), system("contractions_swapped"), "-m", "10", "--output-dir", str(tmp_path),
    ])
    out = capsys.readouterr().out
    assert code == 0
    assert "kneading equal to depth 10" in out
    assert (tmp_path / "compare_contractions_contractions_swapped.json").exists()


def test_compare_signature_mismatch_is_input_error(tmp_path, capsys):
    code = main(["compare", system("tent"), system("scaling"), "-m", "4", "--output-dir", str(tmp_path)])
    assert code == 2
    assert "orientations differ" in capsys.readouterr().err


def test_missing_and_malformed_files(tmp_path, capsys):
    assert main(["entropy", str(tmp_path / "nope.json"), "--output-dir", str(tmp_path)]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["entropy", str(bad), "--output-dir", str(tmp_path)]) == 2
    assert "Error" in capsys.readouterr().err


def test_bad_depth(tmp_path, capsys):
    assert main(["entropy", system("tent"), "-m", "0", "--output-dir", str(tmp_path)]) == 2


def test_measure_not_applicable(tmp_path, capsys):
    code = main(["measure", system("identity"), "-m", "6", "-M", "6", "--output-dir", str(tmp_path)])
    assert code == 1
    assert "Not applicable" in capsys.readouterr().err


def test_entropy_writes_growth_csv(tmp_path, capsys):
    code = main(["entropy", system("tent"), "-m", "10", "-M", "12", "--output-dir", str(tmp_path)])
    assert code == 0
    with open(tmp_path / "growth_tent.csv", newline="") as f:
        rows = list(csv.reader(f))
    assert rows[0][:2] == ["level", "lap_count"]
    assert rows[-1][:2] == ["10", "1024"]
    payload = json.loads((tmp_path / "entropy_tent.json").read_text())
    assert payload["root_method"] == "applicable"


def test_overlap_json_output(tmp_path, capsys):
    code = main([
        "overlap", system("overlap_doubling"), "-N", "16", "-M", "8",
        "--format", "json", "--output-dir", str(tmp_path),
    ])
    payload = json.loads(capsys.readouterr().out)
    assert code == 0
    assert payload["model"]["r"] == "1/2"
    assert payload["model"]["r_exact"] is True
    assert payload["determinant_check"]["N21_matches"] is True


def test_itinerary_point_with_side(tmp_path, capsys):
    code = main([
        "itinerary", system("tent"), "--point", "1/3+", "-m", "4", "-M", "4",
        "--stability", "--output-dir", str(tmp_path),
    ])
    assert code == 0
    payload = json.loads((tmp_path / "itinerary_tent.json").read_text())
    assert payload["itinerary"]["base"] == "1/3+"
    assert payload["one_sided_stability"]["agree"] is True


def test_signed_point_parsing():
    assert _signed_point("1/3+").side is Side.PLUS
    assert _signed_point("1/3-").side is Side.MINUS
    assert _signed_point("-1").side is Side.EXACT
    assert _signed_point("-1").value == -1


def test_node_budget_reports_partial_counts(tmp_path, capsys, monkeypatch):
    from kneadlab.config import get_settings

    monkeypatch.setattr(get_settings(), "node_budget", 100)
    code = main(["entropy", system("tent"), "-m", "10", "-M", "4", "--output-dir", str(tmp_path)])
    err = capsys.readouterr().err
    assert code == 1
    assert "Node budget exceeded" in err
    assert "Completed level counts" in err


def test_threads_flag_does_not_leak_into_settings(tmp_path, monkeypatch):
    from kneadlab import entropy_service
    from kneadlab.config import get_settings, settings_override

    before = get_settings().threads
    seen = []
    original = entropy_service.iter_levels

    def recording(*args, **kwargs):
        seen.append(get_settings().threads)
        return original(*args, **kwargs)

    monkeypatch.setattr(entropy_service, "iter_levels", recording)
    code = main(["entropy", system("tent"), "-m", "6", "-M", "6", "--threads", "3", "--output-dir", str(tmp_path)])

    assert code == 0
    assert seen and set(seen) == {3}, f"threads seen during the run: {seen}"
    assert get_settings().threads == before, "run must not change the cached settings"
    with settings_override(threads=before + 1) as scoped:
        assert get_settings() is scoped and scoped.threads == before + 1
    assert get_settings().threads == before
