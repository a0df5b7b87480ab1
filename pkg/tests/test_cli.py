import io
import json
import subprocess
import sys

import pytest

from polyaurn import catalog
from polyaurn.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


class TestCheck:
    def test_passing(self, capsys):
        code, out, _ = run_cli(capsys, "check", "catalog:asym_sqrt2")
        rep = json.loads(out)
        assert code == 0
        assert rep["ergodicity_lhs"] == 2 and rep["sigma"] == 3 and rep["ergodicity_holds"]

    def test_failing(self, capsys):
        code, out, _ = run_cli(capsys, "check", "catalog:polya_identity")
        assert code == 2 and json.loads(out)["ergodicity_lhs"] == 4

    def test_malformed_file(self, capsys, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{ nope")
        code, _, err = run_cli(capsys, "check", str(bad))
        assert code == 1 and "error" in err

    def test_missing_file(self, capsys, tmp_path):
        code, _, _ = run_cli(capsys, "check", str(tmp_path / "absent.json"))
        assert code == 1

    def test_unknown_catalog(self, capsys):
        code, _, _ = run_cli(capsys, "check", "catalog:nope")
        assert code == 1

    def test_unbalanced(self, capsys, tmp_path):
        path = tmp_path / "t.json"
        path.write_text(json.dumps({"d": 2, "m": 1, "entries": [1, 0, 0, 2]}))
        code, out, _ = run_cli(capsys, "check", str(path))
        assert code == 2 and json.loads(out)["sigma"] is None


class TestSolve:
    def test_closed_form(self, capsys):
        code, out, _ = run_cli(capsys, "solve", "catalog:affine")
        assert code == 0
        assert json.loads(out)["solve"]["x_star"][0] == pytest.approx(3 / 7, abs=1e-10)

    def test_no_convergence(self, capsys):
        code, out, _ = run_cli(capsys, "solve", "catalog:li_ng", "--x0", "1,0", "--max-iter", "50")
        rep = json.loads(out)["solve"]
        assert code == 3 and rep["converged"] is False and rep["iterations"] == 50

    def test_all_fixed_points(self, capsys):
        code, out, _ = run_cli(capsys, "solve", "catalog:lms_ex2", "--all-2colour")
        pts = json.loads(out)["fixed_points"]
        assert code == 0 and [p[0] for p in pts] == pytest.approx([1 / 3, 1.0])

    def test_all_fixed_points_needs_two_colours(self, capsys, tmp_path):
        path = tmp_path / "t.json"
        path.write_text(json.dumps({"d": 3, "m": 1, "entries": [1] * 9}))
        code, _, _ = run_cli(capsys, "solve", str(path), "--all-2colour")
        assert code == 1

    def test_multi_start(self, capsys):
        code, out, _ = run_cli(capsys, "solve", "catalog:chang_zhang", "--starts", "10")
        found = [r["x_star"][0] for r in json.loads(out)["multi_start"] if r["converged"]]
        assert code == 0 and sorted(found) == pytest.approx([0.2, 0.6], abs=1e-6)


class TestSimulate:
    def test_csv_deterministic(self, capsys, tmp_path):
        out_a, out_b = tmp_path / "a.csv", tmp_path / "b.csv"
        args = ["simulate", "catalog:asym_sqrt2", "--n", "300", "--replicates", "20", "--seed", "4"]
        assert run_cli(capsys, *args, "--out", str(out_a))[0] == 0
        assert run_cli(capsys, *args, "--out", str(out_b))[0] == 0
        assert out_a.read_text() == out_b.read_text()
        lines = out_a.read_text().splitlines()
        assert lines[0] == "n,mean_l1_error,stderr,replicates" and lines[-1].startswith("300,")

    def test_explicit_reference(self, capsys):
        code, out, _ = run_cli(
            capsys, "simulate", "catalog:polya_identity", "--n", "10", "--replicates", "3",
            "--x-star", "0.5,0.5",
        )
        assert code == 0 and out.splitlines()[1] == "0,0.0,0.0,3"

    def test_bad_initial(self, capsys):
        code, _, _ = run_cli(capsys, "simulate", "catalog:all_ones", "--initial", "1,x")
        assert code == 1


class TestDag:
    def test_events(self, capsys):
        code, out, _ = run_cli(capsys, "dag", "--n", "100", "1000", "--replicates", "50")
        lines = out.splitlines()
        assert code == 0 and lines[0] == "n,ell,estimate,stderr,replicates" and len(lines) == 3

    def test_coupling(self, capsys):
        code, out, _ = run_cli(capsys, "dag", "--tensor", "catalog:lms_ex2", "--n", "2", "--pi", "0.3,0.7")
        rep = json.loads(out)
        assert code == 0 and rep["tv"] <= 1e-10
        assert sum(r["p"] for r in rep["urn"]) == pytest.approx(1.0)


class TestChain:
    def test_certificate(self, capsys):
        code, out, _ = run_cli(capsys, "chain", "catalog:asym_sqrt2", "--depth", "5", "--leaves", "point:1,2")
        lines = out.splitlines()
        assert code == 0 and lines[0] == "level,max_error,bound" and len(lines) == 7

    def test_not_contractive(self, capsys):
        code, out, err = run_cli(capsys, "chain", "catalog:lms_ex2", "--depth", "3")
        assert code == 2 and "q =" in err and out.splitlines()[1].endswith(",nan")

    def test_bad_leaves(self, capsys):
        code, _, _ = run_cli(capsys, "chain", "catalog:asym_sqrt2", "--leaves", "point:3,1")
        assert code == 1


class TestCatalog:
    def test_list(self, capsys):
        code, out, _ = run_cli(capsys, "catalog", "--list")
        assert code == 0 and [e["name"] for e in json.loads(out)][:2] == ["polya_identity", "all_ones"]

    @pytest.mark.parametrize("name", catalog.names())
    def test_emit_then_check(self, name, capsys, monkeypatch):
        _, text, _ = run_cli(capsys, "catalog", "--emit", name)
        monkeypatch.setattr(sys, "stdin", io.StringIO(text))
        code, out, _ = run_cli(capsys, "check", "-")
        entry = catalog.get(name)
        assert code == (0 if entry.expected_e_holds else 2)
        assert json.loads(out)["ergodicity_lhs"] == pytest.approx(entry.expected_lhs, abs=1e-12)


def test_module_entry_point_pipe():
    emit = subprocess.run(
        [sys.executable, "-m", "polyaurn", "catalog", "--emit", "lms_ex3"],
        capture_output=True, text=True, check=True,
    )
    check = subprocess.run(
        [sys.executable, "-m", "polyaurn", "check", "-"],
        input=emit.stdout, capture_output=True, text=True,
    )
    assert check.returncode == 2
    assert json.loads(check.stdout)["ergodicity_lhs"] == 12
