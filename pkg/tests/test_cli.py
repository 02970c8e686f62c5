import csv
import io
import json
import subprocess
import sys

import pytest

from entadc.cli import alpha_grid, cmd_roundtrip, main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows_of(text):
    return list(csv.DictReader(io.StringIO(text)))


class TestTransfer:
    def test_vacuum_ledger_is_zero(self, capsys):
        code, out, _ = run(capsys, "transfer", "--lambda", "0", "--stages", "3")
        assert code == 0
        rows = rows_of(out)
        assert [int(r["stage"]) for r in rows] == [1, 2, 3]
        for r in rows:
            for col in ("e_transferred", "e_remaining", "e_transferred_closed_form", "e_remaining_closed_form"):
                assert abs(float(r[col])) < 1e-12

    def test_residual_decreasing_and_conserved(self, capsys):
        code, out, _ = run(capsys, "transfer", "--lambda", "0.8", "--stages", "4")
        assert code == 0
        rows = rows_of(out)
        rem = [float(r["e_remaining"]) for r in rows]
        assert all(b < a for a, b in zip(rem, rem[1:]))
        assert max(float(r["conservation_defect"]) for r in rows) < 1e-9

    def test_misaligned_truncation_is_guard_error(self, capsys):
        code, out, err = run(capsys, "transfer", "--stages", "3", "--truncation", "20")
        assert code == 3
        assert out == ""
        assert "multiple" in err

    def test_bad_lambda_is_validation_error(self, capsys):
        code, _, err = run(capsys, "transfer", "--lambda", "1.5")
        assert code == 1
        assert "invalid input" in err

    def test_unparseable_flag_exits_one(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["transfer", "--stages", "three"])
        assert exc.value.code == 1


class TestFig1:
    def test_header_and_grid(self, capsys):
        code, out, _ = run(capsys, "fig1", "--lambda", "0.3,0.9", "--stages", "1,6")
        assert code == 0
        assert out.splitlines()[0] == "lambda,k,E_transferred,E_total"
        assert len(out.splitlines()) == 5

    def test_transfer_nearly_complete(self, capsys):
        _, out, _ = run(capsys, "fig1", "--lambda", "0.9", "--stages", "6")
        (row,) = rows_of(out)
        assert float(row["E_transferred"]) / float(row["E_total"]) > 0.999

    def test_default_grid_monotone_and_bounded(self, capsys):
        _, out, _ = run(capsys, "fig1")
        rows = rows_of(out)
        assert len(rows) == 19 * 6
        by_lam = {}
        for r in rows:
            by_lam.setdefault(r["lambda"], []).append((float(r["E_transferred"]), float(r["E_total"])))
        for series in by_lam.values():
            moved = [m for m, _ in series]
            assert all(b >= a for a, b in zip(moved, moved[1:]))
            assert all(m <= t + 1e-12 for m, t in series)

    def test_json_mirrors_csv(self, capsys):
        _, csv_out, _ = run(capsys, "fig1", "--lambda", "0.5", "--stages", "2")
        _, json_out, _ = run(capsys, "fig1", "--lambda", "0.5", "--stages", "2", "--format", "json")
        (c,) = rows_of(csv_out)
        (j,) = json.loads(json_out)
        assert set(c) == set(j)
        assert float(c["E_total"]) == j["E_total"]

    def test_output_is_byte_identical(self, capsys, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for path in (a, b):
            assert main(["fig1", "--out", str(path)]) == 0
        assert a.read_bytes() == b.read_bytes()
        assert b"\r" not in a.read_bytes()

    def test_empty_grid_rejected(self, capsys):
        code, _, _ = run(capsys, "fig1", "--lambda", ",")
        assert code == 1


class TestCoherentSweep:
    def test_small_sweep(self, capsys):
        code, out, _ = run(capsys, "coherent-sweep", "--alpha-min", "0", "--alpha-max", "0.2", "--alpha-step", "0.1")
        assert code == 0
        rows = rows_of(out)
        assert [float(r["alpha"]) for r in rows] == pytest.approx([0.0, 0.1, 0.2])
        assert float(rows[0]["concurrence"]) == pytest.approx(0.0, abs=1e-12)
        assert list(rows[0]) == ["alpha", "phase", "concurrence"]

    def test_leakage_guard(self, capsys):
        code, _, err = run(
            capsys, "coherent-sweep", "--alpha-min", "3", "--alpha-max", "3", "--alpha-step", "1", "--truncation", "8"
        )
        assert code == 3
        assert "numerical guard" in err

    def test_grid_validation(self):
        assert len(alpha_grid(0, 3.5, 0.01)) == 351
        with pytest.raises(ValueError):
            alpha_grid(1, 0, 0.1)


class TestThermalRD:
    def test_columns_and_agreement(self, capsys):
        code, out, _ = run(capsys, "thermal-rd", "--v", "0.5,0.9", "--stages", "1,3")
        assert code == 0
        rows = rows_of(out)
        assert list(rows[0]) == ["v", "k", "D_formula", "D_sim", "target_D", "k_required_real", "k_required"]
        for r in rows:
            assert float(r["D_sim"]) == pytest.approx(float(r["D_formula"]), abs=1e-7)
        assert {r["k_required"] for r in rows if r["v"] == "0.9"} == {"6"}

    def test_alignment_guard(self, capsys):
        code, _, _ = run(capsys, "thermal-rd", "--v", "0.3", "--stages", "3", "--truncation", "60")
        assert code == 3


class TestRoundtrip:
    def test_zero_trials_pass(self, capsys):
        code, out, _ = run(capsys, "roundtrip", "--trials", "0")
        assert code == 0
        assert out == ""

    def test_seeded_suite_passes(self, capsys):
        code, out, _ = run(capsys, "roundtrip", "--seed", "1", "--stages", "2", "--trials", "50")
        assert code == 0
        rows = rows_of(out)
        assert len(rows) == 50
        assert all(r["result"] == "pass" for r in rows)
        assert max(float(r["additivity_defect"]) for r in rows) < 1e-9

    def test_deterministic_given_seed(self):
        a, _ = cmd_roundtrip(7, 3, 5, None, {})
        b, _ = cmd_roundtrip(7, 3, 5, None, {})
        assert a == b

    def test_failure_is_serialized_and_replays(self, capsys, tmp_path):
        dump = tmp_path / "fail.json"
        code, out, err = run(
            capsys, "roundtrip", "--seed", "3", "--trials", "2", "--tol", "additivity_defect=1e-300",
            "--failures", str(dump), "--format", "json",
        )
        assert code == 2
        failures = json.loads(dump.read_text())
        assert failures == json.loads(err)
        assert len(failures) >= 1
        code, out, err = run(
            capsys, "roundtrip", "--replay", str(dump), "--tol", "additivity_defect=1e-300", "--format", "json"
        )
        assert code == 2
        assert len(json.loads(out)) == len(failures)
        replayed = json.loads(err)
        assert [r["additivity_defect"] for r in replayed] == [f["additivity_defect"] for f in failures]
        assert [r["pairs"] for r in replayed] == [f["pairs"] for f in failures]

    def test_bad_tol_syntax(self, capsys):
        code, _, err = run(capsys, "roundtrip", "--trials", "1", "--tol", "oops")
        assert code == 1
        assert "KEY=VALUE" in err


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "entadc", "fig1", "--lambda", "0.5", "--stages", "1"],
        capture_output=True, text=True, check=True,
    )
    assert proc.stdout.startswith("lambda,k,")
