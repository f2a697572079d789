import json

import numpy as np
import pytest

from qtanner.cli import main
from qtanner.harness import ExperimentSpec
from qtanner.qtcfile import import_code


@pytest.fixture()
def z4(tmp_path):
    path = tmp_path / "z4.qtc"
    assert main(["construct", "--group", "cyclic:4", "--delta", "3", "--ca", "rep3", "--mode", "tuple", "--seed", "7", "--out", str(path)]) == 0
    return path


def sim(tmp_path, *extra):
    return main(["simulate", "--max-trials", "60", "--batch-size", "20", "--out", str(tmp_path / "res"), *extra])


class TestConstruct:
    def test_appendix_instance(self, z4, capsys):
        code = import_code(z4)
        assert (code.n, code.k) == (36, 8)
        assert code.meta["cb"] == "dual(rep3)"

    def test_z7(self, tmp_path, capsys):
        out = tmp_path / "z7.qtc"
        assert main(["construct", "--group", "cyclic:7", "--ca", "rand_eq6", "--seed", "7", "--out", str(out)]) == 0
        assert "n=252" in capsys.readouterr().out

    def test_tnc_violation_exit_code(self, tmp_path, capsys):
        rc = main(["construct", "--group", "cyclic:8", "--ca", "hamming74", "--mode", "quotient", "--out", str(tmp_path / "x.qtc")])
        assert rc == 2
        assert "TNC violated" in capsys.readouterr().err

    def test_delta_mismatch_is_config_error(self, tmp_path):
        assert main(["construct", "--group", "cyclic:4", "--delta", "4", "--out", str(tmp_path / "x.qtc")]) == 4

    def test_validate_and_import(self, z4, tmp_path, capsys):
        assert main(["validate", str(z4)]) == 0
        assert "CSS check: pass" in capsys.readouterr().out
        out = tmp_path / "copy.qtc"
        assert main(["import", str(z4), "--out", str(out)]) == 0
        assert out.read_text() == z4.read_text()

    def test_validate_flags_broken_code(self, z4, tmp_path):
        text = z4.read_text().replace("HX\n0 1 2 30 31 32\n", "HX\n0\n")
        bad = tmp_path / "bad.qtc"
        bad.write_text(text)
        assert main(["validate", str(bad)]) == 2

    def test_malformed_file(self, tmp_path):
        bad = tmp_path / "bad.qtc"
        bad.write_text("META\nn=2\nHX\n0 5\n")
        assert main(["validate", str(bad)]) == 4


class TestSimulate:
    def test_runs_and_is_repeatable(self, z4, tmp_path, capsys):
        args = ["--code", str(z4), "--p", "0.03,0.06", "--decoder", "lead-bl-bo", "--alpha", "0.01", "--stem", "a"]
        assert sim(tmp_path, *args) == 0
        first = (tmp_path / "res" / "a.csv").read_bytes()
        assert sim(tmp_path, *args, "--force", "--stem", "b") == 0
        assert (tmp_path / "res" / "b.csv").read_bytes() == first
        assert b"lead-bl-bo@alpha=0.01" in first

    def test_dump_config_round_trip(self, z4, tmp_path, capsys):
        assert sim(tmp_path, "--code", str(z4), "--p", "0.01,0.02", "--seed", "5", "--dump-config") == 0
        dumped = capsys.readouterr().out
        spec = ExperimentSpec.from_dict(json.loads(dumped))
        assert spec.p_grid == (0.01, 0.02) and spec.master_seed == 5
        cfg = tmp_path / "cfg.json"
        cfg.write_text(dumped)
        assert main(["simulate", "--config", str(cfg), "--dump-config"]) == 0
        assert ExperimentSpec.from_dict(json.loads(capsys.readouterr().out)) == spec

    def test_flags_override_config(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"code": {"group": "cyclic:4", "seed": 7}, "p_grid": [0.1], "alpha": 0.5, "decoder": "lead-bl-bo"}))
        assert main(["simulate", "--config", str(cfg), "--alpha", "0.2", "--dump-config"]) == 0
        data = json.loads(capsys.readouterr().out)
        assert data["alpha"] == 0.2 and data["p_grid"] == [0.1]

    def test_workers_env(self, z4, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("QTANNER_WORKERS", "3")
        assert sim(tmp_path, "--code", str(z4), "--dump-config") == 0
        assert json.loads(capsys.readouterr().out)["workers"] == 3

    @pytest.mark.parametrize(
        "extra",
        [["--p", "1.5"], ["--p", "abc"], ["--decoder", "nope"], ["--max-trials", "0"], []],
    )
    def test_config_errors_exit_4(self, z4, tmp_path, extra):
        args = extra if extra == [] else ["--code", str(z4), *extra]
        try:
            rc = sim(tmp_path, *args)
        except SystemExit as exc:
            rc = exc.code
        assert rc == 4

    def test_unknown_subcommand(self):
        with pytest.raises(SystemExit) as info:
            main(["frobnicate"])
        assert info.value.code == 4


class TestAnalyze:
    def _write(self, path, rows):
        path.write_text("".join(json.dumps(r) + "\n" for r in rows))

    def _rec(self, p, failures, trials, decoder, code="c"):
        return {
            "code": code, "decoder": decoder, "p": p, "seed": 0, "trials": trials, "failures": failures,
            "failures_x": 0, "failures_z": 0, "logical_x": 0, "logical_z": 0, "decode_fail_x": 0, "decode_fail_z": 0,
            "ler": failures / trials, "ci_lo": 0.0, "ci_hi": 1.0, "avg_normalized_iterations": 1.0,
            "avg_global_iterations": 1.0, "subcode_fer": None, "max_trials": trials, "min_failures": 1,
        }

    def test_gain_rows(self, tmp_path, capsys):
        base, lead = tmp_path / "b.jsonl", tmp_path / "l.jsonl"
        self._write(base, [self._rec(0.01, 72, 100000, "bp-osd"), self._rec(0.02, 5, 100, "bp-osd")])
        self._write(lead, [self._rec(0.01, 17, 1000000, "lead"), self._rec(0.02, 0, 100, "lead")])
        out = tmp_path / "gain.csv"
        assert main(["analyze", str(base), str(lead), "--out", str(out)]) == 0
        rows = out.read_text().splitlines()
        assert rows[0] == "p,delta_log,subcode_fer"
        assert abs(float(rows[1].split(",")[1]) - 1.6268) < 1e-4
        assert rows[2].split(",")[1] == "inf?"
        assert "LEAD better" in capsys.readouterr().out

    def test_identical_inputs(self, tmp_path, capsys):
        base = tmp_path / "b.jsonl"
        self._write(base, [self._rec(0.01, 7, 100, "x"), self._rec(0.02, 9, 100, "x")])
        assert main(["analyze", str(base), str(base)]) == 0
        rows = capsys.readouterr().out.strip().splitlines()[-2:]
        assert [float(r.split(",")[1]) for r in rows] == [0.0, 0.0]

    def test_grid_mismatch_exit_3(self, tmp_path):
        base, lead = tmp_path / "b.jsonl", tmp_path / "l.jsonl"
        self._write(base, [self._rec(0.01, 7, 100, "x")])
        self._write(lead, [self._rec(0.02, 7, 100, "y")])
        assert main(["analyze", str(base), str(lead)]) == 3


class TestDecodeOne:
    def test_single_error(self, z4, tmp_path, capsys):
        code = import_code(z4)
        e = np.zeros(code.n, dtype=np.uint8)
        e[4] = 1
        syn = tmp_path / "s.txt"
        syn.write_text("".join(map(str, code.hx.mul_dense(e))))
        for dec in ("lead-bl-bo", "bp-osd"):
            assert main(["decode-one", "--code", str(z4), "--syndrome", str(syn), "--side", "z", "--decoder", dec]) == 0
            out = capsys.readouterr().out
            assert "converged: True" in out and "estimate: 4" in out

    def test_bad_syndrome_length(self, z4, tmp_path):
        syn = tmp_path / "s.txt"
        syn.write_text("0101")
        assert main(["decode-one", "--code", str(z4), "--syndrome", str(syn)]) == 4
