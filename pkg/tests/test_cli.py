import csv
import json

import pytest

from mzqbc import cli, config as config_mod
from mzqbc.config import ConfigError, parse_config_text


HONEST_CFG = """\
# one honest session
builtin_code = extended_hamming
r = 11100000
R = 0.3
f = 0.0
epsilon = 0.5
seed = 42
alice = honest
commit_bit = 0
bob = honest
"""


def write_cfg(tmp_path, text, name="exp.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


class TestConfigParsing:
    def test_basic_parse(self):
        cfg = parse_config_text("a = 1\n# comment\nb= two words \n")
        assert cfg == {"a": "1", "b": "two words"}

    def test_duplicate_key_rejected(self):
        with pytest.raises(ConfigError, match="duplicate"):
            parse_config_text("a = 1\na = 2\n")

    def test_missing_equals_rejected(self):
        with pytest.raises(ConfigError, match="expected key"):
            parse_config_text("just words\n")

    def test_canonical_hash_is_order_independent(self):
        a = parse_config_text("x = 1\ny = 2\n")
        b = parse_config_text("y = 2\nx = 1\n")
        assert config_mod.config_hash(a) == config_mod.config_hash(b)

    def test_typed_getters(self):
        cfg = {"n": "5", "x": "0.25", "flag": "true", "grid": "1, 2,3"}
        assert config_mod.get_int(cfg, "n") == 5
        assert config_mod.get_float(cfg, "x") == 0.25
        assert config_mod.get_bool(cfg, "flag") is True
        assert config_mod.get_int_list(cfg, "grid") == [1, 2, 3]
        with pytest.raises(ConfigError, match="missing required"):
            config_mod.get_int(cfg, "absent")
        with pytest.raises(ConfigError, match="expected integer"):
            config_mod.get_int(cfg, "x")


class TestRun:
    def test_honest_session(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, HONEST_CFG)
        out = tmp_path / "transcript.json"
        assert cli.main(["run", "--config", cfg, "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert doc["n_mismatch"] == 0
        assert doc["alice_verdict"] == "continue"
        assert doc["unveil"] == "accept"
        assert doc["seed"] == 42
        assert "config_hash" in doc
        summary = capsys.readouterr().err
        assert "accept" in summary

    def test_byte_identical_reruns(self, tmp_path):
        cfg = write_cfg(tmp_path, HONEST_CFG)
        out1, out2 = tmp_path / "a.json", tmp_path / "b.json"
        cli.main(["run", "--config", cfg, "--out", str(out1)])
        cli.main(["run", "--config", cfg, "--out", str(out2)])
        assert out1.read_bytes() == out2.read_bytes()

    def test_zero_r_is_config_error(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, "builtin_code = extended_hamming\nr = 00000000\n")
        assert cli.main(["run", "--config", cfg]) == 2
        assert "nonzero" in capsys.readouterr().err

    def test_guard_violation_exit_code(self, tmp_path, capsys):
        rows = "\n".join("0" * i + "1" + "0" * (25 - i) for i in range(25))
        gen = tmp_path / "big.txt"
        gen.write_text(rows + "\n")
        cfg = write_cfg(tmp_path, f"code_file = {gen}\nr = {'1'*26}\n")
        assert cli.main(["run", "--config", cfg]) == 3
        assert "guard" in capsys.readouterr().err

    def test_midpoint_cheat_run(self, tmp_path):
        text = HONEST_CFG.replace("alice = honest", "alice = midpoint_cheat").replace(
            "f = 0.0", "f = 0.5"
        )
        cfg = write_cfg(tmp_path, text)
        out = tmp_path / "cheat.json"
        assert cli.main(["run", "--config", cfg, "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert doc["committed_b"] is None
        assert doc["unveil"] in (
            "accept", "reject_intercept_mismatch",
        )


class TestSweep:
    def test_grid_rows_and_columns(self, tmp_path, capsys):
        cfg = write_cfg(
            tmp_path,
            "f_grid = 0, 0.25, 0.5\nbuiltin_code = extended_hamming\n"
            "r = 11100000\ntrials = 2000\nseed = 1\n",
        )
        assert cli.main(["sweep", "--config", cfg]) == 0
        rows = list(csv.DictReader(capsys.readouterr().out.splitlines()))
        assert len(rows) == 3
        assert rows[0]["photon_ratio"] == "10.0"
        assert "predicted_escape" in rows[0]
        assert "config_hash" in rows[0]
        # accept rate column sits next to its prediction
        header = list(rows[0])
        assert header.index("predicted_escape") == header.index("cheat_accept_rate") + 1

    def test_empty_grid_is_error(self, tmp_path):
        cfg = write_cfg(tmp_path, "f_grid = ,\n")
        assert cli.main(["sweep", "--config", cfg]) == 2


class TestStrategies:
    def test_table_values(self, capsys):
        assert cli.main(["strategies"]) == 0
        rows = list(csv.DictReader(capsys.readouterr().out.splitlines()))
        assert len(rows) == 9 * 3 * 2
        by_key = {(r["strategy"], r["R"], r["bit"]): float(r["detection_prob"]) for r in rows}
        assert by_key[("blind_guess_on_time", "0.3", "0")] == pytest.approx(0.5)
        assert by_key[("full_measure_late", "0.3", "1")] == pytest.approx(1.0)
        assert by_key[("single_channel", "0.2", "0")] == pytest.approx(0.2, abs=1e-12)


class TestNogo:
    def test_report_fields(self, tmp_path):
        out = tmp_path / "nogo.json"
        assert cli.main(["nogo", "--out", str(out), "--trials", "5"]) == 0
        doc = json.loads(out.read_text())
        assert doc["code"] == "(3,1,3)"
        assert doc["max_deviation"] <= 1e-9
        assert doc["posteriors"]["no_knowledge"] == [0.5, 0.5]
        assert doc["overlaps"]["reduced_overlap"] == pytest.approx(0.0, abs=1e-12)


class TestCounterfactual:
    def test_json_report(self, tmp_path):
        cfg = write_cfg(
            tmp_path,
            "builtin_code = extended_hamming\nr = 11100000\nf = 0.25\n"
            "M = 50\nsessions = 10\nseed = 2\n",
        )
        out = tmp_path / "attack.json"
        assert cli.main(["counterfactual", "--config", cfg, "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert set(doc["reports"]) == {"defense_off", "defense_on"}
        assert doc["reports"]["defense_off"]["mode_accuracy"] >= 0.99

    def test_csv_grid(self, capsys):
        assert cli.main(["counterfactual", "--format", "csv"]) == 0
        rows = list(csv.DictReader(capsys.readouterr().out.splitlines()))
        assert len(rows) == 4 * 13
        assert all(float(r["Dc_intercept"]) == 0.0 for r in rows)


class TestVerify:
    def test_pristine_build_passes(self, capsys):
        assert cli.main(["verify"]) == 0
        out = capsys.readouterr().out
        assert out.count("PASS") == 5
        assert "FAIL" not in out

    def test_perturbed_convention_fails(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, "perturb_bs = true\n")
        assert cli.main(["verify", "--config", cfg]) == 1
        out = capsys.readouterr().out
        assert "FAIL mz_determinism" in out

    def test_tolerance_override_echoed(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, "tol_mz = 1e-20\n")
        assert cli.main(["verify", "--config", cfg]) == 1
        out = capsys.readouterr().out
        assert "tol=1e-20" in out
