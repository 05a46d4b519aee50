import json

import pytest

from sacovest.cli import load_config, main
from sacovest.errors import ParseError, ValidationError


def write_config(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


class TestLoadConfig:
    def test_minimal_with_defaults(self, tmp_path):
        path = write_config(tmp_path, {"command": "run", "problem": "l1quad",
                                       "n": 1000, "seed": 7})
        cfg = load_config(path)
        assert cfg.alpha == 0.51
        assert cfg.beta == pytest.approx(2.0 / 0.49)
        assert cfg.batch_c == 1.0
        assert cfg.level == 0.95
        assert cfg.k_s == 0 and cfg.delta == 0.5
        assert cfg.seed == 7 and cfg.n == 1000

    def test_beta_pairing_enforced(self, tmp_path):
        path = write_config(tmp_path, {"command": "run", "problem": "l1quad",
                                       "n": 10, "beta": 1.5, "alpha": 0.51})
        with pytest.raises(ValidationError, match="beta must exceed"):
            load_config(path)

    def test_unknown_problem_lists_ids(self, tmp_path):
        path = write_config(tmp_path, {"command": "run", "problem": "sudoku", "n": 10})
        with pytest.raises(ValidationError, match="boxqp, game, l1quad, parabola"):
            load_config(path)

    def test_unknown_keys_rejected(self, tmp_path):
        path = write_config(tmp_path, {"command": "run", "problem": "l1quad", "bogus": 1})
        with pytest.raises(ValidationError, match="bogus"):
            load_config(path)

    def test_malformed_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"command": "run",')
        with pytest.raises(ParseError, match="line"):
            load_config(str(path))

    def test_flags_override_file(self, tmp_path):
        path = write_config(tmp_path, {"command": "run", "problem": "l1quad",
                                       "n": 10, "seed": 1})
        cfg = load_config(path, {"seed": 99, "n": 25})
        assert cfg.seed == 99 and cfg.n == 25

    def test_n_grid_monotone(self, tmp_path):
        path = write_config(tmp_path, {"command": "rate", "problem": "l1quad",
                                       "n_grid": [100, 100]})
        with pytest.raises(ValidationError, match="strictly increasing"):
            load_config(path)

    def test_rate_needs_grid(self, tmp_path):
        path = write_config(tmp_path, {"command": "rate", "problem": "l1quad"})
        with pytest.raises(ValidationError, match="n_grid"):
            load_config(path)


class TestCommands:
    def test_run_emits_reports(self, tmp_path):
        cfg = write_config(tmp_path, {
            "command": "run", "problem": "l1quad", "n": 500, "seed": 11,
            "out_dir": str(tmp_path / "out")})
        assert main(["run", "--config", cfg]) == 0
        out = tmp_path / "out"
        trace = (out / "trace.csv").read_text().splitlines()
        assert trace[0] == "k,dist_to_star_sq,shadow_sq_dist"
        assert len(trace) > 1
        sig_rows = (out / "sigma_hat.csv").read_text().splitlines()
        assert len(sig_rows) == 6  # header + 5 rows
        summary = json.loads((out / "summary.json").read_text())
        assert summary["command"] == "run"
        assert summary["opnorm_error"] >= 0.0
        assert summary["sigma_truth_mode"] == "analytic"
        assert summary["config"]["seed"] == 11

    def test_byte_identical_reruns(self, tmp_path):
        cfg = write_config(tmp_path, {
            "command": "run", "problem": "boxqp", "n": 300, "seed": 5,
            "out_dir": str(tmp_path / "out")})
        assert main(["run", "--config", cfg]) == 0
        blobs1 = {f: (tmp_path / "out" / f).read_bytes()
                  for f in ("trace.csv", "sigma_hat.csv", "summary.json")}
        assert main(["run", "--config", cfg]) == 0
        blobs2 = {f: (tmp_path / "out" / f).read_bytes()
                  for f in ("trace.csv", "sigma_hat.csv", "summary.json")}
        assert blobs1 == blobs2

    def test_coverage_thread_invariance(self, tmp_path):
        doc = {"command": "coverage", "problem": "l1quad", "n": 400, "seed": 3,
               "reps": 6, "out_dir": str(tmp_path / "o1"), "threads": 1}
        cfg1 = write_config(tmp_path, doc, "c1.json")
        doc2 = dict(doc, out_dir=str(tmp_path / "o2"), threads=2)
        cfg2 = write_config(tmp_path, doc2, "c2.json")
        assert main(["coverage", "--config", cfg1]) == 0
        assert main(["coverage", "--config", cfg2]) == 0
        s1 = json.loads((tmp_path / "o1" / "summary.json").read_text())
        s2 = json.loads((tmp_path / "o2" / "summary.json").read_text())
        for key in ("coverage", "direction", "true_value"):
            assert s1[key] == s2[key]
        c1 = (tmp_path / "o1" / "coverage.csv").read_text()
        c2 = (tmp_path / "o2" / "coverage.csv").read_text()
        assert c1 == c2

    def test_rate_command(self, tmp_path):
        cfg = write_config(tmp_path, {
            "command": "rate", "problem": "l1quad", "n_grid": [200, 400, 800],
            "reps": 3, "seed": 2, "out_dir": str(tmp_path / "out")})
        assert main(["rate", "--config", cfg]) == 0
        rows = (tmp_path / "out" / "rate.csv").read_text().splitlines()
        assert rows[0] == "n,rep,opnorm_error"
        assert len(rows) == 1 + 9
        summary = json.loads((tmp_path / "out" / "summary.json").read_text())
        assert "rate_slope" in summary and "rate_r_squared" in summary

    def test_diagnose_parabola_flags_mc(self, tmp_path):
        cfg = write_config(tmp_path, {
            "command": "diagnose", "problem": "parabola", "n": 300, "seed": 1,
            "problem_overrides": {"mc_n": 256, "mc_reps": 40},
            "out_dir": str(tmp_path / "out")})
        assert main(["diagnose", "--config", cfg]) == 0
        summary = json.loads((tmp_path / "out" / "summary.json").read_text())
        assert summary["sigma_truth_mode"] == "monte_carlo_only"
        assert "shadow_slope" in summary

    def test_list_problems(self, capsys):
        assert main(["list-problems"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert sorted(doc) == ["boxqp", "game", "l1quad", "parabola"]
        assert doc["l1quad"]["lam"] == 1.0
        assert doc["boxqp"]["sigma"] == 0.2

    def test_flag_only_invocation(self, tmp_path):
        assert main(["run", "--problem", "boxqp", "--n", "100", "--seed", "4",
                     "--out-dir", str(tmp_path / "o")]) == 0
        assert (tmp_path / "o" / "summary.json").exists()


class TestExitCodes:
    def test_validation_error_is_one(self, tmp_path):
        cfg = write_config(tmp_path, {"command": "run", "problem": "nope", "n": 5})
        assert main(["run", "--config", cfg]) == 1

    def test_missing_config_is_one(self, tmp_path):
        assert main(["run", "--config", str(tmp_path / "absent.json")]) == 1

    def test_bad_usage_is_one(self, capsys):
        assert main(["frobnicate"]) == 1
        capsys.readouterr()

    def test_runtime_error_is_two(self, tmp_path):
        cfg = write_config(tmp_path, {
            "command": "run", "problem": "l1quad", "n": 400, "seed": 1,
            "eta": 1e9, "out_dir": str(tmp_path / "out")})
        assert main(["run", "--config", cfg]) == 2
