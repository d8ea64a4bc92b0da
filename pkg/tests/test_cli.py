import json
import subprocess
import sys
import textwrap

import numpy as np
import pytest

from ellipslice.cli import build_config, load_config, main, parse_config
from ellipslice.errors import ConfigError


def write_config(tmp_path, body, name="run.toml"):
    path = tmp_path / name
    path.write_text(textwrap.dedent(body))
    return str(path)


def read_chain(path):
    lines = path.read_text().splitlines()
    return lines[0], lines[1].split(","), np.loadtxt(path, delimiter=",", skiprows=2, ndmin=2)


CONSTANT_2D = """
    mode = "sample"
    seed = 11
    [model]
    dim = 2
    likelihood = { name = "constant" }
    [chain]
    n_steps = 1000
    n_chains = 2
"""


class TestConfig:
    def test_defaults(self):
        cfg = build_config({})
        assert cfg.mode == "sample" and cfg.variant == "reformulated"

    def test_hash_ignores_output_settings(self):
        a = build_config({"seed": 3})
        b = build_config({"seed": 3, "out_dir": "elsewhere", "threads": 4})
        c = build_config({"seed": 4})
        assert a.config_hash() == b.config_hash() != c.config_hash()

    def test_error_names_line_and_field(self):
        text = "seed = 1\n[chain]\nburn_in = 0\nn_steps = 0\n"
        with pytest.raises(ConfigError) as info:
            build_config(parse_config(text), text)
        assert info.value.line == 4 and info.value.field == "chain.n_steps"
        assert "line 4" in str(info.value)

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="unknown setting"):
            build_config({"chain": {"steps": 10}})

    def test_wrong_type(self):
        with pytest.raises(ConfigError, match="expected int"):
            build_config({"seed": "seven"})

    def test_bad_toml_reports_line(self):
        with pytest.raises(ConfigError) as info:
            parse_config("seed = 1\nmode = \n")
        assert info.value.line == 2

    @pytest.mark.parametrize("data", [
        {"mode": "train"},
        {"seed": -1},
        {"chain": {"n_steps": 10, "burn_in": 10}},
        {"chain": {"variant": "fast"}},
        {"model": {"dim": 2}, "chain": {"x0": [0.0]}},
        {"mode": "verify", "verify": {"tests": []}},
        {"mode": "verify", "verify": {"tests": ["nope"]}},
        {"bench": {"models": ["gp"]}},
    ])
    def test_rejected(self, data):
        with pytest.raises(ConfigError):
            build_config(data)

    def test_flag_overrides(self, tmp_path):
        path = write_config(tmp_path, CONSTANT_2D)
        cfg = load_config(path, {"seed": 99, "variant": "murray", "mode": None})
        assert cfg.seed == 99 and cfg.variant == "murray" and cfg.mode == "sample"


class TestSample:
    def test_outputs_are_byte_identical(self, tmp_path):
        path = write_config(tmp_path, CONSTANT_2D)
        assert main(["--config", path, "--out-dir", str(tmp_path / "a")]) == 0
        assert main(["--config", path, "--out-dir", str(tmp_path / "b"), "--threads", "2"]) == 0
        for name in ("chain_0.csv", "chain_1.csv", "summary.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
        assert (tmp_path / "a" / "chain_0.csv").read_bytes() != (tmp_path / "a" / "chain_1.csv").read_bytes()

    def test_constant_likelihood_one_iteration(self, tmp_path):
        path = write_config(tmp_path, CONSTANT_2D)
        assert main(["--config", path, "--out-dir", str(tmp_path)]) == 0
        summary = json.loads((tmp_path / "summary.json").read_text())
        assert summary["mean_shrink_iters"] == 1.0 and summary["cap_hits"] == 0
        header, cols, data = read_chain(tmp_path / "chain_0.csv")
        assert header == f"# config_hash={summary['config_hash']} seed=11"
        assert cols == ["step", "coord_0", "coord_1", "shrink_iters", "llh_evals", "cap_hit"]
        assert data.shape == (1000, 6) and (data[:, 3] == 1).all()

    def test_timing_kept_apart(self, tmp_path):
        path = write_config(tmp_path, CONSTANT_2D)
        main(["--config", path, "--out-dir", str(tmp_path)])
        assert "wall" not in (tmp_path / "summary.json").read_text()
        timing = json.loads((tmp_path / "timing.json").read_text())
        assert len(timing["chains"]) == 2

    def test_conjugate_posterior_moments(self, tmp_path):
        path = write_config(tmp_path, """
            seed = 2
            [model]
            dim = 1
            likelihood = { name = "gaussian", mean = [1.0], sigma = 1.0 }
            covariance = { kind = "spectral", eigenvalues = [1.0] }
            [chain]
            n_steps = 100000
            burn_in = 1000
        """)
        assert main(["--config", path, "--out-dir", str(tmp_path)]) == 0
        s = json.loads((tmp_path / "summary.json").read_text())
        assert 0.48 <= s["mean"][0] <= 0.52
        assert 0.47 <= s["variance"][0] <= 0.53

    def test_zero_steps_is_config_error(self, tmp_path, capsys):
        path = write_config(tmp_path, "[chain]\nn_steps = 0\n")
        assert main(["--config", path, "--out-dir", str(tmp_path)]) == 2
        assert "n_steps" in capsys.readouterr().err

    def test_bad_model_is_config_error(self, tmp_path):
        path = write_config(tmp_path, """
            [model]
            dim = 2
            likelihood = { name = "gaussian", mean = [1.0, 2.0, 3.0] }
        """)
        assert main(["--config", path, "--out-dir", str(tmp_path)]) == 2

    def test_unwritable_output_is_io_error(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("")
        path = write_config(tmp_path, CONSTANT_2D)
        assert main(["--config", path, "--out-dir", str(blocker / "sub")]) == 3

    def test_missing_config_is_io_error(self, tmp_path):
        assert main(["--config", str(tmp_path / "absent.toml")]) == 3


class TestVerify:
    SMALL = """
        mode = "verify"
        seed = 4
        [verify]
        tests = ["q_detailed_balance", "rotation_invariance", "termination_tail"]
        [verify.params.q_detailed_balance]
        n = 100000
        [verify.params.rotation_invariance]
        n = 20000
        [verify.params.termination_tail]
        n = 5000
    """

    def test_passes_and_writes_reports(self, tmp_path):
        path = write_config(tmp_path, self.SMALL)
        assert main(["--config", path, "--out-dir", str(tmp_path / "a")]) == 0
        summary = json.loads((tmp_path / "a" / "verify_summary.json").read_text())
        assert summary["overall"] == "pass" and summary["counts"]["pass"] == 3
        doc = json.loads((tmp_path / "a" / "termination_tail.json").read_text())
        assert doc["config_hash"] == summary["config_hash"] and doc["seed"] == 4
        assert "runtime_ms" not in doc

    def test_reports_reproducible(self, tmp_path):
        path = write_config(tmp_path, self.SMALL)
        main(["--config", path, "--out-dir", str(tmp_path / "a")])
        main(["--config", path, "--out-dir", str(tmp_path / "b"), "--threads", "3"])
        for name in ("q_detailed_balance.json", "rotation_invariance.json", "verify_summary.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_fault_injection_exits_one(self, tmp_path):
        path = write_config(tmp_path, self.SMALL)
        assert main(["--config", path, "--out-dir", str(tmp_path), "--fault-injection"]) == 1
        summary = json.loads((tmp_path / "verify_summary.json").read_text())
        assert summary["tests"]["q_detailed_balance"] == "fail"
        assert summary["tests"]["rotation_invariance"] == "fail"
        assert summary["tests"]["termination_tail"] == "pass"

    def test_empty_test_list(self, tmp_path):
        path = write_config(tmp_path, 'mode = "verify"\n[verify]\ntests = []\n')
        assert main(["--config", path, "--out-dir", str(tmp_path)]) == 2

    def test_unknown_parameter_line(self, tmp_path, capsys):
        path = write_config(tmp_path, """
            mode = "verify"
            [verify]
            tests = ["termination_tail"]
            [verify.params.termination_tail]
            samples = 10
        """)
        assert main(["--config", path, "--out-dir", str(tmp_path)]) == 2
        assert "line 6" in capsys.readouterr().err


class TestBench:
    BENCH = """
        mode = "bench"
        [bench]
        dims = [2, 16]
        n_steps = 200
    """

    def test_counts_and_determinism(self, tmp_path):
        path = write_config(tmp_path, self.BENCH)
        assert main(["--config", path, "--out-dir", str(tmp_path / "a")]) == 0
        assert main(["--config", path, "--out-dir", str(tmp_path / "b"), "--threads", "4"]) == 0
        a = (tmp_path / "a" / "bench.csv").read_text()
        assert a == (tmp_path / "b" / "bench.csv").read_text()
        rows = [line.split(",") for line in a.splitlines()[2:]]
        assert len(rows) == 4
        for model, dim, steps, evals, iters, caps in rows:
            if model == "constant":
                assert float(evals) == 1.0 and float(iters) == 1.0
            assert int(caps) == 0
        assert (tmp_path / "a" / "bench_timing.csv").exists()


def test_module_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "ellipslice", "--mode", "sample", "--out-dir", str(tmp_path),
                          "--seed", "3"], capture_output=True, text=True)
    assert out.returncode == 0, out.stderr
    assert (tmp_path / "chain_0.csv").exists()


def test_default_suite_passes(tmp_path):
    assert main(["--mode", "verify", "--out-dir", str(tmp_path)]) == 0
    summary = json.loads((tmp_path / "verify_summary.json").read_text())
    assert summary["counts"]["fail"] == 0 and len(summary["tests"]) == 15
