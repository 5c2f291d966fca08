import json
import subprocess
import sys

import numpy as np
import pytest

from mukit import scenarios
from mukit.cli import dumps, main

MODULES = {"core_spaces", "measures", "hull_solver", "mu_cert", "stability", "quantum_roof"}


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


def run_json(capsys, *argv):
    code, out = run(capsys, *argv, "--json")
    return code, json.loads(out)


class TestDumps:
    def test_seventeen_digits(self):
        assert dumps(0.1, None) == "0.10000000000000001"
        assert float(dumps(1 / 3, None)) == 1 / 3

    def test_numpy_and_nonfinite(self):
        text = dumps({"a": np.arange(3), "b": np.float64(0.5), "c": float("nan"),
                      "d": np.bool_(True), "e": 1 + 2j}, None)
        assert json.loads(text) == {"a": [0, 1, 2], "b": 0.5, "c": None, "d": True, "e": [1, 2]}

    def test_roundtrip_through_json(self):
        rng = np.random.default_rng(0)
        vals = rng.standard_normal(50).tolist()
        assert json.loads(dumps({"v": vals})) == {"v": vals}


class TestScenarioCommand:
    def test_list_covers_every_module(self, capsys):
        code, doc = run_json(capsys, "scenario", "list")
        assert code == 0 and doc["count"] >= 12
        assert {s["module"] for s in doc["scenarios"]} == MODULES

    def test_filter(self, capsys):
        _, doc = run_json(capsys, "scenario", "list", "--filter", "roof")
        assert doc["count"] >= 1
        assert {s["module"] for s in doc["scenarios"]} == {"quantum_roof"}

    def test_table_output(self, capsys):
        code, out = run(capsys, "scenario", "list")
        assert code == 0 and "lemma-2-ball-bound" in out

    def test_run_report_fields(self, capsys):
        code, doc = run_json(capsys, "scenario", "run", "lemma-2-ball-bound")
        assert code == 0
        assert set(doc) >= {"scenario", "inputs", "outputs", "tolerances", "pass", "elapsed_ms"}
        assert doc["outputs"]["r"] == 0.25

    def test_byte_identical_without_timing(self, capsys):
        argv = ("scenario", "run", "deltap-stability-split", "ext-rep-separator", "--json",
                "--no-timing", "--seed", "7")
        _, first = run(capsys, *argv)
        _, second = run(capsys, *argv)
        assert first == second and "elapsed_ms" not in first

    def test_failing_override_exits_one(self, capsys):
        code, doc = run_json(capsys, "scenario", "run", "lemma-2-ball-bound", "--param",
                             "norm=0.95")
        assert code == 1 and doc["pass"] is False

    def test_unknown_scenario_exits_two(self, capsys):
        code, doc = run_json(capsys, "scenario", "run", "no-such-thing")
        assert code == 2 and doc["error"] == "KeyError"

    def test_unknown_parameter_exits_two(self, capsys):
        code, _ = run_json(capsys, "scenario", "run", "lemma-2-ball-bound", "--param", "bogus=1")
        assert code == 2

    def test_parallel_matches_serial(self, capsys):
        names = ["lemma-2-ball-bound", "ext-rep-separator", "cone-pointed-example"]
        _, serial = run(capsys, "scenario", "run", *names, "--json", "--no-timing")
        _, par = run(capsys, "scenario", "run", *names, "--json", "--no-timing", "--parallel")
        assert serial == par

    def test_every_registered_scenario_has_expected_text(self):
        for s in scenarios.list_scenarios():
            assert s.expected and s.module in MODULES


class TestSubcommands:
    def test_hull(self, capsys):
        code, doc = run_json(capsys, "hull", "--set",
                             '{"family": "StandardTruncatedSimplex", "dim": 3}',
                             "--fn", "one_minus_norm", "--point", "[0.2, 0.3, 0.5]",
                             "--restarts", "2")
        assert code == 0 and abs(doc["outputs"]["value"]) <= 1e-9

    def test_lsc(self, capsys):
        code, doc = run_json(capsys, "lsc", "--N", "16", "--expect-gap", "1")
        assert code == 0 and doc["outputs"]["gap"] == pytest.approx(1.0, abs=1e-9)

    def test_lsc_wrong_expectation(self, capsys):
        code, _ = run_json(capsys, "lsc", "--N", "8", "--expect-gap", "0.5")
        assert code == 1

    def test_mucert_refute_deltap(self, capsys):
        code, doc = run_json(capsys, "mucert", "refute-deltap", "--r", "4", "--prefix", "10")
        w = doc["outputs"]["witness"]
        assert code == 0 and w["outside_mass"] == 1.0

    def test_mucert_refute_ap(self, capsys):
        code, doc = run_json(capsys, "mucert", "refute-ap", "--prefix", "5", "--dim", "5000")
        assert code == 0 and 1 / 3 < doc["outputs"]["witness"]["outside_mass"] < 2 / 3

    def test_mucert_certify(self, capsys):
        mu = json.dumps({"atoms": [[1, 0], [0, 1]], "weights": [0.5, 0.5]})
        code, doc = run_json(capsys, "mucert", "certify", "--x", "[0.5, 0.5]", "--mu", mu)
        assert code == 0 and doc["outputs"]["verdict"] == "Pass"

    def test_mucert_cube(self, capsys):
        code, doc = run_json(capsys, "mucert", "cube", "--rule", "geometric", "--dim", "100")
        assert code == 0 and doc["outputs"]["verdict"] == "compact"

    def test_mucert_cone(self, capsys):
        code, doc = run_json(capsys, "mucert", "cone", "--generators", "[[1, 0], [1, 1]]")
        assert code == 0 and doc["outputs"]["verdict"] == "pointed"

    def test_split(self, capsys):
        code, doc = run_json(capsys, "split", "--a", "[0.5, 0.1]", "--b", "[0.1, 0.3]",
                             "--z", "[0.3, 0.21]", "--eps", "0.2")
        assert code == 0 and doc["outputs"]["achieved_eps"] < 0.2

    def test_split_rejected(self, capsys):
        code, doc = run_json(capsys, "split", "--a", "[0.5, 0]", "--b", "[0, 0.5]",
                             "--z", "[0, 0]", "--eps", "0.1")
        assert code == 2

    def test_ballbound(self, capsys):
        code, doc = run_json(capsys, "ballbound", "--norm", "0.9", "--delta", "0.5",
                             "--trials", "5")
        assert code == 0 and doc["outputs"]["r"] == 0.25
        assert doc["outputs"]["max_outside_mass"] <= 0.75 + 1e-7

    def test_ballbound_precondition(self, capsys):
        code, _ = run_json(capsys, "ballbound", "--norm", "0.2", "--delta", "0.5")
        assert code == 2

    def test_probe_openness(self, capsys):
        code, doc = run_json(capsys, "probe-openness", "--set",
                             '{"family": "SimplexDeltaP", "dim": 2, "p": 2}',
                             "--a", "[0.4, 0.1]", "--b", "[0.1, 0.4]",
                             "--z-seq", "[[0.26, 0.25], [0.251, 0.25]]")
        assert code == 0 and len(doc["outputs"]["elements"]) == 2

    def test_cone(self, capsys):
        code, doc = run_json(capsys, "cone", "--generators", "[[1, 0, 0], [-1, 0, 0], [0, 1, 0]]")
        assert code == 0
        eq = doc["outputs"]["equivalence"]
        assert eq["agree"] and eq["in_pointed_cone"] is False

    def test_roof(self, capsys):
        s = 0.5 ** 0.5
        state = [[[s * s if i in (0, 3) and j in (0, 3) else 0.0, 0.0] for j in range(4)]
                 for i in range(4)]
        code, doc = run_json(capsys, "roof", "--state", json.dumps(state), "--dims", "2", "2",
                             "--restarts", "2")
        assert code == 0 and doc["outputs"]["upper_bound"] == pytest.approx(1.0, abs=1e-8)

    def test_state_from_file(self, capsys, tmp_path):
        path = tmp_path / "rho.json"
        path.write_text(json.dumps(np.diag([0.5, 0, 0, 0.5]).tolist()))
        code, doc = run_json(capsys, "roof", "--state", f"@{path}", "--dims", "2", "2",
                             "--restarts", "2")
        assert code == 0 and doc["outputs"]["upper_bound"] <= 1e-8


class TestGlobalFlags:
    def test_flag_position(self, capsys):
        _, before = run(capsys, "--seed", "3", "--no-timing", "ballbound", "--json")
        _, after = run(capsys, "ballbound", "--seed", "3", "--json", "--no-timing")
        assert before == after and '"seed": 3' in before

    def test_env_seed(self, capsys, monkeypatch):
        monkeypatch.setenv("MUKIT_SEED", "0x10")
        _, doc = run_json(capsys, "ballbound")
        assert doc["inputs"]["seed"] == 16

    def test_default_seed(self, capsys, monkeypatch):
        monkeypatch.delenv("MUKIT_SEED", raising=False)
        _, doc = run_json(capsys, "ballbound")
        assert doc["inputs"]["seed"] == 0x5EED

    def test_console_script(self):
        out = subprocess.run([sys.executable, "-m", "mukit.cli", "scenario", "run",
                              "lemma-2-ball-bound", "--json", "--no-timing"],
                             capture_output=True, text=True, check=False)
        assert out.returncode == 0 and json.loads(out.stdout)["pass"] is True
