"""
Tests for the photon-audit command line
"""

import json

import pytest

from photon_audit.cli import run_cli
from photon_audit.parser import parse_scenario, print_scenario
from photon_audit.scenario_loader import builtin_scenario, get_scenario_loader

BS_SINGLE = """\
modes g0 g1
state |g0=1, g1=0>
step bs g0 g1
step measure g0 g1 as D
"""


@pytest.fixture
def cli(capsys, tmp_path):
    """Run the CLI against a settings file that does not exist unless a test writes it"""
    env = tmp_path / "settings.env"

    def invoke(*argv):
        code = run_cli(["--env", str(env), *argv])
        captured = capsys.readouterr()
        return code, captured.out, captured.err

    invoke.env = env
    return invoke


def scenario_file(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


class TestRun:
    def test_json_distribution(self, cli):
        code, out, err = cli("run", "--builtin", "epr-bs", "--json")
        assert code == 0
        assert err == ""
        data = json.loads(out)
        assert data["scenario"] == "epr-bs"
        assert [entry["p"] for entry in data["distribution"]] == [0.25] * 4
        assert data["distribution"][0]["record"] == {"D": "01", "W": "01"}
        assert data["discarded_weight"] == 0.0
        assert set(data["audits"][0]) == {"kind", "label", "value", "pass", "detail"}

    def test_json_is_byte_stable(self, cli):
        first = cli("run", "--builtin", "eraser-contingent", "--json")[1]
        second = cli("run", "--builtin", "eraser-contingent", "--json")[1]
        assert first == second
        assert first.endswith("}\n")

    def test_text_report(self, cli):
        code, out, _ = cli("run", "--builtin", "bs-single")
        assert code == 0
        assert "SCENARIO bs-single" in out
        assert "DISTRIBUTION (2)" in out
        assert "✓ cut-invariance D" in out

    def test_file_source(self, cli, tmp_path):
        path = scenario_file(tmp_path, "single.scn", BS_SINGLE)
        code, out, _ = cli("run", str(path), "--json")
        assert code == 0
        data = json.loads(out)
        assert data["scenario"] == "single"
        assert [entry["p"] for entry in data["distribution"]] == [0.5, 0.5]

    def test_missing_file(self, cli, tmp_path):
        missing = tmp_path / "missing.scn"
        code, out, err = cli("run", str(missing))
        assert code == 2
        assert out == ""
        assert "missing.scn" in err

    def test_malformed_file_gets_positioned_diagnostic(self, cli, tmp_path):
        path = scenario_file(tmp_path, "broken.scn", "modes a b\nstate |a=1, b=0>\nstep bs a\n")
        code, _, err = cli("run", str(path))
        assert code == 2
        assert err.startswith(f"{path}:3:10: expected mode name")

    def test_undecodable_file_gets_positioned_diagnostic(self, cli, tmp_path):
        path = tmp_path / "binary.scn"
        path.write_bytes(b"modes a\nstate |a=1>\n# caf\xff\n")
        code, out, err = cli("run", str(path))
        assert code == 2
        assert out == ""
        assert err.startswith(f"{path}:3:6: invalid UTF-8 byte 0xff")

    def test_semantic_error(self, cli, tmp_path):
        path = scenario_file(tmp_path, "bad.scn", "modes a b\nstate 0.5 |a=1, b=0>\n")
        code, _, err = cli("run", str(path))
        assert code == 2
        assert "unit-norm" in err

    def test_failed_audit_exits_one(self, cli, tmp_path):
        path = scenario_file(tmp_path, "wrong.scn", BS_SINGLE + "audit consistency D == 10 expect 0.3\n")
        code, out, _ = cli("run", str(path))
        assert code == 1
        assert "✗ consistency D == 10 expect 0.3" in out

    def test_tolerance_flag(self, cli, tmp_path):
        path = scenario_file(tmp_path, "loose.scn", BS_SINGLE + "audit consistency D == 10 expect 0.5001\n")
        assert cli("run", str(path))[0] == 1
        assert cli("run", str(path), "--tol", "1e-3")[0] == 0

    def test_condition(self, cli):
        code, out, _ = cli("run", "--builtin", "eraser-filtered", "--condition", "U == 01", "--json")
        assert code == 0
        data = json.loads(out)
        assert data["condition"] == "U == 01"
        assert data["discarded_weight"] == 0.5
        assert data["distribution"] == [{"p": 1.0, "record": {"D": "10", "U": "01"}}]

    def test_condition_selecting_nothing(self, cli):
        code, _, err = cli("run", "--builtin", "eraser-filtered", "--condition", "U == 11")
        assert code == 2
        assert "post-selection" in err

    def test_condition_on_unknown_record(self, cli):
        code, _, err = cli("run", "--builtin", "bs-single", "--condition", "X == 1")
        assert code == 2
        assert "'X'" in err

    def test_malformed_condition(self, cli):
        code, _, err = cli("run", "--builtin", "bs-single", "--condition", "D = 1")
        assert code == 2
        assert err.startswith("--condition:1:")

    def test_save(self, cli, tmp_path):
        out_dir = tmp_path / "results"
        assert cli("run", "--builtin", "epr-bs", "--save", str(out_dir))[0] == 0
        saved = json.loads((out_dir / "epr-bs.json").read_text(encoding="utf-8"))
        assert saved["metadata"]["tolerance_passed"] is True
        assert len(saved["distribution"]) == 4

    def test_sibling_scenario_files(self, cli, tmp_path):
        loader = get_scenario_loader()
        scenario_file(tmp_path, "whichpath.scn", loader.load_source("eraser-whichpath"))
        contingent = loader.load_source("eraser-contingent").replace(
            "audit no-signaling eraser-whichpath signal", "audit no-signaling whichpath.scn signal"
        )
        path = scenario_file(tmp_path, "contingent.scn", contingent)
        code, out, _ = cli("run", str(path), "--json")
        assert code == 0
        labels = [audit["label"] for audit in json.loads(out)["audits"]]
        assert "no-signaling whichpath.scn signal" in labels


class TestAudit:
    def test_retro_on_the_reverse_scenario(self, cli):
        code, out, _ = cli("audit", "--builtin", "penrose-reverse", "--kind", "retro", "--json")
        assert code == 0
        audits = json.loads(out)["audits"]
        assert audits[0]["value"] == 0.5
        assert audits[0]["pass"] is True
        assert {"config": {"G0": 1, "G1": 0, "g0": 0, "g1": 1}, "im": 0.0, "re": 0.707106781186548} in (
            audits[0]["detail"]["forbidden"]
        )

    def test_retro_text_report(self, cli):
        code, out, _ = cli("audit", "--builtin", "penrose-reverse", "--kind", "retro")
        assert code == 0
        assert "DISTRIBUTION" not in out
        assert "forbidden:" in out

    def test_explicit_projector(self, cli):
        code, out, _ = cli(
            "audit", "--builtin", "penrose-reverse", "--kind", "retro", "--projector", "gt=1, G1=1", "--json"
        )
        assert code == 0
        assert json.loads(out)["audits"][0]["value"] == 0.5

    def test_explicit_consistency_event(self, cli):
        code, out, _ = cli(
            "audit", "--builtin", "eraser-contingent", "--kind", "consistency",
            "--event", "D == 01 and U == 01", "--json",
        )
        assert code == 0
        assert json.loads(out)["audits"][0]["value"] == 0.0

    def test_declared_consistency_includes_forbids(self, cli):
        code, out, _ = cli("audit", "--builtin", "epr-bs-both", "--kind", "consistency", "--json")
        assert code == 0
        assert len(json.loads(out)["audits"]) == 4

    def test_default_cut_invariance_uses_every_deferable_step(self, cli, tmp_path):
        path = scenario_file(tmp_path, "plain.scn", BS_SINGLE)
        code, out, _ = cli("audit", str(path), "--kind", "cut-invariance", "--json")
        assert code == 0
        assert [a["label"] for a in json.loads(out)["audits"]] == ["cut-invariance 1"]

    def test_no_signaling_between_eraser_variants(self, cli):
        code, out, _ = cli(
            "audit", "--builtin", "eraser-contingent", "--kind", "no-signaling",
            "--other", "eraser-whichpath", "--wing", "signal", "--json",
        )
        assert code == 0
        assert json.loads(out)["audits"][0]["value"] <= 1e-12

    def test_consumed_record_fails_the_cut_audit(self, cli):
        code, out, _ = cli(
            "audit", "--builtin", "eraser-contingent", "--kind", "cut-invariance", "--step", "U", "--json"
        )
        assert code == 1
        audit = json.loads(out)["audits"][0]
        assert audit["value"] is None
        assert audit["pass"] is False
        assert "cannot be deferred" in audit["error"]

    def test_unreadable_other_file(self, cli):
        code, _, err = cli(
            "audit", "--builtin", "eraser-contingent", "--kind", "no-signaling",
            "--other", "gone/whichpath.scn", "--wing", "signal",
        )
        assert code == 2
        assert "cannot read scenario 'gone/whichpath.scn'" in err

    def test_missing_options(self, cli):
        code, _, err = cli("audit", "--builtin", "bs-single", "--kind", "no-signaling", "--wing", "signal")
        assert code == 2
        assert "--other" in err

    def test_nothing_declared(self, cli):
        code, _, err = cli("audit", "--builtin", "bs-single", "--kind", "filter-equivalence")
        assert code == 2
        assert "declares no filter-equivalence audit" in err

    def test_unknown_other_scenario(self, cli):
        code, _, err = cli(
            "audit", "--builtin", "eraser-contingent", "--kind", "no-signaling",
            "--other", "nowhere", "--wing", "signal",
        )
        assert code == 2
        assert "unknown scenario 'nowhere'" in err


class TestListAndFormat:
    def test_list(self, cli):
        code, out, _ = cli("list")
        assert code == 0
        assert out.split() == [
            "bs-single", "epr-bs", "epr-bs-both", "eraser-contingent",
            "eraser-filtered", "eraser-whichpath", "penrose-reverse",
        ]

    def test_fmt_round_trips(self, cli):
        code, out, _ = cli("fmt", "--builtin", "eraser-contingent")
        assert code == 0
        assert out == print_scenario(builtin_scenario("eraser-contingent"))
        assert parse_scenario(out) == builtin_scenario("eraser-contingent")

    def test_unknown_builtin(self, cli):
        code, _, err = cli("fmt", "--builtin", "unknown")
        assert code == 2
        assert "bs-single" in err and "penrose-reverse" in err


class TestUsage:
    def test_source_is_required(self, cli):
        code, _, err = cli("run")
        assert code == 2
        assert "--builtin" in err

    def test_file_and_builtin_together(self, cli, tmp_path):
        path = scenario_file(tmp_path, "single.scn", BS_SINGLE)
        assert cli("run", str(path), "--builtin", "bs-single")[0] == 2

    def test_unknown_subcommand(self, cli):
        assert cli("explode")[0] == 2

    def test_invalid_settings_file(self, cli):
        cli.env.write_text("PHOTON_AUDIT_TOLERANCE=abc\n", encoding="utf-8")
        code, _, err = cli("run", "--builtin", "bs-single")
        assert code == 2
        assert "invalid settings" in err

    def test_unknown_settings_key(self, cli):
        cli.env.write_text("PHOTON_AUDIT_SPEED=fast\n", encoding="utf-8")
        code, _, err = cli("list")
        assert code == 2
        assert "PHOTON_AUDIT_SPEED" in err

    def test_settings_file_tolerance(self, cli, tmp_path):
        path = scenario_file(tmp_path, "loose.scn", BS_SINGLE + "audit consistency D == 10 expect 0.5001\n")
        cli.env.write_text("PHOTON_AUDIT_TOLERANCE=1e-3\n", encoding="utf-8")
        assert cli("run", str(path))[0] == 0

    def test_verbose_progress_goes_to_stderr(self, cli):
        code, out, err = cli("-v", "run", "--builtin", "bs-single", "--json")
        assert code == 0
        assert "Loaded scenario 'bs-single'" in err
        assert json.loads(out)["scenario"] == "bs-single"
