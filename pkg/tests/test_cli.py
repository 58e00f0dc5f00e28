import json
import pathlib

from fivegsim.cli import main

DATA = pathlib.Path(__file__).parent / "data"


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_run_scenario_exit_zero_and_outcome(capsys):
    code, out, _ = run_cli(capsys, "run", "--scenario", "TS_05", "--seed", "42",
                           "--format", "json")
    assert code == 0
    payload = json.loads(out)
    assert payload["outcome"]["dos_persistent"] is True
    assert payload["seed"] == 42


def test_run_unknown_scenario_exits_2(capsys):
    code, _, err = run_cli(capsys, "run", "--scenario", "TS_99")
    assert code == 2
    assert "unknown scenario" in err


def test_run_with_mitigation_override(capsys):
    code, out, _ = run_cli(capsys, "run", "--scenario", "TS_05",
                           "--set", "signed_reject_enabled=true", "--seed", "42")
    assert code == 0
    assert json.loads(out)["outcome"]["dos_persistent"] is False


def test_unknown_override_rejected_before_execution(capsys):
    code, _, err = run_cli(capsys, "run", "--scenario", "TS_05",
                           "--set", "warp_drive=on")
    assert code == 2
    assert "warp_drive" in err


def test_expectation_pass_and_fail(capsys):
    code, _, _ = run_cli(capsys, "run", "--scenario", "TS_05", "--seed", "42",
                         "--expect", "dos_persistent=true")
    assert code == 0
    code, _, err = run_cli(capsys, "run", "--scenario", "TS_05", "--seed", "42",
                           "--expect", "dos_persistent=false")
    assert code == 1
    assert "expectation failed" in err


def test_run_outputs_deterministic(capsys):
    _, first, _ = run_cli(capsys, "run", "--scenario", "TS_07", "--seed", "3")
    _, second, _ = run_cli(capsys, "run", "--scenario", "TS_07", "--seed", "3")
    assert first == second


def test_list_scenarios_table(capsys):
    code, out, _ = run_cli(capsys, "list-scenarios")
    assert code == 0
    lines = out.strip().split("\n")
    assert len(lines) == 12
    assert lines[0].startswith("TS_01")
    ts04 = next(line for line in lines if line.startswith("TS_04"))
    assert "Probable" in ts04 and "High" in ts04


def test_list_scenarios_json(capsys):
    code, out, _ = run_cli(capsys, "list-scenarios", "--format", "json")
    assert code == 0
    records = json.loads(out)
    assert len(records) == 12
    ids = [r["id"] for r in records]
    assert ids == [f"TS_{i:02d}" for i in range(1, 13)]


def test_report_csv_thirteen_lines(capsys, tmp_path):
    out_file = tmp_path / "report.csv"
    code, _, _ = run_cli(capsys, "report", "--format", "csv",
                         "--out", str(out_file))
    assert code == 0
    assert len(out_file.read_text().strip().split("\n")) == 13


def test_report_markdown_grid(capsys):
    code, out, _ = run_cli(capsys, "report", "--format", "markdown")
    assert code == 0
    assert out.count("| **") == 5  # one row per likelihood level


def test_report_xml_unsupported(capsys):
    code, _, err = run_cli(capsys, "report", "--format", "xml")
    assert code == 2
    assert "unsupported format" in err


def test_gen_vectors_matches_checked_in_copy(capsys, tmp_path):
    out_file = tmp_path / "vectors.txt"
    code, _, _ = run_cli(capsys, "gen-vectors", "--out", str(out_file))
    assert code == 0
    assert out_file.read_text() == (DATA / "known_answers.txt").read_text()


def test_gen_vectors_repeatable(capsys, tmp_path):
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    run_cli(capsys, "gen-vectors", "--out", str(a))
    run_cli(capsys, "gen-vectors", "--out", str(b))
    assert a.read_bytes() == b.read_bytes()


def test_gen_vectors_write_failure_exits_1(capsys):
    code, _, err = run_cli(capsys, "gen-vectors", "--out",
                           "/nonexistent-dir/vectors.txt")
    assert code == 1
    assert "cannot write" in err


def test_registration_run_default_world(capsys):
    code, out, _ = run_cli(capsys, "run", "--scenario", "registration",
                           "--seed", "5")
    assert code == 0
    payload = json.loads(out)
    assert payload["outcomes"] == {"ue1": "registered"}
    assert payload["transcript_sha256"]


def test_registration_run_world_file(capsys, tmp_path):
    world_file = tmp_path / "world.ini"
    world_file.write_text("""
[world]
seed = 3

[policy]
nas_ciphering = true
suci_scheme = profile_b

[network home]
plmn = 00101

[cell cell-a]
network = home
strength = 10

[ue ue1]
network = home
msin = 5550001111
""")
    code, out, _ = run_cli(capsys, "run", "--scenario", "registration",
                           "--world", str(world_file))
    assert code == 0
    assert json.loads(out)["outcomes"]["ue1"] == "registered"


def test_world_file_parse_error_exits_3(capsys, tmp_path):
    bad = tmp_path / "bad.ini"
    bad.write_text("[cell orphan]\nnetwork = nowhere\n")
    code, _, err = run_cli(capsys, "run", "--scenario", "registration",
                           "--world", str(bad))
    assert code == 3
    assert "world file" in err


def test_missing_world_file_exits_3(capsys):
    code, _, _ = run_cli(capsys, "run", "--scenario", "registration",
                         "--world", "/does/not/exist.ini")
    assert code == 3


def test_transcript_export(capsys, tmp_path):
    transcript = tmp_path / "events.jsonl"
    code, _, _ = run_cli(capsys, "run", "--scenario", "registration",
                         "--seed", "1", "--transcript", str(transcript))
    assert code == 0
    lines = transcript.read_text().strip().split("\n")
    assert lines
    first = json.loads(lines[0])
    assert {"time", "seq", "channel", "src", "dst", "payload", "msg",
            "origin", "modified", "injected", "dropped"} <= set(first)


def test_scenario_override_file(capsys, tmp_path):
    override_file = tmp_path / "mitigations.ini"
    override_file.write_text("[policy]\nnas_ciphering = true\n")
    code, out, _ = run_cli(capsys, "run", "--scenario", "TS_06", "--seed", "3",
                           "--world", str(override_file))
    assert code == 0
    assert json.loads(out)["outcome"]["pei_captured"] is False
    # explicit --set wins over the file
    code, out, _ = run_cli(capsys, "run", "--scenario", "TS_06", "--seed", "3",
                           "--world", str(override_file),
                           "--set", "nas_ciphering=false")
    assert code == 0
    assert json.loads(out)["outcome"]["pei_captured"] is True
