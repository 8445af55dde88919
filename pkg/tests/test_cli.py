"""CLI tests: pod lifecycle, exit codes, passphrase discipline, determinism."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from soda import cli, pod
from soda.sim import persona

PASSPHRASE = "correct-horse-gravel-ride"


@pytest.fixture(autouse=True)
def _env_passphrase(monkeypatch):
    monkeypatch.setenv(cli.PASSPHRASE_ENV, PASSPHRASE)
    monkeypatch.delenv(cli.NEW_PASSPHRASE_ENV, raising=False)


@pytest.fixture()
def pod_file(tmp_path) -> Path:
    target = tmp_path / "fixture.smp"
    assert cli.main(["pod", "create", "--out", str(target)]) == 0
    return target


# ------------------------------------------------------------ pod lifecycle


def test_create_and_inspect_masks_values(pod_file, capsys) -> None:
    assert cli.main(["pod", "inspect", str(pod_file)]) == 0
    out = capsys.readouterr().out
    assert "10 nodes" in out
    assert "assets.portfolio" in out
    assert "[sealed]" in out
    # No decrypted value may appear without --reveal.
    assert "sk-fixture" not in out
    assert "482000" not in out
    assert "Mira" not in out


def test_inspect_reveal_prints_values(pod_file, capsys) -> None:
    assert cli.main(["pod", "inspect", str(pod_file), "--reveal"]) == 0
    out = capsys.readouterr().out
    assert "sk-fixture-0000-demo" in out
    assert "[sealed]" not in out


def test_inspect_json_is_machine_readable(pod_file, capsys) -> None:
    assert cli.main(["pod", "inspect", str(pod_file), "--json"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["v"] == 1
    assert payload["log_count"] == 5
    paths = {node["field_path"] for node in payload["nodes"]}
    assert "credentials.api_key" in paths
    assert all(node["value"] == "[sealed]" for node in payload["nodes"])


def test_import_validates_pod(pod_file, capsys) -> None:
    assert cli.main(["pod", "import", str(pod_file)]) == 0
    assert "pod verified" in capsys.readouterr().out


def test_wrong_passphrase_exits_2(pod_file, monkeypatch, capsys) -> None:
    monkeypatch.setenv(cli.PASSPHRASE_ENV, "not the passphrase")
    assert cli.main(["pod", "import", str(pod_file)]) == cli.EXIT_AUTH
    assert "error:" in capsys.readouterr().err


def test_corrupt_pod_exits_3(tmp_path, capsys) -> None:
    target = tmp_path / "broken.smp"
    target.write_bytes(b"SMP1" + b"\x07" + b"rubble")
    assert cli.main(["pod", "import", str(target)]) == cli.EXIT_FORMAT


def test_export_rotates_passphrase(pod_file, tmp_path, monkeypatch) -> None:
    rotated = tmp_path / "rotated.smp"
    monkeypatch.setenv(cli.NEW_PASSPHRASE_ENV, "fresh-secret-two")
    assert cli.main(["pod", "export", str(pod_file), "--out", str(rotated)]) == 0
    with pytest.raises(pod.PodAuthenticationError):
        pod.mount(pod.import_pod(rotated), PASSPHRASE)
    session = pod.mount(pod.import_pod(rotated), "fresh-secret-two")
    try:
        assert session.log_count == 5
    finally:
        pod.unmount(session)


def test_migrate_current_format_is_noop(pod_file, tmp_path, capsys) -> None:
    copy = tmp_path / "copy.smp"
    assert cli.main(["pod", "migrate", str(pod_file), "--out", str(copy)]) == 0
    assert copy.read_bytes() == pod_file.read_bytes()
    assert "already at format v1" in capsys.readouterr().out


def test_migrate_unknown_version_exits_3(pod_file, tmp_path) -> None:
    data = bytearray(pod_file.read_bytes())
    data[4] = 9  # future format version
    target = tmp_path / "future.smp"
    target.write_bytes(bytes(data))
    assert cli.main(["pod", "migrate", str(target)]) == cli.EXIT_FORMAT


def test_create_from_profile_json(tmp_path, capsys) -> None:
    profile = tmp_path / "profile.json"
    profile.write_text(json.dumps({
        "attributes": [
            ["identity.legal_name", "identity.legal_name", "Ada Quill"],
            ["preferences.hobbies", "preferences.hobbies", ["chess", "kayaking"]],
        ],
        "logs": [{"text": "Reviewed the quarterly brief.", "timestamp": 3.0,
                  "tags": ["work"]}],
    }))
    target = tmp_path / "custom.smp"
    assert cli.main(["pod", "create", "--out", str(target),
                     "--profile", str(profile)]) == 0
    assert cli.main(["pod", "inspect", str(target), "--reveal"]) == 0
    out = capsys.readouterr().out
    assert "Ada Quill" in out
    assert "kayaking" in out
    assert "1 log entries" in out


@pytest.mark.parametrize("content", [
    "not json at all",
    '{"attributes": [["only-two", "items"]]}',
    '{"attributes": [["bad path!", "identity.contact", "x"]]}',
    '["not", "an", "object"]',
])
def test_malformed_profile_exits_4(tmp_path, content) -> None:
    profile = tmp_path / "profile.json"
    profile.write_text(content)
    assert cli.main(["pod", "create", "--out", str(tmp_path / "p.smp"),
                     "--profile", str(profile)]) == cli.EXIT_CONFIG


def test_missing_profile_exits_4(tmp_path) -> None:
    assert cli.main(["pod", "create", "--out", str(tmp_path / "p.smp"),
                     "--profile", str(tmp_path / "nope.json")]) == cli.EXIT_CONFIG


# ------------------------------------------------------ passphrase channels


def test_no_passphrase_option_exists_anywhere() -> None:
    # The passphrase must never be accepted on the command line.
    parsers = [cli.build_parser()]
    seen_options: list[str] = []
    while parsers:
        parser = parsers.pop()
        for action in parser._actions:
            seen_options.extend(action.option_strings)
            if hasattr(action, "choices") and isinstance(action.choices, dict):
                parsers.extend(action.choices.values())
    assert seen_options, "parser walk found no options"
    assert not [opt for opt in seen_options if "pass" in opt.lower()]


def test_prompted_passphrase_with_confirmation(tmp_path, monkeypatch) -> None:
    monkeypatch.delenv(cli.PASSPHRASE_ENV, raising=False)
    prompts: list[str] = []

    def scripted(prompt: str) -> str:
        prompts.append(prompt)
        return "typed-secret"

    monkeypatch.setattr("getpass.getpass", scripted)
    target = tmp_path / "prompted.smp"
    assert cli.main(["pod", "create", "--out", str(target)]) == 0
    assert prompts == ["Passphrase: ", "Confirm: "]
    session = pod.mount(pod.import_pod(target), "typed-secret")
    pod.unmount(session)


def test_mismatched_confirmation_exits_4(tmp_path, monkeypatch) -> None:
    monkeypatch.delenv(cli.PASSPHRASE_ENV, raising=False)
    answers = iter(["first-entry", "second-entry"])
    monkeypatch.setattr("getpass.getpass", lambda prompt: next(answers))
    assert cli.main(["pod", "create",
                     "--out", str(tmp_path / "p.smp")]) == cli.EXIT_CONFIG


def test_empty_env_passphrase_exits_4(pod_file, monkeypatch) -> None:
    monkeypatch.setenv(cli.PASSPHRASE_ENV, "")
    assert cli.main(["pod", "import", str(pod_file)]) == cli.EXIT_CONFIG


# ------------------------------------------------------------------- sim


def test_sim_unknown_scenario_exits_4(capsys) -> None:
    assert cli.main(["sim", "--rq", "9"]) == cli.EXIT_CONFIG


def test_sim_strict_repro_guard_exits_5(tmp_path) -> None:
    config = tmp_path / "scenario.json"
    config.write_text(json.dumps({"live_endpoint": "http://example.test"}))
    assert cli.main(["sim", "--rq", "2", "--config", str(config),
                     "--strict-repro"]) == cli.EXIT_STRICT_REPRO


def test_sim_prints_report(capsys) -> None:
    assert cli.main(["sim", "--rq", "2"]) == 0
    out = capsys.readouterr().out
    assert "arm" in out
    assert "manual" in out
    assert "delegated" in out


def test_sim_config_file_seed_override(tmp_path, capsys) -> None:
    config = tmp_path / "scenario.json"
    config.write_text(json.dumps({"seed": 7}))
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    assert cli.main(["sim", "--rq", "3", "--config", str(config),
                     "--seed", "42", "--out", str(out_a)]) == 0
    assert cli.main(["sim", "--rq", "3", "--seed", "42", "--out", str(out_b)]) == 0
    for name in ("trace.jsonl", "report.txt", "report.csv", "report.json",
                 "audit.jsonl"):
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes()


@pytest.mark.parametrize("rq", [1, 2, 3])
def test_sim_outputs_are_byte_identical_at_fixed_seed(tmp_path, rq) -> None:
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    assert cli.main(["sim", "--rq", str(rq), "--seed", "42", "--out", str(out_a)]) == 0
    assert cli.main(["sim", "--rq", str(rq), "--seed", "42", "--out", str(out_b)]) == 0
    names_a = sorted(p.name for p in out_a.iterdir())
    names_b = sorted(p.name for p in out_b.iterdir())
    assert names_a == names_b
    for name in names_a:
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes()


# ----------------------------------------------------------- verify-audit


def test_verify_audit_intact(tmp_path, capsys) -> None:
    assert cli.main(["sim", "--rq", "3", "--out", str(tmp_path)]) == 0
    capsys.readouterr()
    assert cli.main(["verify-audit", str(tmp_path / "audit.jsonl")]) == 0
    assert "intact (360 records)" in capsys.readouterr().out


def test_verify_audit_detects_tamper(tmp_path, capsys) -> None:
    assert cli.main(["sim", "--rq", "3", "--out", str(tmp_path)]) == 0
    target = tmp_path / "audit.jsonl"
    lines = target.read_text().splitlines()
    record = json.loads(lines[11])
    record["requested_fields"] = ["credentials.api_key"]
    lines[11] = json.dumps(record, sort_keys=True, separators=(",", ":"))
    target.write_text("\n".join(lines) + "\n")
    capsys.readouterr()
    assert cli.main(["verify-audit", str(target)]) == cli.EXIT_AUDIT_INVALID
    assert "broken at record 11" in capsys.readouterr().out


def test_verify_audit_rejects_non_audit_file(tmp_path) -> None:
    target = tmp_path / "noise.jsonl"
    target.write_text('{"seq": "nope"}\n')
    assert cli.main(["verify-audit", str(target)]) == cli.EXIT_FORMAT
    assert cli.main(["verify-audit", str(tmp_path / "missing.jsonl")]) == cli.EXIT_FORMAT


# ------------------------------------------------------------------ misc


def test_module_entrypoint_help(tmp_path) -> None:
    import subprocess
    import sys

    result = subprocess.run(
        [sys.executable, "-m", "soda.cli", "--help"],
        capture_output=True, text=True, timeout=30,
    )
    assert result.returncode == 0
    assert "gatectl" in result.stdout
    for command in ("pod", "sim", "serve", "verify-audit"):
        assert command in result.stdout
