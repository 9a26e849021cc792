"""Command-line tests: bootstrap, scenario runs, audits, exit codes."""

from __future__ import annotations

import json
import random
from pathlib import Path

import pytest
from click.testing import CliRunner

from microcred.cli import main

from chainmut import enumerate_leaves, mutate_one_field
from conftest import build_platform, certify_course, enroll

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"


@pytest.fixture()
def runner():
    return CliRunner()


def invoke(runner, *args):
    return runner.invoke(main, [str(arg) for arg in args])


def test_consortium_init_reports_the_roster(runner, tmp_path):
    target = tmp_path / "consortium"
    result = invoke(
        runner,
        "consortium", "init",
        "--institutions", "uni-a,uni-b,uni-c,uni-d",
        "--data-dir", target,
    )
    assert result.exit_code == 0, result.output
    assert result.stdout.splitlines() == [
        f"consortium initialized at {target}",
        "institutions: uni-a, uni-b, uni-c, uni-d",
        "members: 4",
        "quorum: 3",
    ]
    assert (target / "membership.json").exists()

    again = invoke(
        runner, "consortium", "init", "--institutions", "uni-a", "--data-dir", target
    )
    assert again.exit_code == 1
    assert "error conflict: refusing to overwrite" in again.stderr


def test_workflow_scenario_runs_end_to_end(runner):
    result = invoke(runner, "scenario", "run", SCENARIOS / "e2e_workflow.json")
    assert result.exit_code == 0, result.output
    lines = result.stdout.splitlines()
    assert lines[0] == "register alice → Student @ uni-a"
    assert lines[-1] == "scenario ok (13 actions)"
    assert "wallet alice → 1 token(s): course-101" in lines
    assert any(line.startswith("certify sub-0001-") for line in lines)
    assert "grant req-0001 → Granted course-201 for alice" in lines
    assert any(
        line.startswith("audit → chain valid (2 blocks), store clean")
        for line in lines
    )


def test_rejected_certification_scenario_expects_the_error(runner):
    result = invoke(
        runner, "scenario", "run", SCENARIOS / "rejected_certification.json"
    )
    assert result.exit_code == 0, result.output
    lines = result.stdout.splitlines()
    assert "certify → error application_rejected: Application Rejected !!!" in lines
    assert "wallet bob → 0 token(s): -" in lines
    assert any(line.startswith("audit → chain valid (0 blocks)") for line in lines)
    assert lines[-1] == "scenario ok (6 actions)"


def test_consensus_scenario_emits_trace_and_summary(runner):
    result = invoke(runner, "scenario", "run", SCENARIOS / "byzantine_equivocate.json")
    assert result.exit_code == 0, result.output
    *trace_lines, summary = result.stdout.splitlines()
    assert summary == "simulation ok: 8/10 approved, divergences 0"
    events = [json.loads(line) for line in trace_lines]
    assert events[0]["event"] == "scenario"
    assert events[0]["institutions"] == ["uni-a", "uni-b", "uni-c", "uni-d"]
    kinds = {event["event"] for event in events}
    assert {"scenario", "propose", "send", "outcome", "final_state"} <= kinds
    outcomes = [e for e in events if e["event"] == "outcome"]
    assert len(outcomes) == 10
    assert sum(1 for o in outcomes if o["decision"] == "Approved") == 8


def test_scenario_file_without_a_recognised_shape_fails(runner, tmp_path):
    bogus = tmp_path / "bogus.json"
    bogus.write_text('{"kind": "mystery"}', encoding="utf-8")
    result = invoke(runner, "scenario", "run", bogus)
    assert result.exit_code == 1
    assert (
        "error validation_error: scenario file needs either an 'actions' "
        "or a 'transactions' list" in result.stderr
    )


def test_workflow_assertion_failures_exit_with_validation_code(runner, tmp_path):
    scenario = {
        "institutions": ["uni-a", "uni-b", "uni-c", "uni-d"],
        "actions": [
            {"op": "register", "name": "zoe", "institution": "uni-a"},
            {"op": "wallet", "student": "zoe", "expect_tokens": 1},
        ],
    }
    path = tmp_path / "failing.json"
    path.write_text(json.dumps(scenario), encoding="utf-8")
    result = invoke(runner, "scenario", "run", path)
    assert result.exit_code == 1
    assert "scenario failed: action 2 (wallet)" in result.stderr


def test_chain_audit_accepts_a_clean_chain_and_flags_tampering(runner, tmp_path):
    platform = build_platform(tmp_path / "consortium")
    certify_course(platform, enroll(platform, "alice"))
    chain_file = platform.data_dir / "chain.jsonl"
    membership_file = platform.data_dir / "membership.json"

    ok = invoke(runner, "chain", "audit", chain_file, "--membership", membership_file)
    assert ok.exit_code == 0, ok.output
    assert ok.stdout.strip() == "valid"

    blocks = [
        json.loads(line) for line in chain_file.read_text("utf-8").splitlines()
    ]
    leaf = enumerate_leaves(blocks)[0]
    mutated = mutate_one_field(blocks, leaf, random.Random(1))
    tampered = tmp_path / "tampered.jsonl"
    tampered.write_text(
        "".join(json.dumps(block) + "\n" for block in mutated), encoding="utf-8"
    )
    bad = invoke(runner, "chain", "audit", tampered, "--membership", membership_file)
    assert bad.exit_code == 2
    assert bad.stdout.startswith("invalid at height")


def test_store_audit_accepts_a_clean_store_and_flags_corruption(runner, tmp_path):
    platform = build_platform(tmp_path / "consortium")
    certify_course(platform, enroll(platform, "alice"))
    store_dir = platform.data_dir / "store"

    ok = invoke(runner, "store", "audit", store_dir)
    assert ok.exit_code == 0, ok.output
    assert ok.stdout.strip() == "valid"

    victim = next(
        path for path in sorted((store_dir / "objects").rglob("*")) if path.is_file()
    )
    blob = bytearray(victim.read_bytes())
    blob[0] ^= 0x01
    victim.write_bytes(bytes(blob))
    bad = invoke(runner, "store", "audit", store_dir)
    assert bad.exit_code == 2
    assert bad.stdout.startswith("invalid object ")


def test_workflow_data_dir_holds_auditable_state(runner, tmp_path):
    target = tmp_path / "wf"
    result = invoke(
        runner, "scenario", "run", SCENARIOS / "e2e_workflow.json",
        "--data-dir", target,
    )
    assert result.exit_code == 0, result.output
    chain_ok = invoke(
        runner, "chain", "audit", target / "chain.jsonl",
        "--membership", target / "membership.json",
    )
    assert chain_ok.exit_code == 0
    assert chain_ok.stdout.strip() == "valid"
    store_ok = invoke(runner, "store", "audit", target / "store")
    assert store_ok.exit_code == 0


def test_scenario_output_is_a_pure_function_of_file_and_seed(runner, tmp_path):
    first = invoke(
        runner, "scenario", "run", SCENARIOS / "e2e_workflow.json",
        "--data-dir", tmp_path / "one",
    )
    second = invoke(
        runner, "scenario", "run", SCENARIOS / "e2e_workflow.json",
        "--data-dir", tmp_path / "two",
    )
    assert first.exit_code == 0 and second.exit_code == 0
    assert first.stdout == second.stdout
    assert (tmp_path / "one" / "chain.jsonl").read_bytes() == (
        tmp_path / "two" / "chain.jsonl"
    ).read_bytes()

    sim_one = invoke(runner, "scenario", "run", SCENARIOS / "byzantine_equivocate.json")
    sim_two = invoke(runner, "scenario", "run", SCENARIOS / "byzantine_equivocate.json")
    assert sim_one.stdout == sim_two.stdout
