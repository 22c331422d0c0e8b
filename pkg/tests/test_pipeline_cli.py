"""Pipeline orchestration, prove-stage cache, and the CLI verbs."""

import json

import pytest

from specforge.cli import main
from specforge.pipeline import PipelineConfig, input_key, run_pipeline

from conftest import REPO_ROOT

UA_BUNDLE = str(REPO_ROOT / "fixtures" / "projects" / "UserAuth")
BANK_BUNDLE = str(REPO_ROOT / "fixtures" / "projects" / "BankAccount")


def _cfg(**kw):
    return PipelineConfig(deterministic=True, **kw)


def test_base_project_verifies_clean(tmp_path):
    result = run_pipeline(UA_BUNDLE, _cfg(), tmp_path / "out")
    assert result.report.bug_count == 0
    assert set(result.report.statuses.values()) == {"Verified"}
    assert (tmp_path / "out" / "report.txt").exists()
    index = json.loads(
        (tmp_path / "out" / "theorems.index.json").read_text())
    assert len(index) == 9  # 7 path theorems + 2 table properties


def test_variant_run_flags_the_seeded_bug(tmp_path):
    result = run_pipeline(BANK_BUNDLE, _cfg(variant="v3"), tmp_path / "out")
    assert [b["theoremId"] for b in result.report.bugs] == \
        ["BankAccount.Withdrawal.path3"]
    statuses = result.report.statuses
    assert statuses["BankAccount.Withdrawal.path3"] == "BugFound"
    verified = [k for k, v in statuses.items() if v == "Verified"]
    assert len(verified) == len(statuses) - 1


def test_cache_warm_rerun_matches_cold(tmp_path):
    cold = run_pipeline(UA_BUNDLE, _cfg(), tmp_path / "out")
    warm = run_pipeline(UA_BUNDLE, _cfg(), tmp_path / "out")
    assert not cold.cached and warm.cached
    assert warm.report == cold.report
    assert warm.attempt_records == cold.attempt_records


def test_cache_key_sensitive_to_config_not_workers(tmp_path):
    from pathlib import Path
    bundle = Path(UA_BUNDLE)
    base = input_key(bundle, _cfg())
    assert input_key(bundle, _cfg(workers=4)) == base
    assert input_key(bundle, _cfg(variant="v1")) != base
    assert input_key(bundle, _cfg(attempts=2)) != base


def test_deterministic_outputs_byte_identical(tmp_path):
    files = ("report.txt", "report.json", "attempts.jsonl",
             "theorems.index.json")
    run_pipeline(BANK_BUNDLE, _cfg(), tmp_path / "a")
    run_pipeline(BANK_BUNDLE, _cfg(), tmp_path / "b")
    for f in files:
        assert (tmp_path / "a" / f).read_bytes() == \
            (tmp_path / "b" / f).read_bytes(), f


def test_stop_after_gen_theorems(tmp_path):
    result = run_pipeline(BANK_BUNDLE, _cfg(), tmp_path / "out",
                          stop_after="gen-theorems")
    assert len(result.theorems) == 20
    assert result.negations == []
    assert not (tmp_path / "out" / "report.txt").exists()


def test_config_file_round_trip(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"attempts": 2, "deterministic": True}))
    config = PipelineConfig.from_file(path)
    assert config.attempts == 2 and config.deterministic
    path.write_text(json.dumps({"atempts": 2}))
    with pytest.raises(Exception, match="atempts"):
        PipelineConfig.from_file(path)


def test_cli_parse_verb(capsys):
    assert main(["parse", UA_BUNDLE]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["project"] == "UserAuth"
    assert data["apis"] == ["UserRegister", "UserLogin"]


def test_cli_deps_verb_json_lines(capsys):
    assert main(["deps", BANK_BUNDLE]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    edges = [json.loads(l) for l in lines[:-1]]
    assert {"kind": "ApiApi", "from": "Withdrawal",
            "to": "BalanceQuery"} in edges
    topo = json.loads(lines[-1])["topoOrder"]
    assert topo.index("Account") < topo.index("Transaction")


def test_cli_run_exit_codes(tmp_path, capsys):
    assert main(["run", UA_BUNDLE, "--deterministic",
                 "--out", str(tmp_path / "a")]) == 0
    assert main(["run", UA_BUNDLE, "--deterministic", "--variant", "v1",
                 "--out", str(tmp_path / "b")]) == 2
    assert main(["run", str(tmp_path / "missing"), "--deterministic",
                 "--out", str(tmp_path / "c")]) == 1
    err = capsys.readouterr().err
    assert "specforge: error:" in err


def test_cli_report_json_format(tmp_path, capsys):
    assert main(["report", BANK_BUNDLE, "--deterministic", "--format", "json",
                 "--out", str(tmp_path / "out")]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["project"] == "BankAccount"
    assert data["bugs"] == []
