"""Workspace scaffolding, diagnostic parsing, replay keys."""

import json

import pytest
from hypothesis import given, strategies as st

from specforge.errors import IoError, NoErrors, ReplayMiss
from specforge.leanemit import FormalModule, emit_project
from specforge.runner import (CheckResult, Diagnostic, MockRunner, check_key,
                              first_error_prefix, parse_diagnostics, scaffold,
                              workspace_hash)

from conftest import REPO_ROOT


def _mod(name, text="-- empty\n"):
    return FormalModule(name=name, kind="Table", sourceText=text)


def test_scaffold_layout(tmp_path):
    root = scaffold([_mod("Demo/Tables"), _mod("Demo/Api")], tmp_path / "w",
                    project_name="Demo")
    assert (root / "lakefile.toml").exists()
    assert (root / "lean-toolchain").read_text().startswith("leanprover/")
    assert "namespace Specforge" in (root / "Specforge.lean").read_text()
    assert (root / "Demo" / "Tables.lean").read_text() == "-- empty\n"
    manifest = json.loads((root / "workspace.json").read_text())
    assert manifest["implementationFiles"] == sorted(
        ["Demo/Tables.lean", "Demo/Api.lean", "Specforge.lean"])


def test_scaffold_rejects_duplicate_module(tmp_path):
    with pytest.raises(IoError):
        scaffold([_mod("A"), _mod("A")], tmp_path / "w")


def test_workspace_hash_tracks_implementation(tmp_path, bank, bank_graph):
    modules, _ = emit_project(bank, bank_graph)
    a = scaffold(modules, tmp_path / "a")
    b = scaffold(modules, tmp_path / "b")
    assert workspace_hash(a) == workspace_hash(b)
    (b / "BankAccount" / "Deposit.lean").write_text("-- tampered\n")
    assert workspace_hash(a) != workspace_hash(b)


def test_check_key_depends_on_workspace_and_file(tmp_path):
    a = scaffold([_mod("P/M", "-- v1\n")], tmp_path / "a")
    b = scaffold([_mod("P/M", "-- v2\n")], tmp_path / "b")
    thm = tmp_path / "thm.lean"
    thm.write_text("theorem t : True := trivial\n")
    ka, kb = check_key(a, thm), check_key(b, thm)
    assert ka != kb  # same theorem, different implementation
    thm.write_text("theorem t : 1 = 1 := rfl\n")
    assert check_key(a, thm) != ka


SAMPLE = """\
Demo/Api.lean:12:2: error: unsolved goals
⊢ countBy p rows = 3
Demo/Api.lean:4:0: warning: declaration uses 'sorry'
"""


def test_parse_sample_output():
    diags = parse_diagnostics(SAMPLE)
    assert len(diags) == 2
    err = next(d for d in diags if d.severity == "Error")
    assert (err.file, err.line, err.column) == ("Demo/Api.lean", 12, 2)
    assert "countBy p rows = 3" in err.message
    assert err.unsolvedGoal == "⊢ countBy p rows = 3"


@given(st.text(max_size=400))
def test_parse_total_on_arbitrary_text(text):
    diags = parse_diagnostics(text)
    for d in diags:
        assert d.severity in ("Error", "Warning")
        assert d.line >= 0 and d.column >= 0


def test_check_result_ordering_and_success():
    d1 = Diagnostic("b.lean", 3, 0, "Warning", "w")
    d2 = Diagnostic("a.lean", 9, 1, "Error", "e")
    res = CheckResult.build([d1, d2], 0.1, "")
    assert not res.success
    assert [d.file for d in res.diagnostics] == ["a.lean", "b.lean"]
    assert CheckResult.build([d1], 0.1, "").success


def test_first_error_prefix_splits_script():
    script = "intro h\nsimp [fn]\nomega"
    diags = [Diagnostic("f.lean", 2, 2, "Error", "unsolved goals\n⊢ False",
                        "⊢ False")]
    prefix, first, goal = first_error_prefix(script, diags)
    assert prefix == "intro h"
    assert first.line == 2
    assert goal == "⊢ False"


def test_first_error_prefix_requires_error():
    diags = [Diagnostic("f.lean", 1, 0, "Warning", "declaration uses sorry")]
    with pytest.raises(NoErrors):
        first_error_prefix("simp", diags)


def test_mock_runner_replays_frozen_results(tmp_path):
    ws = scaffold([_mod("P/M")], tmp_path / "w")
    thm = tmp_path / "t.lean"
    thm.write_text("example : True := trivial\n")
    key = check_key(ws, thm)
    fixture_dir = tmp_path / "fx"
    fixture_dir.mkdir()
    (fixture_dir / "demo.json").write_text(json.dumps({"results": {key: {
        "success": True, "diagnostics": [], "rawOutput": "ok"}}}))
    runner = MockRunner(fixture_dir)
    res = runner.check_file(ws, thm)
    assert res.success and res.rawOutput == "ok"
    thm.write_text("example : False := sorry\n")
    with pytest.raises(ReplayMiss):
        runner.check_file(ws, thm)


def test_bundled_fixtures_load():
    runner = MockRunner(REPO_ROOT / "fixtures" / "toolchain")
    assert len(runner.results) > 100
    assert any(not r.success for r in runner.results.values())
    assert any(r.success for r in runner.results.values())
