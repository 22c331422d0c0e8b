#!/usr/bin/env python3
"""Freeze mock-runner fixtures under fixtures/toolchain/.

For every (project, variant) combination, this enumerates every file the
replay prover can possibly present to the runner (each theorem and its
negation, with either the bare `sorry` body or the corpus proof) and records
the check outcome the real toolchain would produce:

  - `sorry` body: success with a warning diagnostic
  - corpus proof, applicable to this implementation: clean success
  - corpus proof, not applicable (the injected bug breaks it): an
    "unsolved goals" error at the first tactic line

Keys match runner.check_key (workspace implementation hash + file content).
"""

from __future__ import annotations

import hashlib
import json
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from specforge.corpus import (apply_variant, list_variants, load_fixture,
                              load_variant)
from specforge.depgraph import analyze_dependencies
from specforge.leanemit import emit_project
from specforge.prover import apply_proof
from specforge.runner import scaffold, workspace_hash
from specforge.theoremgen import generate_theorems, negate_theorem


def load_corpus(name: str) -> dict[str, dict]:
    path = ROOT / "fixtures" / "proofs" / f"{name.lower()}.jsonl"
    entries = {}
    for line in path.read_text().splitlines():
        if line.strip():
            e = json.loads(line)
            entries[e["theoremId"]] = e
    return entries


def key_for(ws_hash: str, content: str) -> str:
    h = hashlib.sha256()
    h.update(ws_hash.encode())
    h.update(b"\0")
    h.update(content.encode())
    return h.hexdigest()[:32]


def proof_line(content: str) -> int:
    """1-based line number of the first tactic after `:= by`."""
    lines = content.splitlines()
    for i in range(len(lines) - 1, -1, -1):
        if lines[i].rstrip().endswith(":= by"):
            return i + 2
    return len(lines)


def result_entries(ws_hash: str, spec, corpus: dict, variant: str | None,
                   results: dict) -> None:
    rel = f"{spec.project}/Theorems/{spec.lean_name}.lean"
    sorry_content = apply_proof(spec.sourceText, "sorry")
    results[key_for(ws_hash, sorry_content)] = {
        "success": True,
        "diagnostics": [{
            "file": rel, "line": proof_line(sorry_content), "column": 2,
            "severity": "Warning", "message": "declaration uses 'sorry'",
        }],
        "rawOutput": f"{rel}:{proof_line(sorry_content)}:2: warning: "
                     "declaration uses 'sorry'",
    }
    entry = corpus.get(spec.id)
    if entry is None:
        return
    content = apply_proof(spec.sourceText, entry["proof"])
    if "applicableVariants" in entry:
        ok = variant in entry["applicableVariants"]
    else:
        ok = variant not in entry.get("inapplicableVariants", [])
    if ok:
        results[key_for(ws_hash, content)] = {
            "success": True, "diagnostics": [], "rawOutput": ""}
    else:
        line = proof_line(content)
        goal = "⊢ " + spec.conclusion.replace("\n", " ")[:100]
        message = f"unsolved goals\n{goal}"
        results[key_for(ws_hash, content)] = {
            "success": False,
            "diagnostics": [{
                "file": rel, "line": line, "column": 2,
                "severity": "Error", "message": message,
                "unsolvedGoal": goal,
            }],
            "rawOutput": f"{rel}:{line}:2: error: {message}",
        }


def main() -> None:
    out_dir = ROOT / "fixtures" / "toolchain"
    out_dir.mkdir(parents=True, exist_ok=True)
    for name in ("UserAuth", "BankAccount"):
        base = load_fixture(name)
        graph = analyze_dependencies(base)
        specs = generate_theorems(base, graph)
        corpus = load_corpus(name)
        for variant_id in [None, *list_variants(name)]:
            impl = (apply_variant(base, load_variant(name, variant_id))
                    if variant_id else base)
            modules, _ = emit_project(impl, graph)
            with tempfile.TemporaryDirectory() as tmp:
                ws = scaffold(modules, Path(tmp) / "ws", project_name=name)
                ws_hash = workspace_hash(ws)
            results: dict[str, dict] = {}
            for spec in specs:
                result_entries(ws_hash, spec, corpus, variant_id, results)
                result_entries(ws_hash, negate_theorem(spec), corpus,
                               variant_id, results)
            label = variant_id or "base"
            path = out_dir / f"{name}.{label}.json"
            path.write_text(json.dumps({"results": results}, indent=2,
                                       ensure_ascii=False, sort_keys=True)
                            + "\n")
            print(f"wrote {path} ({len(results)} entries)")


if __name__ == "__main__":
    main()
