#!/usr/bin/env python3
"""Check every fixture proof against the real toolchain.

For each (project, variant) combination the proof corpus claims to cover,
emit the implementation, scaffold a workspace, write each proof into its
theorem file, and run the toolchain on it. Requires lake on PATH (or
SPECFORGE_LAKE); exits 3 with a note when the toolchain is missing.

Exit codes: 0 all proofs check, 1 at least one failure, 3 toolchain missing.
"""

from __future__ import annotations

import json
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from specforge.corpus import (apply_variant, list_variants, load_fixture,
                              load_variant)
from specforge.depgraph import analyze_dependencies
from specforge.errors import ToolchainMissing
from specforge.leanemit import emit_project
from specforge.prover import apply_proof
from specforge.runner import LeanCliRunner, scaffold
from specforge.theoremgen import generate_theorems, negate_theorem


def load_corpus(name: str) -> list[dict]:
    path = ROOT / "fixtures" / "proofs" / f"{name.lower()}.jsonl"
    return [json.loads(line) for line in path.read_text().splitlines()
            if line.strip()]


def jobs_for(name: str):
    """Yield (variantLabel, spec, proof) for every applicable combination."""
    base = load_fixture(name)
    graph = analyze_dependencies(base)
    specs = {s.id: s for s in generate_theorems(base, graph)}
    corpus = load_corpus(name)
    for variant_id in [None, *list_variants(name)]:
        batch = []
        for entry in corpus:
            tid = entry["theoremId"]
            if "applicableVariants" in entry:
                if variant_id not in entry["applicableVariants"]:
                    continue
                spec = negate_theorem(specs[tid.removesuffix(".neg")])
            else:
                if variant_id in entry.get("inapplicableVariants", []):
                    continue
                spec = specs[tid]
            batch.append((spec, entry["proof"]))
        impl = (apply_variant(base, load_variant(name, variant_id))
                if variant_id else base)
        yield variant_id or "base", impl, graph, batch


def main() -> int:
    runner = LeanCliRunner()
    if not runner.available():
        print("toolchain missing: install lake or set SPECFORGE_LAKE")
        return 3
    failures = []
    for name in ("UserAuth", "BankAccount"):
        for label, impl, graph, batch in jobs_for(name):
            modules, _ = emit_project(impl, graph)
            with tempfile.TemporaryDirectory() as tmp:
                ws = scaffold(modules, Path(tmp) / "ws", project_name=name)
                for spec, proof in batch:
                    file = ws / name / "Theorems" / f"{spec.lean_name}.lean"
                    file.parent.mkdir(parents=True, exist_ok=True)
                    file.write_text(apply_proof(spec.sourceText, proof))
                    try:
                        result = runner.check_file(ws, file)
                    except ToolchainMissing:
                        print("toolchain disappeared mid-run")
                        return 3
                    status = "ok" if result.success else "FAIL"
                    print(f"{name} {label} {spec.id}: {status}")
                    if not result.success:
                        failures.append(f"{name}/{label}/{spec.id}")
    if failures:
        print(f"{len(failures)} failing proofs:")
        for f in failures:
            print(f"  {f}")
        return 1
    print("corpus verified")
    return 0


if __name__ == "__main__":
    sys.exit(main())
