"""End-to-end orchestration: parse, deps, emit, gen-theorems, prove,
negate, classify.

Stage artifacts are written under an output directory; the expensive proving
stage is cached on disk keyed by a content hash of the bundle, the variant,
the relevant configuration, and the pipeline version, so a rerun with
unchanged inputs replays frozen statuses instead of searching again.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

from . import __version__
from .corpus import FIXTURES_DIR, load_variant, apply_variant
from .depgraph import analyze_dependencies
from .errors import PipelineError, SpecforgeError
from .leanemit import emit_project
from .parser import parse_project
from .prover import (AttemptLog, Budget, ExamplePool, LlmConfig,
                     LlmProverBackend, ReplayProverBackend,
                     TacticLadderBackend, run_proof_search,
                     search_counterexamples)
from .report import CostLedger, VerificationReport, classify, render
from .runner import LeanCliRunner, MockRunner, scaffold
from .theoremgen import (TheoremSpec, generate_theorems, spec_from_json,
                         spec_to_json)


@dataclass(frozen=True)
class PipelineConfig:
    backend: str = "replay"  # replay | tactic | llm
    runner: str = "mock"  # mock | lean
    proofCorpus: str | None = None  # replay backend corpus (dir or file)
    toolchainFixtures: str | None = None  # mock runner fixture dir
    attempts: int = 5
    refinements: int = 8
    rounds: int = 3
    batch: int = 8
    fewshot: int = 3
    workers: int = 1
    seed: int = 0
    deterministic: bool = False
    variant: str | None = None
    pathCap: int = 256
    promptPrice: float = 0.0
    completionPrice: float = 0.0
    endpoint: str = ""
    model: str = ""
    temperature: float = 0.0

    @property
    def budget(self) -> Budget:
        return Budget(self.attempts, self.refinements, self.rounds,
                      self.batch, self.fewshot)

    @property
    def effective_workers(self) -> int:
        return 1 if self.deterministic else max(1, self.workers)

    @staticmethod
    def from_file(path: str | Path) -> "PipelineConfig":
        data = json.loads(Path(path).read_text())
        known = {f for f in PipelineConfig.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise SpecforgeError(f"unknown config keys: {sorted(unknown)}")
        return PipelineConfig(**data)


@dataclass
class PipelineResult:
    project_name: str
    report: VerificationReport
    theorems: list[TheoremSpec]
    negations: list[TheoremSpec]
    attempt_records: list[dict]
    out_dir: Path
    cached: bool


def _hash_dir(h, root: Path) -> None:
    for path in sorted(root.rglob("*")):
        if path.is_file():
            h.update(str(path.relative_to(root)).encode())
            h.update(b"\0")
            h.update(path.read_bytes())
            h.update(b"\0")


def input_key(bundle: Path, config: PipelineConfig) -> str:
    h = hashlib.sha256()
    h.update(__version__.encode())
    h.update(b"\0")
    _hash_dir(h, bundle)
    relevant = replace(config, workers=1)  # worker count never changes results
    h.update(json.dumps(relevant.__dict__, sort_keys=True).encode())
    return h.hexdigest()[:24]


def make_backend(config: PipelineConfig):
    if config.backend == "replay":
        corpus = Path(config.proofCorpus) if config.proofCorpus else \
            FIXTURES_DIR / "proofs"
        return ReplayProverBackend(corpus)
    if config.backend == "tactic":
        return TacticLadderBackend()
    if config.backend == "llm":
        return LlmProverBackend(LlmConfig(
            endpoint=config.endpoint, model=config.model,
            temperature=config.temperature))
    raise SpecforgeError(f"unknown backend {config.backend!r}")


def make_runner(config: PipelineConfig):
    if config.runner == "mock":
        fixtures = Path(config.toolchainFixtures) if config.toolchainFixtures \
            else FIXTURES_DIR / "toolchain"
        return MockRunner(fixtures)
    if config.runner == "lean":
        return LeanCliRunner()
    raise SpecforgeError(f"unknown runner {config.runner!r}")


def write_theorem_index(specs, negations, out_dir: Path) -> Path:
    theorems_dir = out_dir / "theorems"
    theorems_dir.mkdir(parents=True, exist_ok=True)
    index = []
    for spec in [*specs, *negations]:
        fname = f"{spec.lean_name}.lean"
        (theorems_dir / fname).write_text(spec.sourceText)
        index.append({
            "id": spec.id,
            "kind": spec.kind,
            "api": spec.api,
            "table": spec.table,
            "file": f"theorems/{fname}",
            "status": spec.status,
        })
    index.sort(key=lambda e: e["id"])
    path = out_dir / "theorems.index.json"
    path.write_text(json.dumps(index, indent=2, sort_keys=True) + "\n")
    return path


def run_pipeline(bundle: str | Path, config: PipelineConfig,
                 out_dir: str | Path = "specforge-out",
                 stop_after: str | None = None) -> PipelineResult:
    """Run the pipeline end to end (or up to `stop_after`, one of the CLI
    stage names)."""
    bundle = Path(bundle)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    def stage(name, fn):
        try:
            return fn()
        except SpecforgeError as exc:
            raise PipelineError(name, exc) from exc

    base = stage("parse", lambda: parse_project(bundle))
    graph = stage("deps", lambda: analyze_dependencies(base))
    if stop_after in ("parse", "deps"):
        return PipelineResult(base.name, classify(base.name, []), [], [], [],
                              out_dir, False)

    if config.variant:
        variant = stage("parse", lambda: load_variant(base.name, config.variant))
        impl = stage("parse", lambda: apply_variant(base, variant))
    else:
        impl = base

    # Emission uses the pristine project's dependency graph so function
    # signatures line up with the theorems generated from the pristine IR.
    modules, manifest = stage("emit", lambda: emit_project(impl, graph))
    workspace = stage("emit", lambda: scaffold(
        modules, out_dir / "workspace", project_name=impl.name))
    (out_dir / "emit.manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    if stop_after == "emit":
        return PipelineResult(base.name, classify(base.name, []), [], [], [],
                              out_dir, False)

    specs = stage("gen-theorems",
                  lambda: generate_theorems(base, graph, cap=config.pathCap))
    write_theorem_index(specs, [], out_dir)
    if stop_after == "gen-theorems":
        return PipelineResult(base.name, classify(base.name, []), specs, [],
                              [], out_dir, False)

    key = input_key(bundle, config)
    cache_dir = out_dir / "cache" / key
    cached_theorems = cache_dir / "theorems.json"
    cached_log = cache_dir / "attempts.jsonl"
    negations: list[TheoremSpec] = []
    if cached_theorems.is_file() and cached_log.is_file():
        data = json.loads(cached_theorems.read_text())
        by_id = {s.id: s for s in specs}
        for entry in data["positives"]:
            spec = by_id[entry["id"]]
            spec.status = entry["status"]
            spec.proof = entry.get("proof")
        negations = [spec_from_json(d) for d in data["negations"]]
        records = [json.loads(line)
                   for line in cached_log.read_text().splitlines() if line]
        cached = True
    else:
        backend = stage("prove", lambda: make_backend(config))
        runner = stage("prove", lambda: make_runner(config))
        pool = ExamplePool()
        log = AttemptLog()
        stage("prove", lambda: run_proof_search(
            specs, backend, runner, workspace, config.budget, pool, log,
            workers=config.effective_workers))
        if stop_after != "prove":
            negations = stage("negate", lambda: search_counterexamples(
                specs, backend, runner, workspace, config.budget, pool, log))
        records = log.records
        cache_dir.mkdir(parents=True, exist_ok=True)
        cached_payload = {
            "positives": [{"id": s.id, "status": s.status, "proof": s.proof}
                          for s in specs],
            "negations": [spec_to_json(n) for n in negations],
        }
        cached_theorems.write_text(
            json.dumps(cached_payload, indent=2, sort_keys=True) + "\n")
        log.dump(cached_log)
        cached = False

    write_theorem_index(specs, negations, out_dir)
    cost = CostLedger.from_log(records, config.promptPrice,
                               config.completionPrice,
                               api_count=len(base.apis))
    report = stage("report", lambda: classify(base.name, specs + negations,
                                              cost))
    (out_dir / "report.txt").write_text(render(report, "text"))
    (out_dir / "report.json").write_text(render(report, "json"))
    (out_dir / "attempts.jsonl").write_text(
        "".join(json.dumps(r, sort_keys=True) + "\n" for r in records))
    return PipelineResult(base.name, report, specs, negations, records,
                          out_dir, cached)
