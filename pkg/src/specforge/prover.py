"""Stage 3: dual-loop proof search with pluggable prover backends.

The inner loop refines one theorem: an initial proof attempt followed by
compiler-guided retries, each fed the failing script truncated at its first
error, the diagnostic text, and the unsolved goal. The outer loop sweeps
batches of still-unproved theorems for several global rounds; every proof
that lands grows a few-shot example pool, so later rounds attempt the
stragglers with better context. Counterexample search reuses the same
machinery on negated theorems.
"""

from __future__ import annotations

import json
import re
import textwrap
import urllib.request
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

from .errors import BackendUnavailable, InconsistentState
from .runner import NoErrors, first_error_prefix
from .theoremgen import TheoremSpec, negate_theorem


@dataclass(frozen=True)
class Budget:
    attempts: int = 5  # A: fresh attempts per theorem
    refinements: int = 8  # R: compiler-guided retries per attempt
    globalRounds: int = 3  # G: outer sweeps
    batchSize: int = 8
    fewShotK: int = 3

    @property
    def calls_per_theorem(self) -> int:
        return self.attempts * (1 + self.refinements)


@dataclass(frozen=True)
class ProofRequest:
    theoremId: str
    sourceText: str
    examples: tuple[tuple[str, str], ...]  # (statement, proof) pairs
    attemptIndex: int  # 1..A
    refinementIndex: int  # 0 = initial attempt
    priorScript: str | None = None
    goodPrefix: str | None = None
    diagnostics: tuple[str, ...] = ()
    unsolvedGoal: str | None = None


@dataclass(frozen=True)
class ProofCandidate:
    script: str
    promptTokens: int = 0
    completionTokens: int = 0


class ProverBackend(Protocol):
    identity: str

    def produce(self, request: ProofRequest) -> ProofCandidate: ...


# ---------------------------------------------------------------------------
# Example pool
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProvedExample:
    theoremId: str
    api: str | None
    table: str | None
    service: str
    statement: str
    proof: str
    seq: int  # insertion order, newer = larger


class ExamplePool:
    """Append-only store of toolchain-verified (theorem, proof) pairs."""

    def __init__(self):
        self._entries: list[ProvedExample] = []

    def __len__(self) -> int:
        return len(self._entries)

    def add(self, spec: TheoremSpec, proof: str) -> None:
        self._entries.append(ProvedExample(
            spec.id, spec.api, spec.table, spec.service,
            spec.sourceText, proof, len(self._entries)))

    def snapshot(self) -> tuple[ProvedExample, ...]:
        return tuple(self._entries)


def select_examples(spec: TheoremSpec, pool: ExamplePool,
                    k: int) -> list[ProvedExample]:
    """Fill k slots by similarity tier: same API or table, then same
    service, then anything from the project; most recently proved first
    within each tier."""
    chosen: list[ProvedExample] = []
    seen: set[str] = set()

    def take(pred):
        for e in sorted(pool.snapshot(), key=lambda e: -e.seq):
            if len(chosen) >= k:
                return
            if e.theoremId in seen or e.theoremId == spec.id:
                continue
            if pred(e):
                chosen.append(e)
                seen.add(e.theoremId)

    take(lambda e: (spec.api is not None and e.api == spec.api)
         or (spec.table is not None and e.table == spec.table))
    take(lambda e: e.service == spec.service)
    take(lambda e: True)
    return chosen


# ---------------------------------------------------------------------------
# Backends
# ---------------------------------------------------------------------------


class ReplayProverBackend:
    """Returns the frozen corpus proof for a theorem id, else a bare sorry.

    Corpus format: JSON lines of {"theoremId": ..., "proof": ...} (extra
    fields ignored), or a directory of *.jsonl files in that format.
    """

    identity = "replay"

    def __init__(self, corpus: str | Path):
        self.proofs: dict[str, str] = {}
        path = Path(corpus)
        files = sorted(path.glob("*.jsonl")) if path.is_dir() else [path]
        for f in files:
            for line in f.read_text().splitlines():
                if not line.strip():
                    continue
                entry = json.loads(line)
                self.proofs[entry["theoremId"]] = entry["proof"]

    def produce(self, request: ProofRequest) -> ProofCandidate:
        return ProofCandidate(self.proofs.get(request.theoremId, "sorry"))


def _defs_from_id(theorem_id: str) -> list[str]:
    parts = theorem_id.split(".")
    names = []
    for p in parts[1:]:
        if p[:1].isupper():
            name = p[0].lower() + p[1:]
            if name not in names:
                names.append(name)
    return names


class TacticLadderBackend:
    """Deterministic desk-scale prover: attempt i plays the i-th rung of a
    fixed escalation ladder. Refinement calls within an attempt repeat the
    rung (this backend cannot use compiler feedback)."""

    identity = "tactic"

    def produce(self, request: ProofRequest) -> ProofCandidate:
        defs = ", ".join(_defs_from_id(request.theoremId)) or "id"
        ladder = [
            "rfl",
            f"simp [{defs}]",
            "decide",
            f"simp [{defs}]\ndecide",
            f"simp_all [{defs}]",
        ]
        rung = min(request.attemptIndex, len(ladder)) - 1
        return ProofCandidate(ladder[rung])


@dataclass(frozen=True)
class LlmConfig:
    endpoint: str = ""
    model: str = ""
    temperature: float = 0.0
    maxTokens: int = 2048
    timeout: float = 120.0
    promptPrice: float = 0.0  # currency per 1k prompt tokens
    completionPrice: float = 0.0


_FENCE_RE = re.compile(r"```(?:lean4?|\w*)?\n(.*?)```", re.DOTALL)

_SYSTEM_PROMPT = (
    "You are a Lean 4 proof engineer. Respond with a single fenced code "
    "block containing only the tactic script that replaces `sorry`.")


class LlmProverBackend:
    """Chat-style backend. Network failures raise BackendUnavailable, which
    aborts the current attempt but never the run."""

    identity = "llm"

    def __init__(self, config: LlmConfig):
        if not config.endpoint or not config.model:
            raise BackendUnavailable("llm backend needs endpoint and model")
        self.config = config

    def _messages(self, request: ProofRequest) -> list[dict]:
        msgs = [{"role": "system", "content": _SYSTEM_PROMPT}]
        for statement, proof in request.examples:
            msgs.append({"role": "user", "content": statement})
            msgs.append({"role": "assistant", "content": f"```lean\n{proof}\n```"})
        task = request.sourceText
        if request.refinementIndex > 0:
            task += (
                "\n\nThe previous script failed.\n"
                f"Last good prefix:\n{request.goodPrefix or '(empty)'}\n"
                f"Diagnostics:\n" + "\n".join(request.diagnostics))
            if request.unsolvedGoal:
                task += f"\nUnsolved goal:\n{request.unsolvedGoal}"
        msgs.append({"role": "user", "content": task})
        return msgs

    def produce(self, request: ProofRequest) -> ProofCandidate:
        payload = {
            "model": self.config.model,
            "temperature": self.config.temperature,
            "max_tokens": self.config.maxTokens,
            "messages": self._messages(request),
        }
        req = urllib.request.Request(
            self.config.endpoint, data=json.dumps(payload).encode(),
            headers={"Content-Type": "application/json"})
        try:
            with urllib.request.urlopen(req, timeout=self.config.timeout) as resp:
                data = json.loads(resp.read())
        except Exception as exc:  # noqa: BLE001 - any transport failure
            raise BackendUnavailable(f"llm endpoint failed: {exc}") from exc
        try:
            content = data["choices"][0]["message"]["content"]
            usage = data.get("usage", {})
        except (KeyError, IndexError, TypeError) as exc:
            raise BackendUnavailable(f"malformed llm response: {exc}") from exc
        blocks = _FENCE_RE.findall(content)
        script = blocks[-1].strip() if blocks else content.strip()
        return ProofCandidate(script,
                              int(usage.get("prompt_tokens", 0)),
                              int(usage.get("completion_tokens", 0)))


# ---------------------------------------------------------------------------
# Proof search
# ---------------------------------------------------------------------------


def apply_proof(source: str, script: str) -> str:
    """Replace the final `sorry` body of a generated theorem file."""
    head, sep, _ = source.rpartition(":= by")
    if not sep:
        raise ValueError("theorem source has no `:= by` body")
    body = textwrap.indent(script.strip("\n"), "  ")
    return head + ":= by\n" + body + "\n"


def _theorem_file(workspace: Path, spec: TheoremSpec) -> Path:
    path = workspace / spec.project / "Theorems" / f"{spec.lean_name}.lean"
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


class AttemptLog:
    """One JSON-serializable record per backend call, in call order."""

    def __init__(self):
        self.records: list[dict] = []

    def add(self, **record) -> None:
        self.records.append(record)

    def dump(self, path: str | Path) -> None:
        text = "".join(json.dumps(r, sort_keys=True) + "\n"
                       for r in self.records)
        Path(path).write_text(text)

    def calls_for(self, theorem_id: str) -> int:
        return sum(1 for r in self.records if r["theoremId"] == theorem_id)


def prove_theorem(spec: TheoremSpec, backend, runner, workspace: Path,
                  pool: ExamplePool, budget: Budget,
                  log: AttemptLog | None = None,
                  max_attempts: int | None = None,
                  first_attempt: int = 1) -> tuple[bool, list[dict]]:
    """Run up to `max_attempts` (default: the full budget) attempts on one
    theorem. Returns (proved, records); on success the proof joins the pool
    and spec.status/spec.proof are updated."""
    log = log if log is not None else AttemptLog()
    attempts = budget.attempts if max_attempts is None else max_attempts
    file = _theorem_file(workspace, spec)
    examples = tuple((e.statement, e.proof)
                     for e in select_examples(spec, pool, budget.fewShotK))
    records: list[dict] = []

    def run_one(request: ProofRequest):
        try:
            candidate = backend.produce(request)
        except BackendUnavailable as exc:
            rec = {"theoremId": spec.id, "attempt": request.attemptIndex,
                   "refinement": request.refinementIndex,
                   "backend": getattr(backend, "identity", "?"),
                   "outcome": "BackendUnavailable", "error": str(exc),
                   "promptTokens": 0, "completionTokens": 0}
            log.add(**rec)
            records.append(rec)
            return None, None
        content = apply_proof(spec.sourceText, candidate.script)
        file.write_text(content)
        result = runner.check_file(workspace, file)
        clean = result.success and "sorry" not in candidate.script
        rec = {"theoremId": spec.id, "attempt": request.attemptIndex,
               "refinement": request.refinementIndex,
               "backend": getattr(backend, "identity", "?"),
               "outcome": "Success" if clean else "Fail",
               "errors": [f"{d.line}:{d.column}:{d.message.splitlines()[0]}"
                          for d in result.diagnostics if d.severity == "Error"],
               "promptTokens": candidate.promptTokens,
               "completionTokens": candidate.completionTokens}
        log.add(**rec)
        records.append(rec)
        return candidate, (result, content, clean)

    for a in range(first_attempt, first_attempt + attempts):
        request = ProofRequest(spec.id, spec.sourceText, examples, a, 0)
        candidate, outcome = run_one(request)
        if candidate is None:
            continue  # backend outage: next attempt
        result, content, clean = outcome
        for r in range(1, budget.refinements + 1):
            if clean:
                break
            try:
                prefix, first, goal = first_error_prefix(content,
                                                         result.diagnostics)
                diag_texts = (f"line {first.line}: {first.message}",)
            except NoErrors:
                # no errors but a sorry survived; retry without context
                prefix, goal, diag_texts = None, None, ("proof still contains sorry",)
            request = ProofRequest(
                spec.id, spec.sourceText, examples, a, r,
                priorScript=candidate.script, goodPrefix=prefix,
                diagnostics=diag_texts, unsolvedGoal=goal)
            candidate, outcome = run_one(request)
            if candidate is None:
                break
            result, content, clean = outcome
        if candidate is not None and clean:
            spec.status = "Proved"
            spec.proof = candidate.script
            pool.add(spec, candidate.script)
            return True, records
    return False, records


def run_proof_search(theorems: list[TheoremSpec], backend, runner,
                     workspace: Path, budget: Budget,
                     pool: ExamplePool | None = None,
                     log: AttemptLog | None = None,
                     workers: int = 1) -> AttemptLog:
    """Global loop: batches of unproved theorems, repeated while the last
    round made progress, rounds capped at G, per-theorem attempt budget
    shared across rounds. The pool is refreshed between batches so every
    theorem in a batch sees the same snapshot (safe under concurrency)."""
    pool = pool if pool is not None else ExamplePool()
    log = log if log is not None else AttemptLog()
    per_round = max(1, budget.attempts // budget.globalRounds)
    attempts_used: dict[str, int] = {t.id: 0 for t in theorems}

    for round_no in range(1, budget.globalRounds + 1):
        pending = [t for t in theorems
                   if t.status == "Unproved"
                   and attempts_used[t.id] < budget.attempts]
        if not pending:
            break
        progressed = False
        for start in range(0, len(pending), budget.batchSize):
            batch = pending[start:start + budget.batchSize]
            jobs = []
            for t in batch:
                allowed = min(per_round, budget.attempts - attempts_used[t.id])
                jobs.append((t, allowed, attempts_used[t.id] + 1))
            results = []
            if workers > 1:
                batch_logs = [AttemptLog() for _ in jobs]
                with ThreadPoolExecutor(max_workers=workers) as ex:
                    futures = [
                        ex.submit(prove_theorem, t, backend, runner, workspace,
                                  pool, budget, blog, allowed, first)
                        for (t, allowed, first), blog in zip(jobs, batch_logs)]
                    for fut in futures:
                        results.append(fut.result())
                for blog in batch_logs:
                    for rec in blog.records:
                        log.add(**rec)
            else:
                for t, allowed, first in jobs:
                    results.append(prove_theorem(t, backend, runner, workspace,
                                                 pool, budget, log, allowed,
                                                 first))
            for (t, allowed, _), (proved, recs) in zip(jobs, results):
                attempts_used[t.id] += sum(
                    1 for r in recs if r["refinement"] == 0)
                if proved:
                    progressed = True
        if not progressed:
            break
    return log


def search_counterexamples(theorems: list[TheoremSpec], backend, runner,
                           workspace: Path, budget: Budget,
                           pool: ExamplePool | None = None,
                           log: AttemptLog | None = None) -> list[TheoremSpec]:
    """Negate each still-unproved positive theorem and try to prove the
    negation; a proof is a verified counterexample, so the original flips
    to BugFound. Returns the negation specs that were attempted."""
    pool = pool if pool is not None else ExamplePool()
    log = log if log is not None else AttemptLog()
    negations: list[TheoremSpec] = []
    for t in theorems:
        if t.kind == "Negation" or t.status != "Unproved":
            continue
        neg = negate_theorem(t)
        negations.append(neg)
        proved, _ = prove_theorem(neg, backend, runner, workspace, pool,
                                  budget, log)
        if proved:
            if t.status == "Proved":
                raise InconsistentState(
                    f"{t.id} and its negation are both proved")
            t.status = "BugFound"
            t.proof = neg.proof
        else:
            t.status = "Unresolved"
            neg.status = "Unproved"
    return negations
