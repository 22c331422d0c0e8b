"""Proof-search budgets, few-shot pool tiers, dual-loop progress."""

from pathlib import Path

import pytest

from specforge.errors import BackendUnavailable
from specforge.prover import (AttemptLog, Budget, ExamplePool, ProofCandidate,
                              ProofRequest, ReplayProverBackend,
                              TacticLadderBackend, apply_proof, prove_theorem,
                              run_proof_search, search_counterexamples,
                              select_examples)
from specforge.runner import CheckResult, Diagnostic
from specforge.theoremgen import TheoremSpec


def _spec(tid, api="A", service="S", table=None, kind="ApiPath"):
    return TheoremSpec(
        id=tid, kind=kind, project="P", service=service, api=api, table=table,
        binders=(("n", "Int"),), hypotheses=(("h1", "n > 0"),),
        conclusion="n + 0 = n", prose="demo",
        sourceText=f"theorem {tid.replace('.', '_')} : True := by\n  sorry\n")


class FakeRunner:
    """Succeeds iff the checked file contains the magic token."""

    def __init__(self, magic="QED"):
        self.magic = magic
        self.calls = 0

    def check_file(self, workspace, file):
        self.calls += 1
        text = Path(file).read_text()
        if self.magic in text:
            return CheckResult(True, (), 0.0, "")
        diag = Diagnostic(str(file), 2, 2, "Error",
                          "unsolved goals\n⊢ False", "⊢ False")
        return CheckResult(False, (diag,), 0.0, "")


class AlwaysFailBackend:
    identity = "alwaysfail"

    def produce(self, request):
        return ProofCandidate("exact absurd rfl (by omega)")


class ScriptedBackend:
    """Proves a theorem only when its id appears in `unlock`; for theorem B
    it additionally requires A's statement to be among the few-shot
    examples, modelling pool-driven progress."""

    identity = "scripted"

    def __init__(self, unlock, needs_example=None):
        self.unlock = set(unlock)
        self.needs_example = needs_example or {}

    def produce(self, request):
        if request.theoremId in self.unlock:
            needle = self.needs_example.get(request.theoremId)
            if needle is None or any(needle in stmt
                                     for stmt, _ in request.examples):
                return ProofCandidate("QED")
        return ProofCandidate("sorry")


def test_apply_proof_replaces_sorry():
    src = "theorem t : True := by\n  sorry\n"
    out = apply_proof(src, "intro h\nexact trivial")
    assert out == "theorem t : True := by\n  intro h\n  exact trivial\n"
    with pytest.raises(ValueError):
        apply_proof("def f := 1", "simp")


def test_budget_call_bound(tmp_path):
    budget = Budget(attempts=5, refinements=8, globalRounds=3)
    assert budget.calls_per_theorem == 45
    runner, log = FakeRunner(), AttemptLog()
    spec = _spec("P.A.path1")
    proved, _ = prove_theorem(spec, AlwaysFailBackend(), runner, tmp_path,
                              ExamplePool(), budget, log)
    assert not proved
    assert log.calls_for("P.A.path1") == 45
    assert runner.calls == 45
    assert spec.status == "Unproved"


def test_success_stops_early_and_feeds_pool(tmp_path):
    budget = Budget(attempts=5, refinements=8)
    pool, log = ExamplePool(), AttemptLog()
    spec = _spec("P.A.path1")
    proved, _ = prove_theorem(spec, ScriptedBackend({"P.A.path1"}),
                              FakeRunner(), tmp_path, pool, budget, log)
    assert proved and spec.status == "Proved" and spec.proof == "QED"
    assert log.calls_for("P.A.path1") == 1
    assert len(pool) == 1


def test_sorry_script_never_counts_as_proved(tmp_path):
    # the runner reports success (sorry elaborates with a warning) but the
    # search must not accept it
    class SorryBackend:
        identity = "sorry"

        def produce(self, request):
            return ProofCandidate("sorry")

    class LenientRunner:
        def check_file(self, workspace, file):
            return CheckResult(True, (), 0.0, "")

    spec = _spec("P.A.path1")
    proved, _ = prove_theorem(spec, SorryBackend(), LenientRunner(),
                              tmp_path, ExamplePool(), Budget(attempts=1),
                              AttemptLog())
    assert not proved and spec.status == "Unproved"


def test_backend_outage_skips_attempt_not_run(tmp_path):
    class Flaky:
        identity = "flaky"

        def __init__(self):
            self.calls = 0

        def produce(self, request):
            self.calls += 1
            if self.calls == 1:
                raise BackendUnavailable("endpoint down")
            return ProofCandidate("QED")

    log = AttemptLog()
    spec = _spec("P.A.path1")
    proved, _ = prove_theorem(spec, Flaky(), FakeRunner(), tmp_path,
                              ExamplePool(), Budget(attempts=3), log)
    assert proved
    assert log.records[0]["outcome"] == "BackendUnavailable"
    assert log.records[1]["outcome"] == "Success"


def test_refinement_request_carries_error_context(tmp_path):
    seen = []

    class Recording:
        identity = "rec"

        def produce(self, request):
            seen.append(request)
            return ProofCandidate("bad tactic")

    prove_theorem(_spec("P.A.path1"), Recording(), FakeRunner(), tmp_path,
                  ExamplePool(), Budget(attempts=1, refinements=2),
                  AttemptLog())
    assert [r.refinementIndex for r in seen] == [0, 1, 2]
    refined = seen[1]
    assert refined.priorScript == "bad tactic"
    assert refined.unsolvedGoal == "⊢ False"
    assert any("unsolved goals" in d for d in refined.diagnostics)


def test_select_examples_tier_order():
    pool = ExamplePool()
    for tid, api, table, service in [
        ("P.Other.path1", "Other", None, "S"),  # same service
        ("P.Far.path1", "Far", None, "T"),  # project-wide
        ("P.A.path9", "A", None, "S"),  # same api, oldest tier-1
        ("P.A.path8", "A", None, "S"),  # same api, newest tier-1
    ]:
        pool.add(_spec(tid, api=api, table=table, service=service), "QED")
    spec = _spec("P.A.path1", api="A", service="S")
    got = [e.theoremId for e in select_examples(spec, pool, 3)]
    assert got == ["P.A.path8", "P.A.path9", "P.Other.path1"]
    everything = [e.theoremId for e in select_examples(spec, pool, 10)]
    assert everything[-1] == "P.Far.path1"


def test_select_examples_excludes_self():
    pool = ExamplePool()
    spec = _spec("P.A.path1")
    pool.add(spec, "QED")
    assert select_examples(spec, pool, 3) == []


def test_dual_loop_progress_via_pool(tmp_path):
    # B is only provable once A's statement reaches the example pool, so it
    # lands in a later round than A
    a, b = _spec("P.A.path1"), _spec("P.B.path1", api="B")
    backend = ScriptedBackend({a.id, b.id},
                              needs_example={b.id: "P_A_path1"})
    log = run_proof_search([b, a], backend, FakeRunner(), tmp_path,
                           Budget(attempts=6, refinements=0, globalRounds=3,
                                  batchSize=1))
    assert a.status == "Proved" and b.status == "Proved"
    first_success = {r["theoremId"]: i for i, r in enumerate(log.records)
                     if r["outcome"] == "Success"}
    assert first_success[a.id] < first_success[b.id]


def test_search_stops_when_no_progress(tmp_path):
    specs = [_spec("P.A.path1"), _spec("P.B.path1", api="B")]
    log = run_proof_search(specs, AlwaysFailBackend(), FakeRunner(), tmp_path,
                           Budget(attempts=6, refinements=0, globalRounds=3))
    # one round of 2 attempts per theorem, then no progress: stop
    assert len(log.records) == 4
    assert all(s.status == "Unproved" for s in specs)


def test_attempt_budget_shared_across_rounds(tmp_path):
    class ProveOnThirdAttempt:
        identity = "third"

        def produce(self, request):
            if request.theoremId == "P.C.path1":
                return ProofCandidate("QED")  # keeps round 1 progressing
            return ProofCandidate(
                "QED" if request.attemptIndex >= 3 else "sorry")

    spec = _spec("P.A.path1")
    log = run_proof_search([spec, _spec("P.C.path1", api="C")],
                           ProveOnThirdAttempt(), FakeRunner(), tmp_path,
                           Budget(attempts=6, refinements=0, globalRounds=3))
    assert spec.status == "Proved"
    assert log.calls_for(spec.id) == 3  # attempt index carried over rounds


def test_parallel_matches_serial(tmp_path):
    def fresh():
        return [_spec("P.A.path1"), _spec("P.B.path1", api="B"),
                _spec("P.C.path1", api="C")]

    for workers in (1, 3):
        specs = fresh()
        run_proof_search(specs, ScriptedBackend({s.id for s in specs}),
                         FakeRunner(), tmp_path / f"w{workers}",
                         Budget(attempts=3), workers=workers)
        assert [s.status for s in specs] == ["Proved"] * 3


def test_counterexample_search_flips_to_bugfound(tmp_path):
    spec = _spec("P.A.path1")

    class ProveNegation:
        identity = "neg"

        def produce(self, request):
            ok = request.theoremId.endswith(".neg")
            return ProofCandidate("QED" if ok else "sorry")

    negs = search_counterexamples([spec], ProveNegation(), FakeRunner(),
                                  tmp_path, Budget(attempts=1))
    assert [n.id for n in negs] == ["P.A.path1.neg"]
    assert spec.status == "BugFound" and spec.proof == "QED"


def test_counterexample_search_leaves_unresolved(tmp_path):
    spec = _spec("P.A.path1")
    search_counterexamples([spec], AlwaysFailBackend(), FakeRunner(),
                           tmp_path, Budget(attempts=1, refinements=0))
    assert spec.status == "Unresolved"


def test_tactic_ladder_rungs():
    backend = TacticLadderBackend()
    req = lambda a: ProofRequest("P.BalanceQuery.path1", "", (), a, 0)
    assert backend.produce(req(1)).script == "rfl"
    assert "simp [balanceQuery]" == backend.produce(req(2)).script
    assert backend.produce(req(9)).script == backend.produce(req(5)).script


def test_replay_backend_reads_corpus(tmp_path):
    corpus = tmp_path / "c.jsonl"
    corpus.write_text('{"theoremId": "P.A.path1", "proof": "simp [a]"}\n')
    backend = ReplayProverBackend(corpus)
    assert backend.produce(ProofRequest("P.A.path1", "", (), 1, 0)).script \
        == "simp [a]"
    assert backend.produce(ProofRequest("P.X.path1", "", (), 1, 0)).script \
        == "sorry"
