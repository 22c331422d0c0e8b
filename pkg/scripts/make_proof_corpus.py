#!/usr/bin/env python3
"""Write the fixture proof corpus under fixtures/proofs/.

One entry per positive theorem of the bundled projects plus one negation
witness per seeded-bug variant. The scripts follow the house proof style
(definition unfolding + simp with the theorem's own hypotheses); a few
entries are written out individually where the uniform shape is wrong.

Entry format (JSON lines):
  {"theoremId", "proof", "project", "inapplicableVariants"} for positives
  {"theoremId", "proof", "project", "applicableVariants"}   for negations
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from specforge.corpus import load_fixture
from specforge.depgraph import analyze_dependencies
from specforge.leanemit import fn_name
from specforge.theoremgen import generate_theorems

# Positive theorem flipped by each variant (the injected bug's signature).
FLIPS = {
    "UserAuth.UserRegister.path2": "v1",
    "UserAuth.UserLogin.path1": "v2",
    "BankAccount.BalanceQuery.path2": "v1",
    "BankAccount.Deposit.path1": "v2",
    "BankAccount.Withdrawal.path3": "v3",
}

# Individually written proofs where the uniform simp shape is not right.
OVERRIDES = {
    "UserAuth.User.prop1.UserLogin":
        "unfold userLogin\nsplit <;> simp",
    "UserAuth.User.prop2.UserRegister":
        "unfold userRegister at hSuccess ⊢\n"
        "split at hSuccess <;>\n"
        "  simp_all [Specforge.length_append_one]",
    "BankAccount.Account.prop1.BalanceQuery":
        "unfold balanceQuery\nsplit <;> simp",
    "BankAccount.Account.prop1.Deposit":
        "unfold deposit\nsplit <;> simp",
    "BankAccount.Account.prop2.RegisterAccount":
        "unfold registerAccount at hSuccess ⊢\n"
        "split at hSuccess <;>\n"
        "  simp_all [Specforge.length_append_one]",
    "BankAccount.Account.prop3.DeleteAccount":
        "unfold deleteAccount at hSuccess ⊢\n"
        "split at hSuccess <;> simp_all\n"
        "omega_nat",
    "BankAccount.Transaction.prop1.BalanceQuery":
        "unfold balanceQuery\nsplit <;> simp",
    "BankAccount.Transaction.prop2.Deposit":
        "unfold deposit at hSuccess ⊢\n"
        "split at hSuccess <;>\n"
        "  simp_all [Specforge.length_append_one]",
    "BankAccount.Transaction.prop2.Withdrawal":
        "unfold withdrawal at hSuccess ⊢\n"
        "split at hSuccess <;>\n"
        "  simp_all [Specforge.length_append_one]",
    "BankAccount.Withdrawal.path2":
        "simp only [withdrawal, h1, h2]\nsimp [h3]",
    "BankAccount.Withdrawal.path3":
        "simp only [withdrawal, h1, h2]\nsimp [h3]",
    "BankAccount.Withdrawal.path4":
        "simp only [withdrawal, h1]\nrw [h2]",
}

# Witness proofs for the negations that expose each seeded bug.
NEGATIONS = {
    "UserAuth.UserRegister.path2.neg": {
        "variant": "v1",
        "proof":
            'refine ⟨"1", "p", ⟨[{ phone := "1", password := "q" }]⟩, '
            "?_, ?_, ?_⟩ <;>\n  simp [userRegister]",
    },
    "UserAuth.UserLogin.path1.neg": {
        "variant": "v2",
        "proof":
            'refine ⟨"1", "p", ⟨[{ phone := "1", password := "p" }, '
            '{ phone := "1", password := "q" }]⟩, ?_, ?_⟩ <;>\n'
            "  simp [userLogin, Specforge.countBy]",
    },
    "BankAccount.BalanceQuery.path2.neg": {
        "variant": "v1",
        "proof":
            'refine ⟨1, ⟨[{ userId := 1, name := "a" }]⟩, '
            "⟨[{ userId := 2, amount := 1 }]⟩, ?_, ?_⟩ <;>\n"
            "  simp [balanceQuery, Specforge.sumBy]",
    },
    "BankAccount.Deposit.path1.neg": {
        "variant": "v2",
        "proof":
            "refine ⟨1, 0, ⟨[]⟩, ⟨[]⟩, ?_, ?_⟩ <;>\n  simp [deposit]",
    },
    "BankAccount.Withdrawal.path3.neg": {
        "variant": "v3",
        "proof":
            'refine ⟨1, 1, ⟨[{ userId := 1, name := "a" }]⟩, '
            "⟨[{ userId := 1, amount := 2 }]⟩, 2, ?_, ?_, ?_, ?_⟩ <;>\n"
            "  simp [withdrawal, balanceQuery, Specforge.sumBy]",
    },
}


def default_proof(spec) -> str:
    fn = fn_name(spec.api) if spec.api else ""
    names = ", ".join(x for x in [fn] + [n for n, _ in spec.hypotheses] if x)
    return f"simp [{names}]"


def main() -> None:
    out_dir = ROOT / "fixtures" / "proofs"
    out_dir.mkdir(parents=True, exist_ok=True)
    for name in ("UserAuth", "BankAccount"):
        project = load_fixture(name)
        graph = analyze_dependencies(project)
        entries = []
        for spec in generate_theorems(project, graph):
            proof = OVERRIDES.get(spec.id) or default_proof(spec)
            flip = FLIPS.get(spec.id)
            entries.append({
                "theoremId": spec.id,
                "project": name,
                "proof": proof,
                "inapplicableVariants": [flip] if flip else [],
            })
        for neg_id, info in NEGATIONS.items():
            if not neg_id.startswith(name + "."):
                continue
            entries.append({
                "theoremId": neg_id,
                "project": name,
                "proof": info["proof"],
                "applicableVariants": [info["variant"]],
            })
        path = out_dir / f"{name.lower()}.jsonl"
        path.write_text("".join(json.dumps(e, ensure_ascii=False) + "\n"
                                for e in entries))
        print(f"wrote {path} ({len(entries)} entries)")


if __name__ == "__main__":
    main()
