"""Outcome classification, statistics rendering, and cost tracking.

The text rendering mirrors a per-API proved/unproved tally table plus a bug
list; the JSON rendering is the full structure. Both are byte-deterministic
for identical inputs.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

from .errors import InconsistentState
from .theoremgen import TheoremSpec


@dataclass(frozen=True)
class CostLedger:
    calls: int = 0
    promptTokens: int = 0
    completionTokens: int = 0
    promptPrice: float = 0.0  # currency per 1k tokens, from config
    completionPrice: float = 0.0
    apiCount: int = 0

    @property
    def totalCost(self) -> float:
        return (self.promptTokens / 1000.0 * self.promptPrice
                + self.completionTokens / 1000.0 * self.completionPrice)

    @property
    def perApiCost(self) -> float | None:
        if self.apiCount <= 0:
            return None
        return self.totalCost / self.apiCount

    @staticmethod
    def from_log(records, prompt_price: float = 0.0,
                 completion_price: float = 0.0,
                 api_count: int = 0) -> "CostLedger":
        return CostLedger(
            calls=len(records),
            promptTokens=sum(r.get("promptTokens", 0) for r in records),
            completionTokens=sum(r.get("completionTokens", 0) for r in records),
            promptPrice=prompt_price,
            completionPrice=completion_price,
            apiCount=api_count,
        )


@dataclass(frozen=True)
class Tally:
    proved: int
    unproved: int

    @property
    def total(self) -> int:
        return self.proved + self.unproved

    @property
    def percent(self) -> float:
        return 100.0 * self.proved / self.total if self.total else 0.0


@dataclass
class VerificationReport:
    project: str
    statuses: dict[str, str]  # theorem id -> Verified | BugFound | Unresolved
    apiTallies: dict[str, Tally]  # per API, ApiPath theorems
    tableTallies: dict[str, Tally]  # per table, TableProp theorems
    bugs: list[dict]  # {theoremId, witness, description?}
    cost: CostLedger

    @property
    def bug_count(self) -> int:
        return len(self.bugs)


def classify(project: str, theorems: list[TheoremSpec],
             cost: CostLedger | None = None) -> VerificationReport:
    """Fold final theorem statuses into the three-way triage.

    Proved positives are Verified; a positive whose negation was proved is
    BugFound; everything else is Unresolved. A theorem marked both ways is
    a pipeline bug and raises InconsistentState.
    """
    statuses: dict[str, str] = {}
    api_tally: dict[str, list[int]] = {}
    table_tally: dict[str, list[int]] = {}
    bugs: list[dict] = []
    for t in theorems:
        if t.kind == "Negation":
            continue
        if t.status == "Proved" and t.id + ".neg" in {
                x.id for x in theorems if x.status == "Proved"}:
            raise InconsistentState(f"{t.id} and its negation are both proved")
        if t.status == "Proved":
            status = "Verified"
        elif t.status == "BugFound":
            status = "BugFound"
            bugs.append({"theoremId": t.id, "witness": t.id + ".neg"})
        else:
            status = "Unresolved"
        statuses[t.id] = status
        if t.kind == "ApiPath" and t.api:
            api_tally.setdefault(t.api, [0, 0])[0 if status == "Verified" else 1] += 1
        elif t.kind == "TableProp" and t.table:
            table_tally.setdefault(t.table, [0, 0])[0 if status == "Verified" else 1] += 1
    return VerificationReport(
        project=project,
        statuses=statuses,
        apiTallies={k: Tally(*v) for k, v in sorted(api_tally.items())},
        tableTallies={k: Tally(*v) for k, v in sorted(table_tally.items())},
        bugs=sorted(bugs, key=lambda b: b["theoremId"]),
        cost=cost or CostLedger(),
    )


def _tally_block(title: str, col: str, tallies: dict[str, Tally],
                 lines: list[str]) -> None:
    lines.append(title)
    width = max([len(col), len("total")] + [len(k) for k in tallies]) + 2
    lines.append(f"  {col:<{width}}Proved  Unproved  Proved%")
    total = Tally(sum(t.proved for t in tallies.values()),
                  sum(t.unproved for t in tallies.values()))
    for name, t in tallies.items():
        lines.append(f"  {name:<{width}}{t.proved:<8}{t.unproved:<10}{t.percent:.1f}")
    lines.append(f"  {'total':<{width}}{total.proved:<8}{total.unproved:<10}"
                 f"{total.percent:.1f}")
    lines.append("")


def render(report: VerificationReport, fmt: str = "text") -> str:
    if fmt == "json":
        data = {
            "project": report.project,
            "statuses": dict(sorted(report.statuses.items())),
            "apiTallies": {k: {"proved": t.proved, "unproved": t.unproved,
                               "percent": round(t.percent, 1)}
                           for k, t in report.apiTallies.items()},
            "tableTallies": {k: {"proved": t.proved, "unproved": t.unproved,
                                 "percent": round(t.percent, 1)}
                             for k, t in report.tableTallies.items()},
            "bugs": report.bugs,
            "cost": {
                "calls": report.cost.calls,
                "promptTokens": report.cost.promptTokens,
                "completionTokens": report.cost.completionTokens,
                "totalCost": round(report.cost.totalCost, 4),
                "perApiCost": (round(report.cost.perApiCost, 4)
                               if report.cost.perApiCost is not None else None),
            },
        }
        return json.dumps(data, indent=2, sort_keys=True) + "\n"
    lines = [f"Project: {report.project}", ""]
    _tally_block("API theorems", "API", report.apiTallies, lines)
    _tally_block("Table theorems", "Table", report.tableTallies, lines)
    lines.append("Bugs")
    if report.bugs:
        for b in report.bugs:
            lines.append(f"  {b['theoremId']}  (witness: {b['witness']})")
    else:
        lines.append("  none")
    lines.append("")
    lines.append(f"Cost: {report.cost.calls} backend calls, "
                 f"{report.cost.promptTokens} prompt tokens, "
                 f"{report.cost.completionTokens} completion tokens, "
                 f"total {report.cost.totalCost:.4f}"
                 + (f", per API {report.cost.perApiCost:.4f}"
                    if report.cost.perApiCost is not None else ""))
    lines.append("")
    return "\n".join(lines)
