"""Toolchain interface: scaffold workspaces, check files, parse diagnostics.

Two implementations of the same contract: LeanCliRunner shells out to the
real toolchain (lake/lean), MockRunner replays frozen CheckResults keyed by
a content hash of the workspace implementation plus the checked file, so the
primary test suite never needs the toolchain installed.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import shutil
import subprocess
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Protocol

from .errors import IoError, NoErrors, ReplayMiss, ToolchainMissing

UNSOLVED_MARKER = "unsolved goals"
DEFAULT_TIMEOUT = 60.0

LAKE_ENV_VAR = "SPECFORGE_LAKE"
TOOLCHAIN_PIN = "leanprover/lean4:v4.9.0"


def prelude_text() -> str:
    return (resources.files("specforge") / "data" / "Specforge.lean").read_text()


@dataclass(frozen=True, order=True)
class Diagnostic:
    file: str
    line: int  # 1-based
    column: int  # 0-based
    severity: str  # Error | Warning
    message: str = field(compare=False)
    unsolvedGoal: str | None = field(default=None, compare=False)


@dataclass(frozen=True)
class CheckResult:
    success: bool
    diagnostics: tuple[Diagnostic, ...]
    elapsed: float
    rawOutput: str

    @staticmethod
    def build(diagnostics, elapsed: float, raw: str) -> "CheckResult":
        diags = tuple(sorted(diagnostics))
        ok = not any(d.severity == "Error" for d in diags)
        return CheckResult(ok, diags, elapsed, raw)


def _extract_goal(message: str) -> str | None:
    if UNSOLVED_MARKER not in message:
        return None
    _, _, rest = message.partition(UNSOLVED_MARKER)
    return rest.strip() or None


# ---------------------------------------------------------------------------
# Workspaces
# ---------------------------------------------------------------------------

_DIAG_RE = re.compile(
    r"^(?P<file>[^:\n]+):(?P<line>\d+):(?P<col>\d+):\s*"
    r"(?P<sev>error|warning):\s*(?P<msg>.*)$")


def scaffold(modules, workspace: str | Path, project_name: str | None = None,
             prelude: str | None = None) -> Path:
    """Write a buildable workspace for a list of FormalModules.

    Layout: lakefile.toml + lean-toolchain + Specforge.lean (prelude) +
    one .lean file per module (slashes in module names become directories) +
    workspace.json recording the implementation file set that MockRunner
    hashes against.
    """
    root = Path(workspace)
    seen: set[str] = set()
    for m in modules:
        if m.name in seen:
            raise IoError(f"duplicate module name {m.name!r}")
        seen.add(m.name)
    root.mkdir(parents=True, exist_ok=True)
    name = project_name or (modules[0].name.split("/")[0] if modules else "Workspace")
    libs = sorted({m.name.split("/")[0] for m in modules} | {"Specforge"})
    lakefile = [f'name = "{name.lower()}"', 'defaultTargets = ["' + name + '"]'
                if modules else 'defaultTargets = ["Specforge"]', ""]
    for lib in libs:
        lakefile += [f"[[lean_lib]]", f'name = "{lib}"', ""]
    (root / "lakefile.toml").write_text("\n".join(lakefile))
    (root / "lean-toolchain").write_text(TOOLCHAIN_PIN + "\n")
    (root / "Specforge.lean").write_text(prelude if prelude is not None
                                         else prelude_text())
    files = {}
    for m in modules:
        rel = m.name.replace("/", os.sep) + ".lean"
        path = root / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(m.sourceText)
        files[m.name] = rel
    manifest = {
        "project": name,
        "implementationFiles": sorted([*files.values(), "Specforge.lean"]),
    }
    (root / "workspace.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return root


def workspace_hash(workspace: str | Path) -> str:
    """Hash of the implementation file set named in workspace.json."""
    root = Path(workspace)
    manifest = json.loads((root / "workspace.json").read_text())
    h = hashlib.sha256()
    for rel in manifest["implementationFiles"]:
        h.update(rel.encode())
        h.update(b"\0")
        h.update((root / rel).read_bytes())
        h.update(b"\0")
    return h.hexdigest()


def check_key(workspace: str | Path, file: str | Path) -> str:
    """Replay key: workspace implementation hash + checked file content.

    The same theorem file keys differently against the pristine project and
    against a bug variant, which is what lets one frozen corpus serve both.
    """
    h = hashlib.sha256()
    h.update(workspace_hash(workspace).encode())
    h.update(b"\0")
    h.update(Path(file).read_bytes())
    return h.hexdigest()[:32]


# ---------------------------------------------------------------------------
# Runner implementations
# ---------------------------------------------------------------------------


class ToolchainRunner(Protocol):
    def check_file(self, workspace: Path, file: Path) -> CheckResult: ...


class LeanCliRunner:
    """Invokes the real toolchain via `lake env lean <file>`.

    The binary is taken from the SPECFORGE_LAKE environment variable, else
    `lake` on PATH. A timeout surfaces as an Error diagnostic rather than an
    exception so budget accounting stays uniform.
    """

    def __init__(self, timeout: float = DEFAULT_TIMEOUT, lake: str | None = None):
        self.timeout = timeout
        self.lake = lake or os.environ.get(LAKE_ENV_VAR) or "lake"

    def available(self) -> bool:
        return shutil.which(self.lake) is not None

    def check_file(self, workspace: Path, file: Path) -> CheckResult:
        if not self.available():
            raise ToolchainMissing(f"toolchain binary {self.lake!r} not found")
        start = time.monotonic()
        try:
            proc = subprocess.run(
                [self.lake, "env", "lean", str(file)],
                cwd=str(workspace), capture_output=True, text=True,
                timeout=self.timeout)
            raw = proc.stdout + proc.stderr
        except subprocess.TimeoutExpired as exc:
            raw = (exc.stdout or "") + (exc.stderr or "") if isinstance(
                exc.stdout, str) else ""
            diag = Diagnostic(str(file), 1, 0, "Error",
                              f"timeout after {self.timeout}s")
            return CheckResult.build([diag], time.monotonic() - start, raw)
        elapsed = time.monotonic() - start
        diags = parse_diagnostics(raw)
        if proc.returncode != 0 and not any(d.severity == "Error" for d in diags):
            diags = list(diags) + [Diagnostic(
                str(file), 1, 0, "Error",
                f"toolchain exited {proc.returncode} without parseable "
                f"diagnostics: {raw[:400]}")]
        return CheckResult.build(diags, elapsed, raw)


def parse_diagnostics(output: str) -> list[Diagnostic]:
    """Line-oriented fallback parser for `file:line:col: severity: message`.

    Total by construction: unmatched lines are folded into the message of
    the preceding diagnostic (multi-line goals) or ignored.
    """
    diags: list[Diagnostic] = []
    current: list[str] | None = None

    def flush():
        nonlocal current
        if current is None:
            return
        file, line, col, sev, *msg_lines = current
        message = "\n".join(msg_lines)
        diags.append(Diagnostic(file, int(line), int(col), sev, message,
                                _extract_goal(message)))
        current = None

    for raw_line in output.splitlines():
        m = _DIAG_RE.match(raw_line)
        if m:
            flush()
            sev = "Error" if m.group("sev") == "error" else "Warning"
            current = [m.group("file"), m.group("line"), m.group("col"),
                       sev, m.group("msg")]
        elif current is not None:
            current.append(raw_line)
    flush()
    return diags


class MockRunner:
    """Replays frozen CheckResults from fixtures/toolchain/*.json.

    Fixture file format: {"results": {key: {"success": bool, "diagnostics":
    [...], "rawOutput": str}}} with keys from check_key().
    """

    def __init__(self, fixture_dir: str | Path):
        self.results: dict[str, CheckResult] = {}
        for path in sorted(Path(fixture_dir).glob("*.json")):
            data = json.loads(path.read_text())
            for key, entry in data.get("results", {}).items():
                diags = [Diagnostic(d["file"], d["line"], d["column"],
                                    d["severity"], d["message"],
                                    d.get("unsolvedGoal"))
                         for d in entry.get("diagnostics", [])]
                self.results[key] = CheckResult.build(
                    diags, 0.0, entry.get("rawOutput", ""))

    def check_file(self, workspace: Path, file: Path) -> CheckResult:
        key = check_key(workspace, file)
        if key not in self.results:
            raise ReplayMiss(key)
        return self.results[key]


def first_error_prefix(script: str, diagnostics) -> tuple[str, Diagnostic, str | None]:
    """Split a proof script at its first Error for refinement context.

    Returns (lines strictly before the error, the error, any unsolved-goal
    text). Raises NoErrors when the diagnostics carry no Error, signalling
    that the proof is already complete.
    """
    errors = sorted(d for d in diagnostics if d.severity == "Error")
    if not errors:
        raise NoErrors("no Error-severity diagnostics")
    first = errors[0]
    lines = script.splitlines()
    prefix = "\n".join(lines[:max(first.line - 1, 0)])
    goal = first.unsolvedGoal
    if goal is None:
        for d in errors:
            if d.unsolvedGoal:
                goal = d.unsolvedGoal
                break
    return prefix, first, goal
