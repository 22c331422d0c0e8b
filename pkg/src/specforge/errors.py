"""Exception hierarchy shared by the whole pipeline.

Every error raised on a user-visible path derives from SpecforgeError so the
CLI can map them to exit code 1 uniformly.
"""

from __future__ import annotations


class SpecforgeError(Exception):
    """Base class for all pipeline errors."""


class ParseError(SpecforgeError):
    """Malformed bundle file; carries file (and line when known)."""

    def __init__(self, message: str, file: str | None = None, line: int | None = None):
        self.file = file
        self.line = line
        where = f"{file}:{line}: " if file and line else (f"{file}: " if file else "")
        super().__init__(f"{where}{message}")


class ValidationError(SpecforgeError):
    """Semantic violation in a parsed project; names the offending entity."""

    def __init__(self, message: str, entity: str | None = None):
        self.entity = entity
        prefix = f"[{entity}] " if entity else ""
        super().__init__(f"{prefix}{message}")


class FormalizationFailed(SpecforgeError):
    """Source formalizer produced no valid ApiDef within the retry budget."""

    def __init__(self, message: str, diagnostics: list | None = None):
        self.diagnostics = diagnostics or []
        super().__init__(message)


class BackendUnavailable(SpecforgeError):
    """An LLM or summarizer backend was requested but cannot be reached."""


class CyclicDependency(SpecforgeError):
    """Dependency graph is not a DAG; carries one witness cycle."""

    def __init__(self, cycle: list[str]):
        self.cycle = cycle
        super().__init__("cyclic dependency: " + " -> ".join(cycle + cycle[:1]))


class PathExplosion(SpecforgeError):
    """An API's branch tree exceeds the configured path cap."""

    def __init__(self, api: str, count: int, cap: int):
        self.api = api
        self.count = count
        self.cap = cap
        super().__init__(f"API {api} has {count} control-flow paths (cap {cap})")


class EmitError(SpecforgeError):
    """Internal invariant violation during Lean emission."""


class TemplateError(SpecforgeError):
    """Theorem template cannot be instantiated (internal bug or vacuous theorem)."""


class CompileRejected(SpecforgeError):
    """Generated theorem still fails to compile after template-repair retries."""

    def __init__(self, message: str, diagnostics: list | None = None):
        self.diagnostics = diagnostics or []
        super().__init__(message)


class IoError(SpecforgeError):
    """Workspace scaffolding failure (duplicate modules, unwritable paths)."""


class AlreadyNegated(SpecforgeError):
    """negate() applied to a theorem that is itself a negation."""


class ToolchainMissing(SpecforgeError):
    """The real proof-assistant toolchain is not installed or not on PATH."""


class ReplayMiss(SpecforgeError):
    """Mock runner has no canned result for the presented content hash."""

    def __init__(self, key: str):
        self.key = key
        super().__init__(f"no replay fixture for content hash {key}")


class NoErrors(SpecforgeError):
    """first_error_prefix called on a diagnostic set with no errors."""


class UnknownFixture(SpecforgeError):
    pass


class UnknownVariant(SpecforgeError):
    pass


class InconsistentState(SpecforgeError):
    """A theorem and its negation are both proved; signals a pipeline bug."""


class PipelineError(SpecforgeError):
    """Stage failure wrapper so the CLI can report which stage died."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage '{stage}' failed: {cause}")
