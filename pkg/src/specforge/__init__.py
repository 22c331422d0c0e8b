"""specforge: compile backend descriptions to Lean 4, generate theorems for
every API control-flow path and table property, and run budget-bounded proof
search to classify each requirement as Verified, BugFound, or Unresolved."""

__version__ = "0.1.0"
