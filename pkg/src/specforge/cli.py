"""Command-line interface.

Verbs mirror the pipeline stages; `run` executes everything and sets the
exit code: 0 when no bugs were found, 2 when at least one BugFound was
reported, 1 on any pipeline error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .depgraph import analyze_dependencies
from .errors import SpecforgeError
from .parser import parse_project
from .pipeline import PipelineConfig, run_pipeline
from .report import render

STAGES = ("parse", "deps", "emit", "gen-theorems", "prove", "negate",
          "report", "run")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="specforge",
        description="Compile a backend bundle to Lean 4, generate theorems "
                    "for every control-flow path and table property, and "
                    "run budget-bounded proof search.")
    parser.add_argument("verb", choices=STAGES)
    parser.add_argument("bundle", help="project bundle directory")
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--deterministic", action="store_true",
                        help="single worker, stable order, reproducible output")
    parser.add_argument("--workers", type=int, default=None)
    parser.add_argument("--out", default="specforge-out",
                        help="output directory for stage artifacts")
    parser.add_argument("--backend", choices=("replay", "tactic", "llm"),
                        default=None)
    parser.add_argument("--variant", default=None,
                        help="apply a bundled bug variant before emission")
    parser.add_argument("--format", choices=("text", "json"), default="text")
    return parser


def _config(args) -> PipelineConfig:
    config = (PipelineConfig.from_file(args.config) if args.config
              else PipelineConfig())
    overrides = {}
    if args.deterministic:
        overrides["deterministic"] = True
    if args.workers is not None:
        overrides["workers"] = args.workers
    if args.backend is not None:
        overrides["backend"] = args.backend
    if args.variant is not None:
        overrides["variant"] = args.variant
    return replace(config, **overrides) if overrides else config


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _config(args)
        if args.verb == "parse":
            project = parse_project(args.bundle)
            summary = {
                "project": project.name,
                "services": len(project.services),
                "tables": [t.name for t in project.tables],
                "apis": [a.name for a in project.apis],
            }
            print(json.dumps(summary, indent=2, sort_keys=True))
            return 0
        if args.verb == "deps":
            project = parse_project(args.bundle)
            graph = analyze_dependencies(project)
            for edge in sorted(graph.edges):
                print(json.dumps({"kind": edge.kind, "from": edge.src,
                                  "to": edge.dst}, sort_keys=True))
            print(json.dumps({"topoOrder": list(graph.topoOrder)},
                             sort_keys=True))
            return 0
        stop = None if args.verb in ("report", "run") else args.verb
        result = run_pipeline(args.bundle, config, args.out, stop_after=stop)
        if args.verb in ("report", "run", "negate"):
            sys.stdout.write(render(result.report, args.format))
        else:
            print(json.dumps({"stage": args.verb, "project":
                              result.project_name, "out": str(result.out_dir),
                              "theorems": len(result.theorems)},
                             sort_keys=True))
        if args.verb == "run":
            return 2 if result.report.bug_count else 0
        return 0
    except SpecforgeError as exc:
        print(f"specforge: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
