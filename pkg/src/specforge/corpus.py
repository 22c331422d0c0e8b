"""Bundled fixture projects and their seeded-bug variants.

Two worked projects ship with the repository: UserAuth (one service, one
table, two APIs) and BankAccount (three services, two tables, five APIs).
Each variant patches exactly one API body with a plausible implementation
bug; the patched project still validates, so every variant reaches the
proving stage.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

from .errors import UnknownFixture, UnknownVariant
from .ir import ApiDef, Project, Service, api_from_json
from .parser import parse_project
from .typecheck import validate_project

FIXTURES_DIR = Path(__file__).resolve().parents[2] / "fixtures"

FIXTURE_NAMES = ("UserAuth", "BankAccount")


def load_fixture(name: str, fixtures_dir: Path | None = None) -> Project:
    """Parse one of the bundled project fixtures by name."""
    root = (fixtures_dir or FIXTURES_DIR) / "projects"
    if name not in FIXTURE_NAMES:
        raise UnknownFixture(
            f"no bundled fixture named {name!r}; available: "
            f"{', '.join(FIXTURE_NAMES)}. Larger corpora (email clients, "
            f"ride-hailing backends) are out of scope for this repository.")
    return parse_project(root / name)


@dataclass(frozen=True)
class Variant:
    project: str
    id: str
    description: str
    apis: tuple[ApiDef, ...]  # replacement definitions, one per patched API


def list_variants(project: str, fixtures_dir: Path | None = None) -> list[str]:
    root = (fixtures_dir or FIXTURES_DIR) / "variants"
    prefix = f"{project}."
    ids = [p.name[len(prefix):-len(".json")]
           for p in root.glob(f"{prefix}*.json")]
    return sorted(ids)


def load_variant(project: str, variant_id: str,
                 fixtures_dir: Path | None = None) -> Variant:
    root = (fixtures_dir or FIXTURES_DIR) / "variants"
    path = root / f"{project}.{variant_id}.json"
    if not path.is_file():
        known = ", ".join(list_variants(project, fixtures_dir)) or "none"
        raise UnknownVariant(
            f"no variant {variant_id!r} for project {project!r} (known: {known})")
    data = json.loads(path.read_text())
    apis = tuple(api_from_json(a, file=str(path)) for a in data["apis"])
    return Variant(data["project"], data["id"], data["description"], apis)


def apply_variant(project: Project, variant: Variant) -> Project:
    """Return the project with the variant's API definitions swapped in.

    The result is re-validated: a variant that does not typecheck is a
    fixture bug, not a findable one.
    """
    if variant.project != project.name:
        raise UnknownVariant(
            f"variant {variant.id!r} targets {variant.project!r}, "
            f"not {project.name!r}")
    patches = {a.name: a for a in variant.apis}
    unknown = set(patches) - {a.name for a in project.apis}
    if unknown:
        raise UnknownVariant(
            f"variant {variant.id!r} patches unknown APIs: {sorted(unknown)}")
    services = []
    for svc in project.services:
        apis = tuple(patches.get(a.name, a) for a in svc.apis)
        services.append(Service(svc.name, svc.tables, apis))
    patched = replace(project, services=tuple(services))
    validate_project(patched)
    return patched
