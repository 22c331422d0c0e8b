"""Project bundle loading.

Bundle layout on disk:

    project.json                 manifest: name + per-service file lists
    tables/<t>.table.json        JSON table schema
    tables/<t>.table.yaml        YAML mirror of the same shape (either works)
    apis/<a>.api.json            JSON ApiDef with a nested statement array
    docs/<a>.md                  optional free-text API documentation

Parsing is deterministic: identical bytes produce a structurally equal,
fully validated Project.
"""

from __future__ import annotations

import json
from pathlib import Path

import yaml

from .errors import ParseError
from .ir import (ApiDef, Column, Project, Service, TableSchema, api_from_json,
                 table_from_json)
from .typecheck import validate_project


def _load_json(path: Path) -> dict:
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read: {exc}", str(path)) from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", str(path), exc.lineno) from exc
    if not isinstance(data, dict):
        raise ParseError("top-level value must be an object", str(path))
    return data


def _load_table_yaml(path: Path) -> TableSchema:
    try:
        data = yaml.safe_load(path.read_text())
    except OSError as exc:
        raise ParseError(f"cannot read: {exc}", str(path)) from exc
    except yaml.YAMLError as exc:
        raise ParseError(f"invalid YAML: {exc}", str(path)) from exc
    if not isinstance(data, dict):
        raise ParseError("table description must be a mapping", str(path))
    columns = []
    for c in data.get("columns", []):
        fk = c.get("foreignKey")
        if isinstance(fk, str):
            if "." not in fk:
                raise ParseError(f"foreignKey must be 'Table.column', got {fk!r}", str(path))
            table, col = fk.split(".", 1)
            fk_pair = (table, col)
        elif isinstance(fk, dict):
            fk_pair = (fk["table"], fk["column"])
        else:
            fk_pair = None
        colname = c.get("name")
        coltype = c.get("type", c.get("colType"))
        if coltype not in ("Int", "Bool", "Str"):
            raise ParseError(f"column '{colname}' has unknown type {coltype!r}", str(path))
        columns.append(Column(
            name=colname,
            colType=coltype,
            foreignKey=fk_pair,
            unique=bool(c.get("unique", False)),
            notNull=not bool(c.get("nullable", False)),
        ))
    return TableSchema(
        name=data.get("name", ""),
        columns=tuple(columns),
        primaryKey=frozenset(data.get("primaryKey", [])),
    )


def load_table(path: Path) -> TableSchema:
    if path.suffix in (".yaml", ".yml"):
        return _load_table_yaml(path)
    return table_from_json(_load_json(path), file=str(path))


def load_api(path: Path, docs_dir: Path | None = None) -> ApiDef:
    api = api_from_json(_load_json(path), file=str(path))
    if api.docText is None and docs_dir is not None:
        doc = docs_dir / f"{api.name}.md"
        if doc.is_file():
            api = ApiDef(api.name, api.service, api.params, api.resultVariants,
                         api.body, doc.read_text())
    return api


def parse_project(bundle_path: str | Path) -> Project:
    """Load and fully validate a project bundle directory."""
    root = Path(bundle_path)
    manifest_path = root / "project.json"
    if not manifest_path.is_file():
        raise ParseError("bundle has no project.json", str(manifest_path))
    manifest = _load_json(manifest_path)
    name = manifest.get("name")
    if not isinstance(name, str) or not name:
        raise ParseError("project name missing", str(manifest_path))

    docs_dir = root / "docs"
    docs = docs_dir if docs_dir.is_dir() else None

    services = []
    for svc in manifest.get("services", []):
        if not isinstance(svc, dict) or not svc.get("name"):
            raise ParseError("service entry needs a name", str(manifest_path))
        tables = []
        for fname in svc.get("tables", []):
            path = root / "tables" / fname
            if not path.is_file():
                raise ParseError(f"listed table file missing: {fname}", str(manifest_path))
            tables.append(load_table(path))
        apis = []
        for fname in svc.get("apis", []):
            path = root / "apis" / fname
            if not path.is_file():
                raise ParseError(f"listed API file missing: {fname}", str(manifest_path))
            apis.append(load_api(path, docs))
        services.append(Service(svc["name"], tuple(tables), tuple(apis)))

    project = Project(name=name, services=tuple(services),
                      docsDir=str(docs) if docs else None)
    validate_project(project)
    return project


def write_project(project: Project, bundle_path: str | Path) -> None:
    """Serialize a Project back to the bundle layout (used by fixture tooling)."""
    from .ir import api_to_json, table_to_json

    root = Path(bundle_path)
    (root / "tables").mkdir(parents=True, exist_ok=True)
    (root / "apis").mkdir(parents=True, exist_ok=True)
    manifest = {"name": project.name, "services": []}
    for svc in project.services:
        entry = {
            "name": svc.name,
            "tables": [f"{t.name}.table.json" for t in svc.tables],
            "apis": [f"{a.name}.api.json" for a in svc.apis],
        }
        manifest["services"].append(entry)
        for t in svc.tables:
            (root / "tables" / f"{t.name}.table.json").write_text(
                json.dumps(table_to_json(t), indent=2) + "\n")
        for a in svc.apis:
            (root / "apis" / f"{a.name}.api.json").write_text(
                json.dumps(api_to_json(a), indent=2) + "\n")
    (root / "project.json").write_text(json.dumps(manifest, indent=2) + "\n")
