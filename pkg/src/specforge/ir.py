"""Backend intermediate representation.

A Project is the pipeline's stand-in for a backend codebase: services own
column-typed tables and APIs, and every API body is a list of pure statements
whose only effects are explicit table-state transitions. All nodes are frozen
dataclasses; a validated Project is immutable and safe to share.

JSON encoding uses a "kind" discriminator on every sum-type node and the
lowerCamelCase field names of the bundle format.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Union

from .errors import ParseError

ColType = Literal["Int", "Bool", "Str"]

COL_TYPES: tuple[ColType, ...] = ("Int", "Bool", "Str")

BINOPS_ARITH = ("+", "-", "*")
BINOPS_CMP = ("=", "!=", "<", "<=", ">", ">=")
BINOPS_LOGIC = ("and", "or")
BINOPS = BINOPS_ARITH + BINOPS_CMP + BINOPS_LOGIC


# ---------------------------------------------------------------------------
# Expressions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class LitInt:
    value: int


@dataclass(frozen=True)
class LitBool:
    value: bool


@dataclass(frozen=True)
class LitStr:
    value: str


@dataclass(frozen=True)
class BinOp:
    op: str
    lhs: "Expr"
    rhs: "Expr"


@dataclass(frozen=True)
class FieldOf:
    """Project a column out of a row-typed variable (the `row` of a predicate
    or a row bound by a Query read)."""

    rowVar: str
    column: str


@dataclass(frozen=True)
class Neg:
    """Boolean negation."""

    expr: "Expr"


Expr = Union[Var, LitInt, LitBool, LitStr, BinOp, FieldOf, Neg]


# ---------------------------------------------------------------------------
# Statements
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Let:
    name: str
    expr: Expr


@dataclass(frozen=True)
class If:
    cond: Expr
    thenBranch: tuple["Stmt", ...]
    elseBranch: tuple["Stmt", ...]


@dataclass(frozen=True)
class CallArm:
    variant: str
    bindings: tuple[str, ...]
    body: tuple["Stmt", ...]


@dataclass(frozen=True)
class CallApi:
    bind: str
    api: str
    args: tuple[Expr, ...]
    arms: tuple[CallArm, ...]


ReadModeKind = Literal["query", "count", "sumField", "exists"]


@dataclass(frozen=True)
class ReadMode:
    kind: ReadModeKind
    predicate: Expr
    column: str | None = None  # sumField only


@dataclass(frozen=True)
class TableRead:
    bind: str
    table: str
    mode: ReadMode


WriteOpKind = Literal["insert", "update", "delete"]


@dataclass(frozen=True)
class WriteOp:
    kind: WriteOpKind
    rowExprs: tuple[tuple[str, Expr], ...] = ()  # insert: (column, value)
    predicate: Expr | None = None  # update/delete
    assignments: tuple[tuple[str, Expr], ...] = ()  # update


@dataclass(frozen=True)
class TableWrite:
    table: str
    op: WriteOp


@dataclass(frozen=True)
class Return:
    variant: str
    payload: tuple[Expr, ...]


Stmt = Union[Let, If, CallApi, TableRead, TableWrite, Return]


# ---------------------------------------------------------------------------
# Declarations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Column:
    name: str
    colType: ColType
    foreignKey: tuple[str, str] | None = None  # (table, column)
    unique: bool = False
    notNull: bool = True


@dataclass(frozen=True)
class TableSchema:
    name: str
    columns: tuple[Column, ...]
    primaryKey: frozenset[str] = frozenset()

    def column(self, name: str) -> Column | None:
        for col in self.columns:
            if col.name == name:
                return col
        return None


@dataclass(frozen=True)
class ReturnVariant:
    name: str
    payload: tuple[tuple[str, ColType], ...] = ()
    success: bool = False


@dataclass(frozen=True)
class ApiDef:
    name: str
    service: str
    params: tuple[tuple[str, ColType], ...]
    resultVariants: tuple[ReturnVariant, ...]
    body: tuple[Stmt, ...]
    docText: str | None = None

    def variant(self, name: str) -> ReturnVariant | None:
        for v in self.resultVariants:
            if v.name == name:
                return v
        return None


@dataclass(frozen=True)
class Service:
    name: str
    tables: tuple[TableSchema, ...] = ()
    apis: tuple[ApiDef, ...] = ()


@dataclass(frozen=True)
class Project:
    name: str
    services: tuple[Service, ...] = ()
    docsDir: str | None = None

    @property
    def tables(self) -> tuple[TableSchema, ...]:
        return tuple(t for s in self.services for t in s.tables)

    @property
    def apis(self) -> tuple[ApiDef, ...]:
        return tuple(a for s in self.services for a in s.apis)

    def table(self, name: str) -> TableSchema | None:
        for t in self.tables:
            if t.name == name:
                return t
        return None

    def api(self, name: str) -> ApiDef | None:
        for a in self.apis:
            if a.name == name:
                return a
        return None


# ---------------------------------------------------------------------------
# JSON encoding
# ---------------------------------------------------------------------------


def expr_to_json(e: Expr) -> dict:
    if isinstance(e, Var):
        return {"kind": "var", "name": e.name}
    if isinstance(e, LitInt):
        return {"kind": "litInt", "value": e.value}
    if isinstance(e, LitBool):
        return {"kind": "litBool", "value": e.value}
    if isinstance(e, LitStr):
        return {"kind": "litStr", "value": e.value}
    if isinstance(e, BinOp):
        return {"kind": "binOp", "op": e.op, "lhs": expr_to_json(e.lhs), "rhs": expr_to_json(e.rhs)}
    if isinstance(e, FieldOf):
        return {"kind": "fieldOf", "rowVar": e.rowVar, "column": e.column}
    if isinstance(e, Neg):
        return {"kind": "neg", "expr": expr_to_json(e.expr)}
    raise TypeError(f"not an Expr: {e!r}")


def expr_from_json(d: dict, *, file: str | None = None) -> Expr:
    kind = _kind(d, file)
    if kind == "var":
        return Var(_str(d, "name", file))
    if kind == "litInt":
        v = d.get("value")
        if not isinstance(v, int) or isinstance(v, bool):
            raise ParseError("litInt value must be an integer", file)
        return LitInt(v)
    if kind == "litBool":
        v = d.get("value")
        if not isinstance(v, bool):
            raise ParseError("litBool value must be a boolean", file)
        return LitBool(v)
    if kind == "litStr":
        v = d.get("value")
        if not isinstance(v, str):  # the empty string is a fine literal
            raise ParseError("litStr value must be a string", file)
        return LitStr(v)
    if kind == "binOp":
        op = _str(d, "op", file)
        if op not in BINOPS:
            raise ParseError(f"unknown operator {op!r}", file)
        return BinOp(op, expr_from_json(_dict(d, "lhs", file), file=file),
                     expr_from_json(_dict(d, "rhs", file), file=file))
    if kind == "fieldOf":
        return FieldOf(_str(d, "rowVar", file), _str(d, "column", file))
    if kind == "neg":
        return Neg(expr_from_json(_dict(d, "expr", file), file=file))
    raise ParseError(f"unknown expression kind {kind!r}", file)


def stmt_to_json(s: Stmt) -> dict:
    if isinstance(s, Let):
        return {"kind": "let", "name": s.name, "expr": expr_to_json(s.expr)}
    if isinstance(s, If):
        return {
            "kind": "if",
            "cond": expr_to_json(s.cond),
            "thenBranch": [stmt_to_json(x) for x in s.thenBranch],
            "elseBranch": [stmt_to_json(x) for x in s.elseBranch],
        }
    if isinstance(s, CallApi):
        return {
            "kind": "callApi",
            "bind": s.bind,
            "api": s.api,
            "args": [expr_to_json(a) for a in s.args],
            "arms": [
                {"variant": a.variant, "bindings": list(a.bindings),
                 "body": [stmt_to_json(x) for x in a.body]}
                for a in s.arms
            ],
        }
    if isinstance(s, TableRead):
        mode: dict = {"kind": s.mode.kind, "predicate": expr_to_json(s.mode.predicate)}
        if s.mode.column is not None:
            mode["column"] = s.mode.column
        return {"kind": "tableRead", "bind": s.bind, "table": s.table, "mode": mode}
    if isinstance(s, TableWrite):
        op: dict = {"kind": s.op.kind}
        if s.op.kind == "insert":
            op["rowExprs"] = {c: expr_to_json(e) for c, e in s.op.rowExprs}
        else:
            op["predicate"] = expr_to_json(s.op.predicate)  # type: ignore[arg-type]
            if s.op.kind == "update":
                op["assignments"] = {c: expr_to_json(e) for c, e in s.op.assignments}
        return {"kind": "tableWrite", "table": s.table, "op": op}
    if isinstance(s, Return):
        return {"kind": "return", "variant": s.variant,
                "payload": [expr_to_json(e) for e in s.payload]}
    raise TypeError(f"not a Stmt: {s!r}")


def stmt_from_json(d: dict, *, file: str | None = None) -> Stmt:
    kind = _kind(d, file)
    if kind == "let":
        return Let(_str(d, "name", file), expr_from_json(_dict(d, "expr", file), file=file))
    if kind == "if":
        return If(
            expr_from_json(_dict(d, "cond", file), file=file),
            tuple(stmt_from_json(x, file=file) for x in _list(d, "thenBranch", file)),
            tuple(stmt_from_json(x, file=file) for x in _list(d, "elseBranch", file)),
        )
    if kind == "callApi":
        arms = []
        for a in _list(d, "arms", file):
            arms.append(CallArm(
                _str(a, "variant", file),
                tuple(a.get("bindings", [])),
                tuple(stmt_from_json(x, file=file) for x in _list(a, "body", file)),
            ))
        return CallApi(
            _str(d, "bind", file), _str(d, "api", file),
            tuple(expr_from_json(x, file=file) for x in _list(d, "args", file)),
            tuple(arms),
        )
    if kind == "tableRead":
        m = _dict(d, "mode", file)
        mkind = _kind(m, file)
        if mkind not in ("query", "count", "sumField", "exists"):
            raise ParseError(f"unknown read mode {mkind!r}", file)
        if mkind == "sumField" and "column" not in m:
            raise ParseError("sumField read requires a column", file)
        mode = ReadMode(mkind, expr_from_json(_dict(m, "predicate", file), file=file),
                        m.get("column"))
        return TableRead(_str(d, "bind", file), _str(d, "table", file), mode)
    if kind == "tableWrite":
        o = _dict(d, "op", file)
        okind = _kind(o, file)
        if okind == "insert":
            rows = _dict(o, "rowExprs", file)
            op = WriteOp("insert", rowExprs=tuple(
                (c, expr_from_json(e, file=file)) for c, e in rows.items()))
        elif okind == "update":
            op = WriteOp(
                "update",
                predicate=expr_from_json(_dict(o, "predicate", file), file=file),
                assignments=tuple((c, expr_from_json(e, file=file))
                                  for c, e in _dict(o, "assignments", file).items()),
            )
        elif okind == "delete":
            op = WriteOp("delete", predicate=expr_from_json(_dict(o, "predicate", file), file=file))
        else:
            raise ParseError(f"unknown write op {okind!r}", file)
        return TableWrite(_str(d, "table", file), op)
    if kind == "return":
        return Return(_str(d, "variant", file),
                      tuple(expr_from_json(x, file=file) for x in _list(d, "payload", file)))
    raise ParseError(f"unknown statement kind {kind!r}", file)


def api_to_json(api: ApiDef) -> dict:
    return {
        "name": api.name,
        "service": api.service,
        "params": [{"name": n, "colType": t} for n, t in api.params],
        "resultVariants": [
            {"name": v.name,
             "payload": [{"name": n, "colType": t} for n, t in v.payload],
             "success": v.success}
            for v in api.resultVariants
        ],
        "body": [stmt_to_json(s) for s in api.body],
        **({"docText": api.docText} if api.docText is not None else {}),
    }


def api_from_json(d: dict, *, file: str | None = None) -> ApiDef:
    try:
        params = tuple((p["name"], _coltype(p["colType"], file)) for p in d.get("params", []))
        variants = tuple(
            ReturnVariant(
                v["name"],
                tuple((p["name"], _coltype(p["colType"], file)) for p in v.get("payload", [])),
                bool(v.get("success", False)),
            )
            for v in d.get("resultVariants", [])
        )
    except (KeyError, TypeError) as exc:
        raise ParseError(f"malformed API definition: {exc}", file) from exc
    return ApiDef(
        name=_str(d, "name", file),
        service=_str(d, "service", file),
        params=params,
        resultVariants=variants,
        body=tuple(stmt_from_json(s, file=file) for s in _list(d, "body", file)),
        docText=d.get("docText"),
    )


def table_to_json(t: TableSchema) -> dict:
    cols = []
    for c in t.columns:
        col: dict = {"name": c.name, "colType": c.colType}
        if c.foreignKey:
            col["foreignKey"] = {"table": c.foreignKey[0], "column": c.foreignKey[1]}
        if c.unique:
            col["unique"] = True
        if not c.notNull:
            col["notNull"] = False
        cols.append(col)
    return {"name": t.name, "columns": cols, "primaryKey": sorted(t.primaryKey)}


def table_from_json(d: dict, *, file: str | None = None) -> TableSchema:
    cols = []
    for c in _list(d, "columns", file):
        fk = c.get("foreignKey")
        cols.append(Column(
            name=_str(c, "name", file),
            colType=_coltype(c.get("colType"), file),
            foreignKey=(fk["table"], fk["column"]) if fk else None,
            unique=bool(c.get("unique", False)),
            notNull=bool(c.get("notNull", True)),
        ))
    return TableSchema(
        name=_str(d, "name", file),
        columns=tuple(cols),
        primaryKey=frozenset(d.get("primaryKey", [])),
    )


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def _kind(d: dict, file: str | None) -> str:
    if not isinstance(d, dict) or "kind" not in d:
        raise ParseError("expected an object with a 'kind' field", file)
    return d["kind"]


def _str(d: dict, key: str, file: str | None) -> str:
    v = d.get(key)
    if not isinstance(v, str) or not v:
        raise ParseError(f"missing or empty string field {key!r}", file)
    return v


def _dict(d: dict, key: str, file: str | None) -> dict:
    v = d.get(key)
    if not isinstance(v, dict):
        raise ParseError(f"missing object field {key!r}", file)
    return v


def _list(d: dict, key: str, file: str | None) -> list:
    v = d.get(key)
    if not isinstance(v, list):
        raise ParseError(f"missing array field {key!r}", file)
    return v


def _coltype(v, file: str | None) -> ColType:
    if v not in COL_TYPES:
        raise ParseError(f"unknown column type {v!r}", file)
    return v
