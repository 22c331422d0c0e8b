"""Deterministic Lean 4 emission for tables and APIs.

Tables become row/table structures, APIs become pure functions returning an
inductive result type paired with the updated state of every table the API
transitively touches. Database effects are threaded explicitly: one table
state argument per dependent table (in table topo order) and the same tuple
order on the way out. There is no effect wrapper; errors are constructors of
the result type.

Emission is pure text generation and byte-deterministic. Name mangling:
table `Transaction` -> `TransactionRow` / `TransactionTable`; API
`Withdrawal` -> function `withdrawal`, result type `WithdrawalResult`.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Literal

from . import __version__
from .depgraph import DependencyGraph, dependent_tables, written_tables
from .errors import EmitError
from .ir import (ApiDef, BinOp, CallApi, Expr, FieldOf, If, Let, LitBool,
                 LitInt, LitStr, Neg, Project, Return, Stmt, TableRead,
                 TableSchema, TableWrite, Var)

ModuleKind = Literal["TablesDef", "ApiDef", "TheoremFile", "Prelude"]

PRELUDE_MODULE = "Specforge"

# Binder names that would collide with Lean syntax get a trailing underscore.
_RESERVED = {
    "if", "then", "else", "match", "with", "fun", "let", "do", "in", "end",
    "theorem", "def", "structure", "inductive", "exists", "forall", "row",
    "sorry", "from", "import", "open", "deriving", "where",
}


@dataclass(frozen=True)
class FormalModule:
    name: str
    kind: ModuleKind
    sourceText: str
    imports: tuple[str, ...] = ()


def safe_name(name: str) -> str:
    return name + "_" if name in _RESERVED else name


def row_type(table: str) -> str:
    return f"{table}Row"


def table_type(table: str) -> str:
    return f"{table}Table"


def state_binder(table: str) -> str:
    return table[0].lower() + table[1:] + "Table"


def fn_name(api: str) -> str:
    return safe_name(api[0].lower() + api[1:])


def result_type(api: str) -> str:
    return f"{api}Result"


def lean_col_type(col_type: str, not_null: bool = True) -> str:
    base = {"Int": "Int", "Bool": "Bool", "Str": "String"}[col_type]
    return base if not_null else f"Option {base}"


def banner(body: str) -> str:
    digest = hashlib.sha256(body.encode()).hexdigest()[:16]
    return (f"-- generated by specforge {__version__}\n"
            f"-- content-hash: {digest}\n")


# ---------------------------------------------------------------------------
# Expression rendering
# ---------------------------------------------------------------------------


def lean_expr(expr: Expr, names: dict[str, str] | None = None) -> str:
    """Render an IR expression as a Lean term. Comparison and logical
    operators produce Bool (comparisons via `decide`)."""
    names = names or {}

    def go(e: Expr) -> str:
        if isinstance(e, Var):
            return names.get(e.name, safe_name(e.name))
        if isinstance(e, LitInt):
            return f"({e.value} : Int)"
        if isinstance(e, LitBool):
            return "true" if e.value else "false"
        if isinstance(e, LitStr):
            escaped = e.value.replace("\\", "\\\\").replace('"', '\\"')
            return f'"{escaped}"'
        if isinstance(e, FieldOf):
            return f"{names.get(e.rowVar, safe_name(e.rowVar))}.{e.column}"
        if isinstance(e, Neg):
            return f"!({go(e.expr)})"
        if isinstance(e, BinOp):
            lhs, rhs = go(e.lhs), go(e.rhs)
            if e.op in ("+", "-", "*"):
                return f"({lhs} {e.op} {rhs})"
            if e.op == "=":
                return f"decide ({lhs} = {rhs})"
            if e.op == "!=":
                return f"!(decide ({lhs} = {rhs}))"
            if e.op in ("<", "<=", ">", ">="):
                return f"decide ({lhs} {e.op} {rhs})"
            if e.op == "and":
                return f"({lhs} && {rhs})"
            if e.op == "or":
                return f"({lhs} || {rhs})"
        raise EmitError(f"cannot render expression {e!r}")

    return go(expr)


def row_literal(table: TableSchema, values: dict[str, str]) -> str:
    """Render a full row literal; absent nullable columns become none."""
    fields = []
    for col in table.columns:
        if col.name in values:
            v = values[col.name]
            if not col.notNull:
                v = f"some ({v})"
        else:
            if col.notNull:
                raise EmitError(f"insert into {table.name} misses {col.name}")
            v = "none"
        fields.append(f"{col.name} := {v}")
    return "({ " + ", ".join(fields) + " } : " + row_type(table.name) + ")"


# ---------------------------------------------------------------------------
# Table emission
# ---------------------------------------------------------------------------


def emit_table(schema: TableSchema) -> FormalModule:
    lines = [f"structure {row_type(schema.name)} where"]
    for col in schema.columns:
        lines.append(f"  {col.name} : {lean_col_type(col.colType, col.notNull)}")
    lines.append("deriving Repr, DecidableEq")
    lines.append("")
    lines.append(f"structure {table_type(schema.name)} where")
    lines.append(f"  rows : List {row_type(schema.name)}")
    lines.append("deriving Repr, DecidableEq")
    body = "\n".join(lines) + "\n"
    text = banner(body) + "\n" + body
    return FormalModule(name=f"Tables/{schema.name}", kind="TablesDef",
                       sourceText=text, imports=(PRELUDE_MODULE,))


# ---------------------------------------------------------------------------
# API emission
# ---------------------------------------------------------------------------


class _ApiEmitter:
    def __init__(self, project: Project, api: ApiDef, graph: DependencyGraph):
        self.project = project
        self.api = api
        self.graph = graph
        self.deps = dependent_tables(api, project, graph)
        self.pred_count = 0
        self.lines: list[str] = []

    def emit(self) -> str:
        api = self.api
        rt = result_type(api.name)
        out = [f"inductive {rt} where"]
        for v in api.resultVariants:
            if v.payload:
                args = " ".join(f"({safe_name(n)} : {lean_col_type(t)})" for n, t in v.payload)
                out.append(f"  | {v.name} {args}")
            else:
                out.append(f"  | {v.name}")
        out.append("deriving Repr, DecidableEq")
        out.append("")
        out.append(f"def {rt}.isSuccess : {rt} -> Bool")
        for v in api.resultVariants:
            if v.success:
                holes = " _" * len(v.payload)
                out.append(f"  | {rt}.{v.name}{holes} => true")
        out.append("  | _ => false")
        out.append("")

        params = " ".join(f"({safe_name(n)} : {lean_col_type(t)})" for n, t in api.params)
        states = " ".join(f"({state_binder(t)} : {table_type(t)})" for t in self.deps)
        ret = " × ".join([rt] + [table_type(t) for t in self.deps])
        sig = f"def {fn_name(api.name)}"
        if params:
            sig += f" {params}"
        if states:
            sig += f" {states}"
        sig += f" :\n    {ret} :="
        out.append(sig)

        names = {n: safe_name(n) for n, _ in api.params}
        state_names = {t: state_binder(t) for t in self.deps}
        self.lines = []
        self._block(api.body, names, dict(state_names), 1)
        out.extend(self.lines)
        return "\n".join(out) + "\n"

    # -- helpers ----------------------------------------------------------

    def _pred(self, table: str, predicate: Expr, names: dict[str, str],
              indent: int) -> str:
        self.pred_count += 1
        pname = f"p{self.pred_count}"
        inner = dict(names)
        inner["row"] = "row"
        body = lean_expr(predicate, inner)
        self._ln(indent, f"let {pname} := fun (row : {row_type(table)}) => {body}")
        return pname

    def _ln(self, indent: int, text: str) -> None:
        self.lines.append("  " * indent + text)

    def _block(self, stmts: tuple[Stmt, ...], names: dict[str, str],
               states: dict[str, str], indent: int) -> None:
        if not stmts:
            raise EmitError(f"{self.api.name}: empty block reached the emitter")
        stmt, rest = stmts[0], stmts[1:]
        if isinstance(stmt, Let):
            self._ln(indent, f"let {safe_name(stmt.name)} := {lean_expr(stmt.expr, names)}")
            names = {**names, stmt.name: safe_name(stmt.name)}
            self._block(rest, names, states, indent)
        elif isinstance(stmt, If):
            self._ln(indent, f"if {lean_expr(stmt.cond, names)} then")
            self._block(stmt.thenBranch + rest, names, dict(states), indent + 1)
            self._ln(indent, "else")
            self._block(stmt.elseBranch + rest, names, dict(states), indent + 1)
        elif isinstance(stmt, TableRead):
            table = self.project.table(stmt.table)
            assert table is not None
            pname = self._pred(stmt.table, stmt.mode.predicate, names, indent)
            binder = states[stmt.table]
            target = safe_name(stmt.bind)
            if stmt.mode.kind == "exists":
                self._ln(indent, f"let {target} := List.any {binder}.rows {pname}")
            elif stmt.mode.kind == "count":
                self._ln(indent, f"let {target} := {PRELUDE_MODULE}.countBy {pname} {binder}.rows")
            elif stmt.mode.kind == "sumField":
                self._ln(indent, f"let {target} := {PRELUDE_MODULE}.sumBy "
                                 f"(fun row => row.{stmt.mode.column}) {pname} {binder}.rows")
            else:  # query
                self._ln(indent, f"let {target} := List.filter {pname} {binder}.rows")
            names = {**names, stmt.bind: target}
            self._block(rest, names, states, indent)
        elif isinstance(stmt, TableWrite):
            table = self.project.table(stmt.table)
            assert table is not None
            binder = states[stmt.table]
            new_binder = self._next_state(binder, stmt.table)
            tt = table_type(stmt.table)
            op = stmt.op
            if op.kind == "insert":
                values = {c: lean_expr(e, names) for c, e in op.rowExprs}
                lit = row_literal(table, values)
                self._ln(indent, f"let {new_binder} : {tt} := "
                                 f"{{ rows := {binder}.rows ++ [{lit}] }}")
            elif op.kind == "update":
                pname = self._pred(stmt.table, op.predicate, names, indent)  # type: ignore[arg-type]
                inner = dict(names)
                inner["row"] = "row"
                sets = ", ".join(f"{c} := {lean_expr(e, inner)}" for c, e in op.assignments)
                self._ln(indent, f"let {new_binder} : {tt} := {{ rows := "
                                 f"List.map (fun row => if {pname} row then "
                                 f"{{ row with {sets} }} else row) {binder}.rows }}")
            else:  # delete
                pname = self._pred(stmt.table, op.predicate, names, indent)  # type: ignore[arg-type]
                self._ln(indent, f"let {new_binder} : {tt} := "
                                 f"{{ rows := List.filter (fun row => !({pname} row)) {binder}.rows }}")
            states = {**states, stmt.table: new_binder}
            self._block(rest, names, states, indent)
        elif isinstance(stmt, CallApi):
            callee = self.project.api(stmt.api)
            assert callee is not None
            callee_deps = dependent_tables(callee, self.project, self.graph)
            written = written_tables(callee, self.graph)
            args = " ".join(lean_expr(a, names) for a in stmt.args)
            callee_states = " ".join(states[t] for t in callee_deps)
            call = " ".join(x for x in [fn_name(callee.name), args, callee_states] if x)
            self._ln(indent, f"match {call} with")
            crt = result_type(callee.name)
            for arm in sorted(stmt.arms, key=lambda a: _variant_index(callee, a.variant)):
                variant = callee.variant(arm.variant)
                assert variant is not None
                binds = [safe_name(b) for b in arm.bindings]
                pat_states = []
                arm_states = dict(states)
                for t in callee_deps:
                    if t in written:
                        fresh = self._next_state(states[t], t)
                        pat_states.append(fresh)
                        arm_states[t] = fresh
                    else:
                        pat_states.append("_")
                pat = ", ".join([" ".join([f"{crt}.{arm.variant}"] + binds)] + pat_states)
                self._ln(indent, f"| ({pat}) =>")
                arm_names = dict(names)
                for b, orig in zip(binds, arm.bindings):
                    arm_names[orig] = b
                self._block(arm.body + rest, arm_names, arm_states, indent + 1)
            names = names  # no fallthrough: arms are exhaustive and emit rest themselves
        elif isinstance(stmt, Return):
            rt = result_type(self.api.name)
            head = f"{rt}.{stmt.variant}"
            for e in stmt.payload:
                head += f" ({lean_expr(e, names)})"
            parts = [head] + [states[t] for t in self.deps]
            self._ln(indent, "(" + ", ".join(parts) + ")")
            # rest is the duplicated continuation of an enclosing If/match;
            # this branch returned first, so it is simply not emitted.
        else:
            raise EmitError(f"unknown statement {stmt!r}")

    def _next_state(self, binder: str, table: str) -> str:
        base = state_binder(table)
        suffix = binder[len(base):]
        n = int(suffix) if suffix else 0
        return f"{base}{n + 1}"


def _variant_index(api: ApiDef, name: str) -> int:
    for i, v in enumerate(api.resultVariants):
        if v.name == name:
            return i
    return len(api.resultVariants)


def emit_api(api: ApiDef, project: Project, graph: DependencyGraph) -> FormalModule:
    emitter = _ApiEmitter(project, api, graph)
    body = emitter.emit()
    imports = [PRELUDE_MODULE, f"{project.name}.Tables"]
    for e in sorted(graph.edges):
        if e.kind == "ApiApi" and e.src == api.name:
            imports.append(f"{project.name}.{e.dst}")
    text = banner(body) + "\n" + "\n".join(f"import {i}" for i in imports) + "\n\n" + body
    return FormalModule(name=f"{project.name}/{api.name}", kind="ApiDef",
                       sourceText=text, imports=tuple(imports))


def emit_project(project: Project, graph: DependencyGraph
                 ) -> tuple[list[FormalModule], dict]:
    """Emit every table and API plus a toolchain build manifest."""
    table_order = [t for t in graph.topoOrder if t in graph.tables]
    api_order = [a for a in graph.topoOrder if a in graph.apis]

    modules: list[FormalModule] = []
    table_bodies = []
    for tname in table_order:
        schema = project.table(tname)
        assert schema is not None
        mod = emit_table(schema)
        # strip the per-table banner; the merged file gets its own
        table_bodies.append(mod.sourceText.split("\n\n", 1)[1])
    merged = "\n".join(table_bodies)
    tables_text = banner(merged) + f"\nimport {PRELUDE_MODULE}\n\n" + merged
    modules.append(FormalModule(name=f"{project.name}/Tables", kind="TablesDef",
                               sourceText=tables_text, imports=(PRELUDE_MODULE,)))

    for aname in api_order:
        api = project.api(aname)
        assert api is not None
        modules.append(emit_api(api, project, graph))

    manifest = {
        "project": project.name,
        "pipelineVersion": __version__,
        "prelude": PRELUDE_MODULE,
        "modules": [
            {"name": m.name, "kind": m.kind, "imports": list(m.imports),
             "contentHash": hashlib.sha256(m.sourceText.encode()).hexdigest()}
            for m in modules
        ],
    }
    return modules, manifest
