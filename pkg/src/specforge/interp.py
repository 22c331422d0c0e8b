"""Reference interpreter for API bodies.

Executes the IR directly on Python values and serves as the independent
oracle for the Lean emission: variant, payload, and updated table states must
agree with the emitted function. Table states are lists of column->value
dicts; execution is purely functional (inputs are never mutated).

The interpreter also records the branch decisions and call-arm choices it
takes, which is how requirement soundness checks identify the control path a
concrete run exercised.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .ir import (ApiDef, BinOp, CallApi, Expr, FieldOf, If, Let, LitBool,
                 LitInt, LitStr, Neg, Project, Return, Stmt, TableRead,
                 TableWrite, Var)
from .typecheck import ROW_VAR

Value = object  # int | bool | str | None | list[dict]
TableStates = dict[str, list[dict]]

# One decision per trace entry: ("if", bool) or ("arm", calleeName, variant).
Decision = tuple


@dataclass(frozen=True)
class InterpResult:
    variant: str
    payload: tuple
    tables: TableStates
    trace: tuple[Decision, ...] = ()


def eval_expr(expr: Expr, env: dict[str, Value]) -> Value:
    if isinstance(expr, Var):
        return env[expr.name]
    if isinstance(expr, (LitInt, LitBool, LitStr)):
        return expr.value
    if isinstance(expr, FieldOf):
        row = env[expr.rowVar]
        return row[expr.column]  # type: ignore[index]
    if isinstance(expr, Neg):
        return not eval_expr(expr.expr, env)
    if isinstance(expr, BinOp):
        lhs = eval_expr(expr.lhs, env)
        rhs = eval_expr(expr.rhs, env)
        op = expr.op
        if op == "+":
            return lhs + rhs  # type: ignore[operator]
        if op == "-":
            return lhs - rhs  # type: ignore[operator]
        if op == "*":
            return lhs * rhs  # type: ignore[operator]
        if op == "=":
            return lhs == rhs
        if op == "!=":
            return lhs != rhs
        if op == "<":
            return lhs < rhs  # type: ignore[operator]
        if op == "<=":
            return lhs <= rhs  # type: ignore[operator]
        if op == ">":
            return lhs > rhs  # type: ignore[operator]
        if op == ">=":
            return lhs >= rhs  # type: ignore[operator]
        if op == "and":
            return bool(lhs) and bool(rhs)
        if op == "or":
            return bool(lhs) or bool(rhs)
    raise AssertionError(f"unevaluable expression {expr!r}")


def _match_rows(rows: list[dict], pred: Expr, env: dict[str, Value]) -> list[dict]:
    out = []
    for row in rows:
        inner = dict(env)
        inner[ROW_VAR] = row
        if eval_expr(pred, inner):
            out.append(row)
    return out


class _Exec:
    def __init__(self, project: Project, tables: TableStates):
        self.project = project
        self.tables = {name: list(rows) for name, rows in tables.items()}
        self.trace: list[Decision] = []

    def run_block(self, body: tuple[Stmt, ...], env: dict[str, Value]):
        env = dict(env)
        for stmt in body:
            if isinstance(stmt, Let):
                env[stmt.name] = eval_expr(stmt.expr, env)
            elif isinstance(stmt, If):
                cond = bool(eval_expr(stmt.cond, env))
                self.trace.append(("if", cond))
                branch = stmt.thenBranch if cond else stmt.elseBranch
                result = self.run_block(branch, env)
                if result is not None:
                    return result
            elif isinstance(stmt, TableRead):
                rows = self.tables.setdefault(stmt.table, [])
                matched = _match_rows(rows, stmt.mode.predicate, env)
                if stmt.mode.kind == "query":
                    env[stmt.bind] = [dict(r) for r in matched]
                elif stmt.mode.kind == "count":
                    env[stmt.bind] = len(matched)
                elif stmt.mode.kind == "sumField":
                    env[stmt.bind] = sum(r[stmt.mode.column] for r in matched)
                else:
                    env[stmt.bind] = bool(matched)
            elif isinstance(stmt, TableWrite):
                rows = self.tables.setdefault(stmt.table, [])
                op = stmt.op
                if op.kind == "insert":
                    schema = self.project.table(stmt.table)
                    assert schema is not None
                    given = dict(op.rowExprs)
                    row = {}
                    for col in schema.columns:
                        if col.name in given:
                            row[col.name] = eval_expr(given[col.name], env)
                        else:
                            row[col.name] = None
                    self.tables[stmt.table] = rows + [row]
                elif op.kind == "update":
                    updated = []
                    for row in rows:
                        inner = dict(env)
                        inner[ROW_VAR] = row
                        if eval_expr(op.predicate, inner):  # type: ignore[arg-type]
                            new_row = dict(row)
                            for cname, cexpr in op.assignments:
                                new_row[cname] = eval_expr(cexpr, inner)
                            updated.append(new_row)
                        else:
                            updated.append(row)
                    self.tables[stmt.table] = updated
                else:  # delete
                    kept = []
                    for row in rows:
                        inner = dict(env)
                        inner[ROW_VAR] = row
                        if not eval_expr(op.predicate, inner):  # type: ignore[arg-type]
                            kept.append(row)
                    self.tables[stmt.table] = kept
            elif isinstance(stmt, CallApi):
                callee = self.project.api(stmt.api)
                assert callee is not None
                args = [eval_expr(a, env) for a in stmt.args]
                sub = interpret_api(self.project, callee, args, self.tables)
                self.tables = {n: list(r) for n, r in sub.tables.items()}
                self.trace.append(("arm", stmt.api, sub.variant))
                arm = next(a for a in stmt.arms if a.variant == sub.variant)
                arm_env = dict(env)
                for bname, value in zip(arm.bindings, sub.payload):
                    arm_env[bname] = value
                result = self.run_block(arm.body, arm_env)
                if result is not None:
                    return result
            elif isinstance(stmt, Return):
                payload = tuple(eval_expr(e, env) for e in stmt.payload)
                return stmt.variant, payload
            else:
                raise AssertionError(f"unexecutable statement {stmt!r}")
        return None


def interpret_api(project: Project, api: ApiDef, args,
                  tables: TableStates) -> InterpResult:
    """Execute one API on concrete arguments and table states.

    `args` is a list/tuple in parameter order or a name->value mapping.
    Total for inputs that satisfy the validated IR's typing.
    """
    if isinstance(args, dict):
        env = {name: args[name] for name, _ in api.params}
    else:
        env = {name: value for (name, _), value in zip(api.params, args)}
    ex = _Exec(project, tables)
    result = ex.run_block(api.body, env)
    assert result is not None, f"API {api.name} fell off the end (validator bug)"
    variant, payload = result
    return InterpResult(variant, payload, ex.tables, tuple(ex.trace))
