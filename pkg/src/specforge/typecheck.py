"""Structural validation and API body type checking.

`type_check_api` returns diagnostics instead of raising so the formalizer
retry loop can feed them back to its backend; `validate_project` is the
raising wrapper used by the bundle parser.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import ir
from .errors import ValidationError
from .ir import (ApiDef, BinOp, CallApi, Expr, FieldOf, If, Let, LitBool,
                 LitInt, LitStr, Neg, Project, Return, Stmt, TableRead,
                 TableSchema, TableWrite, Var)

ROW_VAR = "row"


@dataclass(frozen=True)
class TypeDiag:
    """One type/scope problem found in an API body."""

    where: str  # dotted path into the body, e.g. "Withdrawal.body[2].then[0]"
    message: str

    def __str__(self) -> str:
        return f"{self.where}: {self.message}"


# Scope entries are either a ColType, ("row", table) for a predicate row /
# query-bound rows, or ("rows", table) for a Query binding.
ScopeTy = object


def infer_expr(expr: Expr, scope: dict[str, ScopeTy], project: Project,
               where: str, diags: list[TypeDiag]):
    """Infer the ColType of an expression, appending diagnostics on failure.

    Returns a ColType or None when the expression is ill-typed.
    """
    if isinstance(expr, Var):
        ty = scope.get(expr.name)
        if ty is None:
            diags.append(TypeDiag(where, f"unknown name '{expr.name}'"))
            return None
        if isinstance(ty, tuple):
            diags.append(TypeDiag(where, f"'{expr.name}' is not a scalar value"))
            return None
        return ty
    if isinstance(expr, LitInt):
        return "Int"
    if isinstance(expr, LitBool):
        return "Bool"
    if isinstance(expr, LitStr):
        return "Str"
    if isinstance(expr, FieldOf):
        ty = scope.get(expr.rowVar)
        if not (isinstance(ty, tuple) and ty[0] == "row"):
            diags.append(TypeDiag(where, f"'{expr.rowVar}' is not a row variable"))
            return None
        table = project.table(ty[1])
        assert table is not None
        col = table.column(expr.column)
        if col is None:
            diags.append(TypeDiag(
                where, f"table '{table.name}' has no column '{expr.column}'"))
            return None
        return col.colType
    if isinstance(expr, Neg):
        inner = infer_expr(expr.expr, scope, project, where, diags)
        if inner is not None and inner != "Bool":
            diags.append(TypeDiag(where, f"negation needs Bool, got {inner}"))
        return "Bool"
    if isinstance(expr, BinOp):
        lt = infer_expr(expr.lhs, scope, project, where, diags)
        rt = infer_expr(expr.rhs, scope, project, where, diags)
        if lt is None or rt is None:
            return None
        if expr.op in ir.BINOPS_ARITH:
            if lt != "Int" or rt != "Int":
                diags.append(TypeDiag(where, f"'{expr.op}' needs Int operands, got {lt}/{rt}"))
                return None
            return "Int"
        if expr.op in ("=", "!="):
            if lt != rt:
                diags.append(TypeDiag(where, f"'{expr.op}' compares {lt} with {rt}"))
                return None
            return "Bool"
        if expr.op in ("<", "<=", ">", ">="):
            if lt != "Int" or rt != "Int":
                diags.append(TypeDiag(where, f"'{expr.op}' needs Int operands, got {lt}/{rt}"))
                return None
            return "Bool"
        if expr.op in ir.BINOPS_LOGIC:
            if lt != "Bool" or rt != "Bool":
                diags.append(TypeDiag(where, f"'{expr.op}' needs Bool operands, got {lt}/{rt}"))
                return None
            return "Bool"
    diags.append(TypeDiag(where, f"unrecognized expression {expr!r}"))
    return None


def _check_predicate(pred: Expr, table: TableSchema, scope: dict[str, ScopeTy],
                     project: Project, where: str, diags: list[TypeDiag]) -> None:
    inner = dict(scope)
    inner[ROW_VAR] = ("row", table.name)
    ty = infer_expr(pred, inner, project, where, diags)
    if ty is not None and ty != "Bool":
        diags.append(TypeDiag(where, f"predicate must be Bool, got {ty}"))


def _check_block(body: tuple[Stmt, ...], api: ApiDef, scope: dict[str, ScopeTy],
                 project: Project, where: str, diags: list[TypeDiag],
                 top: bool = False) -> bool:
    """Check a statement block; returns True when every path through the block
    terminates in a Return. A nested block may fall through into its enclosing
    continuation, so the missing-Return diagnostic fires only at the top level."""
    scope = dict(scope)
    terminated = False
    for i, stmt in enumerate(body):
        loc = f"{where}[{i}]"
        if terminated:
            diags.append(TypeDiag(loc, "unreachable statement after Return"))
            return True
        if isinstance(stmt, Let):
            ty = infer_expr(stmt.expr, scope, project, loc, diags)
            scope[stmt.name] = ty if ty is not None else "Int"
        elif isinstance(stmt, If):
            cty = infer_expr(stmt.cond, scope, project, loc, diags)
            if cty is not None and cty != "Bool":
                diags.append(TypeDiag(loc, f"if-condition must be Bool, got {cty}"))
            t_done = _check_block(stmt.thenBranch, api, scope, project, f"{loc}.then", diags)
            e_done = _check_block(stmt.elseBranch, api, scope, project, f"{loc}.else", diags)
            terminated = t_done and e_done
        elif isinstance(stmt, TableRead):
            table = project.table(stmt.table)
            if table is None:
                diags.append(TypeDiag(loc, f"unknown table '{stmt.table}'"))
                continue
            _check_predicate(stmt.mode.predicate, table, scope, project, loc, diags)
            if stmt.mode.kind == "query":
                scope[stmt.bind] = ("rows", table.name)
            elif stmt.mode.kind in ("count", "sumField"):
                if stmt.mode.kind == "sumField":
                    col = table.column(stmt.mode.column or "")
                    if col is None:
                        diags.append(TypeDiag(
                            loc, f"table '{table.name}' has no column '{stmt.mode.column}'"))
                    elif col.colType != "Int":
                        diags.append(TypeDiag(loc, "sumField column must be Int"))
                scope[stmt.bind] = "Int"
            else:
                scope[stmt.bind] = "Bool"
        elif isinstance(stmt, TableWrite):
            table = project.table(stmt.table)
            if table is None:
                diags.append(TypeDiag(loc, f"unknown table '{stmt.table}'"))
                continue
            op = stmt.op
            if op.kind == "insert":
                given = dict(op.rowExprs)
                for col in table.columns:
                    if col.name not in given:
                        if col.notNull:
                            diags.append(TypeDiag(
                                loc, f"insert into '{table.name}' misses column '{col.name}'"))
                        continue
                    ty = infer_expr(given.pop(col.name), scope, project, loc, diags)
                    if ty is not None and ty != col.colType:
                        diags.append(TypeDiag(
                            loc, f"column '{col.name}' expects {col.colType}, got {ty}"))
                for extra in given:
                    diags.append(TypeDiag(
                        loc, f"insert into '{table.name}' names unknown column '{extra}'"))
            else:
                _check_predicate(op.predicate, table, scope, project, loc, diags)  # type: ignore[arg-type]
                if op.kind == "update":
                    for cname, cexpr in op.assignments:
                        col = table.column(cname)
                        if col is None:
                            diags.append(TypeDiag(
                                loc, f"table '{table.name}' has no column '{cname}'"))
                            continue
                        ty = infer_expr(cexpr, scope, project, loc, diags)
                        if ty is not None and ty != col.colType:
                            diags.append(TypeDiag(
                                loc, f"column '{cname}' expects {col.colType}, got {ty}"))
        elif isinstance(stmt, CallApi):
            callee = project.api(stmt.api)
            if callee is None:
                diags.append(TypeDiag(loc, f"unknown API '{stmt.api}'"))
                continue
            if len(stmt.args) != len(callee.params):
                diags.append(TypeDiag(
                    loc, f"'{callee.name}' takes {len(callee.params)} args, got {len(stmt.args)}"))
            for arg, (pname, pty) in zip(stmt.args, callee.params):
                ty = infer_expr(arg, scope, project, loc, diags)
                if ty is not None and ty != pty:
                    diags.append(TypeDiag(
                        loc, f"argument '{pname}' expects {pty}, got {ty}"))
            declared = {v.name for v in callee.resultVariants}
            covered = [a.variant for a in stmt.arms]
            if set(covered) != declared or len(covered) != len(set(covered)):
                diags.append(TypeDiag(
                    loc, f"arms must cover variants of '{callee.name}' exactly once "
                         f"(declared {sorted(declared)}, covered {sorted(covered)})"))
            all_term = bool(stmt.arms)
            for a in stmt.arms:
                variant = callee.variant(a.variant)
                arm_scope = dict(scope)
                if variant is not None:
                    if len(a.bindings) != len(variant.payload):
                        diags.append(TypeDiag(
                            loc, f"arm '{a.variant}' binds {len(a.bindings)} names for "
                                 f"{len(variant.payload)} payload fields"))
                    for bname, (_, bty) in zip(a.bindings, variant.payload):
                        arm_scope[bname] = bty
                done = _check_block(a.body, api, arm_scope, project,
                                    f"{loc}.{a.variant}", diags)
                all_term = all_term and done
            terminated = all_term
        elif isinstance(stmt, Return):
            variant = api.variant(stmt.variant)
            if variant is None:
                diags.append(TypeDiag(loc, f"undeclared return variant '{stmt.variant}'"))
            else:
                if len(stmt.payload) != len(variant.payload):
                    diags.append(TypeDiag(
                        loc, f"variant '{variant.name}' carries {len(variant.payload)} "
                             f"values, got {len(stmt.payload)}"))
                for e, (pname, pty) in zip(stmt.payload, variant.payload):
                    ty = infer_expr(e, scope, project, loc, diags)
                    if ty is not None and ty != pty:
                        diags.append(TypeDiag(
                            loc, f"payload '{pname}' expects {pty}, got {ty}"))
            terminated = True
        else:
            diags.append(TypeDiag(loc, f"unrecognized statement {stmt!r}"))
    if top and not terminated:
        diags.append(TypeDiag(where, "control path falls off the end without a Return"))
    return terminated


def type_check_api(project: Project, api: ApiDef) -> list[TypeDiag]:
    """Check one API body; empty result means every invariant holds."""
    diags: list[TypeDiag] = []
    seen_variants: set[str] = set()
    for v in api.resultVariants:
        if v.name in seen_variants:
            diags.append(TypeDiag(api.name, f"duplicate return variant '{v.name}'"))
        seen_variants.add(v.name)
    if not any(v.success for v in api.resultVariants):
        diags.append(TypeDiag(api.name, "no return variant is flagged success"))
    scope: dict[str, ScopeTy] = {}
    seen_params: set[str] = set()
    for pname, pty in api.params:
        if pname in seen_params:
            diags.append(TypeDiag(api.name, f"duplicate parameter '{pname}'"))
        seen_params.add(pname)
        scope[pname] = pty
    _check_block(api.body, api, scope, project, f"{api.name}.body", diags,
                 top=True)
    return diags


def validate_project(project: Project) -> None:
    """Raise ValidationError on the first batch of structural or type errors."""
    seen_services: set[str] = set()
    for svc in project.services:
        if not svc.name:
            raise ValidationError("service with empty name", project.name)
        if svc.name in seen_services:
            raise ValidationError(f"duplicate service name '{svc.name}'", project.name)
        seen_services.add(svc.name)

    seen_tables: set[str] = set()
    for t in project.tables:
        if t.name in seen_tables:
            raise ValidationError(f"duplicate table name '{t.name}'", t.name)
        seen_tables.add(t.name)
        if not t.columns:
            raise ValidationError("table has no columns", t.name)
        cols = [c.name for c in t.columns]
        if len(cols) != len(set(cols)):
            raise ValidationError("duplicate column names", t.name)
        if not t.primaryKey <= set(cols):
            raise ValidationError("primaryKey names unknown columns", t.name)

    for t in project.tables:
        for c in t.columns:
            if c.foreignKey is not None:
                target = project.table(c.foreignKey[0])
                if target is None:
                    raise ValidationError(
                        f"column '{c.name}' references unknown table '{c.foreignKey[0]}'", t.name)
                tcol = target.column(c.foreignKey[1])
                if tcol is None:
                    raise ValidationError(
                        f"column '{c.name}' references unknown column "
                        f"'{c.foreignKey[0]}.{c.foreignKey[1]}'", t.name)
                if tcol.colType != c.colType:
                    raise ValidationError(
                        f"foreign key '{c.name}' type {c.colType} does not match "
                        f"'{c.foreignKey[0]}.{c.foreignKey[1]}' type {tcol.colType}", t.name)

    seen_apis: set[str] = set()
    for api in project.apis:
        if api.name in seen_apis:
            raise ValidationError(f"duplicate API name '{api.name}'", api.name)
        seen_apis.add(api.name)
        svc = next((s for s in project.services if s.name == api.service), None)
        if svc is None or api not in svc.apis:
            raise ValidationError(
                f"API declares service '{api.service}' but lives elsewhere", api.name)

    for api in project.apis:
        diags = type_check_api(project, api)
        if diags:
            raise ValidationError(
                "; ".join(str(d) for d in diags[:8]), api.name)
