"""Stage 2: requirements, theorems, table properties, negations.

Control-flow paths are enumerated symbolically from the IR: branch decisions
and callee-arm choices become structured premises, the path's Return and
table writes become the outcome. Each requirement is then rendered as a Lean
theorem whose binders are the API parameters plus one initial state per
dependent table, whose hypotheses are the premises, and whose conclusion
equates the API call with the expected result and updated states.

Negations turn `forall xs, H1 -> ... -> Hn -> C` into
`exists xs, H1 /\\ ... /\\ Hn /\\ not C` so that proving the negation forces
a concrete counterexample witness.
"""

from __future__ import annotations

from dataclasses import dataclass

from .depgraph import DependencyGraph, analyze_dependencies, dependent_tables, written_tables
from .errors import AlreadyNegated, BackendUnavailable, PathExplosion, TemplateError
from .interp import TableStates, eval_expr, interpret_api
from .ir import (ApiDef, BinOp, CallApi, Expr, FieldOf, If, Let, LitBool,
                 LitInt, LitStr, Neg, Project, Return, Stmt, TableRead,
                 TableSchema, TableWrite, Var, WriteOp)
from .leanemit import (PRELUDE_MODULE, banner, fn_name, lean_col_type,
                       lean_expr, result_type, row_literal, row_type,
                       safe_name, state_binder, table_type)

DEFAULT_PATH_CAP = 256


# ---------------------------------------------------------------------------
# Symbolic values
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SState:
    """Symbolic table state: a base state (the initial binder, or a fresh
    binder introduced by a writing callee) plus pending symbolic writes."""

    table: str
    base: str = "init"
    ops: tuple[WriteOp, ...] = ()


@dataclass(frozen=True)
class SAgg:
    """Symbolic aggregate read over a symbolic table state. Participates in
    the expression grammar alongside the ordinary IR nodes."""

    kind: str  # query | count | sumField | exists
    table: str
    state: SState
    predicate: Expr
    column: str | None = None


@dataclass(frozen=True)
class PBranch:
    """Premise: a branch condition evaluated to `value` on this path."""

    cond: Expr
    value: bool


@dataclass(frozen=True)
class PCall:
    """Premise: a dependent API call returned the given variant, with its
    payload bound to fresh binder names."""

    api: str
    args: tuple[Expr, ...]
    variant: str
    bindings: tuple[str, ...]
    statesIn: tuple[SState, ...]  # callee's dependent tables, callee order
    freshStates: tuple[tuple[str, str], ...] = ()  # (table, fresh base name)


Premise = object  # PBranch | PCall


@dataclass(frozen=True)
class Outcome:
    variant: str
    payload: tuple[Expr, ...]
    states: tuple[tuple[str, SState], ...]  # api's dependent tables, topo order


@dataclass(frozen=True)
class Requirement:
    api: str
    pathId: int
    premises: tuple[Premise, ...]
    outcome: Outcome
    prose: str
    extraBinders: tuple[tuple[str, str], ...] = ()  # beyond params + states


# ---------------------------------------------------------------------------
# Path enumeration
# ---------------------------------------------------------------------------


def _subst(expr: Expr, env: dict[str, Expr]) -> Expr:
    if isinstance(expr, Var):
        return env.get(expr.name, expr)
    if isinstance(expr, (LitInt, LitBool, LitStr, FieldOf, SAgg)):
        return expr
    if isinstance(expr, Neg):
        return Neg(_subst(expr.expr, env))
    if isinstance(expr, BinOp):
        return BinOp(expr.op, _subst(expr.lhs, env), _subst(expr.rhs, env))
    raise AssertionError(f"unsubstitutable {expr!r}")


def _subst_pred(pred: Expr, env: dict[str, Expr]) -> Expr:
    inner = dict(env)
    inner.pop("row", None)
    return _subst(pred, inner)


def _subst_op(op: WriteOp, env: dict[str, Expr]) -> WriteOp:
    if op.kind == "insert":
        return WriteOp("insert", rowExprs=tuple(
            (c, _subst(e, env)) for c, e in op.rowExprs))
    if op.kind == "update":
        return WriteOp("update", predicate=_subst_pred(op.predicate, env),  # type: ignore[arg-type]
                       assignments=tuple((c, _subst_pred(e, env)) for c, e in op.assignments))
    return WriteOp("delete", predicate=_subst_pred(op.predicate, env))  # type: ignore[arg-type]


class _PathEnum:
    def __init__(self, project: Project, api: ApiDef, graph: DependencyGraph,
                 cap: int):
        self.project = project
        self.api = api
        self.graph = graph
        self.cap = cap
        self.deps = dependent_tables(api, project, graph)
        self.leaves: list[tuple[tuple[Premise, ...], Outcome,
                                tuple[tuple[str, str], ...]]] = []

    def run(self) -> None:
        env: dict[str, Expr] = {n: Var(n) for n, _ in self.api.params}
        states = {t: SState(t) for t in self.deps}
        self._walk(self.api.body, env, states, (), (), {n for n, _ in self.api.params})

    def _walk(self, stmts: tuple[Stmt, ...], env: dict[str, Expr],
              states: dict[str, SState], premises: tuple[Premise, ...],
              extra: tuple[tuple[str, str], ...], used: set[str]) -> None:
        if not stmts:
            raise AssertionError(f"{self.api.name}: path without Return (validator bug)")
        stmt, rest = stmts[0], stmts[1:]
        if isinstance(stmt, Let):
            env = {**env, stmt.name: _subst(stmt.expr, env)}
            self._walk(rest, env, states, premises, extra, used)
        elif isinstance(stmt, TableRead):
            agg = SAgg(stmt.mode.kind, stmt.table, states[stmt.table],
                       _subst_pred(stmt.mode.predicate, env), stmt.mode.column)
            self._walk(rest, {**env, stmt.bind: agg}, states, premises, extra, used)
        elif isinstance(stmt, TableWrite):
            st = states[stmt.table]
            new = SState(st.table, st.base, st.ops + (_subst_op(stmt.op, env),))
            self._walk(rest, env, {**states, stmt.table: new}, premises, extra, used)
        elif isinstance(stmt, If):
            cond = _subst(stmt.cond, env)
            known = self._known_value(premises, cond)
            if known is True:
                self._walk(stmt.thenBranch + rest, env, dict(states), premises, extra, used)
            elif known is False:
                self._walk(stmt.elseBranch + rest, env, dict(states), premises, extra, used)
            else:
                self._walk(stmt.thenBranch + rest, env, dict(states),
                           premises + (PBranch(cond, True),), extra, used)
                self._walk(stmt.elseBranch + rest, env, dict(states),
                           premises + (PBranch(cond, False),), extra, used)
        elif isinstance(stmt, CallApi):
            callee = self.project.api(stmt.api)
            assert callee is not None
            callee_deps = dependent_tables(callee, self.project, self.graph)
            written = written_tables(callee, self.graph)
            args = tuple(_subst(a, env) for a in stmt.args)
            states_in = tuple(states[t] for t in callee_deps)
            for arm in sorted(stmt.arms,
                              key=lambda a: _variant_index(callee, a.variant)):
                variant = callee.variant(arm.variant)
                assert variant is not None
                binds = []
                arm_env = dict(env)
                arm_extra = extra
                arm_used = set(used)
                for b, (_, bty) in zip(arm.bindings, variant.payload):
                    fresh = _freshen(b, arm_used)
                    arm_used.add(fresh)
                    binds.append(fresh)
                    arm_env[b] = Var(fresh)
                    arm_extra = arm_extra + ((fresh, lean_col_type(bty)),)
                arm_states = dict(states)
                fresh_states = []
                for t in callee_deps:
                    if t in written:
                        fresh = _freshen(f"{state_binder(t)}Out", arm_used)
                        arm_used.add(fresh)
                        fresh_states.append((t, fresh))
                        arm_states[t] = SState(t, base=fresh)
                        arm_extra = arm_extra + ((fresh, table_type(t)),)
                premise = PCall(stmt.api, args, arm.variant, tuple(binds),
                                states_in, tuple(fresh_states))
                self._walk(arm.body + rest, arm_env, arm_states,
                           premises + (premise,), arm_extra, arm_used)
        elif isinstance(stmt, Return):
            payload = tuple(_subst(e, env) for e in stmt.payload)
            outcome = Outcome(stmt.variant, payload,
                              tuple((t, states[t]) for t in self.deps))
            self.leaves.append((premises, outcome, extra))
            if len(self.leaves) > self.cap:
                raise PathExplosion(self.api.name, len(self.leaves), self.cap)
        else:
            raise AssertionError(f"unwalkable statement {stmt!r}")

    @staticmethod
    def _known_value(premises: tuple[Premise, ...], cond: Expr) -> bool | None:
        for p in premises:
            if isinstance(p, PBranch) and p.cond == cond:
                return p.value
        return None


def _variant_index(api: ApiDef, name: str) -> int:
    for i, v in enumerate(api.resultVariants):
        if v.name == name:
            return i
    return len(api.resultVariants)


def _freshen(name: str, used: set[str]) -> str:
    if name not in used:
        return name
    k = 2
    while f"{name}{k}" in used:
        k += 1
    return f"{name}{k}"


def enumerate_paths(project: Project, api: ApiDef,
                    graph: DependencyGraph | None = None,
                    cap: int = DEFAULT_PATH_CAP) -> list[Requirement]:
    """One Requirement per leaf of the branch tree (If branches x call arms),
    with dependent-API results carried as premises."""
    graph = graph or analyze_dependencies(project)
    enum = _PathEnum(project, api, graph, cap)
    enum.run()
    reqs = []
    for i, (premises, outcome, extra) in enumerate(enum.leaves, start=1):
        prose = _render_prose(api, premises, outcome)
        reqs.append(Requirement(api.name, i, premises, outcome, prose, extra))
    return reqs


# ---------------------------------------------------------------------------
# Symbolic evaluation (independent satisfaction/outcome checking)
# ---------------------------------------------------------------------------


def _eval_sym(expr: Expr, env: dict, init: TableStates, project: Project):
    if isinstance(expr, SAgg):
        rows = _eval_state(expr.state, env, init, project)
        matched = []
        for row in rows:
            inner = dict(env)
            inner["row"] = row
            if _eval_sym(expr.predicate, inner, init, project):
                matched.append(row)
        if expr.kind == "query":
            return matched
        if expr.kind == "count":
            return len(matched)
        if expr.kind == "sumField":
            return sum(r[expr.column] for r in matched)
        return bool(matched)
    if isinstance(expr, Var):
        return env[expr.name]
    if isinstance(expr, (LitInt, LitBool, LitStr)):
        return expr.value
    if isinstance(expr, FieldOf):
        return env[expr.rowVar][expr.column]
    if isinstance(expr, Neg):
        return not _eval_sym(expr.expr, env, init, project)
    if isinstance(expr, BinOp):
        lhs = _eval_sym(expr.lhs, env, init, project)
        rhs = _eval_sym(expr.rhs, env, init, project)
        return eval_expr(BinOp(expr.op, _lit(lhs), _lit(rhs)), {})
    raise AssertionError(f"unevaluable symbolic expression {expr!r}")


def _lit(v) -> Expr:
    if isinstance(v, bool):
        return LitBool(v)
    if isinstance(v, int):
        return LitInt(v)
    if isinstance(v, str):
        return LitStr(v)
    raise AssertionError(f"non-scalar in comparison: {v!r}")


def _eval_state(state: SState, env: dict, init: TableStates,
                project: Project) -> list[dict]:
    if state.base == "init":
        rows = list(init.get(state.table, []))
    else:
        rows = list(env[state.base])
    schema = project.table(state.table)
    assert schema is not None
    for op in state.ops:
        if op.kind == "insert":
            row = {}
            given = dict(op.rowExprs)
            for col in schema.columns:
                row[col.name] = (_eval_sym(given[col.name], env, init, project)
                                 if col.name in given else None)
            rows = rows + [row]
        elif op.kind == "update":
            out = []
            for row in rows:
                inner = dict(env)
                inner["row"] = row
                if _eval_sym(op.predicate, inner, init, project):  # type: ignore[arg-type]
                    new_row = dict(row)
                    for c, e in op.assignments:
                        new_row[c] = _eval_sym(e, inner, init, project)
                    out.append(new_row)
                else:
                    out.append(row)
            rows = out
        else:
            out = []
            for row in rows:
                inner = dict(env)
                inner["row"] = row
                if not _eval_sym(op.predicate, inner, init, project):  # type: ignore[arg-type]
                    out.append(row)
            rows = out
    return rows


def premises_satisfied(project: Project, req: Requirement, args,
                       tables: TableStates) -> tuple[bool, dict]:
    """Check the structured premises against a concrete assignment.

    Returns (satisfied, env) where env additionally holds the values of arm
    bindings and fresh post-call states collected along the way.
    """
    api = project.api(req.api)
    assert api is not None
    if isinstance(args, dict):
        env = {n: args[n] for n, _ in api.params}
    else:
        env = {n: v for (n, _), v in zip(api.params, args)}
    for p in req.premises:
        if isinstance(p, PBranch):
            value = _eval_sym(p.cond, env, tables, project)
            if bool(value) != p.value:
                return False, env
        elif isinstance(p, PCall):
            callee = project.api(p.api)
            assert callee is not None
            call_args = [_eval_sym(a, env, tables, project) for a in p.args]
            call_tables = {s.table: _eval_state(s, env, tables, project)
                           for s in p.statesIn}
            res = interpret_api(project, callee, call_args, call_tables)
            if res.variant != p.variant:
                return False, env
            for b, v in zip(p.bindings, res.payload):
                env[b] = v
            for t, fresh in p.freshStates:
                env[fresh] = res.tables[t]
        else:
            raise AssertionError(f"unknown premise {p!r}")
    return True, env


def expected_outcome(project: Project, req: Requirement, env: dict,
                     tables: TableStates):
    """Evaluate the declared outcome under a satisfying assignment."""
    payload = tuple(_eval_sym(e, env, tables, project) for e in req.outcome.payload)
    states = {t: _eval_state(s, env, tables, project) for t, s in req.outcome.states}
    return req.outcome.variant, payload, states


def requirement_holds(project: Project, req: Requirement, args,
                      tables: TableStates) -> bool | None:
    """None when the assignment does not satisfy the premises; otherwise
    whether interpret_api matches the declared outcome exactly."""
    ok, env = premises_satisfied(project, req, args, tables)
    if not ok:
        return None
    variant, payload, states = expected_outcome(project, req, env, tables)
    api = project.api(req.api)
    assert api is not None
    actual = interpret_api(project, api, args, tables)
    if actual.variant != variant or actual.payload != payload:
        return False
    for t, rows in states.items():
        if actual.tables.get(t, []) != rows:
            return False
    return True


# ---------------------------------------------------------------------------
# Prose rendering
# ---------------------------------------------------------------------------


def _prose_expr(expr: Expr) -> str:
    if isinstance(expr, Var):
        return expr.name
    if isinstance(expr, (LitInt, LitBool)):
        return str(expr.value)
    if isinstance(expr, LitStr):
        return repr(expr.value)
    if isinstance(expr, FieldOf):
        return f"{expr.rowVar}.{expr.column}"
    if isinstance(expr, Neg):
        return f"not ({_prose_expr(expr.expr)})"
    if isinstance(expr, BinOp):
        return f"({_prose_expr(expr.lhs)} {expr.op} {_prose_expr(expr.rhs)})"
    if isinstance(expr, SAgg):
        pred = _prose_expr(expr.predicate)
        noun = {"query": "rows", "count": "row count", "exists": "some row",
                "sumField": f"sum of {expr.column}"}[expr.kind]
        state = expr.table if not expr.state.ops else f"{expr.table} (after writes)"
        return f"{noun} of {state} where {pred}"
    return str(expr)


def _render_prose(api: ApiDef, premises: tuple[Premise, ...],
                  outcome: Outcome) -> str:
    parts = []
    if api.docText:
        line = api.docText.strip().splitlines()[0]
        parts.append(line if line.endswith(".") else line + ".")
    conds = []
    for p in premises:
        if isinstance(p, PBranch):
            conds.append(f"{_prose_expr(p.cond)} is {'true' if p.value else 'false'}")
        elif isinstance(p, PCall):
            binds = ", ".join(p.bindings)
            payload = f"({binds})" if binds else ""
            conds.append(f"{p.api}({', '.join(_prose_expr(a) for a in p.args)}) "
                         f"returns {p.variant}{payload}")
    if conds:
        parts.append("Given that " + " and ".join(conds) + ",")
    else:
        parts.append("Unconditionally,")
    payload = ", ".join(_prose_expr(e) for e in outcome.payload)
    result = outcome.variant + (f"({payload})" if payload else "")
    writes = []
    for t, s in outcome.states:
        if s.ops or s.base != "init":
            writes.append(f"{t} is updated ({len(s.ops)} write(s))")
        else:
            writes.append(f"{t} is unchanged")
    parts.append(f"{api.name} returns {result} and " + "; ".join(writes) + "."
                 if writes else f"{api.name} returns {result}.")
    return " ".join(parts)


# ---------------------------------------------------------------------------
# Lean rendering of symbolic values
# ---------------------------------------------------------------------------


def render_state(state: SState, project: Project) -> str:
    term = state_binder(state.table) if state.base == "init" else safe_name(state.base)
    schema = project.table(state.table)
    assert schema is not None
    tt = table_type(state.table)
    for op in state.ops:
        rows = f"({term} : {tt}).rows" if term.startswith("{") else f"{term}.rows"
        if op.kind == "insert":
            values = {c: render_sym(e, project) for c, e in op.rowExprs}
            lit = row_literal(schema, values)
            term = f"{{ rows := {rows} ++ [{lit}] }}"
        elif op.kind == "update":
            pred = _row_lambda(op.predicate, state.table, project)  # type: ignore[arg-type]
            sets = ", ".join(f"{c} := {render_sym(e, project, row_name='row')}"
                             for c, e in op.assignments)
            term = (f"{{ rows := List.map (fun row => if {pred} row then "
                    f"{{ row with {sets} }} else row) {rows} }}")
        else:
            pred = _row_lambda(op.predicate, state.table, project)  # type: ignore[arg-type]
            term = f"{{ rows := List.filter (fun row => !({pred} row)) {rows} }}"
    return term


def _row_lambda(pred: Expr, table: str, project: Project) -> str:
    return (f"(fun (row : {row_type(table)}) => "
            f"{render_sym(pred, project, row_name='row')})")


def render_sym(expr: Expr, project: Project, row_name: str | None = None) -> str:
    """Render a symbolic expression as a Lean Bool/Int/String term."""
    if isinstance(expr, SAgg):
        state = render_state(expr.state, project)
        if state.startswith("{"):
            state = f"({state} : {table_type(expr.table)})"
        pred = _row_lambda(expr.predicate, expr.table, project)
        if expr.kind == "exists":
            return f"List.any {state}.rows {pred}"
        if expr.kind == "count":
            return f"{PRELUDE_MODULE}.countBy {pred} {state}.rows"
        if expr.kind == "sumField":
            return (f"{PRELUDE_MODULE}.sumBy (fun row => row.{expr.column}) "
                    f"{pred} {state}.rows")
        return f"List.filter {pred} {state}.rows"
    if isinstance(expr, Neg):
        return f"!({render_sym(expr.expr, project, row_name)})"
    if isinstance(expr, BinOp):
        lhs = render_sym(expr.lhs, project, row_name)
        rhs = render_sym(expr.rhs, project, row_name)
        if expr.op in ("+", "-", "*"):
            return f"({lhs} {expr.op} {rhs})"
        if expr.op == "=":
            return f"decide ({lhs} = {rhs})"
        if expr.op == "!=":
            return f"!(decide ({lhs} = {rhs}))"
        if expr.op in ("<", "<=", ">", ">="):
            return f"decide ({lhs} {expr.op} {rhs})"
        return f"({lhs} {'&&' if expr.op == 'and' else '||'} {rhs})"
    return lean_expr(expr)


# ---------------------------------------------------------------------------
# Theorem specs
# ---------------------------------------------------------------------------


@dataclass
class TheoremSpec:
    id: str
    kind: str  # ApiPath | TableProp | Negation
    project: str
    service: str
    api: str | None
    table: str | None
    binders: tuple[tuple[str, str], ...]  # (name, lean type)
    hypotheses: tuple[tuple[str, str], ...]  # (name, proposition)
    conclusion: str
    prose: str
    sourceText: str = ""
    status: str = "Unproved"  # Unproved | Proved | BugFound | Unresolved
    proof: str | None = None

    @property
    def lean_name(self) -> str:
        return self.id.replace(".", "_").replace("-", "_")


def _theorem_source(spec: TheoremSpec) -> str:
    lines = []
    for line in spec.prose.splitlines():
        lines.append(f"-- {line}" if line else "--")
    if spec.kind == "Negation":
        binders = " ".join(f"({n} : {t})" for n, t in spec.binders)
        conjuncts = [prop for _, prop in spec.hypotheses]
        conjuncts.append(f"¬ ({spec.conclusion})")
        body = " ∧\n      ".join(conjuncts)
        if binders:
            stmt = f"theorem {spec.lean_name} :\n    ∃ {binders},\n      {body} := by\n  sorry"
        else:
            stmt = f"theorem {spec.lean_name} :\n      {body} := by\n  sorry"
        lines.append(stmt)
    else:
        lines.append(f"theorem {spec.lean_name}")
        for n, t in spec.binders:
            lines.append(f"    ({n} : {t})")
        for n, prop in spec.hypotheses:
            lines.append(f"    ({n} : {prop})")
        lines.append(f"    :\n    {spec.conclusion} := by\n  sorry")
    body = "\n".join(lines) + "\n"
    imports = [PRELUDE_MODULE, f"{spec.project}.Tables"]
    if spec.api:
        imports.append(f"{spec.project}.{spec.api}")
    header = "\n".join(f"import {i}" for i in imports)
    return banner(body) + "\n" + header + "\n\n" + body


def _call_term(api: ApiDef, deps: tuple[str, ...]) -> str:
    parts = [fn_name(api.name)]
    parts += [safe_name(n) for n, _ in api.params]
    parts += [state_binder(t) for t in deps]
    return " ".join(parts)


def _result_projection(i: int, n: int) -> str:
    """Projection path for the i-th table (0-based) in a result tuple of a
    result value plus n table states."""
    proj = ".2" * (i + 1)
    if i < n - 1:
        proj += ".1"
    return proj


def formalize_api_theorem(req: Requirement, project: Project,
                          graph: DependencyGraph | None = None) -> TheoremSpec:
    """Render one requirement as a Lean theorem (proof body `sorry`)."""
    graph = graph or analyze_dependencies(project)
    api = project.api(req.api)
    if api is None:
        raise TemplateError(f"unknown API {req.api!r}")
    deps = dependent_tables(api, project, graph)

    binders: list[tuple[str, str]] = []
    for n, t in api.params:
        binders.append((safe_name(n), lean_col_type(t)))
    for t in deps:
        binders.append((state_binder(t), table_type(t)))
    binders.extend(req.extraBinders)

    hypotheses: list[tuple[str, str]] = []
    for i, p in enumerate(req.premises, start=1):
        hypotheses.append((f"h{i}", _premise_prop(p, project, graph)))

    rt = result_type(api.name)
    head = f"{rt}.{req.outcome.variant}"
    for e in req.outcome.payload:
        head += f" ({render_sym(e, project)})"
    parts = [head]
    for t, s in req.outcome.states:
        term = render_state(s, project)
        if term.startswith("{"):
            term = f"({term} : {table_type(t)})"
        parts.append(term)
    conclusion = f"{_call_term(api, deps)} =\n      ({', '.join(parts)})"

    spec = TheoremSpec(
        id=f"{project.name}.{api.name}.path{req.pathId}",
        kind="ApiPath",
        project=project.name,
        service=api.service,
        api=api.name,
        table=None,
        binders=tuple(binders),
        hypotheses=tuple(hypotheses),
        conclusion=conclusion,
        prose=req.prose,
    )
    spec.sourceText = _theorem_source(spec)
    return spec


def _premise_prop(p: Premise, project: Project, graph: DependencyGraph) -> str:
    if isinstance(p, PBranch):
        return f"({render_sym(p.cond, project)}) = {'true' if p.value else 'false'}"
    if isinstance(p, PCall):
        callee = project.api(p.api)
        assert callee is not None
        callee_deps = dependent_tables(callee, project, graph)
        call = [fn_name(callee.name)]
        call += [f"({render_sym(a, project)})" if " " in render_sym(a, project)
                 else render_sym(a, project) for a in p.args]
        for s in p.statesIn:
            term = render_state(s, project)
            if term.startswith("{"):
                term = f"({term} : {table_type(s.table)})"
            call.append(term)
        rt = result_type(callee.name)
        head = " ".join([f"{rt}.{p.variant}"] + [safe_name(b) for b in p.bindings])
        fresh = dict(p.freshStates)
        out_states = []
        for s in p.statesIn:
            if s.table in fresh:
                out_states.append(safe_name(fresh[s.table]))
            else:
                term = render_state(s, project)
                if term.startswith("{"):
                    term = f"({term} : {table_type(s.table)})"
                out_states.append(term)
        rhs = ", ".join([head] + out_states)
        return f"{' '.join(call)} = ({rhs})"
    raise AssertionError(f"unknown premise {p!r}")


# ---------------------------------------------------------------------------
# Table properties
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TableProperty:
    table: str
    statement: str
    kind: str  # PreservedAlways | CountDeltaOnSuccess | Custom
    delta: int | None  # +1 / -1 for CountDeltaOnSuccess
    apis: frozenset[str]
    source: str  # RuleBased | Summarizer


def _success_variants(api: ApiDef) -> set[str]:
    return {v.name for v in api.resultVariants if v.success}


def _path_write_profile(project: Project, api: ApiDef, graph: DependencyGraph,
                        table: str) -> list[tuple[bool, tuple[WriteOp, ...], bool,
                                                  tuple[Premise, ...]]]:
    """Per path: (isSuccess, ops on `table`, cleanBase, premises)."""
    profile = []
    success = _success_variants(api)
    for req in enumerate_paths(project, api, graph):
        state = dict(req.outcome.states).get(table)
        ops = state.ops if state is not None else ()
        clean = state is None or state.base == "init"
        profile.append((req.outcome.variant in success, ops, clean, req.premises))
    return profile


def _gated_by_exists(premises: tuple[Premise, ...], table: str,
                     predicate: Expr) -> bool:
    """True when some branch premise forces `exists row matching predicate`
    on the table's initial state. Only the two syntactic shapes produced by
    the enumerator are recognized."""
    for p in premises:
        if not isinstance(p, PBranch):
            continue
        cond = p.cond
        value = p.value
        if isinstance(cond, Neg):
            cond, value = cond.expr, not value
        if (isinstance(cond, SAgg) and cond.kind == "exists"
                and cond.table == table and cond.state == SState(table)
                and cond.predicate == predicate and value):
            return True
    return False


def _unique_eq_predicate(pred: Expr, schema: TableSchema) -> bool:
    if not (isinstance(pred, BinOp) and pred.op == "="):
        return False
    for side in (pred.lhs, pred.rhs):
        if isinstance(side, FieldOf) and side.rowVar == "row":
            col = schema.column(side.column)
            if col is not None and (col.unique or col.name in schema.primaryKey):
                return True
    return False


def summarize_table_properties(project: Project, table: TableSchema,
                               graph: DependencyGraph | None = None,
                               backend=None,
                               require_backend: bool = False) -> list[TableProperty]:
    """Rule-based property pass, optionally extended by a Summarizer backend
    whose output is recorded as unvalidated Custom hypotheses."""
    graph = graph or analyze_dependencies(project)
    interacting = sorted({e.src for e in graph.edges
                          if e.kind in ("ApiTableRead", "ApiTableWrite")
                          and e.dst == table.name})
    preserved: list[str] = []
    plus_one: list[str] = []
    minus_one: list[str] = []
    for name in interacting:
        api = project.api(name)
        assert api is not None
        if table.name not in written_tables(api, graph):
            preserved.append(name)
            continue
        profile = _path_write_profile(project, api, graph, table.name)
        if any(not clean for _, _, clean, _ in profile):
            continue
        if all((len(ops) == 0) for ok, ops, _, _ in profile if not ok):
            succ = [(ops, prem) for ok, ops, _, prem in profile if ok]
            if succ and all(len(ops) == 1 and ops[0].kind == "insert"
                            for ops, _ in succ):
                plus_one.append(name)
            elif succ and all(
                    len(ops) == 1 and ops[0].kind == "delete"
                    and _unique_eq_predicate(ops[0].predicate, table)  # type: ignore[arg-type]
                    and _gated_by_exists(prem, table.name, ops[0].predicate)  # type: ignore[arg-type]
                    for ops, prem in succ):
                minus_one.append(name)

    props: list[TableProperty] = []
    if preserved:
        props.append(TableProperty(
            table.name,
            f"The {table.name} table is never modified by {', '.join(preserved)}.",
            "PreservedAlways", None, frozenset(preserved), "RuleBased"))
    if plus_one:
        props.append(TableProperty(
            table.name,
            f"A successful call of {', '.join(plus_one)} adds exactly one "
            f"record to {table.name}; failed calls leave it unchanged.",
            "CountDeltaOnSuccess", 1, frozenset(plus_one), "RuleBased"))
    if minus_one:
        props.append(TableProperty(
            table.name,
            f"A successful call of {', '.join(minus_one)} removes exactly one "
            f"record from {table.name}; failed calls leave it unchanged.",
            "CountDeltaOnSuccess", -1, frozenset(minus_one), "RuleBased"))

    if require_backend and backend is None:
        raise BackendUnavailable("table property summarizer requested but not configured")
    if backend is not None:
        for statement in backend.summarize(project, table, interacting):
            props.append(TableProperty(table.name, statement, "Custom", None,
                                       frozenset(interacting), "Summarizer"))
    return props


def formalize_table_theorem(prop: TableProperty, api: ApiDef, project: Project,
                            graph: DependencyGraph | None = None,
                            prop_index: int = 1) -> TheoremSpec:
    """One theorem per associated API: minimal hypotheses, conclusion about
    the table state only."""
    if api.name not in prop.apis:
        raise TemplateError(f"{api.name} is not associated with this property")
    if prop.kind == "Custom":
        raise TemplateError("Custom properties are informal hypotheses; no template")
    graph = graph or analyze_dependencies(project)
    deps = dependent_tables(api, project, graph)
    if prop.table not in deps:
        raise TemplateError(
            f"table {prop.table} is not in the signature of {api.name}")
    idx = deps.index(prop.table)
    proj = _result_projection(idx, len(deps))
    call = _call_term(api, deps)
    binders = [(safe_name(n), lean_col_type(t)) for n, t in api.params]
    binders += [(state_binder(t), table_type(t)) for t in deps]

    hypotheses: list[tuple[str, str]] = []
    init_len = f"{state_binder(prop.table)}.rows.length"
    out_len = f"({call}){proj}.rows.length"
    if prop.kind == "PreservedAlways":
        conclusion = f"{out_len} = {init_len}"
    else:
        rt = result_type(api.name)
        hypotheses.append(
            ("hSuccess", f"{rt}.isSuccess ({call}).1 = true"))
        if prop.delta == 1:
            conclusion = f"{out_len} = {init_len} + 1"
        else:
            conclusion = f"{out_len} + 1 = {init_len}"

    spec = TheoremSpec(
        id=f"{project.name}.{prop.table}.prop{prop_index}.{api.name}",
        kind="TableProp",
        project=project.name,
        service=api.service,
        api=api.name,
        table=prop.table,
        binders=tuple(binders),
        hypotheses=tuple(hypotheses),
        conclusion=conclusion,
        prose=prop.statement,
    )
    spec.sourceText = _theorem_source(spec)
    return spec


def generate_theorems(project: Project, graph: DependencyGraph | None = None,
                      cap: int = DEFAULT_PATH_CAP,
                      summarizer=None) -> list[TheoremSpec]:
    """All API path theorems plus all table property theorems, in a stable
    deterministic order."""
    graph = graph or analyze_dependencies(project)
    specs: list[TheoremSpec] = []
    for name in graph.topoOrder:
        api = project.api(name)
        if api is None:
            continue
        for req in enumerate_paths(project, api, graph, cap):
            specs.append(formalize_api_theorem(req, project, graph))
    for tname in graph.topoOrder:
        schema = project.table(tname)
        if schema is None:
            continue
        props = summarize_table_properties(project, schema, graph, backend=summarizer)
        for i, prop in enumerate(props, start=1):
            if prop.kind == "Custom":
                continue
            for aname in sorted(prop.apis):
                api = project.api(aname)
                assert api is not None
                specs.append(formalize_table_theorem(prop, api, project, graph, i))
    return specs


# ---------------------------------------------------------------------------
# Negation
# ---------------------------------------------------------------------------


def spec_to_json(t: TheoremSpec) -> dict:
    return {
        "id": t.id,
        "kind": t.kind,
        "project": t.project,
        "service": t.service,
        "api": t.api,
        "table": t.table,
        "binders": [list(b) for b in t.binders],
        "hypotheses": [list(h) for h in t.hypotheses],
        "conclusion": t.conclusion,
        "prose": t.prose,
        "sourceText": t.sourceText,
        "status": t.status,
        "proof": t.proof,
    }


def spec_from_json(d: dict) -> TheoremSpec:
    return TheoremSpec(
        id=d["id"],
        kind=d["kind"],
        project=d["project"],
        service=d["service"],
        api=d.get("api"),
        table=d.get("table"),
        binders=tuple(tuple(b) for b in d["binders"]),
        hypotheses=tuple(tuple(h) for h in d["hypotheses"]),
        conclusion=d["conclusion"],
        prose=d["prose"],
        sourceText=d["sourceText"],
        status=d.get("status", "Unproved"),
        proof=d.get("proof"),
    )


def negate_theorem(t: TheoremSpec) -> TheoremSpec:
    """forall/implications become one existential with all hypotheses as
    conjuncts and the conclusion negated, forcing witness construction."""
    if t.kind == "Negation" or t.id.endswith(".neg"):
        raise AlreadyNegated(f"{t.id} is already a negation")
    neg = TheoremSpec(
        id=t.id + ".neg",
        kind="Negation",
        project=t.project,
        service=t.service,
        api=t.api,
        table=t.table,
        binders=t.binders,
        hypotheses=t.hypotheses,
        conclusion=t.conclusion,
        prose=f"Negation (counterexample search) of: {t.prose}",
    )
    neg.sourceText = _theorem_source(neg)
    return neg
