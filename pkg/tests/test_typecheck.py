"""Validator behavior: well-typed fixtures pass, broken IR is diagnosed."""

import pytest

from specforge.errors import ValidationError
from specforge.ir import (ApiDef, BinOp, Column, If, LitInt, LitStr, Project,
                          ReadMode, Return, ReturnVariant, Service,
                          TableRead, TableSchema, TableWrite, Var, WriteOp,
                          FieldOf)
from specforge.typecheck import type_check_api, validate_project


def _project(apis=(), tables=()):
    return Project("P", (Service("S", tuple(tables), tuple(apis)),))


T = TableSchema("T", (Column("k", "Int", unique=True), Column("v", "Str")),
                primaryKey=frozenset({"k"}))


def _api(body, variants=None, params=(("n", "Int"),)):
    variants = variants or (ReturnVariant("Ok", success=True),
                            ReturnVariant("Err"))
    return ApiDef("A", "S", tuple(params), variants, tuple(body))


def test_fixtures_validate(user_auth, bank):
    validate_project(user_auth)
    validate_project(bank)


def test_guard_if_with_continuation_is_fine():
    api = _api([
        If(BinOp("<", Var("n"), LitInt(0)), (Return("Err", ()),), ()),
        Return("Ok", ()),
    ])
    assert type_check_api(_project([api], [T]), api) == []


def test_missing_return_flagged():
    api = _api([If(BinOp("<", Var("n"), LitInt(0)), (Return("Err", ()),), ())])
    diags = type_check_api(_project([api], [T]), api)
    assert any("falls off" in d.message for d in diags)


def test_unreachable_after_return():
    api = _api([Return("Ok", ()), Return("Err", ())])
    diags = type_check_api(_project([api], [T]), api)
    assert any("unreachable" in d.message for d in diags)


def test_non_bool_condition():
    api = _api([If(Var("n"), (Return("Ok", ()),), (Return("Err", ()),))])
    diags = type_check_api(_project([api], [T]), api)
    assert any("Bool" in d.message for d in diags)


def test_insert_must_cover_not_null_columns():
    api = _api([
        TableWrite("T", WriteOp("insert", rowExprs=(("k", Var("n")),))),
        Return("Ok", ()),
    ])
    diags = type_check_api(_project([api], [T]), api)
    assert any("misses column 'v'" in d.message for d in diags)


def test_insert_wrong_type():
    api = _api([
        TableWrite("T", WriteOp("insert", rowExprs=(
            ("k", Var("n")), ("v", LitInt(3))))),
        Return("Ok", ()),
    ])
    diags = type_check_api(_project([api], [T]), api)
    assert any("expects Str" in d.message for d in diags)


def test_undeclared_variant():
    api = _api([Return("Nope", ())])
    diags = type_check_api(_project([api], [T]), api)
    assert any("undeclared return variant" in d.message for d in diags)


def test_predicate_sees_row_columns():
    api = _api([
        TableRead("found", "T", ReadMode(
            "exists", BinOp("=", FieldOf("row", "missing"), Var("n")))),
        Return("Ok", ()),
    ])
    diags = type_check_api(_project([api], [T]), api)
    assert any("missing" in d.message for d in diags)


def test_validate_rejects_duplicate_tables():
    p = Project("P", (Service("S", (T, T), ()),))
    with pytest.raises(ValidationError):
        validate_project(p)


def test_validate_rejects_bad_foreign_key():
    bad = TableSchema("U", (Column("ref", "Str",
                                   foreignKey=("T", "k")),))
    with pytest.raises(ValidationError) as exc:
        validate_project(_project(tables=[T, bad]))
    assert "foreign" in str(exc.value).lower() or "type" in str(exc.value).lower()


def test_validate_needs_success_variant():
    api = _api([Return("Err", ())],
               variants=(ReturnVariant("Err"),))
    with pytest.raises(ValidationError):
        validate_project(_project([api], [T]))
