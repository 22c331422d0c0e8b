"""JSON round-trip and malformed-input behavior of the IR codecs."""

import pytest

from specforge.errors import ParseError
from specforge.ir import (ApiDef, BinOp, CallApi, CallArm, Column, FieldOf,
                          If, Let, LitBool, LitInt, LitStr, Neg, ReadMode,
                          Return, ReturnVariant, TableRead, TableSchema,
                          TableWrite, Var, WriteOp, api_from_json,
                          api_to_json, expr_from_json, expr_to_json,
                          stmt_from_json, stmt_to_json, table_from_json,
                          table_to_json)

EXPRS = [
    Var("x"),
    LitInt(-7),
    LitBool(True),
    LitStr(""),
    LitStr("hello"),
    Neg(Var("flag")),
    BinOp("and", BinOp("=", FieldOf("row", "userId"), Var("uid")),
          BinOp("<", LitInt(0), Var("amount"))),
]


@pytest.mark.parametrize("expr", EXPRS)
def test_expr_round_trip(expr):
    assert expr_from_json(expr_to_json(expr)) == expr


def test_stmt_round_trip():
    stmt = If(
        BinOp("<=", Var("amount"), LitInt(0)),
        (Return("InvalidAmount", ()),),
        (
            Let("doubled", BinOp("*", Var("amount"), LitInt(2))),
            TableRead("bal", "Transaction",
                      ReadMode("sumField", LitBool(True), "amount")),
            TableWrite("Transaction", WriteOp(
                "insert", rowExprs=(("userId", Var("uid")),
                                    ("amount", Var("doubled"))))),
            CallApi("q", "BalanceQuery", (Var("uid"),), (
                CallArm("Success", ("b",), (Return("Success", (Var("b"),)),)),
                CallArm("NotFound", (), (Return("Missing", ()),)),
            )),
        ),
    )
    assert stmt_from_json(stmt_to_json(stmt)) == stmt


def test_write_op_round_trip():
    for op in (
        WriteOp("update",
                predicate=BinOp("=", FieldOf("row", "userId"), Var("u")),
                assignments=(("amount", LitInt(0)),)),
        WriteOp("delete",
                predicate=BinOp("=", FieldOf("row", "userId"), Var("u"))),
    ):
        stmt = TableWrite("T", op)
        assert stmt_from_json(stmt_to_json(stmt)) == stmt


def test_api_round_trip():
    api = ApiDef(
        name="Ping", service="Svc",
        params=(("n", "Int"),),
        resultVariants=(ReturnVariant("Pong", (("echo", "Int"),), True),),
        body=(Return("Pong", (Var("n"),)),),
        docText="Respond with the argument.",
    )
    assert api_from_json(api_to_json(api)) == api


def test_table_round_trip():
    table = TableSchema(
        "Order",
        (Column("id", "Int", unique=True),
         Column("userId", "Int", foreignKey=("User", "id")),
         Column("note", "Str", notNull=False)),
        primaryKey=frozenset({"id"}),
    )
    assert table_from_json(table_to_json(table)) == table


def test_unknown_expr_kind_rejected():
    with pytest.raises(ParseError):
        expr_from_json({"kind": "lambda", "body": {}})


def test_bad_operator_rejected():
    with pytest.raises(ParseError):
        expr_from_json({"kind": "binOp", "op": "xor",
                        "lhs": expr_to_json(Var("a")),
                        "rhs": expr_to_json(Var("b"))})


def test_lit_int_rejects_bool():
    with pytest.raises(ParseError):
        expr_from_json({"kind": "litInt", "value": True})


def test_empty_string_literal_accepted():
    assert expr_from_json({"kind": "litStr", "value": ""}) == LitStr("")


def test_missing_body_rejected():
    with pytest.raises(ParseError):
        api_from_json({"name": "X", "service": "S", "params": [],
                       "resultVariants": []})
