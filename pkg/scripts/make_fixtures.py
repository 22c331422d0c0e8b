#!/usr/bin/env python3
"""Regenerate the bundled fixture projects and their seeded-bug variants.

Builds the UserAuth and BankAccount IR in code, serializes them to the
bundle layout under fixtures/projects/, and writes the variant patch files
under fixtures/variants/. Run from the repository root:

    python3 scripts/make_fixtures.py
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from specforge.ir import (ApiDef, BinOp, CallApi, CallArm, Column, FieldOf,
                          If, LitBool, LitInt, LitStr, Neg, Project, ReadMode,
                          Return, ReturnVariant, Service, TableRead,
                          TableSchema, TableWrite, Var, WriteOp, api_to_json)
from specforge.parser import write_project
from specforge.typecheck import validate_project


def v(name):
    return Var(name)


def col(row_column):
    return FieldOf("row", row_column)


def eq(lhs, rhs):
    return BinOp("=", lhs, rhs)


def insert(table, **cols):
    return TableWrite(table, WriteOp("insert", rowExprs=tuple(cols.items())))


def ret(variant, *payload):
    return Return(variant, tuple(payload))


def branch(cond, *then):
    return If(cond, tuple(then), ())


# ---------------------------------------------------------------------------
# UserAuth
# ---------------------------------------------------------------------------

USER_TABLE = TableSchema(
    "User",
    (
        Column("phone", "Str", unique=True),
        Column("password", "Str"),
    ),
    primaryKey=frozenset({"phone"}),
)

REGISTER = ApiDef(
    name="UserRegister",
    service="Auth",
    params=(("phone", "Str"), ("password", "Str")),
    resultVariants=(
        ReturnVariant("Success", success=True),
        ReturnVariant("InvalidPhone"),
        ReturnVariant("AlreadyExists"),
    ),
    body=(
        branch(eq(v("phone"), LitStr("")), ret("InvalidPhone")),
        TableRead("taken", "User", ReadMode("exists", eq(col("phone"), v("phone")))),
        branch(v("taken"), ret("AlreadyExists")),
        insert("User", phone=v("phone"), password=v("password")),
        ret("Success"),
    ),
)

LOGIN = ApiDef(
    name="UserLogin",
    service="Auth",
    params=(("phone", "Str"), ("password", "Str")),
    resultVariants=(
        ReturnVariant("Success", success=True),
        ReturnVariant("DbError"),
        ReturnVariant("NotFound"),
        ReturnVariant("WrongPassword"),
    ),
    body=(
        TableRead("n", "User", ReadMode("count", eq(col("phone"), v("phone")))),
        branch(BinOp(">", v("n"), LitInt(1)), ret("DbError")),
        branch(eq(v("n"), LitInt(0)), ret("NotFound")),
        TableRead("ok", "User", ReadMode(
            "exists",
            BinOp("and", eq(col("phone"), v("phone")),
                  eq(col("password"), v("password"))))),
        If(v("ok"), (ret("Success"),), (ret("WrongPassword"),)),
    ),
)

USER_AUTH = Project("UserAuth", (
    Service("Auth", (USER_TABLE,), (REGISTER, LOGIN)),
))


# ---------------------------------------------------------------------------
# BankAccount
# ---------------------------------------------------------------------------

ACCOUNT_TABLE = TableSchema(
    "Account",
    (
        Column("userId", "Int", unique=True),
        Column("name", "Str"),
    ),
    primaryKey=frozenset({"userId"}),
)

TRANSACTION_TABLE = TableSchema(
    "Transaction",
    (
        Column("userId", "Int", foreignKey=("Account", "userId")),
        Column("amount", "Int"),
    ),
)

REGISTER_ACCOUNT = ApiDef(
    name="RegisterAccount",
    service="AccountService",
    params=(("userId", "Int"), ("name", "Str")),
    resultVariants=(
        ReturnVariant("Success", success=True),
        ReturnVariant("AlreadyExists"),
    ),
    body=(
        TableRead("found", "Account",
                  ReadMode("exists", eq(col("userId"), v("userId")))),
        branch(v("found"), ret("AlreadyExists")),
        insert("Account", userId=v("userId"), name=v("name")),
        ret("Success"),
    ),
)

DELETE_ACCOUNT = ApiDef(
    name="DeleteAccount",
    service="AccountService",
    params=(("userId", "Int"),),
    resultVariants=(
        ReturnVariant("Success", success=True),
        ReturnVariant("NotFound"),
    ),
    body=(
        TableRead("found", "Account",
                  ReadMode("exists", eq(col("userId"), v("userId")))),
        branch(Neg(v("found")), ret("NotFound")),
        TableWrite("Account", WriteOp("delete",
                                      predicate=eq(col("userId"), v("userId")))),
        ret("Success"),
    ),
)

DEPOSIT = ApiDef(
    name="Deposit",
    service="TransactionService",
    params=(("userId", "Int"), ("amount", "Int")),
    resultVariants=(
        ReturnVariant("Success", payload=(("balance", "Int"),), success=True),
        ReturnVariant("InvalidAmount"),
        ReturnVariant("AccountMissing"),
    ),
    body=(
        branch(BinOp("<=", v("amount"), LitInt(0)), ret("InvalidAmount")),
        TableRead("found", "Account",
                  ReadMode("exists", eq(col("userId"), v("userId")))),
        branch(Neg(v("found")), ret("AccountMissing")),
        insert("Transaction", userId=v("userId"), amount=v("amount")),
        TableRead("bal", "Transaction",
                  ReadMode("sumField", eq(col("userId"), v("userId")), "amount")),
        ret("Success", v("bal")),
    ),
)

WITHDRAWAL = ApiDef(
    name="Withdrawal",
    service="TransactionService",
    params=(("userId", "Int"), ("amount", "Int")),
    resultVariants=(
        ReturnVariant("Success", payload=(("balance", "Int"),), success=True),
        ReturnVariant("InvalidAmount"),
        ReturnVariant("AccountMissing"),
        ReturnVariant("InsufficientBalance"),
    ),
    body=(
        branch(BinOp("<=", v("amount"), LitInt(0)), ret("InvalidAmount")),
        CallApi("q", "BalanceQuery", (v("userId"),), (
            CallArm("Success", ("bal",), (
                branch(BinOp("<", v("bal"), v("amount")),
                       ret("InsufficientBalance")),
                insert("Transaction", userId=v("userId"),
                       amount=BinOp("-", LitInt(0), v("amount"))),
                ret("Success", BinOp("-", v("bal"), v("amount"))),
            )),
            CallArm("NotFound", (), (ret("AccountMissing"),)),
        )),
    ),
)

BALANCE_QUERY = ApiDef(
    name="BalanceQuery",
    service="QueryService",
    params=(("userId", "Int"),),
    resultVariants=(
        ReturnVariant("Success", payload=(("balance", "Int"),), success=True),
        ReturnVariant("NotFound"),
    ),
    body=(
        TableRead("found", "Account",
                  ReadMode("exists", eq(col("userId"), v("userId")))),
        branch(Neg(v("found")), ret("NotFound")),
        TableRead("bal", "Transaction",
                  ReadMode("sumField", eq(col("userId"), v("userId")), "amount")),
        ret("Success", v("bal")),
    ),
)

BANK_ACCOUNT = Project("BankAccount", (
    Service("AccountService", (ACCOUNT_TABLE,), (REGISTER_ACCOUNT, DELETE_ACCOUNT)),
    Service("TransactionService", (TRANSACTION_TABLE,), (DEPOSIT, WITHDRAWAL)),
    Service("QueryService", (), (BALANCE_QUERY,)),
))


DOCS = {
    "UserRegister": "Register a new user account keyed by phone number.\n\n"
                    "Rejects an empty phone number and rejects a phone number\n"
                    "that is already registered; otherwise stores the\n"
                    "credential pair.\n",
    "UserLogin": "Authenticate a user by phone number and password.\n\n"
                 "Reports a database error when the phone number is\n"
                 "duplicated, a not-found error when it is absent, and a\n"
                 "wrong-password error on credential mismatch.\n",
    "RegisterAccount": "Create a bank account for a user id that does not\n"
                       "already have one.\n",
    "DeleteAccount": "Remove the bank account for a user id, failing when\n"
                     "no such account exists.\n",
    "Deposit": "Add a positive amount to an existing account and report the\n"
               "resulting balance.\n",
    "Withdrawal": "Take a positive amount from an existing account with\n"
                  "sufficient funds and report the resulting balance.\n",
    "BalanceQuery": "Report the current balance of an existing account as\n"
                    "the sum of its transaction amounts.\n",
}


# ---------------------------------------------------------------------------
# Seeded-bug variants (each patches one API body)
# ---------------------------------------------------------------------------


def _variant(project, vid, description, *apis):
    return {
        "project": project,
        "id": vid,
        "description": description,
        "apis": [api_to_json(a) for a in apis],
    }


UA_V1 = _variant(
    "UserAuth", "v1",
    "UserRegister inserts without checking whether the phone number is "
    "already registered.",
    ApiDef(REGISTER.name, REGISTER.service, REGISTER.params,
           REGISTER.resultVariants, (
               branch(eq(v("phone"), LitStr("")), ret("InvalidPhone")),
               insert("User", phone=v("phone"), password=v("password")),
               ret("Success"),
           )))

UA_V2 = _variant(
    "UserAuth", "v2",
    "UserLogin does not report a database error when the phone number is "
    "duplicated.",
    ApiDef(LOGIN.name, LOGIN.service, LOGIN.params, LOGIN.resultVariants, (
        TableRead("n", "User", ReadMode("count", eq(col("phone"), v("phone")))),
        branch(eq(v("n"), LitInt(0)), ret("NotFound")),
        TableRead("ok", "User", ReadMode(
            "exists",
            BinOp("and", eq(col("phone"), v("phone")),
                  eq(col("password"), v("password"))))),
        If(v("ok"), (ret("Success"),), (ret("WrongPassword"),)),
    )))

BA_V1 = _variant(
    "BankAccount", "v1",
    "BalanceQuery sums the amounts of every transaction instead of only the "
    "account's own transactions.",
    ApiDef(BALANCE_QUERY.name, BALANCE_QUERY.service, BALANCE_QUERY.params,
           BALANCE_QUERY.resultVariants, (
               TableRead("found", "Account",
                         ReadMode("exists", eq(col("userId"), v("userId")))),
               branch(Neg(v("found")), ret("NotFound")),
               TableRead("bal", "Transaction",
                         ReadMode("sumField", LitBool(True), "amount")),
               ret("Success", v("bal")),
           )))

BA_V2 = _variant(
    "BankAccount", "v2",
    "Deposit accepts non-positive amounts.",
    ApiDef(DEPOSIT.name, DEPOSIT.service, DEPOSIT.params,
           DEPOSIT.resultVariants, (
               TableRead("found", "Account",
                         ReadMode("exists", eq(col("userId"), v("userId")))),
               branch(Neg(v("found")), ret("AccountMissing")),
               insert("Transaction", userId=v("userId"), amount=v("amount")),
               TableRead("bal", "Transaction",
                         ReadMode("sumField", eq(col("userId"), v("userId")),
                                  "amount")),
               ret("Success", v("bal")),
           )))

BA_V3 = _variant(
    "BankAccount", "v3",
    "Withdrawal records the withdrawn amount as a positive transaction, so "
    "withdrawing increases the balance.",
    ApiDef(WITHDRAWAL.name, WITHDRAWAL.service, WITHDRAWAL.params,
           WITHDRAWAL.resultVariants, (
               branch(BinOp("<=", v("amount"), LitInt(0)), ret("InvalidAmount")),
               CallApi("q", "BalanceQuery", (v("userId"),), (
                   CallArm("Success", ("bal",), (
                       branch(BinOp("<", v("bal"), v("amount")),
                              ret("InsufficientBalance")),
                       insert("Transaction", userId=v("userId"),
                              amount=v("amount")),
                       ret("Success", BinOp("-", v("bal"), v("amount"))),
                   )),
                   CallArm("NotFound", (), (ret("AccountMissing"),)),
               )),
           )))

VARIANTS = [UA_V1, UA_V2, BA_V1, BA_V2, BA_V3]


def _yaml_mirror(bundle: Path) -> None:
    """Rewrite the Transaction table as YAML to exercise that parser path."""
    json_path = bundle / "tables" / "Transaction.table.json"
    json_path.unlink()
    yaml_path = bundle / "tables" / "Transaction.table.yaml"
    yaml_path.write_text(
        "name: Transaction\n"
        "columns:\n"
        "  - name: userId\n"
        "    type: Int\n"
        "    foreignKey: Account.userId\n"
        "  - name: amount\n"
        "    type: Int\n"
    )
    manifest_path = bundle / "project.json"
    manifest = json.loads(manifest_path.read_text())
    for svc in manifest["services"]:
        svc["tables"] = [
            f.replace("Transaction.table.json", "Transaction.table.yaml")
            for f in svc["tables"]
        ]
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n")


def main() -> None:
    projects_dir = ROOT / "fixtures" / "projects"
    variants_dir = ROOT / "fixtures" / "variants"
    variants_dir.mkdir(parents=True, exist_ok=True)
    for project in (USER_AUTH, BANK_ACCOUNT):
        validate_project(project)
        bundle = projects_dir / project.name
        write_project(project, bundle)
        docs = bundle / "docs"
        docs.mkdir(exist_ok=True)
        for api in project.apis:
            (docs / f"{api.name}.md").write_text(DOCS[api.name])
        if project.name == "BankAccount":
            _yaml_mirror(bundle)
        print(f"wrote {bundle}")
    for variant in VARIANTS:
        path = variants_dir / f"{variant['project']}.{variant['id']}.json"
        path.write_text(json.dumps(variant, indent=2) + "\n")
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
