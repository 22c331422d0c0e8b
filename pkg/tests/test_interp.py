"""Reference interpreter semantics on the bundled fixtures."""

import pytest

from specforge.interp import interpret_api


def _accounts(*ids):
    return [{"userId": i, "name": f"u{i}"} for i in ids]


def test_deposit_success(bank):
    tables = {"Account": _accounts(1), "Transaction": []}
    res = interpret_api(bank, bank.api("Deposit"), [1, 50], tables)
    assert res.variant == "Success"
    assert res.payload == (50,)
    assert res.tables["Transaction"] == [{"userId": 1, "amount": 50}]


def test_deposit_rejects_non_positive(bank):
    tables = {"Account": _accounts(1), "Transaction": []}
    res = interpret_api(bank, bank.api("Deposit"), [1, 0], tables)
    assert res.variant == "InvalidAmount"
    assert res.tables["Transaction"] == []


def test_withdrawal_threads_balance_through_call(bank):
    tables = {"Account": _accounts(1),
              "Transaction": [{"userId": 1, "amount": 100}]}
    res = interpret_api(bank, bank.api("Withdrawal"), [1, 30], tables)
    assert res.variant == "Success"
    assert res.payload == (70,)
    assert res.tables["Transaction"][-1] == {"userId": 1, "amount": -30}
    assert ("arm", "BalanceQuery", "Success") in res.trace


def test_withdrawal_insufficient(bank):
    tables = {"Account": _accounts(1),
              "Transaction": [{"userId": 1, "amount": 10}]}
    res = interpret_api(bank, bank.api("Withdrawal"), [1, 30], tables)
    assert res.variant == "InsufficientBalance"
    assert len(res.tables["Transaction"]) == 1


def test_delete_account_removes_exactly_match(bank):
    tables = {"Account": _accounts(1, 2)}
    res = interpret_api(bank, bank.api("DeleteAccount"), [1], tables)
    assert res.variant == "Success"
    assert res.tables["Account"] == _accounts(2)


def test_inputs_never_mutated(bank):
    txns = [{"userId": 1, "amount": 5}]
    tables = {"Account": _accounts(1), "Transaction": txns}
    interpret_api(bank, bank.api("Deposit"), [1, 7], tables)
    assert tables["Transaction"] is txns
    assert txns == [{"userId": 1, "amount": 5}]


def test_login_dberror_on_duplicate_phone(user_auth):
    rows = [{"phone": "1", "password": "p"},
            {"phone": "1", "password": "q"}]
    res = interpret_api(user_auth, user_auth.api("UserLogin"),
                        ["1", "p"], {"User": rows})
    assert res.variant == "DbError"


def test_register_trace_records_branches(user_auth):
    res = interpret_api(user_auth, user_auth.api("UserRegister"),
                        ["1", "p"], {"User": []})
    assert res.variant == "Success"
    assert res.trace == (("if", False), ("if", False))


def test_args_accepted_as_mapping(user_auth):
    res = interpret_api(user_auth, user_auth.api("UserRegister"),
                        {"phone": "", "password": "p"}, {"User": []})
    assert res.variant == "InvalidPhone"
