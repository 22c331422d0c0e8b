"""Bundled fixture projects and bug variants."""

import pytest

from specforge.corpus import (apply_variant, list_variants, load_fixture,
                              load_variant)
from specforge.errors import UnknownFixture, UnknownVariant
from specforge.interp import interpret_api
from specforge.typecheck import validate_project


def test_user_auth_shape():
    p = load_fixture("UserAuth")
    assert len(p.services) == 1
    assert len(p.tables) == 1
    assert len(p.apis) == 2


def test_bank_account_shape():
    p = load_fixture("BankAccount")
    assert len(p.services) == 3
    assert len(p.tables) == 2
    assert len(p.apis) == 5


def test_unknown_fixture_names_the_scope():
    with pytest.raises(UnknownFixture) as exc:
        load_fixture("RideHailing")
    msg = str(exc.value)
    assert "UserAuth" in msg and "out of scope" in msg


def test_variant_listing():
    assert list_variants("UserAuth") == ["v1", "v2"]
    assert list_variants("BankAccount") == ["v1", "v2", "v3"]
    assert list_variants("Nothing") == []


def test_unknown_variant():
    with pytest.raises(UnknownVariant):
        load_variant("UserAuth", "v9")


def test_variant_must_target_project(bank):
    v = load_variant("UserAuth", "v1")
    with pytest.raises(UnknownVariant):
        apply_variant(bank, v)


@pytest.mark.parametrize("project,vid", [
    ("UserAuth", "v1"), ("UserAuth", "v2"),
    ("BankAccount", "v1"), ("BankAccount", "v2"), ("BankAccount", "v3"),
])
def test_all_variants_validate(project, vid):
    base = load_fixture(project)
    patched = apply_variant(base, load_variant(project, vid))
    validate_project(patched)  # raises on failure
    assert patched.name == base.name


def test_variant_changes_behaviour():
    base = load_fixture("BankAccount")
    patched = apply_variant(base, load_variant("BankAccount", "v2"))
    tables = {"Account": [{"userId": 1, "name": "u"}], "Transaction": []}
    ok = interpret_api(base, base.api("Deposit"), [1, 0], tables)
    bad = interpret_api(patched, patched.api("Deposit"), [1, 0], tables)
    assert ok.variant == "InvalidAmount"
    assert bad.variant == "Success"  # the seeded bug skips the amount check
