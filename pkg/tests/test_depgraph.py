"""Dependency extraction and deterministic topological ordering."""

import pytest
from hypothesis import given, strategies as st

from specforge.depgraph import (DepEdge, analyze_dependencies,
                                dependent_tables, topological_order,
                                written_tables, _toposort)
from specforge.errors import CyclicDependency


def test_bank_edges_exact(bank, bank_graph):
    expected = {
        DepEdge("TableTable", "Transaction", "Account"),
        DepEdge("ApiTableRead", "RegisterAccount", "Account"),
        DepEdge("ApiTableWrite", "RegisterAccount", "Account"),
        DepEdge("ApiTableRead", "DeleteAccount", "Account"),
        DepEdge("ApiTableWrite", "DeleteAccount", "Account"),
        DepEdge("ApiTableRead", "Deposit", "Account"),
        DepEdge("ApiTableRead", "Deposit", "Transaction"),
        DepEdge("ApiTableWrite", "Deposit", "Transaction"),
        DepEdge("ApiTableRead", "BalanceQuery", "Account"),
        DepEdge("ApiTableRead", "BalanceQuery", "Transaction"),
        DepEdge("ApiTableWrite", "Withdrawal", "Transaction"),
        DepEdge("ApiApi", "Withdrawal", "BalanceQuery"),
    }
    assert set(bank_graph.edges) == expected


def test_tables_precede_apis(bank_graph):
    order = bank_graph.topoOrder
    last_table = max(order.index(t) for t in bank_graph.tables)
    first_api = min(order.index(a) for a in bank_graph.apis)
    assert last_table < first_api


def test_callee_before_caller(bank_graph):
    order = bank_graph.topoOrder
    assert order.index("BalanceQuery") < order.index("Withdrawal")


def test_fk_order(bank_graph):
    order = bank_graph.topoOrder
    assert order.index("Account") < order.index("Transaction")


def test_written_tables_transitive(bank, bank_graph):
    assert written_tables("Withdrawal", bank_graph) == {"Transaction"}
    assert written_tables("BalanceQuery", bank_graph) == set()
    assert written_tables("RegisterAccount", bank_graph) == {"Account"}


def test_dependent_tables_through_calls(bank, bank_graph):
    w = bank.api("Withdrawal")
    assert dependent_tables(w, bank, bank_graph) == ("Account", "Transaction")


def test_cycle_detected():
    edges = {DepEdge("ApiApi", "A", "B"), DepEdge("ApiApi", "B", "A")}
    with pytest.raises(CyclicDependency) as exc:
        _toposort(frozenset(), frozenset({"A", "B"}), edges)
    assert set(exc.value.cycle) == {"A", "B"}


def test_recompute_matches(bank_graph):
    assert topological_order(bank_graph) == bank_graph.topoOrder


@st.composite
def api_dags(draw):
    n = draw(st.integers(2, 8))
    names = [f"api{i:02d}" for i in range(n)]
    edges = set()
    for i in range(n):
        for j in range(i):
            if draw(st.booleans()):
                # higher index depends on lower index: guaranteed acyclic
                edges.add(DepEdge("ApiApi", names[i], names[j]))
    return frozenset(names), edges


@given(api_dags())
def test_topo_respects_edges_and_is_total(dag):
    names, edges = dag
    order = _toposort(frozenset(), names, edges)
    assert sorted(order) == sorted(names)
    pos = {n: i for i, n in enumerate(order)}
    for e in edges:
        assert pos[e.dst] < pos[e.src]


@given(api_dags())
def test_topo_deterministic(dag):
    names, edges = dag
    assert _toposort(frozenset(), names, edges) == \
        _toposort(frozenset(), names, edges)


def test_lexicographic_tie_break():
    order = _toposort(frozenset(), frozenset({"zeta", "alpha", "mid"}), set())
    assert order == ("alpha", "mid", "zeta")
