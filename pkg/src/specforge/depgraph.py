"""Dependency analysis over a validated Project.

Three relations are extracted syntactically from the IR: table-to-table
foreign keys, API-to-table reads/writes, and API-to-API calls. The
topological order drives formalization: all tables first, then APIs with
callees before callers, lexicographic tie-breaking throughout so output is
deterministic.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Iterable, Literal

from .errors import CyclicDependency
from .ir import ApiDef, CallApi, If, Project, Stmt, TableRead, TableWrite

EdgeKind = Literal["TableTable", "ApiTableRead", "ApiTableWrite", "ApiApi"]


@dataclass(frozen=True, order=True)
class DepEdge:
    kind: EdgeKind
    src: str  # the dependent entity ("from")
    dst: str  # the prerequisite it depends on ("to")


@dataclass(frozen=True)
class DependencyGraph:
    tables: frozenset[str]
    apis: frozenset[str]
    edges: frozenset[DepEdge]
    topoOrder: tuple[str, ...]

    @property
    def nodes(self) -> frozenset[str]:
        return self.tables | self.apis


def _walk(stmts: Iterable[Stmt]):
    for s in stmts:
        yield s
        if isinstance(s, If):
            yield from _walk(s.thenBranch)
            yield from _walk(s.elseBranch)
        elif isinstance(s, CallApi):
            for arm in s.arms:
                yield from _walk(arm.body)


def api_edges(api: ApiDef) -> set[DepEdge]:
    edges: set[DepEdge] = set()
    for s in _walk(api.body):
        if isinstance(s, TableRead):
            edges.add(DepEdge("ApiTableRead", api.name, s.table))
        elif isinstance(s, TableWrite):
            # A write on any path counts as a write dependency.
            edges.add(DepEdge("ApiTableWrite", api.name, s.table))
        elif isinstance(s, CallApi):
            edges.add(DepEdge("ApiApi", api.name, s.api))
    return edges


def analyze_dependencies(project: Project) -> DependencyGraph:
    """Extract the full edge set and a deterministic topological order."""
    edges: set[DepEdge] = set()
    for t in project.tables:
        for col in t.columns:
            if col.foreignKey is not None and col.foreignKey[0] != t.name:
                edges.add(DepEdge("TableTable", t.name, col.foreignKey[0]))
    for api in project.apis:
        edges |= api_edges(api)
    tables = frozenset(t.name for t in project.tables)
    apis = frozenset(a.name for a in project.apis)
    order = _toposort(tables, apis, edges)
    return DependencyGraph(tables, apis, frozenset(edges), order)


def topological_order(graph: DependencyGraph) -> tuple[str, ...]:
    """Recompute the linearization for a graph (raises CyclicDependency)."""
    return _toposort(graph.tables, graph.apis, graph.edges)


def _toposort(tables: frozenset[str], apis: frozenset[str],
              edges: frozenset[DepEdge] | set[DepEdge]) -> tuple[str, ...]:
    order: list[str] = []
    order += _kahn(sorted(tables),
                   [(e.src, e.dst) for e in edges if e.kind == "TableTable"])
    order += _kahn(sorted(apis),
                   [(e.src, e.dst) for e in edges if e.kind == "ApiApi"
                    and e.dst != e.src])
    return tuple(order)


def _kahn(nodes: list[str], deps: list[tuple[str, str]]) -> list[str]:
    """Kahn's algorithm with a min-heap so independent nodes come out in
    lexicographic order. deps are (dependent, prerequisite) pairs."""
    node_set = set(nodes)
    out_deg = {n: 0 for n in nodes}
    dependents: dict[str, list[str]] = {n: [] for n in nodes}
    for src, dst in deps:
        if src in node_set and dst in node_set:
            out_deg[src] += 1
            dependents[dst].append(src)
    ready = [n for n in nodes if out_deg[n] == 0]
    heapq.heapify(ready)
    order: list[str] = []
    while ready:
        n = heapq.heappop(ready)
        order.append(n)
        for m in dependents[n]:
            out_deg[m] -= 1
            if out_deg[m] == 0:
                heapq.heappush(ready, m)
    if len(order) != len(nodes):
        remaining = sorted(n for n in nodes if out_deg[n] > 0)
        raise CyclicDependency(_find_cycle(remaining, deps))
    return order


def _find_cycle(remaining: list[str], deps: list[tuple[str, str]]) -> list[str]:
    succ: dict[str, list[str]] = {}
    rem = set(remaining)
    for src, dst in deps:
        if src in rem and dst in rem:
            succ.setdefault(src, []).append(dst)
    start = remaining[0]
    seen: list[str] = []
    node = start
    while node not in seen:
        seen.append(node)
        node = sorted(succ.get(node, [node]))[0]
    return seen[seen.index(node):]


def written_tables(api: ApiDef | str, graph: DependencyGraph) -> set[str]:
    """Tables an API writes, directly or through transitive API calls."""
    name = api if isinstance(api, str) else api.name
    written: set[str] = set()
    pending = [name]
    visited: set[str] = set()
    while pending:
        node = pending.pop()
        if node in visited:
            continue
        visited.add(node)
        for e in graph.edges:
            if e.src != node:
                continue
            if e.kind == "ApiTableWrite":
                written.add(e.dst)
            elif e.kind == "ApiApi":
                pending.append(e.dst)
    return written


def dependent_tables(api: ApiDef, project: Project,
                     graph: DependencyGraph) -> tuple[str, ...]:
    """Tables an API transitively reads or writes (through API calls),
    ordered by the graph's table topo order."""
    involved: set[str] = set()
    pending = [api.name]
    visited: set[str] = set()
    while pending:
        name = pending.pop()
        if name in visited:
            continue
        visited.add(name)
        for e in graph.edges:
            if e.src != name:
                continue
            if e.kind in ("ApiTableRead", "ApiTableWrite"):
                involved.add(e.dst)
            elif e.kind == "ApiApi":
                pending.append(e.dst)
    return tuple(t for t in graph.topoOrder if t in involved)
