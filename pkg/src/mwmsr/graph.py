"""Directed graphs with bounded-length simple-path enumeration.

Nodes are dense integers 1..n.  An edge (j, i) means node i can receive
information from node j.  Paths are plain tuples of node ids; a path
(i1, ..., im) is an (m-1)-hop path from i1 to im.  All queries here are
pure and exhaustive: intended scale is n <= ~15 and hop ranges l <= 4,
where exact answers matter more than asymptotics.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property


class GraphFormatError(ValueError):
    """Raised when a graph document cannot be parsed or is inconsistent."""


@dataclass(frozen=True)
class Graph:
    """Immutable directed graph on nodes {1, ..., n}."""

    n: int
    edges: frozenset[tuple[int, int]]

    def __post_init__(self) -> None:
        if self.n < 1:
            raise GraphFormatError(f"node count must be >= 1, got {self.n}")
        for j, i in self.edges:
            if j == i:
                raise GraphFormatError(f"self-loop ({j},{i}) not allowed")
            if not (1 <= j <= self.n and 1 <= i <= self.n):
                raise GraphFormatError(f"edge ({j},{i}) outside node range 1..{self.n}")

    @cached_property
    def out_adj(self) -> dict[int, tuple[int, ...]]:
        adj: dict[int, list[int]] = {v: [] for v in self.nodes()}
        for j, i in self.edges:
            adj[j].append(i)
        return {v: tuple(sorted(nbrs)) for v, nbrs in adj.items()}

    @cached_property
    def in_adj(self) -> dict[int, tuple[int, ...]]:
        adj: dict[int, list[int]] = {v: [] for v in self.nodes()}
        for j, i in self.edges:
            adj[i].append(j)
        return {v: tuple(sorted(nbrs)) for v, nbrs in adj.items()}

    def nodes(self) -> range:
        return range(1, self.n + 1)

    def has_edge(self, j: int, i: int) -> bool:
        return (j, i) in self.edges

    def check_node(self, i: int) -> None:
        if not (1 <= i <= self.n):
            raise GraphFormatError(f"unknown node id {i} (graph has nodes 1..{self.n})")

    def to_json_obj(self) -> dict:
        return {"n": self.n, "edges": [list(e) for e in sorted(self.edges)]}


def graph_from_edges(n: int, edges) -> Graph:
    return Graph(n=n, edges=frozenset((int(j), int(i)) for j, i in edges))


def graph_from_json_obj(obj: dict) -> Graph:
    """Build a graph from {"n": int, "edges": [[j, i], ...]}."""
    if not isinstance(obj, dict):
        raise GraphFormatError("graph document must be a JSON object")
    unknown = set(obj) - {"n", "edges"}
    if unknown:
        raise GraphFormatError(f"unknown graph fields: {sorted(unknown)}")
    try:
        n = int(obj["n"])
        edges = [(int(j), int(i)) for j, i in obj["edges"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise GraphFormatError(f"malformed graph document: {exc}") from exc
    return graph_from_edges(n, edges)


def graph_from_edgelist_text(text: str) -> Graph:
    """Parse edge-list text: one "j i" pair per line, '#' starts a comment.

    The node count is the largest id mentioned.
    """
    edges: list[tuple[int, int]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise GraphFormatError(f"line {lineno}: expected 'j i', got {raw!r}")
        try:
            j, i = int(parts[0]), int(parts[1])
        except ValueError as exc:
            raise GraphFormatError(f"line {lineno}: non-integer node id in {raw!r}") from exc
        edges.append((j, i))
    if not edges:
        raise GraphFormatError("edge-list text contains no edges")
    n = max(max(j, i) for j, i in edges)
    return graph_from_edges(n, edges)


def load_graph(path: str) -> Graph:
    """Load a graph from a JSON document or an edge-list text file."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise GraphFormatError(f"invalid JSON in {path}: {exc}") from exc
        return graph_from_json_obj(obj)
    return graph_from_edgelist_text(text)


def enumerate_paths(
    g: Graph, j: int, i: int, l: int, within: frozenset[int] | None = None
) -> list[tuple[int, ...]]:
    """All simple directed paths from j to i of length <= l hops.

    Returned in lexicographic order of the node sequence.  `within`
    optionally restricts every path node to a subset of the vertices.
    """
    g.check_node(j)
    g.check_node(i)
    if l < 1:
        raise ValueError(f"hop count must be >= 1, got {l}")
    if j == i:
        raise ValueError("path source and destination must differ")
    if within is not None and (j not in within or i not in within):
        return []
    out = g.out_adj
    found: list[tuple[int, ...]] = []
    path = [j]
    on_path = {j}

    def dfs(v: int) -> None:
        if len(path) > l:
            return
        for w in out[v]:
            if w == i:
                found.append(tuple(path) + (i,))
                continue
            if w in on_path or (within is not None and w not in within):
                continue
            path.append(w)
            on_path.add(w)
            dfs(w)
            path.pop()
            on_path.remove(w)

    dfs(j)
    found.sort()
    return found


def in_neighbors_l(g: Graph, i: int, l: int) -> set[int]:
    """Nodes that can reach i via a simple path of at most l hops."""
    g.check_node(i)
    if l < 1:
        raise ValueError(f"hop count must be >= 1, got {l}")
    # Shortest walks are simple, so bounded BFS on the reverse graph suffices.
    reached: set[int] = set()
    frontier = {i}
    for _ in range(l):
        frontier = {j for v in frontier for j in g.in_adj[v]} - reached - {i}
        reached |= frontier
        if not frontier:
            break
    return reached


def out_neighbors_l(g: Graph, i: int, l: int) -> set[int]:
    """Nodes reachable from i via a simple path of at most l hops."""
    g.check_node(i)
    if l < 1:
        raise ValueError(f"hop count must be >= 1, got {l}")
    reached: set[int] = set()
    frontier = {i}
    for _ in range(l):
        frontier = {w for v in frontier for w in g.out_adj[v]} - reached - {i}
        reached |= frontier
        if not frontier:
            break
    return reached


def is_simple_path(g: Graph, nodes: tuple[int, ...]) -> bool:
    """True iff `nodes` is a nonempty simple path respecting edge direction."""
    if not nodes or len(set(nodes)) != len(nodes):
        return False
    if any(not (1 <= v <= g.n) for v in nodes):
        return False
    return all(g.has_edge(a, b) for a, b in zip(nodes, nodes[1:]))
