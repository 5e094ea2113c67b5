"""Right Cayley graphs of finite semigroups and their simplifications.

The labeled digraph has one arc (a, a.x, x) per element a and generator x;
the simplified graph drops loops and labels and keeps a single undirected
edge per connected vertex pair.  Vertices are element ids; representative
words travel alongside as display names only.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Iterable, Optional

from planarank.freesemi import FiniteSemigroup
from planarank import textio


@dataclass(frozen=True)
class LabeledDigraph:
    """Directed multigraph with generator-labeled arcs; loops permitted."""

    n_vertices: int
    arcs: tuple[tuple[int, int, int], ...]  # (source, target, label)
    names: tuple[str, ...] = ()

    def name(self, v: int) -> str:
        return self.names[v] if self.names else str(v)


@dataclass(frozen=True)
class SimpleGraph:
    """Undirected simple graph: no loops, no parallel edges."""

    n_vertices: int
    edges: frozenset[frozenset[int]]
    names: tuple[str, ...] = ()

    def __post_init__(self):
        for e in self.edges:
            if len(e) != 2:
                raise ValueError("edges must join two distinct vertices")
            if any(v < 0 or v >= self.n_vertices for v in e):
                raise ValueError("edge endpoint out of range")

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def has_edge(self, u: int, v: int) -> bool:
        return frozenset((u, v)) in self.edges

    def name(self, v: int) -> str:
        return self.names[v] if self.names else str(v)

    def adjacency(self) -> list[set[int]]:
        adj: list[set[int]] = [set() for _ in range(self.n_vertices)]
        for e in self.edges:
            u, v = sorted(e)
            adj[u].add(v)
            adj[v].add(u)
        return adj

    def edge_list(self) -> list[tuple[int, int]]:
        return sorted(tuple(sorted(e)) for e in self.edges)


def graph_from_edges(n_vertices: int, edges: Iterable[tuple[int, int]],
                     names: tuple[str, ...] = ()) -> SimpleGraph:
    es = frozenset(frozenset((u, v)) for u, v in edges if u != v)
    return SimpleGraph(n_vertices, es, names)


def cayley_digraph(S: FiniteSemigroup) -> LabeledDigraph:
    """Cay(S, X): arc a -> a.x labeled x for every element a, generator x."""
    names = tuple(textio.word_to_text(r) for r in S.reps)
    arcs = tuple((a, S.action[a][x], x) for a in range(S.size) for x in range(S.n_gens))
    return LabeledDigraph(S.size, arcs, names)


def simplify(g: LabeledDigraph) -> SimpleGraph:
    """Drop loops and labels; merge all arcs between a pair into one edge.

    The vertex set is unchanged (isolated vertices are retained)."""
    edges = frozenset(frozenset((a, b)) for a, b, _ in g.arcs if a != b)
    return SimpleGraph(g.n_vertices, edges, g.names)


def simple_cayley(S: FiniteSemigroup) -> SimpleGraph:
    return simplify(cayley_digraph(S))


def induced_restriction(S: FiniteSemigroup, g: SimpleGraph, old_generator_count: int) -> SimpleGraph:
    """Subgraph of SCay(S) on elements whose representatives use only the
    first old_generator_count generators, keeping edges witnessed by arcs
    with those labels.  Vertices are renumbered in id order."""
    keep = [e for e in range(S.size) if all(x < old_generator_count for x in S.reps[e])]
    newid = {e: i for i, e in enumerate(keep)}
    edges = set()
    for a in keep:
        for x in range(old_generator_count):
            b = S.action[a][x]
            if b != a and b in newid:
                edges.add((newid[a], newid[b]))
    names = tuple(textio.word_to_text(S.reps[e]) for e in keep)
    return graph_from_edges(len(keep), edges, names)


def are_isomorphic_small(g1: SimpleGraph, g2: SimpleGraph) -> bool:
    """Isomorphism test for small graphs (used by tests and audits)."""
    import networkx as nx
    from networkx.algorithms.isomorphism import GraphMatcher

    if g1.n_vertices != g2.n_vertices or g1.n_edges != g2.n_edges:
        return False
    a, b = nx.Graph(), nx.Graph()
    a.add_nodes_from(range(g1.n_vertices))
    b.add_nodes_from(range(g2.n_vertices))
    a.add_edges_from(g1.edge_list())
    b.add_edges_from(g2.edge_list())
    return GraphMatcher(a, b).is_isomorphic()


# ---------------------------------------------------------------------------
# DOT and JSON export/import (restricted subset: nodes, edges, labels)

def _quote(s: str) -> str:
    return '"' + s.replace('"', '\\"') + '"'


def digraph_to_dot(g: LabeledDigraph) -> str:
    lines = ["digraph cay {"]
    for v in range(g.n_vertices):
        lines.append(f"  {_quote(g.name(v))};")
    for a, b, x in g.arcs:
        label = textio.word_to_text((x,))
        lines.append(f"  {_quote(g.name(a))} -> {_quote(g.name(b))} [label={_quote(label)}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def graph_to_dot(g: SimpleGraph) -> str:
    lines = ["graph scay {"]
    for v in range(g.n_vertices):
        lines.append(f"  {_quote(g.name(v))};")
    for u, v in g.edge_list():
        lines.append(f"  {_quote(g.name(u))} -- {_quote(g.name(v))};")
    lines.append("}")
    return "\n".join(lines) + "\n"


_DOT_NODE = re.compile(r'^\s*"((?:[^"\\]|\\.)*)"\s*;\s*$')
_DOT_EDGE = re.compile(r'^\s*"((?:[^"\\]|\\.)*)"\s*(--|->)\s*"((?:[^"\\]|\\.)*)"\s*(\[[^\]]*\])?\s*;\s*$')


def _unescape(s: str) -> str:
    return s.replace('\\"', '"')


def graph_from_dot(text: str) -> SimpleGraph:
    """Parse the DOT subset emitted by graph_to_dot (undirected only)."""
    lines = text.splitlines()
    if not lines or not lines[0].lstrip().startswith("graph"):
        raise ValueError("expected an undirected DOT graph")
    order: list[str] = []
    index: dict[str, int] = {}

    def vid(name: str) -> int:
        if name not in index:
            index[name] = len(order)
            order.append(name)
        return index[name]

    edges = []
    for ln in lines[1:]:
        ln = ln.strip()
        if not ln or ln == "}":
            continue
        m = _DOT_EDGE.match(ln)
        if m:
            if m.group(2) != "--":
                raise ValueError("directed edge in undirected graph")
            edges.append((vid(_unescape(m.group(1))), vid(_unescape(m.group(3)))))
            continue
        m = _DOT_NODE.match(ln)
        if m:
            vid(_unescape(m.group(1)))
            continue
        raise ValueError(f"unparsable DOT line: {ln!r}")
    return graph_from_edges(len(order), edges, tuple(order))


def graph_to_json(g: SimpleGraph) -> str:
    return json.dumps({
        "directed": False,
        "vertices": [g.name(v) for v in range(g.n_vertices)],
        "edges": [[g.name(u), g.name(v)] for u, v in g.edge_list()],
    }, indent=1)


def digraph_to_json(g: LabeledDigraph) -> str:
    return json.dumps({
        "directed": True,
        "vertices": [g.name(v) for v in range(g.n_vertices)],
        "arcs": [[g.name(a), g.name(b), textio.word_to_text((x,))] for a, b, x in g.arcs],
    }, indent=1)


def graph_from_json(text: str) -> SimpleGraph:
    data = json.loads(text)
    if data.get("directed"):
        raise ValueError("expected an undirected graph")
    names = list(data["vertices"])
    index = {n: i for i, n in enumerate(names)}
    if len(index) != len(names):
        raise ValueError("duplicate vertex names")
    edges = [(index[u], index[v]) for u, v in data["edges"]]
    return graph_from_edges(len(names), edges, tuple(names))


def load_graph(text: str) -> SimpleGraph:
    """Parse a simple graph from JSON or the DOT subset (auto-detected)."""
    stripped = text.lstrip()
    if stripped.startswith("{"):
        return graph_from_json(text)
    return graph_from_dot(text)
