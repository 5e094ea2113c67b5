"""Planarity decisions with machine-checkable certificates.

A graph is either PLANAR, certified by a rotation system whose face tracing
satisfies Euler's relation, or NONPLANAR, certified by an explicit
subdivision of K5 or K33 (branch vertices plus internally disjoint paths).
The decision procedure is backed by the left-right planarity test; the
verifier, the exhaustive small-graph subdivision oracle, and the
route-witness checker are independent implementations, so every verdict can
be re-checked without trusting the decider.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional, Sequence

import networkx as nx

from planarank.cayley import SimpleGraph, graph_from_edges
from planarank.freesemi import FiniteSemigroup, element_of
from planarank.words import Word
from planarank import textio

K5 = "K5"
K33 = "K33"


class MalformedCertificateError(Exception):
    """A certificate that is structurally broken (as opposed to one that is
    well-formed but fails verification against the graph)."""


@dataclass(frozen=True)
class RotationEmbedding:
    """A cyclic order of neighbours around each vertex."""

    rotation: tuple[tuple[int, ...], ...]

    @property
    def n_vertices(self) -> int:
        return len(self.rotation)


@dataclass(frozen=True)
class KuratowskiWitness:
    """Branch vertices and internally disjoint connecting paths.

    branch_sets is a single 5-tuple for K5, or two 3-tuples (the parts) for
    K33.  Each path is a vertex sequence whose endpoints are branch vertices.
    """

    kind: str
    branch_sets: tuple[tuple[int, ...], ...]
    paths: tuple[tuple[int, ...], ...]

    def branch_vertices(self) -> tuple[int, ...]:
        return tuple(v for part in self.branch_sets for v in part)


@dataclass(frozen=True)
class PlanarityCertificate:
    planar: bool
    embedding: Optional[RotationEmbedding] = None
    witness: Optional[KuratowskiWitness] = None

    def __post_init__(self):
        if self.planar != (self.embedding is not None) or self.planar != (self.witness is None):
            raise ValueError("exactly one of embedding/witness must be present")


# ---------------------------------------------------------------------------
# decision procedure

def _to_nx(g: SimpleGraph) -> nx.Graph:
    G = nx.Graph()
    G.add_nodes_from(range(g.n_vertices))
    G.add_edges_from(g.edge_list())
    return G


def decide_planar(g: SimpleGraph) -> PlanarityCertificate:
    """Decide planarity and return a verifying certificate either way."""
    ok, data = nx.check_planarity(_to_nx(g), counterexample=True)
    if ok:
        emb = data.get_data()
        rotation = tuple(tuple(emb.get(v, ())) for v in range(g.n_vertices))
        cert = PlanarityCertificate(True, embedding=RotationEmbedding(rotation))
    else:
        witness = _extract_witness(data)
        cert = PlanarityCertificate(False, witness=witness)
    if not verify_certificate(g, cert):
        raise AssertionError("internal error: certificate failed self-verification")
    return cert


def _extract_witness(sub: nx.Graph) -> KuratowskiWitness:
    """Structure a Kuratowski subgraph (a bare K5/K33 subdivision) into
    branch vertices and paths by walking its degree-2 chains."""
    degs = dict(sub.degree())
    branches = sorted(v for v, d in degs.items() if d >= 3)
    kind = K5 if any(degs[v] == 4 for v in branches) else K33
    paths = []
    seen_darts = set()
    for b in branches:
        for nb in sorted(sub.neighbors(b)):
            if (b, nb) in seen_darts:
                continue
            path = [b, nb]
            prev, cur = b, nb
            while degs[cur] == 2:
                nxt = next(w for w in sub.neighbors(cur) if w != prev)
                prev, cur = cur, nxt
                path.append(cur)
            seen_darts.add((b, nb))
            seen_darts.add((cur, prev))
            if path[0] <= path[-1]:
                paths.append(tuple(path))
    if kind == K5:
        branch_sets: tuple[tuple[int, ...], ...] = (tuple(branches),)
    else:
        # 2-colour the branch graph induced by the paths
        nbrs = {b: set() for b in branches}
        for p in paths:
            nbrs[p[0]].add(p[-1])
            nbrs[p[-1]].add(p[0])
        colour = {branches[0]: 0}
        stack = [branches[0]]
        while stack:
            v = stack.pop()
            for w in nbrs[v]:
                if w not in colour:
                    colour[w] = 1 - colour[v]
                    stack.append(w)
        part_a = tuple(sorted(v for v in branches if colour.get(v) == 0))
        part_b = tuple(sorted(v for v in branches if colour.get(v) == 1))
        branch_sets = (part_a, part_b)
    return KuratowskiWitness(kind, branch_sets, tuple(sorted(paths)))


# ---------------------------------------------------------------------------
# certificate verification (independent of the decision procedure)

def _trace_faces(g: SimpleGraph, rot: RotationEmbedding) -> int:
    """Number of face orbits of the rotation system (darts traced once)."""
    succ = {}
    for v, order in enumerate(rot.rotation):
        deg = len(order)
        for i, u in enumerate(order):
            # dart (u -> v) continues to (v -> next neighbour after u)
            succ[(u, v)] = (v, order[(i + 1) % deg])
    faces = 0
    seen = set()
    for dart in succ:
        if dart in seen:
            continue
        faces += 1
        d = dart
        while d not in seen:
            seen.add(d)
            d = succ[d]
    return faces


def _components(g: SimpleGraph) -> int:
    adj = g.adjacency()
    seen = [False] * g.n_vertices
    comp = 0
    for v in range(g.n_vertices):
        if seen[v]:
            continue
        comp += 1
        stack = [v]
        seen[v] = True
        while stack:
            u = stack.pop()
            for w in adj[u]:
                if not seen[w]:
                    seen[w] = True
                    stack.append(w)
    return comp


def verify_certificate(g: SimpleGraph, cert: PlanarityCertificate) -> bool:
    """Check a certificate against g without re-running the decider.

    PLANAR: the rotation lists must match the adjacency of g exactly and
    face tracing must satisfy Euler's relation V - E + F = 1 + C, where the
    unbounded face common to the C components is counted once.  NONPLANAR:
    the witness paths must realise a K5/K33 subdivision inside g.
    Structurally broken certificates raise MalformedCertificateError.
    """
    if cert.planar:
        rot = cert.embedding
        if rot.n_vertices != g.n_vertices:
            raise MalformedCertificateError("rotation system has wrong vertex count")
        adj = g.adjacency()
        for v, order in enumerate(rot.rotation):
            if len(order) != len(set(order)) or set(order) != adj[v]:
                return False
        isolated = sum(1 for a in adj if not a)
        faces = _trace_faces(g, rot) + isolated
        shared_outer_faces = faces - (_components(g) - 1)
        return g.n_vertices - g.n_edges + shared_outer_faces == 1 + _components(g)

    w = cert.witness
    if w.kind not in (K5, K33):
        raise MalformedCertificateError(f"unknown witness kind {w.kind!r}")
    if w.kind == K5:
        if len(w.branch_sets) != 1 or len(w.branch_sets[0]) != 5:
            raise MalformedCertificateError("K5 witness needs one 5-set of branch vertices")
        required = {frozenset(p) for p in itertools.combinations(w.branch_sets[0], 2)}
    else:
        if len(w.branch_sets) != 2 or any(len(p) != 3 for p in w.branch_sets):
            raise MalformedCertificateError("K33 witness needs two 3-sets of branch vertices")
        required = {frozenset((a, b)) for a in w.branch_sets[0] for b in w.branch_sets[1]}
    branch = w.branch_vertices()
    if len(set(branch)) != len(branch):
        return False
    if any(v < 0 or v >= g.n_vertices for v in branch):
        raise MalformedCertificateError("branch vertex out of range")
    if len(w.paths) != len(required):
        return False

    seen_pairs = set()
    used_internal: set[int] = set()
    branch_set = set(branch)
    for path in w.paths:
        if len(path) < 2:
            raise MalformedCertificateError("witness path too short")
        if any(v < 0 or v >= g.n_vertices for v in path):
            raise MalformedCertificateError("path vertex out of range")
        ends = frozenset((path[0], path[-1]))
        if ends not in required or ends in seen_pairs:
            return False
        seen_pairs.add(ends)
        if len(set(path)) != len(path):
            return False
        for u, v in zip(path, path[1:]):
            if not g.has_edge(u, v):
                return False
        internal = set(path[1:-1])
        if internal & branch_set or internal & used_internal:
            return False
        used_internal |= internal
    return seen_pairs == required


# ---------------------------------------------------------------------------
# exhaustive subdivision search (the independent oracle for small graphs)

def find_subdivision_brute(g: SimpleGraph) -> Optional[KuratowskiWitness]:
    """Search for a K5 or K33 subdivision by exhaustive branch-vertex and
    internally disjoint path enumeration.  Exponential; for small graphs."""
    n = g.n_vertices
    adj = g.adjacency()

    def paths_between(u, v, allowed, limit=None):
        """All simple u-v paths with interiors inside `allowed`."""
        out = []
        stack = [(u, [u], set())]
        while stack:
            cur, path, used = stack.pop()
            for w in sorted(adj[cur]):
                if w == v:
                    out.append(path + [v])
                elif w in allowed and w not in used:
                    stack.append((w, path + [w], used | {w}))
        return out

    def realize(pairs, free, chosen):
        if not pairs:
            return chosen
        (u, v), rest = pairs[0], pairs[1:]
        for p in paths_between(u, v, free):
            interior = set(p[1:-1])
            res = realize(rest, free - interior, chosen + [tuple(p)])
            if res is not None:
                return res
        return None

    verts = list(range(n))
    for combo in itertools.combinations(verts, 5):
        if any(len(adj[v]) < 4 for v in combo):
            continue
        pairs = list(itertools.combinations(combo, 2))
        free = set(verts) - set(combo)
        chosen = realize(pairs, free, [])
        if chosen is not None:
            return KuratowskiWitness(K5, (tuple(combo),), tuple(sorted(chosen)))
    for combo in itertools.combinations(verts, 6):
        if any(len(adj[v]) < 3 for v in combo):
            continue
        rest5 = [v for v in combo if v != combo[0]]
        for others in itertools.combinations(rest5, 2):
            part_a = tuple(sorted((combo[0],) + others))
            part_b = tuple(sorted(set(combo) - set(part_a)))
            pairs = [(a, b) for a in part_a for b in part_b]
            free = set(verts) - set(combo)
            chosen = realize(pairs, free, [])
            if chosen is not None:
                return KuratowskiWitness(K33, (part_a, part_b), tuple(sorted(chosen)))
    return None


def is_planar_brute(g: SimpleGraph) -> bool:
    return find_subdivision_brute(g) is None


# ---------------------------------------------------------------------------
# route witnesses (word-level subdivision data checked through a semigroup)

@dataclass
class RouteWitnessReport:
    ok: bool
    issues: list[str] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    witness: Optional[KuratowskiWitness] = None

    def __bool__(self) -> bool:
        return self.ok


def verify_route_witness(S: FiniteSemigroup, g: SimpleGraph,
                         part_a: Sequence[Word], part_b: Optional[Sequence[Word]],
                         routes: Sequence[Sequence[Word]]) -> RouteWitnessReport:
    """Check a hand-listed system of disjoint routes between branch words.

    part_a/part_b of 3 words each with 9 routes certify a K33 subdivision;
    part_a of 5 words with part_b None/empty and 10 routes certify K5.  Each
    route is a word sequence; words are mapped to elements of S and every
    consecutive pair must be adjacent in g.  Non-adjacent pairs are reported
    with their position.  On success the returned report carries the
    resulting Kuratowski witness (so the host graph is provably nonplanar).
    """
    rep = RouteWitnessReport(ok=True)

    def fail(msg):
        rep.ok = False
        rep.issues.append(msg)

    def elem(w: Word) -> int:
        return element_of(S, w)

    a_elems = [elem(w) for w in part_a]
    if part_b:
        b_elems = [elem(w) for w in part_b]
        kind = K33
        if len(a_elems) != 3 or len(b_elems) != 3:
            fail(f"K33 parts must have 3 words each, got {len(a_elems)} and {len(b_elems)}")
        required = {frozenset((a, b)) for a in a_elems for b in b_elems}
        expected_routes = 9
    else:
        b_elems = []
        kind = K5
        if len(a_elems) != 5:
            fail(f"a K5 witness needs 5 branch words, got {len(a_elems)}")
        required = {frozenset(p) for p in itertools.combinations(a_elems, 2)}
        expected_routes = 10

    branch = a_elems + b_elems
    if len(set(branch)) != len(branch):
        fail("branch words are not pairwise distinct elements")
    if len(routes) != expected_routes:
        fail(f"expected {expected_routes} routes, got {len(routes)}")
    if not rep.ok:
        return rep

    branch_set = set(branch)
    used_internal: set[int] = set()
    covered = set()
    paths = []
    for ri, route in enumerate(routes):
        elems = [elem(w) for w in route]
        path = [elems[0]]
        for j, (e1, e2) in enumerate(zip(elems, elems[1:])):
            if e1 == e2:
                rep.notes.append(
                    f"route {ri}: consecutive words {textio.word_to_text(route[j])} and "
                    f"{textio.word_to_text(route[j+1])} are the same element; step collapsed")
                continue
            if not g.has_edge(e1, e2):
                fail(f"route {ri} step {j}: {textio.word_to_text(route[j])} - "
                     f"{textio.word_to_text(route[j+1])} are not adjacent")
            path.append(e2)
        if len(path) < 2:
            fail(f"route {ri} collapses to a single vertex")
            continue
        if len(set(path)) != len(path):
            fail(f"route {ri} revisits a vertex")
        ends = frozenset((path[0], path[-1]))
        if ends not in required:
            fail(f"route {ri} joins a non-required pair")
        elif ends in covered:
            fail(f"route {ri} duplicates an already covered pair")
        covered.add(ends)
        internal = set(path[1:-1])
        clash = internal & branch_set
        if clash:
            fail(f"route {ri} passes through branch vertex {sorted(clash)}")
        reuse = internal & used_internal
        if reuse:
            fail(f"route {ri} shares internal vertices {sorted(reuse)} with an earlier route")
        used_internal |= internal
        paths.append(tuple(path))
    if covered != required:
        fail("routes do not cover every required branch pair")
    if not rep.ok:
        return rep

    if kind == K33:
        branch_sets = (tuple(a_elems), tuple(b_elems))
    else:
        branch_sets = (tuple(a_elems),)
    witness = KuratowskiWitness(kind, branch_sets, tuple(sorted(paths)))
    cert = PlanarityCertificate(False, witness=witness)
    if not verify_certificate(g, cert):
        fail("assembled witness failed certificate verification")
        return rep
    rep.witness = witness
    return rep


# ---------------------------------------------------------------------------
# certificate text form

def certificate_to_text(cert: PlanarityCertificate, g: SimpleGraph) -> str:
    name = g.name
    if cert.planar:
        lines = ["planar"]
        for v, order in enumerate(cert.embedding.rotation):
            lines.append(f"{name(v)}: " + " ".join(name(u) for u in order))
    else:
        w = cert.witness
        lines = [f"nonplanar {w.kind}"]
        lines.append("branch " + " | ".join(" ".join(name(v) for v in part)
                                            for part in w.branch_sets))
        for p in w.paths:
            lines.append("path " + " ".join(name(v) for v in p))
    return "\n".join(lines) + "\n"


def certificate_from_text(text: str, g: SimpleGraph) -> PlanarityCertificate:
    index = {g.name(v): v for v in range(g.n_vertices)}
    lines = [ln for ln in text.splitlines() if ln.strip()]
    head = lines[0].split()
    if head[0] == "planar":
        rotation: list[tuple[int, ...]] = [()] * g.n_vertices
        for ln in lines[1:]:
            vname, _, rest = ln.partition(":")
            rotation[index[vname.strip()]] = tuple(index[t] for t in rest.split())
        return PlanarityCertificate(True, embedding=RotationEmbedding(tuple(rotation)))
    if head[0] == "nonplanar":
        kind = head[1]
        branch_sets: tuple = ()
        paths = []
        for ln in lines[1:]:
            parts = ln.split()
            if parts[0] == "branch":
                groups = " ".join(parts[1:]).split("|")
                branch_sets = tuple(tuple(index[t] for t in grp.split()) for grp in groups)
            elif parts[0] == "path":
                paths.append(tuple(index[t] for t in parts[1:]))
            else:
                raise ValueError(f"bad certificate line: {ln!r}")
        return PlanarityCertificate(False, witness=KuratowskiWitness(kind, branch_sets, tuple(sorted(paths))))
    raise ValueError("unrecognised certificate header")
