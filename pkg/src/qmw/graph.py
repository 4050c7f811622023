"""Combinatorial model of massive Feynman graphs.

A :class:`FeynmanGraph` is a connected directed multigraph whose internal
edges carry positive rational masses. Everything downstream (quadrics,
integrands, motive classes) is derived from this object together with a
choice of spanning tree, whose complement edges index the loop momenta.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Iterator, Mapping

from . import linalg
from .errors import (
    DisconnectedGraph,
    DuplicateId,
    MalformedGraph,
    NonPositiveMass,
    NonzeroExternalMomentum,
    SelfLoopNotSupported,
)


def parse_rational(value, location: str = "") -> Fraction:
    """Parse ``"p/q"`` strings (or ints) into exact rationals; floats are refused."""
    if isinstance(value, bool) or isinstance(value, float):
        raise MalformedGraph(f"expected an exact rational string, got {value!r}", location)
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, Fraction):
        return value
    if not isinstance(value, str):
        raise MalformedGraph(f"expected a rational string, got {type(value).__name__}", location)
    try:
        return Fraction(value.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise MalformedGraph(f"cannot parse rational {value!r}", location) from exc


def natural_key(ident: str):
    """Sort key ordering ``e2`` before ``e10``."""
    return [(0, int(t), "") if t.isdigit() else (1, 0, t) for t in re.split(r"(\d+)", ident) if t]


@dataclass(frozen=True)
class InternalEdge:
    id: str
    source: str
    target: str
    mass: Fraction

    @property
    def is_self_loop(self) -> bool:
        return self.source == self.target


@dataclass(frozen=True)
class ExternalEdge:
    id: str
    vertex: str
    momentum: tuple[Fraction, ...]


@dataclass(frozen=True)
class FeynmanGraph:
    name: str
    dimension: int
    vertices: tuple[str, ...]
    internal_edges: tuple[InternalEdge, ...]
    external_edges: tuple[ExternalEdge, ...] = ()

    def __post_init__(self):
        if not isinstance(self.dimension, int) or self.dimension < 1:
            raise MalformedGraph("dimension must be a positive integer", "dimension")
        seen: set[str] = set()
        for v in self.vertices:
            if v in seen:
                raise DuplicateId(f"duplicate vertex id {v!r}", "vertices")
            seen.add(v)
        vset = set(self.vertices)
        ids: set[str] = set()
        for i, e in enumerate(self.internal_edges):
            loc = f"internal_edges[{i}]"
            if e.id in ids:
                raise DuplicateId(f"duplicate edge id {e.id!r}", f"{loc}.id")
            ids.add(e.id)
            for end in ("source", "target"):
                if getattr(e, end) not in vset:
                    raise MalformedGraph(f"undeclared vertex {getattr(e, end)!r}", f"{loc}.{end}")
            if e.mass <= 0:
                raise NonPositiveMass(f"mass must be strictly positive, got {e.mass}", f"{loc}.mass")
        for i, x in enumerate(self.external_edges):
            loc = f"external_edges[{i}]"
            if x.id in ids:
                raise DuplicateId(f"duplicate edge id {x.id!r}", f"{loc}.id")
            ids.add(x.id)
            if x.vertex not in vset:
                raise MalformedGraph(f"undeclared vertex {x.vertex!r}", f"{loc}.vertex")
            if len(x.momentum) != self.dimension:
                raise MalformedGraph(
                    f"momentum has length {len(x.momentum)}, expected {self.dimension}",
                    f"{loc}.momentum",
                )
        if not self.vertices:
            raise MalformedGraph("graph has no vertices", "vertices")
        if not _connected(self.vertices, [(e.source, e.target) for e in self.internal_edges]):
            raise DisconnectedGraph("internal edges do not connect all vertices", "internal_edges")

    @property
    def n_edges(self) -> int:
        return len(self.internal_edges)

    @property
    def edge_ids(self) -> tuple[str, ...]:
        return tuple(e.id for e in self.internal_edges)

    @property
    def masses(self) -> tuple[Fraction, ...]:
        return tuple(e.mass for e in self.internal_edges)

    def edge(self, ident: str) -> InternalEdge:
        for e in self.internal_edges:
            if e.id == ident:
                return e
        raise KeyError(ident)

    def with_dimension(self, dimension: int) -> "FeynmanGraph":
        if any(c != 0 for x in self.external_edges for c in x.momentum):
            raise MalformedGraph("cannot change dimension of a graph with nonzero momenta", "dimension")
        ext = tuple(
            ExternalEdge(x.id, x.vertex, (Fraction(0),) * dimension) for x in self.external_edges
        )
        return FeynmanGraph(self.name, dimension, self.vertices, self.internal_edges, ext)


def _connected(vertices, edges) -> bool:
    parent = {v: v for v in vertices}

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for a, b in edges:
        parent[find(a)] = find(b)
    return len({find(v) for v in vertices}) <= 1


# -- file format -------------------------------------------------------------


def parse_graph(text: str | Mapping) -> FeynmanGraph:
    """Build a graph from its JSON document (string or already-decoded mapping).

    Edges are stored sorted by id (natural order), which fixes the edge
    numbering ``e_1, ..., e_n`` used everywhere else.
    """
    if isinstance(text, (str, bytes)):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise MalformedGraph(f"invalid JSON: {exc.msg}", f"line {exc.lineno}") from exc
    else:
        doc = text
    if not isinstance(doc, Mapping):
        raise MalformedGraph("top-level document must be an object")

    def need(obj, key, typ, loc):
        if key not in obj:
            raise MalformedGraph(f"missing field {key!r}", loc)
        val = obj[key]
        if not isinstance(val, typ) or isinstance(val, bool):
            raise MalformedGraph(f"field {key!r} has wrong type", f"{loc}.{key}" if loc else key)
        return val

    name = need(doc, "name", str, "")
    dim = need(doc, "dimension", int, "")
    verts = need(doc, "vertices", list, "")
    for i, v in enumerate(verts):
        if not isinstance(v, str):
            raise MalformedGraph("vertex ids must be strings", f"vertices[{i}]")
    internal = []
    for i, e in enumerate(need(doc, "internal_edges", list, "")):
        loc = f"internal_edges[{i}]"
        if not isinstance(e, Mapping):
            raise MalformedGraph("edge must be an object", loc)
        if "mass" not in e:
            raise MalformedGraph("missing field 'mass'", loc)
        internal.append(
            InternalEdge(
                need(e, "id", str, loc),
                need(e, "source", str, loc),
                need(e, "target", str, loc),
                parse_rational(e["mass"], f"{loc}.mass"),
            )
        )
    external = []
    for i, x in enumerate(doc.get("external_edges", [])):
        loc = f"external_edges[{i}]"
        if not isinstance(x, Mapping):
            raise MalformedGraph("edge must be an object", loc)
        mom = need(x, "momentum", list, loc)
        external.append(
            ExternalEdge(
                need(x, "id", str, loc),
                need(x, "vertex", str, loc),
                tuple(parse_rational(c, f"{loc}.momentum[{j}]") for j, c in enumerate(mom)),
            )
        )
    # duplicates must be caught before sorting hides their positions
    ids = [e.id for e in internal]
    if len(set(ids)) != len(ids):
        dup = next(i for i in ids if ids.count(i) > 1)
        raise DuplicateId(f"duplicate edge id {dup!r}", f"internal_edges[{ids.index(dup)}].id")
    internal.sort(key=lambda e: natural_key(e.id))
    external.sort(key=lambda x: natural_key(x.id))
    return FeynmanGraph(name, dim, tuple(verts), tuple(internal), tuple(external))


def _fmt(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def graph_to_dict(g: FeynmanGraph) -> dict:
    return {
        "name": g.name,
        "dimension": g.dimension,
        "vertices": sorted(g.vertices, key=natural_key),
        "internal_edges": [
            {"id": e.id, "source": e.source, "target": e.target, "mass": _fmt(e.mass)}
            for e in sorted(g.internal_edges, key=lambda e: natural_key(e.id))
        ],
        "external_edges": [
            {"id": x.id, "vertex": x.vertex, "momentum": [_fmt(c) for c in x.momentum]}
            for x in sorted(g.external_edges, key=lambda x: natural_key(x.id))
        ],
    }


def serialize_graph(g: FeynmanGraph) -> str:
    """Canonical form: sorted keys, vertices and edges sorted by id."""
    return json.dumps(graph_to_dict(g), sort_keys=True, indent=2)


# -- combinatorics -----------------------------------------------------------


def loop_number(g: FeynmanGraph) -> int:
    """First Betti number ``n - #V + 1`` of the (connected) graph."""
    return g.n_edges - len(g.vertices) + 1


@dataclass(frozen=True)
class IncidenceMatrix:
    vertices: tuple[str, ...]
    edges: tuple[str, ...]
    entries: tuple[tuple[int, ...], ...]

    def column(self, edge_id: str) -> tuple[int, ...]:
        j = self.edges.index(edge_id)
        return tuple(row[j] for row in self.entries)


def incidence_matrix(g: FeynmanGraph) -> IncidenceMatrix:
    """+1 where the vertex is the source, -1 where it is the target; self-loops give 0."""
    rows = []
    for v in g.vertices:
        row = []
        for e in g.internal_edges:
            row.append((e.source == v) - (e.target == v))
        rows.append(tuple(row))
    return IncidenceMatrix(g.vertices, g.edge_ids, tuple(rows))


@dataclass(frozen=True)
class SpanningTree:
    edges: tuple[str, ...]
    complement: tuple[str, ...]

    def __contains__(self, edge_id: str) -> bool:
        return edge_id in self.edges


def _is_spanning_tree(g: FeynmanGraph, edge_ids) -> bool:
    parent = {v: v for v in g.vertices}

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for eid in edge_ids:
        e = g.edge(eid)
        a, b = find(e.source), find(e.target)
        if a == b:
            return False
        parent[a] = b
    return len({find(v) for v in g.vertices}) == 1


def spanning_trees(g: FeynmanGraph) -> Iterator[SpanningTree]:
    """Enumerate spanning trees by their complements.

    Complements (the loop edges) come out in lexicographic edge order, so the
    first tree is the one whose loop variables are the lowest-numbered edges;
    for the sunset this is the tree ``{e3}`` with loops ``(e1, e2)``.
    """
    ids = g.edge_ids
    L = loop_number(g)
    for comp in combinations(ids, L):
        rest = tuple(i for i in ids if i not in comp)
        if _is_spanning_tree(g, rest):
            yield SpanningTree(rest, comp)


def first_tree(g: FeynmanGraph) -> SpanningTree:
    return next(spanning_trees(g))


def tree_from_edges(g: FeynmanGraph, edge_ids) -> SpanningTree:
    chosen = set(edge_ids)
    unknown = chosen - set(g.edge_ids)
    if unknown:
        raise MalformedGraph(f"unknown edge ids {sorted(unknown)}", "tree")
    tree = tuple(i for i in g.edge_ids if i in chosen)
    if not _is_spanning_tree(g, tree):
        raise MalformedGraph(f"edges {list(tree)} do not form a spanning tree", "tree")
    return SpanningTree(tree, tuple(i for i in g.edge_ids if i not in chosen))


@dataclass(frozen=True)
class MomentumRelations:
    """Homogeneous momentum conservation (vanishing external momenta).

    ``equations`` is a row-reduced basis of the conservation system in the
    variables ``k_1..k_n``; ``substitution[e]`` expresses ``k_e`` as an
    integer combination of the loop momenta, in ``loop_edges`` order.
    """

    graph_name: str
    dimension: int
    edges: tuple[tuple[str, str, str], ...]
    masses: tuple[Fraction, ...]
    equations: tuple[tuple[Fraction, ...], ...]
    rank: int
    loop_edges: tuple[str, ...]
    tree_edges: tuple[str, ...]
    substitution: Mapping[str, tuple[int, ...]] = field(hash=False)

    @property
    def n(self) -> int:
        return len(self.edges)

    @property
    def loops(self) -> int:
        return len(self.loop_edges)


def _tree_path(g: FeynmanGraph, tree_edges, start: str, goal: str) -> list[tuple[str, int]]:
    """Edges of the unique tree path ``start -> goal`` with traversal sign."""
    adj: dict[str, list[tuple[str, str, int]]] = {v: [] for v in g.vertices}
    for eid in tree_edges:
        e = g.edge(eid)
        adj[e.source].append((e.target, eid, +1))
        adj[e.target].append((e.source, eid, -1))
    prev: dict[str, tuple[str, str, int] | None] = {start: None}
    stack = [start]
    while stack:
        v = stack.pop()
        for w, eid, sgn in adj[v]:
            if w not in prev:
                prev[w] = (v, eid, sgn)
                stack.append(w)
    path = []
    v = goal
    while prev[v] is not None:
        u, eid, sgn = prev[v]
        path.append((eid, sgn))
        v = u
    return path[::-1]


def momentum_relations(g: FeynmanGraph, tree: SpanningTree) -> MomentumRelations:
    for x in g.external_edges:
        if any(c != 0 for c in x.momentum):
            raise NonzeroExternalMomentum(
                "only vanishing external momenta are supported", f"external_edges[{x.id}]"
            )
    for e in g.internal_edges:
        if e.is_self_loop:
            raise SelfLoopNotSupported("self-loop edges impose no conservation constraint", e.id)
    inc = incidence_matrix(g)
    eqs = tuple(tuple(r) for r in linalg.rref(inc.entries))
    loops = tree.complement
    subst: dict[str, tuple[int, ...]] = {}
    for eid in g.edge_ids:
        subst[eid] = tuple(int(eid == c) for c in loops)
    # fundamental cycle of loop edge c: along c, then back through the tree
    for a, c in enumerate(loops):
        ce = g.edge(c)
        for eid, sgn in _tree_path(g, tree.edges, ce.target, ce.source):
            coeffs = list(subst[eid])
            coeffs[a] += sgn
            subst[eid] = tuple(coeffs)
    return MomentumRelations(
        graph_name=g.name,
        dimension=g.dimension,
        edges=tuple((e.id, e.source, e.target) for e in g.internal_edges),
        masses=g.masses,
        equations=eqs,
        rank=len(eqs),
        loop_edges=loops,
        tree_edges=tree.edges,
        substitution=subst,
    )


def superficial_degree(g: FeynmanGraph, alpha=1) -> Fraction:
    """``D*L - 2*n*alpha``; negative means convergent at infinity."""
    return Fraction(g.dimension * loop_number(g)) - 2 * g.n_edges * Fraction(alpha)


def divergence_kind(g: FeynmanGraph, alpha=1) -> str:
    d = superficial_degree(g, alpha)
    if d < 0:
        return "convergent"
    return "logarithmically divergent" if d == 0 else "divergent"


def is_one_particle_irreducible(g: FeynmanGraph) -> bool:
    """Connected and without bridges."""
    pairs = [(e.source, e.target) for e in g.internal_edges]
    for i in range(len(pairs)):
        if not _connected(g.vertices, pairs[:i] + pairs[i + 1 :]):
            return False
    return True


def sunset_graph(masses=(1, 2, 3), dimension: int = 2, name: str = "sunset") -> FeynmanGraph:
    """Two vertices joined by three edges ``v1 -> v2``."""
    return FeynmanGraph(
        name,
        dimension,
        ("v1", "v2"),
        tuple(
            InternalEdge(f"e{i + 1}", "v1", "v2", Fraction(m)) for i, m in enumerate(masses)
        ),
    )
