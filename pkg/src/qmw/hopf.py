"""Graded commutative Hopf algebra of graphs and Birkhoff factorization.

Elements are rational combinations of monomials. A monomial is a sorted tuple
of generator names and ``()`` is the unit. Reduced coproducts of generators
come from a pluggable rule: either an explicit fixture table or the
superficial-degree rule on actual graphs.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from typing import Iterable, Mapping, Protocol

from .errors import RenormError, SeriesFormatError
from .graph import FeynmanGraph
from .laurent import LaurentSeries, regular_part, rota_baxter_T

Monomial = tuple[str, ...]
UNIT: Monomial = ()


def monomial(*names: str) -> Monomial:
    return tuple(sorted(names))


def parse_monomial(text: str) -> Monomial:
    text = text.strip()
    if text in ("", "1"):
        return UNIT
    return monomial(*(p.strip() for p in text.split("*")))


def _mono_str(m: Monomial) -> str:
    return "*".join(m) if m else "1"


class HopfElement:
    """Finite rational combination of monomials."""

    __slots__ = ("_t",)

    def __init__(self, terms: Mapping[Monomial, object] | None = None):
        t: dict[Monomial, Fraction] = {}
        for m, c in (terms or {}).items():
            m = tuple(sorted(m))
            t[m] = t.get(m, Fraction(0)) + Fraction(c)
        self._t = {m: c for m, c in sorted(t.items()) if c != 0}

    @classmethod
    def gen(cls, name: str) -> "HopfElement":
        return cls({(name,): 1})

    @classmethod
    def unit(cls) -> "HopfElement":
        return cls({UNIT: 1})

    @classmethod
    def parse(cls, text: str) -> "HopfElement":
        return cls({parse_monomial(text): 1})

    @property
    def terms(self) -> dict[Monomial, Fraction]:
        return dict(self._t)

    def __add__(self, other: "HopfElement") -> "HopfElement":
        t = dict(self._t)
        for m, c in other._t.items():
            t[m] = t.get(m, 0) + c
        return HopfElement(t)

    def __neg__(self):
        return HopfElement({m: -c for m, c in self._t.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return HopfElement({m: c * other for m, c in self._t.items()})
        t: dict[Monomial, Fraction] = {}
        for m1, c1 in self._t.items():
            for m2, c2 in other._t.items():
                m = tuple(sorted(m1 + m2))
                t[m] = t.get(m, 0) + c1 * c2
        return HopfElement(t)

    __rmul__ = __mul__

    def __eq__(self, other):
        return isinstance(other, HopfElement) and self._t == other._t

    def __hash__(self):
        return hash(tuple(self._t.items()))

    def __str__(self):
        if not self._t:
            return "0"
        return " + ".join(f"{c}*{_mono_str(m)}" if c != 1 else _mono_str(m) for m, c in self._t.items())

    __repr__ = __str__


Tensor = dict[tuple[Monomial, Monomial], Fraction]


def _tensor_clean(t: Mapping) -> Tensor:
    return {k: v for k, v in sorted(t.items()) if v != 0}


# -- subgraph rules ------------------------------------------------------------------


class SubgraphRule(Protocol):
    def degree(self, name: str) -> int: ...

    def reduced(self, name: str) -> list[tuple[Monomial, Monomial, Fraction]]: ...


class FixtureRule:
    """Reduced coproducts from a declared table.

    Table entries: ``{"graph": g, "degree": d?, "subgraphs": [{"gamma": "a*b", "quotient": "c", "coeff": "2"?}]}``.
    Generators that never appear as a ``graph`` are primitive; degrees that are
    not declared default to 1 for primitives and are inferred additively
    otherwise.
    """

    def __init__(self, entries: Iterable[Mapping]):
        self._red: dict[str, list[tuple[Monomial, Monomial, Fraction]]] = {}
        declared: dict[str, int] = {}
        for entry in entries:
            try:
                g = entry["graph"]
                subs = entry.get("subgraphs", [])
                terms = [
                    (parse_monomial(s["gamma"]), parse_monomial(s["quotient"]), Fraction(str(s.get("coeff", 1))))
                    for s in subs
                ]
            except (KeyError, TypeError, ValueError) as exc:
                raise RenormError(f"malformed fixture entry {entry!r}: {exc}") from exc
            if g in self._red:
                raise RenormError(f"duplicate fixture entry for {g}")
            self._red[g] = terms
            if "degree" in entry:
                declared[g] = int(entry["degree"])
        self._deg: dict[str, int] = {}
        self._declared = declared
        for g in list(self._red):
            self.degree(g)

    def generators(self) -> list[str]:
        names = set(self._red)
        for terms in self._red.values():
            for a, b, _ in terms:
                names.update(a)
                names.update(b)
        return sorted(names)

    def degree(self, name: str, _stack: tuple = ()) -> int:
        if name in self._deg:
            return self._deg[name]
        if name in _stack:
            raise RenormError(f"cyclic fixture table at {name}")
        terms = self._red.get(name, [])
        inferred = None
        for a, b, _ in terms:
            d = sum(self.degree(x, _stack + (name,)) for x in a + b)
            if inferred is not None and d != inferred:
                raise RenormError(f"fixture {name} is not graded: {inferred} vs {d}")
            inferred = d
        deg = self._declared.get(name, inferred if inferred is not None else 1)
        if inferred is not None and deg != inferred:
            raise RenormError(f"declared degree of {name} is {deg} but its subgraphs give {inferred}")
        self._deg[name] = deg
        return deg

    def reduced(self, name: str):
        return list(self._red.get(name, []))

    @classmethod
    def from_json(cls, doc) -> "FixtureRule":
        if isinstance(doc, str):
            doc = json.loads(doc)
        if isinstance(doc, Mapping):
            doc = doc.get("fixtures", [doc])
        return cls(doc)


def default_fixtures() -> FixtureRule:
    text = resources.files("qmw").joinpath("data/fixtures.json").read_text()
    return FixtureRule.from_json(text)


@dataclass(frozen=True)
class _MiniGraph:
    n: int  # vertices 0..n-1
    edges: tuple[tuple[int, int], ...]

    @property
    def loops(self) -> int:
        return len(self.edges) - self.n + 1  # connected graphs only


def _connected(n: int, edges) -> bool:
    if n == 0:
        return True
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v in edges:
        parent[find(u)] = find(v)
    return len({find(x) for x in range(n)}) == 1


def _bridgeless(g: _MiniGraph) -> bool:
    if not _connected(g.n, g.edges):
        return False
    return all(_connected(g.n, g.edges[:i] + g.edges[i + 1:]) for i in range(len(g.edges)))


def _canonical(g: _MiniGraph) -> str:
    best = None
    for perm in itertools.permutations(range(g.n)):
        key = tuple(sorted(tuple(sorted((perm[u], perm[v]))) for u, v in g.edges))
        if best is None or key < best:
            best = key
    return f"[{g.n}|" + ",".join(f"{u}-{v}" for u, v in best) + "]"


def _components(edges: list[tuple[int, int]]) -> list[list[tuple[int, int]]]:
    groups: list[tuple[set, list]] = []
    for e in edges:
        hit = [grp for grp in groups if e[0] in grp[0] or e[1] in grp[0]]
        verts, es = {e[0], e[1]}, [e]
        for grp in hit:
            verts |= grp[0]
            es = grp[1] + es
            groups.remove(grp)
        groups.append((verts, es))
    return [es for _, es in groups]


def _relabel(edges) -> _MiniGraph:
    verts = sorted({x for e in edges for x in e})
    idx = {v: i for i, v in enumerate(verts)}
    return _MiniGraph(len(verts), tuple((idx[u], idx[v]) for u, v in edges))


class DivergentSubgraphRule:
    """Admissible subgraphs: vertex-disjoint unions of proper 1PI subgraphs
    with ``D*L - 2*n >= 0`` (propagator exponent 1)."""

    def __init__(self, graphs: Iterable[FeynmanGraph], dimension: int | None = None):
        self.dimension = dimension
        self._graphs: dict[str, _MiniGraph] = {}
        self._dims: dict[str, int] = {}
        self._alias: dict[str, str] = {}
        self._red: dict[str, list] = {}
        for g in graphs:
            vidx = {v: i for i, v in enumerate(g.vertices)}
            mg = _MiniGraph(len(g.vertices), tuple((vidx[e.source], vidx[e.target]) for e in g.internal_edges))
            self._graphs[g.name] = mg
            self._dims[g.name] = dimension or g.dimension
            self._alias.setdefault(_canonical(mg), g.name)

    def _D(self, name: str) -> int:
        if self.dimension is not None:
            return self.dimension
        return self._dims.get(name, next(iter(self._dims.values())))

    def _name(self, mg: _MiniGraph, D: int) -> str:
        key = _canonical(mg)
        name = self._alias.get(key)
        if name is None:
            name = key
            self._alias[key] = name
            self._graphs[name] = mg
            self._dims[name] = D
        return name

    def graph(self, name: str) -> _MiniGraph:
        if name not in self._graphs:
            raise RenormError(f"unknown graph {name}")
        return self._graphs[name]

    def degree(self, name: str) -> int:
        return self.graph(name).loops

    def reduced(self, name: str):
        if name in self._red:
            return list(self._red[name])
        g = self.graph(name)
        D = self._D(name)
        E = len(g.edges)
        acc: dict[tuple[Monomial, Monomial], Fraction] = {}
        for r in range(1, E):
            for subset in itertools.combinations(range(E), r):
                comps = _components([g.edges[i] for i in subset])
                minis = [_relabel(c) for c in comps]
                if not all(_bridgeless(m) and m.loops >= 1 and D * m.loops - 2 * len(m.edges) >= 0 for m in minis):
                    continue
                gamma = monomial(*(self._name(m, D) for m in minis))
                quotient = self._name(self._contract(g, subset, comps), D)
                key = (gamma, (quotient,))
                acc[key] = acc.get(key, 0) + 1
        terms = [(a, b, Fraction(c)) for (a, b), c in sorted(acc.items())]
        self._red[name] = terms
        return list(terms)

    @staticmethod
    def _contract(g: _MiniGraph, subset, comps) -> _MiniGraph:
        rep = {}
        for k, comp in enumerate(comps):
            for e in comp:
                for x in e:
                    rep[x] = ("c", k)
        keep = [e for i, e in enumerate(g.edges) if i not in set(subset)]
        new_vertices = sorted({rep.get(v, ("v", v)) for v in range(g.n)})
        idx = {v: i for i, v in enumerate(new_vertices)}
        edges = tuple((idx[rep.get(u, ("v", u))], idx[rep.get(v, ("v", v))]) for u, v in keep)
        return _MiniGraph(len(new_vertices), edges)


# -- the Hopf algebra ----------------------------------------------------------------


class HopfAlgebra:
    def __init__(self, rule: SubgraphRule):
        self.rule = rule
        self._delta: dict[str, Tensor] = {}
        self._S: dict[str, HopfElement] = {}

    def degree(self, m: Monomial) -> int:
        return sum(self.rule.degree(x) for x in m)

    def reduced_coproduct(self, name: str) -> Tensor:
        t: dict = {}
        for a, b, c in self.rule.reduced(name):
            t[(a, b)] = t.get((a, b), 0) + c
        return _tensor_clean(t)

    def coproduct_generator(self, name: str) -> Tensor:
        if name not in self._delta:
            t = {((name,), UNIT): Fraction(1), (UNIT, (name,)): Fraction(1)}
            for k, c in self.reduced_coproduct(name).items():
                t[k] = t.get(k, 0) + c
            self._delta[name] = _tensor_clean(t)
        return self._delta[name]

    def coproduct_monomial(self, m: Monomial) -> Tensor:
        out: Tensor = {(UNIT, UNIT): Fraction(1)}
        for x in m:
            nxt: dict = {}
            for (a1, b1), c1 in out.items():
                for (a2, b2), c2 in self.coproduct_generator(x).items():
                    k = (tuple(sorted(a1 + a2)), tuple(sorted(b1 + b2)))
                    nxt[k] = nxt.get(k, 0) + c1 * c2
            out = nxt
        return _tensor_clean(out)

    def coproduct(self, x: HopfElement) -> Tensor:
        out: dict = {}
        for m, c in x.terms.items():
            for k, v in self.coproduct_monomial(m).items():
                out[k] = out.get(k, 0) + c * v
        return _tensor_clean(out)

    @staticmethod
    def counit(x: HopfElement) -> Fraction:
        return x.terms.get(UNIT, Fraction(0))

    def antipode_generator(self, name: str) -> HopfElement:
        """``S(X) = -X - sum S(X') X''`` over the reduced coproduct."""
        if name not in self._S:
            s = -HopfElement.gen(name)
            for (a, b), c in self.reduced_coproduct(name).items():
                s = s - self.antipode(HopfElement({a: 1})) * HopfElement({b: c})
            self._S[name] = s
        return self._S[name]

    def antipode(self, x: HopfElement) -> HopfElement:
        out = HopfElement()
        for m, c in x.terms.items():
            term = HopfElement.unit()
            for name in m:
                term = term * self.antipode_generator(name)
            out = out + term * c
        return out

    # axiom checks

    def _apply_left(self, t: Tensor, f) -> Tensor:
        out: dict = {}
        for (a, b), c in t.items():
            for k, v in f(a).items():
                key = (k, b)
                out[key] = out.get(key, 0) + c * v
        return out

    def coassociativity_sides(self, x: HopfElement) -> tuple[dict, dict]:
        """``((Delta x id) Delta x, (id x Delta) Delta x)`` as triple-tensor dicts."""
        left: dict = {}
        right: dict = {}
        for (a, b), c in self.coproduct(x).items():
            for (a1, a2), c1 in self.coproduct_monomial(a).items():
                k = (a1, a2, b)
                left[k] = left.get(k, 0) + c * c1
            for (b1, b2), c2 in self.coproduct_monomial(b).items():
                k = (a, b1, b2)
                right[k] = right.get(k, 0) + c * c2
        return _tensor_clean(left), _tensor_clean(right)

    def antipode_axiom(self, x: HopfElement) -> tuple[HopfElement, HopfElement, HopfElement]:
        """``(m(S x id)Delta x, m(id x S)Delta x, counit(x) * 1)``."""
        left = HopfElement()
        right = HopfElement()
        for (a, b), c in self.coproduct(x).items():
            A, B = HopfElement({a: 1}), HopfElement({b: 1})
            left = left + self.antipode(A) * B * c
            right = right + A * self.antipode(B) * c
        return left, right, HopfElement.unit() * self.counit(x)

    def counit_sides(self, x: HopfElement) -> tuple[HopfElement, HopfElement]:
        """``((eps x id) Delta x, (id x eps) Delta x)``."""
        left = HopfElement()
        right = HopfElement()
        for (a, b), c in self.coproduct(x).items():
            if a == UNIT:
                left = left + HopfElement({b: c})
            if b == UNIT:
                right = right + HopfElement({a: c})
        return left, right


# -- characters ----------------------------------------------------------------------


class MonomialMap(Protocol):
    center: Fraction

    def on_monomial(self, m: Monomial) -> LaurentSeries: ...


def on_element(f: MonomialMap, x: HopfElement) -> LaurentSeries:
    out = LaurentSeries.zero(f.center)
    for m, c in x.terms.items():
        out = out + f.on_monomial(m) * c
    return out


class CharacterMap:
    """Algebra morphism given by its values on generators."""

    def __init__(self, values: Mapping[str, LaurentSeries], center=1):
        self.center = Fraction(center)
        for name, s in values.items():
            if s.center != self.center:
                raise SeriesFormatError(f"series for {name} has center {s.center}, expected {self.center}")
        self.values = dict(values)

    def generator(self, name: str) -> LaurentSeries:
        try:
            return self.values[name]
        except KeyError:
            raise SeriesFormatError(f"character has no value for generator {name!r}") from None

    def on_monomial(self, m: Monomial) -> LaurentSeries:
        out = LaurentSeries.one(self.center)
        for name in m:
            out = out * self.generator(name)
        return out

    def __call__(self, x: HopfElement) -> LaurentSeries:
        return on_element(self, x)

    @classmethod
    def from_json(cls, doc) -> "CharacterMap":
        if isinstance(doc, str):
            doc = json.loads(doc)
        if not isinstance(doc, Mapping) or not doc:
            raise SeriesFormatError("character file must be a non-empty object")
        values = {}
        for name, data in doc.items():
            if not isinstance(data, Mapping):
                raise SeriesFormatError(f"entry {name!r} is not an object")
            values[name] = LaurentSeries.from_dict(data)
        centers = {s.center for s in values.values()}
        if len(centers) != 1:
            raise SeriesFormatError("all series must share one center")
        return cls(values, centers.pop())


class CounitMap:
    """The convolution unit: ``1 -> 1`` and every nonempty monomial ``-> 0``."""

    def __init__(self, center=1):
        self.center = Fraction(center)

    def on_monomial(self, m: Monomial) -> LaurentSeries:
        return LaurentSeries.one(self.center) if m == UNIT else LaurentSeries.zero(self.center)


class ComposedWithAntipode:
    """``f o S``."""

    def __init__(self, f: MonomialMap, algebra: HopfAlgebra):
        self.f, self.algebra, self.center = f, algebra, f.center

    def on_monomial(self, m: Monomial) -> LaurentSeries:
        return on_element(self.f, self.algebra.antipode(HopfElement({m: 1})))


class ConvolutionMap:
    def __init__(self, f: MonomialMap, g: MonomialMap, algebra: HopfAlgebra):
        self.f, self.g, self.algebra, self.center = f, g, algebra, f.center

    def on_monomial(self, m: Monomial) -> LaurentSeries:
        return convolution(self.f, self.g, HopfElement({m: 1}), self.algebra)


def convolution(f: MonomialMap, g: MonomialMap, x: HopfElement, algebra: HopfAlgebra) -> LaurentSeries:
    """``<f x g, Delta x>``."""
    out = LaurentSeries.zero(f.center)
    for (a, b), c in algebra.coproduct(x).items():
        out = out + f.on_monomial(a) * g.on_monomial(b) * c
    return out


class Birkhoff:
    """Memoized inductive factorization of one character."""

    def __init__(self, phi: CharacterMap, algebra: HopfAlgebra):
        self.phi, self.algebra, self.center = phi, algebra, phi.center
        self._minus: dict[str, LaurentSeries] = {}
        self._plus: dict[str, LaurentSeries] = {}
        self.steps = 0

    def _bar(self, name: str) -> LaurentSeries:
        acc = self.phi.generator(name)
        for (a, b), c in self.algebra.reduced_coproduct(name).items():
            acc = acc + self.minus.on_monomial(a) * self.phi.on_monomial(b) * c
        return acc

    def _factor(self, name: str) -> None:
        self.steps += 1
        bar = self._bar(name)
        self._minus[name] = -rota_baxter_T(bar)
        self._plus[name] = regular_part(bar)

    class _Side:
        def __init__(self, owner: "Birkhoff", store: str):
            self.owner, self.store, self.center = owner, store, owner.center

        def generator(self, name: str) -> LaurentSeries:
            table = getattr(self.owner, self.store)
            if name not in table:
                self.owner._factor(name)
            return table[name]

        def on_monomial(self, m: Monomial) -> LaurentSeries:
            out = LaurentSeries.one(self.center)
            for name in m:
                out = out * self.generator(name)
            return out

        def __call__(self, x: HopfElement) -> LaurentSeries:
            return on_element(self, x)

    @property
    def minus(self) -> "Birkhoff._Side":
        return Birkhoff._Side(self, "_minus")

    @property
    def plus(self) -> "Birkhoff._Side":
        return Birkhoff._Side(self, "_plus")


def birkhoff_factorize(phi: CharacterMap, x: HopfElement, algebra: HopfAlgebra) -> tuple[LaurentSeries, LaurentSeries]:
    """``(phi_-(x), phi_+(x))``."""
    b = Birkhoff(phi, algebra)
    return b.minus(x), b.plus(x)


def renormalized_value(phi: CharacterMap, name: str, algebra: HopfAlgebra):
    """``phi_+(name)`` evaluated at the center."""
    _, plus = birkhoff_factorize(phi, HopfElement.gen(name), algebra)
    return plus.value_at_center()
