"""Quadric hypersurfaces of a Feynman graph and their epsilon-deformations.

Coordinates on the projective space are ``u = (u_0, ..., u_{LD})`` with
``u_0 = x`` (the homogenizing coordinate) followed by one block of ``D``
coordinates per loop momentum, in loop-edge order.

Every form built here carries a diagonal factorization witness ``T`` with
``A = T^T T``; its reduced part ``T_bar`` (drop ``u_0``) encodes how the edge
momentum sits in the loop space and is what momentum conservation acts on.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import sympy

from . import linalg
from .errors import EmptyLoopSpace, QuadricError, ScheduleInconsistent
from .graph import FeynmanGraph, MomentumRelations, SpanningTree, natural_key

SCHEDULES = ("paper", "uniform")


def as_rational(x) -> sympy.Expr:
    """Coerce ints, Fractions, ``"p/q"`` strings and sympy numbers to sympy."""
    if isinstance(x, sympy.Basic):
        return x
    if isinstance(x, Fraction):
        return sympy.Rational(x.numerator, x.denominator)
    if isinstance(x, str):
        f = Fraction(x.strip())
        return sympy.Rational(f.numerator, f.denominator)
    if isinstance(x, float):
        raise TypeError("floats are not exact; pass a rational")
    return sympy.Integer(x)


def rational_str(x) -> str:
    x = sympy.nsimplify(x) if not isinstance(x, sympy.Rational) else x
    return str(x)


def _is_numeric(x) -> bool:
    return isinstance(x, sympy.Basic) and x.is_Rational


@dataclass(frozen=True)
class FactorizationWitness:
    """``T`` with ``T^T T = A``; ``T`` is ``None`` when only minors certify positivity."""

    T: sympy.ImmutableMatrix | None
    certified_by: str = "exact"

    @property
    def reduced(self) -> sympy.ImmutableMatrix | None:
        if self.T is None:
            return None
        return self.T[1:, 1:]

    def check(self, A: sympy.MatrixBase) -> bool:
        if self.T is None:
            return False
        return sympy.simplify(self.T.T * self.T - A) == sympy.zeros(*A.shape)


@dataclass(frozen=True)
class QuadraticForm:
    matrix: sympy.ImmutableMatrix
    witness: FactorizationWitness | None = None
    label: str = ""

    def __post_init__(self):
        m = sympy.ImmutableMatrix(self.matrix)
        if not m.is_square:
            raise QuadricError("form matrix must be square")
        if m != m.T:
            raise QuadricError("form matrix must be symmetric")
        object.__setattr__(self, "matrix", m)

    @classmethod
    def diagonal(cls, entries: Iterable, label: str = "") -> "QuadraticForm":
        return cls(sympy.ImmutableMatrix(sympy.diag(*[as_rational(e) for e in entries])), label=label)

    @property
    def size(self) -> int:
        return self.matrix.rows

    @property
    def is_diagonal(self) -> bool:
        return self.matrix.is_diagonal()

    def diagonal_entries(self) -> list:
        return [self.matrix[i, i] for i in range(self.size)]

    def __call__(self, u: Sequence):
        v = sympy.Matrix([as_rational(c) if not isinstance(c, sympy.Basic) else c for c in u])
        return sympy.expand((v.T * self.matrix * v)[0, 0])

    def subs(self, *args) -> "QuadraticForm":
        w = self.witness
        if w is not None and w.T is not None:
            w = FactorizationWitness(sympy.ImmutableMatrix(w.T.subs(*args)), w.certified_by)
        return QuadraticForm(sympy.ImmutableMatrix(self.matrix.subs(*args)), w, self.label)


def _diag_form(mass2, tbar: Sequence, label: str) -> QuadraticForm:
    """Form ``diag(m^2, T_bar^2)`` with witness ``diag(m, T_bar)``."""
    m = sympy.sqrt(mass2)
    T = sympy.ImmutableMatrix(sympy.diag(m, *tbar))
    A = sympy.ImmutableMatrix(sympy.diag(mass2, *[sympy.expand(t * t) for t in tbar]))
    return QuadraticForm(A, FactorizationWitness(T), label)


@dataclass(frozen=True)
class QuadricNet:
    """``n`` quadrics in ``P^{LD}``, one per internal edge, in edge order."""

    dimension: int
    loops: int
    forms: tuple[QuadraticForm, ...]
    edges: tuple[tuple[str, str, str], ...]
    epsilon: sympy.Expr = sympy.Integer(0)
    graph_name: str = ""
    tree: SpanningTree | None = None
    schedule: str | None = None

    def __post_init__(self):
        sizes = {f.size for f in self.forms}
        if len(sizes) > 1:
            raise QuadricError("all forms of a net must have the same size")
        if sizes and sizes.pop() != self.ambient_dim + 1:
            raise QuadricError("form size does not match LD + 1")
        if len(self.edges) != len(self.forms):
            raise QuadricError("one edge record per form is required")

    @property
    def ambient_dim(self) -> int:
        return self.loops * self.dimension

    @property
    def n(self) -> int:
        return len(self.forms)

    @property
    def edge_ids(self) -> tuple[str, ...]:
        return tuple(e[0] for e in self.edges)

    def form(self, edge_id: str) -> QuadraticForm:
        return self.forms[self.edge_ids.index(edge_id)]

    def masses_squared(self) -> tuple:
        return tuple(f.matrix[0, 0] for f in self.forms)

    def subs(self, *args) -> "QuadricNet":
        return QuadricNet(
            self.dimension, self.loops, tuple(f.subs(*args) for f in self.forms), self.edges,
            sympy.sympify(self.epsilon).subs(*args), self.graph_name, self.tree, self.schedule,
        )


def single_propagator_net(D: int, mass=1) -> QuadricNet:
    """One form ``m^2 x^2 + |k|^2`` in ``P^D``: the one-loop, one-propagator integrand."""
    m = as_rational(mass)
    form = _diag_form(m**2, [sympy.Integer(1)] * D, "e1")
    return QuadricNet(D, 1, (form,), (("e1", "v1", "v1"),), graph_name="single-propagator")


# -- construction --------------------------------------------------------------


def build_raw_forms(g: FeynmanGraph, relations: MomentumRelations) -> list[QuadraticForm]:
    """Homogenized propagators ``k_i^2 + m_i^2 x^2`` in ``nD + 1`` variables."""
    D, n = g.dimension, g.n_edges
    forms = []
    for i, e in enumerate(g.internal_edges):
        tbar = [sympy.Integer(1 if i * D <= r < (i + 1) * D else 0) for r in range(n * D)]
        forms.append(_diag_form(as_rational(e.mass) ** 2, tbar, e.id))
    return forms


def restrict_to_subspace(forms: Sequence[QuadraticForm], relations: MomentumRelations) -> QuadricNet:
    """Restrict the raw forms to the conservation subspace ``H``.

    Edge ``i`` with ``k_i = sum_a c_ia l_a`` gets the reduced witness
    ``T_bar_i = sum_a c_ia * Id_a`` (``Id_a`` the identity on loop block ``a``),
    hence ``A_i = diag(m_i^2, c_i1^2 Id, ..., c_iL^2 Id)``. Mixed products
    ``l_a . l_b`` are not kept; see :func:`exact_pullback` for the literal
    substitution.
    """
    L, D = relations.loops, relations.dimension
    if L == 0:
        raise EmptyLoopSpace(f"graph {relations.graph_name!r} has no loops; P^0 carries no quadrics")
    if len(forms) != relations.n:
        raise QuadricError("need one raw form per internal edge")
    out = []
    for form, (eid, _, _) in zip(forms, relations.edges):
        coeffs = relations.substitution[eid]
        tbar = [sympy.Integer(c) for c in coeffs for _ in range(D)]
        out.append(_diag_form(form.matrix[0, 0], tbar, eid))
    tree = SpanningTree(relations.tree_edges, relations.loop_edges)
    return QuadricNet(D, L, tuple(out), relations.edges, sympy.Integer(0), relations.graph_name, tree)


def exact_pullback(form: QuadraticForm, relations: MomentumRelations) -> sympy.ImmutableMatrix:
    """Pull a raw form back along ``(x, l) -> (x, k(l))``; keeps the cross terms."""
    L, D, n = relations.loops, relations.dimension, relations.n
    E = sympy.zeros(n * D + 1, L * D + 1)
    E[0, 0] = 1
    for i, (eid, _, _) in enumerate(relations.edges):
        for a, c in enumerate(relations.substitution[eid]):
            for r in range(D):
                E[1 + i * D + r, 1 + a * D + r] = c
    return sympy.ImmutableMatrix(E.T * form.matrix * E)


def build_net(g: FeynmanGraph, tree: SpanningTree) -> QuadricNet:
    from .graph import momentum_relations

    rel = momentum_relations(g, tree)
    return restrict_to_subspace(build_raw_forms(g, rel), rel)


# -- deformation ---------------------------------------------------------------


def _incident(edges, v):
    return [(eid, s, t) for eid, s, t in edges if (s == v) != (t == v)]


def deform_net(net: QuadricNet, tree: SpanningTree, epsilon, schedule: str = "paper") -> QuadricNet:
    """One-parameter deformation making every quadric smooth and positive.

    Loop (off-tree) edges get the missing loop coordinates switched on with
    weights ``eps^(2r)`` on the r-th missing coordinate (``"paper"``) or a
    flat ``eps^2`` (``"uniform"``). Tree edges are then solved leaf-inward
    from momentum conservation of the reduced witnesses, keeping the mass
    entry fixed. ``epsilon`` may be a sympy symbol.
    """
    if schedule not in SCHEDULES:
        raise QuadricError(f"unknown schedule {schedule!r}; choose from {SCHEDULES}")
    eps = as_rational(epsilon)
    if eps == 0:
        return net
    if net.tree is not None and (set(net.tree.edges) != set(tree.edges)):
        raise QuadricError("the deformation tree must be the tree the net was restricted along")
    if any(f.witness is None or f.witness.T is None for f in net.forms):
        raise QuadricError("deform_net needs the factorization witnesses of the undeformed net")

    LD = net.ambient_dim
    tbar: dict[str, list] = {}
    for eid, form in zip(net.edge_ids, net.forms):
        if eid in tree.edges:
            continue
        base = [form.witness.T[1 + r, 1 + r] for r in range(LD)]
        r = 0
        new = []
        for b in base:
            if b == 0:
                r += 1
                new.append(eps**r if schedule == "paper" else eps)
            else:
                new.append(b)
        tbar[eid] = new

    vertices: list[str] = []
    for _, s, t in net.edges:
        for v in (s, t):
            if v not in vertices:
                vertices.append(v)
    pending = set(tree.edges)
    numeric = _is_numeric(eps)
    while pending:
        candidates = []
        for vi, v in enumerate(vertices):
            inc = _incident(net.edges, v)
            open_edges = [e for e in inc if e[0] in pending]
            if len(open_edges) == 1:
                candidates.append((natural_key(open_edges[0][0]), vi, open_edges[0], v))
        if not candidates:
            raise ScheduleInconsistent("tree sweep stalled; the tree does not match the net")
        _, _, (uid, us, ut), v = min(candidates)
        # conservation at v: sum_{s(e)=v} T_bar_e - sum_{t(e)=v} T_bar_e = 0
        acc = [sympy.Integer(0)] * LD
        for eid, s, t in _incident(net.edges, v):
            if eid == uid:
                continue
            sign = 1 if s == v else -1
            acc = [a + sign * x for a, x in zip(acc, tbar[eid])]
        sign_u = 1 if us == v else -1
        solved = [sympy.expand(-sign_u * a) for a in acc]
        if numeric and any(x == 0 for x in solved):
            raise ScheduleInconsistent(
                f"tree edge {uid} solves to a singular witness at vertex {v}; choose another schedule or epsilon"
            )
        tbar[uid] = solved
        pending.discard(uid)

    forms = tuple(
        _diag_form(f.matrix[0, 0], tbar[eid], eid) for eid, f in zip(net.edge_ids, net.forms)
    )
    return QuadricNet(
        net.dimension, net.loops, forms, net.edges, eps, net.graph_name, tree, schedule
    )


# -- verification --------------------------------------------------------------


def no_real_points(form: QuadraticForm) -> bool:
    """Positive-definiteness by Sylvester's criterion (all leading minors > 0)."""
    return all(m > 0 for m in linalg.leading_minors(form.matrix))


@dataclass
class ConditionReport:
    smooth: bool
    real: bool
    positive: bool
    conservation: bool
    determinants: dict = field(default_factory=dict)
    minors: dict = field(default_factory=dict)
    factorization: dict = field(default_factory=dict)
    conservation_failures: list = field(default_factory=list)

    @property
    def all_pass(self) -> bool:
        return self.smooth and self.real and self.positive and self.conservation

    def to_dict(self) -> dict:
        return {
            "smooth": self.smooth,
            "real": self.real,
            "positive": self.positive,
            "conservation": self.conservation,
            "all_pass": self.all_pass,
            "determinants": {k: str(v) for k, v in self.determinants.items()},
            "leading_minors": {k: [str(x) for x in v] for k, v in self.minors.items()},
            "factorization": dict(self.factorization),
            "conservation_failures": list(self.conservation_failures),
        }


def verify_conditions(net: QuadricNet) -> ConditionReport:
    """Check smoothness, reality, positivity/factorization and conservation exactly.

    Failures are reported, never raised.
    """
    if not all(_is_numeric(x) for f in net.forms for x in f.matrix):
        raise QuadricError("verify_conditions needs a numeric epsilon")
    dets, minors, fact = {}, {}, {}
    for eid, f in zip(net.edge_ids, net.forms):
        mins = linalg.leading_minors(f.matrix)
        minors[eid] = mins
        dets[eid] = mins[-1]
        w = f.witness
        if w is not None and w.T is not None:
            fact[eid] = "exact" if w.check(f.matrix) else "witness-mismatch"
        elif all(m > 0 for m in mins):
            fact[eid] = "minors"
        else:
            fact[eid] = "missing"
    smooth = all(d != 0 for d in dets.values())
    real = all(x.is_real for f in net.forms for x in f.matrix)
    positive = all(all(m > 0 for m in v) for v in minors.values()) and all(
        v in ("exact", "minors") for v in fact.values()
    )

    failures = []
    if any(f.witness is None or f.witness.T is None for f in net.forms):
        failures.append("missing-witness")
    else:
        vertices = []
        for _, s, t in net.edges:
            for v in (s, t):
                if v not in vertices:
                    vertices.append(v)
        for v in vertices:
            total = sympy.zeros(net.ambient_dim, net.ambient_dim)
            for eid, s, t in _incident(net.edges, v):
                total += (1 if s == v else -1) * net.form(eid).witness.reduced
            if any(x != 0 for x in total):
                failures.append(v)
    return ConditionReport(smooth, real, positive, not failures, dets, minors, fact, failures)


# -- dump format ---------------------------------------------------------------


def dump_net(net: QuadricNet) -> dict:
    forms = []
    for (eid, s, t), f in zip(net.edges, net.forms):
        lower = [[rational_str(f.matrix[i, j]) for j in range(i + 1)] for i in range(f.size)]
        w = f.witness
        forms.append(
            {
                "edge": eid,
                "source": s,
                "target": t,
                "lower": lower,
                "witness": None
                if w is None or w.T is None
                else [rational_str(w.T[i, i]) for i in range(f.size)],
            }
        )
    return {
        "graph": net.graph_name,
        "dimension": net.dimension,
        "loops": net.loops,
        "epsilon": rational_str(net.epsilon),
        "schedule": net.schedule,
        "tree": list(net.tree.edges) if net.tree else None,
        "loop_edges": list(net.tree.complement) if net.tree else None,
        "forms": forms,
    }


def load_net(doc: dict) -> QuadricNet:
    forms, edges = [], []
    for fd in doc["forms"]:
        lower = fd["lower"]
        size = len(lower)
        M = sympy.zeros(size, size)
        for i, row in enumerate(lower):
            if len(row) != i + 1:
                raise QuadricError(f"form {fd['edge']}: row {i} of the lower triangle has wrong length")
            for j, x in enumerate(row):
                M[i, j] = M[j, i] = as_rational(x)
        w = None
        if fd.get("witness") is not None:
            w = FactorizationWitness(sympy.ImmutableMatrix(sympy.diag(*[as_rational(x) for x in fd["witness"]])))
        forms.append(QuadraticForm(sympy.ImmutableMatrix(M), w, fd["edge"]))
        edges.append((fd["edge"], fd["source"], fd["target"]))
    tree = None
    if doc.get("tree") is not None:
        tree = SpanningTree(tuple(doc["tree"]), tuple(doc["loop_edges"]))
    return QuadricNet(
        doc["dimension"], doc["loops"], tuple(forms), tuple(edges),
        as_rational(doc["epsilon"]), doc.get("graph", ""), tree, doc.get("schedule"),
    )
