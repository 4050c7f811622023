"""Exact transversality evidence for deformed quadric nets.

For the sunset net in the ``"paper"`` schedule the pairwise and triple
intersections are certified by the explicit 2x2 and 3x3 determinant
families built from the gradient coefficients. Diagonal nets of other
graphs get a support scan instead, which is reported as heuristic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, permutations
from typing import Callable, Sequence

import sympy

from . import linalg
from ._parallel import ordered_map
from .errors import DimensionMismatch, InvalidIndexTuple, SearchExhausted, UnsupportedNetShape
from .graph import first_tree, sunset_graph
from .quadrics import (
    ConditionReport,
    QuadraticForm,
    QuadricNet,
    as_rational,
    build_net,
    deform_net,
    rational_str,
    verify_conditions,
)


def gradient(form: QuadraticForm, point: Sequence) -> list:
    """``2 A u`` for a quadratic form ``u^T A u``."""
    if len(point) != form.size:
        raise DimensionMismatch(f"point has length {len(point)}, form has size {form.size}")
    u = sympy.Matrix([as_rational(c) for c in point])
    return list(2 * form.matrix * u)


# -- determinant families --------------------------------------------------------
#
# Each builder takes (eps, M, idx) with M = (m1^2, m2^2, m3^2) and idx the index
# tuple, and returns the rows of the matrix.


def _e(eps, j):
    return eps ** (2 * j)


def _p(eps, j):
    return (1 + eps**j) ** 2


PAIRWISE: dict[str, tuple[int, Callable]] = {
    "2x2-01": (1, lambda e, M, i: [[1, M[0]], [_e(e, i[0]), M[1]]]),
    "2x2-02": (1, lambda e, M, i: [[_e(e, i[0]), M[0]], [1, M[1]]]),
    "2x2-03": (2, lambda e, M, i: [[1, _e(e, i[1])], [_e(e, i[0]), 1]]),
    "2x2-04": (2, lambda e, M, i: [[1, 1], [_e(e, i[0]), _e(e, i[1])]]),
    "2x2-05": (2, lambda e, M, i: [[_e(e, i[0]), _e(e, i[1])], [1, 1]]),
    "2x2-06": (1, lambda e, M, i: [[1, M[0]], [_p(e, i[0]), M[2]]]),
    "2x2-07": (1, lambda e, M, i: [[1, M[1]], [_p(e, i[0]), M[2]]]),
    "2x2-08": (1, lambda e, M, i: [[_e(e, i[0]), M[0]], [_p(e, i[0]), M[2]]]),
    "2x2-09": (1, lambda e, M, i: [[_e(e, i[0]), M[1]], [_p(e, i[0]), M[2]]]),
    "2x2-10": (2, lambda e, M, i: [[1, _e(e, i[1])], [_p(e, i[0]), _p(e, i[1])]]),
    "2x2-11": (2, lambda e, M, i: [[_e(e, i[0]), _e(e, i[1])], [_p(e, i[0]), _p(e, i[1])]]),
    "2x2-12": (2, lambda e, M, i: [[1, 1], [_p(e, i[0]), _p(e, i[1])]]),
}


def _prow(e, idx):
    return [_p(e, j) for j in idx]


TRIPLE: dict[str, tuple[int, Callable]] = {
    "3x3-01": (2, lambda e, M, i: [[1, _e(e, i[1]), M[0]], [_e(e, i[0]), 1, M[1]], _prow(e, i) + [M[2]]]),
    "3x3-02": (2, lambda e, M, i: [[1, 1, M[0]], [_e(e, i[0]), _e(e, i[1]), M[1]], _prow(e, i) + [M[2]]]),
    "3x3-03": (2, lambda e, M, i: [[_e(e, i[0]), _e(e, i[1]), M[0]], [1, 1, M[1]], _prow(e, i) + [M[2]]]),
    "3x3-04": (3, lambda e, M, i: [[_e(e, j) for j in i], [1, 1, 1], _prow(e, i)]),
    "3x3-05": (3, lambda e, M, i: [[1, 1, 1], [_e(e, j) for j in i], _prow(e, i)]),
    "3x3-06": (3, lambda e, M, i: [[1, 1, _e(e, i[2])], [_e(e, i[0]), _e(e, i[1]), 1], _prow(e, i)]),
    "3x3-07": (3, lambda e, M, i: [[1, _e(e, i[1]), _e(e, i[2])], [_e(e, i[0]), 1, 1], _prow(e, i)]),
}

FAMILIES = {**PAIRWISE, **TRIPLE}


def family_matrix(family: str, indices: Sequence[int], epsilon, masses) -> list[list]:
    arity, build = FAMILIES[family]
    idx = tuple(indices)
    if len(idx) != arity:
        raise InvalidIndexTuple(f"{family} takes {arity} indices, got {len(idx)}")
    if len(set(idx)) != len(idx):
        raise InvalidIndexTuple(f"{family}: repeated index in {idx} gives equal columns")
    eps = as_rational(epsilon)
    M = [as_rational(m) ** 2 for m in masses]
    return [[sympy.sympify(x) for x in row] for row in build(eps, M, idx)]


def index_tuples(arity: int, D: int) -> list[tuple[int, ...]]:
    """Ordered tuples of pairwise distinct indices in ``1..D`` (empty if ``D < arity``)."""
    return list(permutations(range(1, D + 1), arity))


@dataclass(frozen=True)
class Certificate:
    family: str
    indices: tuple[int, ...]
    matrix: tuple[tuple, ...]
    det: sympy.Rational
    cofactor_det: sympy.Rational

    def to_dict(self) -> dict:
        return {"family": self.family, "indices": list(self.indices), "det": rational_str(self.det)}


@dataclass
class CertificateSet:
    certificates: list[Certificate] = field(default_factory=list)
    kind: str = "certificate"

    @property
    def all_nonzero(self) -> bool:
        return all(c.det != 0 for c in self.certificates)

    @property
    def first_failure(self) -> str | None:
        for c in self.certificates:
            if c.det == 0:
                return f"{c.family}{list(c.indices)}"
        return None

    def __add__(self, other: "CertificateSet") -> "CertificateSet":
        return CertificateSet(self.certificates + other.certificates, self.kind)

    def to_list(self) -> list[dict]:
        return [c.to_dict() for c in self.certificates]


def _evaluate(families: dict, epsilon, masses, D: int) -> CertificateSet:
    jobs = [(name, idx) for name, (arity, _) in families.items() for idx in index_tuples(arity, D)]

    def run(job):
        name, idx = job
        mat = family_matrix(name, idx, epsilon, masses)
        d = linalg.det(mat)
        return Certificate(name, idx, tuple(tuple(r) for r in mat), d, linalg.cofactor_det(mat))

    return CertificateSet(ordered_map(run, jobs))


# -- sunset template -------------------------------------------------------------


def sunset_template(masses, D: int, epsilon) -> list[list]:
    """Diagonals of the deformed sunset matrices, transcribed entry by entry."""
    eps = as_rational(epsilon)
    m1, m2, m3 = (as_rational(m) for m in masses)
    ones = [sympy.Integer(1)] * D
    small = [eps ** (2 * j) for j in range(1, D + 1)]
    mixed = [(1 + eps**j) ** 2 for j in range(1, D + 1)]
    return [[m1**2] + ones + small, [m2**2] + small + ones, [m3**2] + mixed + mixed]


def template_order(net: QuadricNet) -> tuple[str, str, str]:
    """Edge ids in template order: first loop, second loop, tree edge."""
    if net.tree is None or len(net.tree.complement) != 2 or len(net.tree.edges) != 1:
        raise UnsupportedNetShape("not a two-loop, three-edge net with a recorded tree")
    a, b = net.tree.complement
    return a, b, net.tree.edges[0]


def template_masses(net: QuadricNet) -> tuple:
    """Masses ``(m1, m2, m3)`` read off the net in template order."""
    return tuple(sympy.sqrt(net.form(eid).matrix[0, 0]) for eid in template_order(net))


def matches_sunset_template(net: QuadricNet, masses=None) -> bool:
    try:
        order = template_order(net)
    except UnsupportedNetShape:
        return False
    if masses is None:
        masses = template_masses(net)
    expected = sunset_template(masses, net.dimension, net.epsilon)
    for eid, diag in zip(order, expected):
        f = net.form(eid)
        if not f.is_diagonal:
            return False
        if any(sympy.expand(a - b) != 0 for a, b in zip(f.diagonal_entries(), diag)):
            return False
    return True


def _require_template(net: QuadricNet, masses):
    if not matches_sunset_template(net, masses):
        raise UnsupportedNetShape(
            "determinant families are only available for the sunset net under the 'paper' schedule"
        )


def pairwise_certificates(net: QuadricNet, masses) -> CertificateSet:
    _require_template(net, masses)
    return _evaluate(PAIRWISE, net.epsilon, masses, net.dimension)


def triple_certificates(net: QuadricNet, masses) -> CertificateSet:
    _require_template(net, masses)
    return _evaluate(TRIPLE, net.epsilon, masses, net.dimension)


# -- support scan (diagonal nets) --------------------------------------------------


@dataclass(frozen=True)
class SupportPoint:
    """A point of an intersection, given by its squared coordinates ``w = u^2``."""

    forms: tuple[int, ...]
    support: tuple[int, ...]
    squares: tuple[Fraction, ...]
    gradient_rank: int

    @property
    def independent(self) -> bool:
        return self.gradient_rank == len(self.forms)


def _kernel(rows: list[list[Fraction]], ncols: int) -> list[list[Fraction]]:
    red = linalg.rref(rows) if rows else []
    pivots = []
    for r in red:
        pivots.append(next(i for i, x in enumerate(r) if x != 0))
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        v = [Fraction(0)] * ncols
        v[f] = Fraction(1)
        for r, p in zip(red, pivots):
            v[p] = -r[f]
        basis.append(v)
    return basis


def support_scan(net: QuadricNet, form_indices: Sequence[int]) -> list[SupportPoint]:
    """Gradient ranks at the intersection points of diagonal forms, one per support.

    For diagonal forms the intersection condition is linear in the squared
    coordinates ``w_r = u_r^2``, and the gradient matrix ``(2 a_ir u_r)`` has the
    rank of the coefficient columns on the support of ``w``. Every support that
    carries a point with at least two nonzero coordinates is visited once.
    """
    forms = [net.forms[i] for i in form_indices]
    if not all(f.is_diagonal for f in forms):
        raise UnsupportedNetShape("support scan needs diagonal forms")
    diag = [[Fraction(str(x)) for x in f.diagonal_entries()] for f in forms]
    size = net.ambient_dim + 1
    points = []
    for k in range(2, size + 1):
        for S in combinations(range(size), k):
            rows = [[d[r] for r in S] for d in diag]
            basis = _kernel(rows, k)
            if not basis or any(all(v[c] == 0 for v in basis) for c in range(k)):
                continue
            # a generic kernel combination has full support on S
            for shift in range(1, 50):
                w = [sum(Fraction(shift + b) ** (b + 1) * v[c] for b, v in enumerate(basis)) for c in range(k)]
                if all(x != 0 for x in w):
                    break
            else:
                continue
            squares = [Fraction(0)] * size
            for c, r in enumerate(S):
                squares[r] = w[c]
            rank = linalg.rank(rows)
            points.append(SupportPoint(tuple(form_indices), S, tuple(squares), rank))
    return points


def support_scan_report(net: QuadricNet) -> dict:
    """Pairwise and triple support scans, labeled as heuristic evidence."""
    out = {"kind": "heuristic", "pairs": {}, "triples": {}, "pass": True}
    for r, key in ((2, "pairs"), (3, "triples")):
        for combo in combinations(range(net.n), r):
            pts = support_scan(net, combo)
            bad = [list(p.support) for p in pts if not p.independent]
            label = "&".join(net.edge_ids[i] for i in combo)
            out[key][label] = {"points": len(pts), "dependent_supports": bad}
            out["pass"] = out["pass"] and not bad
    return out


# -- epsilon search ----------------------------------------------------------------


@dataclass(frozen=True)
class EpsilonSearch:
    """Candidates ``1/k`` for ``k = start..cutoff``, or an explicit sequence."""

    cutoff: int = 64
    start: int = 2
    sequence: tuple | None = None

    def candidates(self) -> list[sympy.Rational]:
        if self.sequence is not None:
            return [as_rational(x) for x in self.sequence]
        return [sympy.Rational(1, k) for k in range(self.start, self.cutoff + 1)]


@dataclass
class Evidence:
    epsilon: sympy.Rational
    net: QuadricNet
    conditions: ConditionReport
    certificates: CertificateSet
    trace: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.conditions.all_pass and self.certificates.all_nonzero

    def to_dict(self) -> dict:
        return {
            "epsilon": rational_str(self.epsilon),
            "conditions": self.conditions.to_dict(),
            "certificates": self.certificates.to_list(),
            "pass": self.passed,
        }


def sunset_evidence(masses, D: int, epsilon) -> Evidence:
    g = sunset_graph(tuple(Fraction(str(as_rational(m))) for m in masses), D)
    tree = first_tree(g)
    net = deform_net(build_net(g, tree), tree, epsilon, "paper")
    conds = verify_conditions(net)
    certs = pairwise_certificates(net, masses) + triple_certificates(net, masses)
    return Evidence(as_rational(epsilon), net, conds, certs)


def find_admissible_epsilon(masses, D: int, search: EpsilonSearch = EpsilonSearch()) -> Evidence:
    """First candidate epsilon passing every condition and every determinant."""
    trace = []
    for eps in search.candidates():
        if eps == 0:
            trace.append({"epsilon": "0", "failure": "epsilon must be nonzero"})
            continue
        ev = sunset_evidence(masses, D, eps)
        if ev.passed:
            ev.trace = trace + [{"epsilon": rational_str(eps), "failure": None}]
            return ev
        failed = [k for k in ("smooth", "real", "positive", "conservation") if not getattr(ev.conditions, k)]
        trace.append(
            {
                "epsilon": rational_str(eps),
                "failure": ev.certificates.first_failure or ",".join(failed),
            }
        )
    raise SearchExhausted(
        f"no admissible epsilon among {len(trace)} candidates", trace
    )
