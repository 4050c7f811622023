from dataclasses import replace
from fractions import Fraction
from itertools import combinations

import pytest
import sympy

from qmw.errors import DimensionMismatch, InvalidIndexTuple, SearchExhausted, UnsupportedNetShape
from qmw.graph import FeynmanGraph, InternalEdge, first_tree, sunset_graph
from qmw.quadrics import QuadraticForm, build_net, deform_net
from qmw.transversality import (
    PAIRWISE,
    TRIPLE,
    EpsilonSearch,
    family_matrix,
    find_admissible_epsilon,
    gradient,
    index_tuples,
    matches_sunset_template,
    pairwise_certificates,
    sunset_evidence,
    support_scan,
    support_scan_report,
    template_order,
)

R = sympy.Rational


def sunset_net_eps(D=2, masses=(1, 2, 3), eps=R(1, 3)):
    g = sunset_graph(masses, D)
    tree = first_tree(g)
    return deform_net(build_net(g, tree), tree, eps, "paper")


def coefficient_minors(masses, D, eps, k):
    """All k x k minors of the (forms x coordinates) coefficient matrix, up to sign."""
    M = [sympy.Integer(m) ** 2 for m in masses]
    cols = [M]
    cols += [[1, eps ** (2 * j), (1 + eps**j) ** 2] for j in range(1, D + 1)]
    cols += [[eps ** (2 * j), 1, (1 + eps**j) ** 2] for j in range(1, D + 1)]
    A = sympy.Matrix(cols).T
    out = set()
    for rows in combinations(range(3), k):
        for cs in combinations(range(A.cols), k):
            out.add(abs(A.extract(list(rows), list(cs)).det()))
    return out


class TestGradient:
    def test_diagonal(self):
        f = QuadraticForm.diagonal([4, 1, 9])
        assert gradient(f, [1, 2, R(1, 3)]) == [8, 4, 6]

    def test_off_diagonal(self):
        f = QuadraticForm(sympy.ImmutableMatrix([[1, 2], [2, 3]]))
        assert gradient(f, [1, -1]) == [-2, -2]

    def test_length_mismatch(self):
        with pytest.raises(DimensionMismatch):
            gradient(QuadraticForm.diagonal([1, 1]), [1, 2, 3])


class TestFamilies:
    def test_counts(self):
        assert len(PAIRWISE) == 12 and len(TRIPLE) == 7
        assert len(index_tuples(2, 2)) == 2 and index_tuples(3, 2) == []
        assert len(index_tuples(3, 3)) == 6

    def test_worked_example(self):
        m = family_matrix("2x2-01", (1,), R(1, 2), (1, 2, 3))
        assert m == [[1, 1], [R(1, 4), 4]]
        assert sympy.Matrix(m).det() == R(15, 4)

    def test_epsilon_one_collapses(self):
        assert sympy.Matrix(family_matrix("2x2-03", (1, 2), 1, (1, 2, 3))).det() == 0

    def test_epsilon_zero_triple_is_mass_condition(self):
        m1, m2, m3 = 2, 3, 5
        d = sympy.Matrix(family_matrix("3x3-01", (1, 2), 0, (m1, m2, m3))).det()
        assert d == m3**2 - m1**2 - m2**2
        assert sympy.Matrix(family_matrix("3x3-01", (1, 2), 0, (3, 4, 5))).det() == 0

    def test_invalid_indices(self):
        with pytest.raises(InvalidIndexTuple):
            family_matrix("2x2-03", (1, 1), R(1, 3), (1, 2, 3))
        with pytest.raises(InvalidIndexTuple):
            family_matrix("3x3-04", (1, 2), R(1, 3), (1, 2, 3))

    @pytest.mark.parametrize("D", [2, 3])
    def test_families_are_minors(self, D):
        eps = R(1, 3)
        for k, fams in ((2, PAIRWISE), (3, TRIPLE)):
            minors = coefficient_minors((1, 2, 3), D, eps, k)
            for name, (arity, _) in fams.items():
                for idx in index_tuples(arity, D):
                    d = sympy.Matrix(family_matrix(name, idx, eps, (1, 2, 3))).det()
                    assert abs(d) in minors, (name, idx)


class TestCertificates:
    def test_sunset_third(self):
        ev = sunset_evidence((1, 2, 3), 2, R(1, 3))
        assert ev.passed
        assert len(ev.certificates.certificates) == 30
        for c in ev.certificates.certificates:
            assert c.det == sympy.Matrix(c.matrix).det() == c.cofactor_det

    def test_d3_count(self):
        assert len(sunset_evidence((1, 2, 3), 3, R(1, 3)).certificates.certificates) == 96

    def test_template_detection(self):
        net = sunset_net_eps()
        assert template_order(net) == ("e1", "e2", "e3")
        assert matches_sunset_template(net)
        g = sunset_graph((1, 2, 3), 2)
        tree = first_tree(g)
        uni = deform_net(build_net(g, tree), tree, R(1, 3), "uniform")
        assert not matches_sunset_template(uni)
        with pytest.raises(UnsupportedNetShape):
            pairwise_certificates(uni, (1, 2, 3))


class TestSearch:
    def test_finds_third(self):
        ev = find_admissible_epsilon((1, 2, 3), 2)
        assert ev.epsilon == R(1, 3)
        assert ev.trace[0] == {"epsilon": "1/2", "failure": "2x2-02[1]"}

    def test_exhausted(self):
        with pytest.raises(SearchExhausted) as ei:
            find_admissible_epsilon((1, 2, 3), 2, EpsilonSearch(sequence=(1,)))
        assert len(ei.value.trace) == 1 and ei.value.trace[0]["failure"]

    def test_zero_skipped(self):
        ev = find_admissible_epsilon((1, 2, 3), 2, EpsilonSearch(sequence=(0, R(1, 3))))
        assert ev.trace[0]["failure"] == "epsilon must be nonzero"

    def test_pythagorean_masses_still_certify(self):
        # the determinant families do not see the mass relation; the motive verdict does
        assert find_admissible_epsilon((3, 4, 5), 2).passed


class TestSupportScan:
    def test_points_lie_on_intersection(self):
        net = sunset_net_eps()
        checked = 0
        for combo in ((0, 1), (0, 2), (1, 2), (0, 1, 2)):
            for p in support_scan(net, combo):
                u = [sympy.sqrt(sympy.Rational(w.numerator, w.denominator)) for w in p.squares]
                for i in combo:
                    assert sympy.simplify(net.forms[i](u)) == 0
                grads = sympy.Matrix([gradient(net.forms[i], u) for i in combo])
                assert grads.rank(simplify=True) == p.gradient_rank
                checked += 1
        assert checked >= 10

    def test_report_sunset(self):
        rep = support_scan_report(sunset_net_eps())
        assert rep["kind"] == "heuristic" and rep["pass"]

    def test_bubble_dependent(self):
        g = FeynmanGraph(
            "b", 1, ("v1", "v2"),
            (InternalEdge("e1", "v1", "v2", Fraction(1)), InternalEdge("e2", "v2", "v1", Fraction(1))),
        )
        tree = first_tree(g)
        net = deform_net(build_net(g, tree), tree, R(1, 3))
        # both forms are m^2 u0^2 + u1^2: every common point has dependent gradients
        assert not support_scan_report(net)["pass"]

    def test_needs_diagonal(self):
        net = sunset_net_eps()
        off = QuadraticForm(sympy.ImmutableMatrix(sympy.ones(5, 5) + sympy.eye(5)))
        bad = replace(net, forms=(off,) + net.forms[1:])
        with pytest.raises(UnsupportedNetShape):
            support_scan(bad, (0, 1))
