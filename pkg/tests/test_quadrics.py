from fractions import Fraction

import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from qmw.errors import EmptyLoopSpace, QuadricError, ScheduleInconsistent
from qmw.graph import FeynmanGraph, InternalEdge, first_tree, momentum_relations, sunset_graph
from qmw.quadrics import (
    FactorizationWitness,
    QuadraticForm,
    QuadricNet,
    build_net,
    build_raw_forms,
    deform_net,
    dump_net,
    exact_pullback,
    load_net,
    no_real_points,
    restrict_to_subspace,
    single_propagator_net,
    verify_conditions,
)

eps = sympy.Symbol("epsilon")
m1, m2, m3 = 2, 5, 7


def diag_of(form):
    return [form.matrix[i, i] for i in range(form.size)]


def parallel_graph(D=1, reverse=False):
    t = ("v2", "v1") if reverse else ("v1", "v2")
    return FeynmanGraph(
        "bubble", D, ("v1", "v2"),
        (InternalEdge("e1", "v1", "v2", Fraction(1)), InternalEdge("e2", *t, Fraction(2))),
    )


def sunset_net(D=2, masses=(1, 2, 3)):
    g = sunset_graph(masses, D)
    tree = first_tree(g)
    return g, tree, build_net(g, tree)


class TestRawAndRestricted:
    def test_raw_sunset_e1(self):
        g = sunset_graph(dimension=2)
        rel = momentum_relations(g, first_tree(g))
        f1 = build_raw_forms(g, rel)[0]
        assert diag_of(f1) == [1, 1, 1, 0, 0, 0, 0]
        assert all(f.matrix[0, 0] == m**2 for f, m in zip(build_raw_forms(g, rel), (1, 2, 3)))

    def test_raw_single_edge_d1(self):
        g = FeynmanGraph("t", 1, ("a", "b"), (InternalEdge("e1", "a", "b", Fraction(3)),))
        rel = momentum_relations(g, first_tree(g))
        assert build_raw_forms(g, rel)[0].matrix == sympy.diag(9, 1)

    @pytest.mark.parametrize("D", [1, 2, 3])
    def test_sunset_restriction(self, D):
        # transcription of the undeformed display
        _, _, net = sunset_net(D, (m1, m2, m3))
        one, zero = [1] * D, [0] * D
        assert diag_of(net.forms[0]) == [m1**2] + one + zero
        assert diag_of(net.forms[1]) == [m2**2] + zero + one
        assert diag_of(net.forms[2]) == [m3**2] + one + one

    def test_tree_graph_empty(self):
        g = FeynmanGraph("t", 2, ("a", "b"), (InternalEdge("e1", "a", "b", Fraction(1)),))
        with pytest.raises(EmptyLoopSpace):
            build_net(g, first_tree(g))

    def test_parallel_d1(self):
        g = parallel_graph()
        net = build_net(g, first_tree(g))
        assert [f.matrix for f in net.forms] == [sympy.diag(1, 1), sympy.diag(4, 1)]

    def test_exact_pullback_keeps_cross_terms(self):
        g = sunset_graph(dimension=1)
        rel = momentum_relations(g, first_tree(g))
        raw = build_raw_forms(g, rel)
        P3 = exact_pullback(raw[2], rel)
        assert P3 == sympy.Matrix([[9, 0, 0], [0, 1, 1], [0, 1, 1]])
        # diagonal model agrees on the first two forms, which carry no mixing
        net = restrict_to_subspace(raw, rel)
        assert exact_pullback(raw[0], rel) == net.forms[0].matrix


class TestDeformation:
    @pytest.mark.parametrize("D", [1, 2, 3])
    def test_paper_schedule_symbolic(self, D):
        g, tree, net = sunset_net(D, (m1, m2, m3))
        dnet = deform_net(net, tree, eps, "paper")
        small = [eps ** (2 * j) for j in range(1, D + 1)]
        mixed = [(1 + eps**j) ** 2 for j in range(1, D + 1)]
        assert diag_of(dnet.forms[0]) == [m1**2] + [1] * D + small
        assert diag_of(dnet.forms[1]) == [m2**2] + small + [1] * D
        assert [sympy.expand(a - b) for a, b in zip(diag_of(dnet.forms[2]), [m3**2] + mixed + mixed)] == [0] * (2 * D + 1)

    def test_continuity(self):
        _, tree, net = sunset_net(2)
        dnet = deform_net(net, tree, eps)
        assert [f.matrix for f in dnet.subs(eps, 0).forms] == [f.matrix for f in net.forms]

    def test_epsilon_zero_identity(self):
        _, tree, net = sunset_net(2)
        assert deform_net(net, tree, 0) is net

    def test_uniform_schedule(self):
        _, tree, net = sunset_net(2)
        d = deform_net(net, tree, Fraction(1, 2), "uniform")
        q = sympy.Rational(1, 4)
        assert diag_of(d.forms[0]) == [1, 1, 1, q, q]
        assert verify_conditions(d).all_pass

    def test_unknown_schedule(self):
        _, tree, net = sunset_net(2)
        with pytest.raises(QuadricError):
            deform_net(net, tree, Fraction(1, 2), "wild")

    def test_parallel_d1(self):
        for reverse in (False, True):
            g = parallel_graph(reverse=reverse)
            tree = first_tree(g)
            net = build_net(g, tree)
            d = deform_net(net, tree, Fraction(1, 3))
            assert d.forms[0].matrix == net.forms[0].matrix
            w1, w2 = d.forms[0].witness.reduced, d.forms[1].witness.reduced
            assert w2 == (w1 if reverse else -w1)
            assert verify_conditions(d).conservation

    def test_singular_tree_solution(self):
        # e3 carries T2 - T1, which vanishes once epsilon = 1 makes the loop witnesses equal
        g = FeynmanGraph(
            "theta", 1, ("v1", "v2"),
            (
                InternalEdge("e1", "v1", "v2", Fraction(1)),
                InternalEdge("e2", "v2", "v1", Fraction(1)),
                InternalEdge("e3", "v1", "v2", Fraction(1)),
            ),
        )
        tree = first_tree(g)
        net = build_net(g, tree)
        with pytest.raises(ScheduleInconsistent):
            deform_net(net, tree, Fraction(1), "uniform")


class TestConditions:
    def test_sunset_half(self):
        _, tree, net = sunset_net(2)
        rep = verify_conditions(deform_net(net, tree, Fraction(1, 2)))
        assert rep.smooth and rep.real and rep.positive and rep.conservation
        assert set(rep.factorization.values()) == {"exact"}

    def test_undeformed_not_smooth(self):
        _, _, net = sunset_net(2)
        rep = verify_conditions(net)
        assert not rep.smooth
        assert rep.determinants["e1"] == 0 and rep.determinants["e2"] == 0

    def test_broken_conservation_reports_vertex(self):
        _, tree, net = sunset_net(2)
        d = deform_net(net, tree, Fraction(1, 2))
        f = d.forms[0]
        T = sympy.Matrix(f.witness.T)
        T[3, 3] = sympy.Rational(1, 3)  # perturb one lambda on e1 only
        bad = QuadraticForm(sympy.ImmutableMatrix(T.T * T), FactorizationWitness(sympy.ImmutableMatrix(T)), "e1")
        broken = QuadricNet(d.dimension, d.loops, (bad,) + d.forms[1:], d.edges, d.epsilon, d.graph_name, d.tree)
        rep = verify_conditions(broken)
        assert not rep.conservation
        assert set(rep.conservation_failures) == {"v1", "v2"}
        assert rep.smooth and rep.positive

    def test_symbolic_epsilon_refused(self):
        _, tree, net = sunset_net(2)
        with pytest.raises(QuadricError):
            verify_conditions(deform_net(net, tree, eps))

    def test_no_real_points(self):
        assert no_real_points(QuadraticForm.diagonal([1, 1, 1]))
        assert not no_real_points(QuadraticForm.diagonal([1, -1]))
        _, tree, net = sunset_net(2, (1, 2, 7))
        assert no_real_points(deform_net(net, tree, Fraction(1, 3)).forms[2])
        off = QuadraticForm(sympy.ImmutableMatrix([[1, 2], [2, 1]]))
        assert not no_real_points(off)


def test_dump_roundtrip():
    _, tree, net = sunset_net(2)
    d = deform_net(net, tree, Fraction(1, 3))
    doc = dump_net(d)
    assert doc["epsilon"] == "1/3"
    assert doc["forms"][0]["lower"][3] == ["0", "0", "0", "1/9"]
    back = load_net(doc)
    assert [f.matrix for f in back.forms] == [f.matrix for f in d.forms]
    assert dump_net(back) == doc


def test_single_propagator_net():
    net = single_propagator_net(2, 3)
    assert net.forms[0].matrix == sympy.diag(9, 1, 1)
    assert no_real_points(net.forms[0])


def test_symmetry_enforced():
    with pytest.raises(QuadricError):
        QuadraticForm(sympy.ImmutableMatrix([[1, 2], [0, 1]]))


rationals = st.fractions(min_value=-4, max_value=4, max_denominator=5)


@settings(max_examples=60, deadline=None)
@given(st.lists(rationals, min_size=5, max_size=5), rationals)
def test_homogeneity(u, c):
    _, tree, net = sunset_net(2)
    d = deform_net(net, tree, Fraction(1, 3))
    for f in d.forms:
        scaled = [c * x for x in u]
        assert f(scaled) == sympy.Rational(c.numerator, c.denominator) ** 2 * f(u)


@st.composite
def loop_graphs(draw):
    nv = draw(st.integers(2, 4))
    edges = [(draw(st.integers(0, v - 1)), v) for v in range(1, nv)]
    for _ in range(draw(st.integers(1, 3))):
        a = draw(st.integers(0, nv - 1))
        b = draw(st.integers(0, nv - 1).filter(lambda x: x != a))
        edges.append((a, b))
    verts = tuple(f"v{i}" for i in range(nv))
    es = tuple(
        InternalEdge(f"e{j + 1}", verts[s], verts[t], Fraction(draw(st.integers(1, 4))))
        for j, (s, t) in enumerate(edges)
    )
    return FeynmanGraph("r", draw(st.integers(1, 2)), verts, es)


@settings(max_examples=60, deadline=None)
@given(loop_graphs(), st.sampled_from(["paper", "uniform"]))
def test_deformation_conserves_momentum(g, schedule):
    tree = first_tree(g)
    net = build_net(g, tree)
    try:
        d = deform_net(net, tree, Fraction(1, 3), schedule)
    except ScheduleInconsistent:
        return
    rep = verify_conditions(d)
    assert rep.conservation and rep.positive and rep.smooth
    # masses are never touched
    assert d.masses_squared() == net.masses_squared()
