import numpy as np
import pytest

import rtpi.polyspace as ps
from rtpi.refelem import TRIANGLE, SQUARE, element_rule

ELEMENTS = [TRIANGLE, SQUARE]


@pytest.mark.parametrize("el", ELEMENTS, ids=lambda e: e.kind)
def test_scalar_dims_and_orthonormality(el):
    assert ps.scalar_basis(TRIANGLE, 2).dim == 6
    assert ps.scalar_basis(SQUARE, 3).dim == 16
    for p in range(0, 9):
        b = ps.scalar_basis(el, p)
        assert b.dim == ps.scalar_dim(el, p)
        rule = element_rule(el, 2 * p)
        V = b.eval(rule.nodes)
        G = V.T @ (rule.weights[:, None] * V)
        assert np.abs(G - np.eye(b.dim)).max() <= 1e-12


def test_bubble_dims():
    assert ps.bubble_basis(SQUARE, 2).dim == 1
    assert ps.bubble_basis(TRIANGLE, 3).dim == 1
    # nullity of the boundary-evaluation map on P_5(T), independent rank check
    full = ps.scalar_basis(TRIANGLE, 5)
    s = np.linspace(0.08, 0.92, 9)
    pts = np.vstack([e.param(s * e.length) for e in TRIANGLE.edges])
    rank = np.linalg.matrix_rank(full.eval(pts), tol=1e-9)
    assert full.dim - rank == 6
    assert ps.bubble_basis(TRIANGLE, 5).dim == 6
    assert ps.bubble_basis(TRIANGLE, 2).dim == 0


def test_bubbles_vanish_on_boundary():
    for el in ELEMENTS:
        b = ps.bubble_basis(el, 5)
        s = np.linspace(0.0, 1.0, 13)
        for e in el.edges:
            assert np.abs(b.eval(e.param(s * e.length))).max() <= 1e-11


@pytest.mark.parametrize("el,p,dim", [
    (TRIANGLE, 1, 3), (SQUARE, 2, 12), (TRIANGLE, 4, 24), (SQUARE, 5, 60),
])
def test_rt_dims(el, p, dim):
    assert ps.rt_basis(el, p).dim == dim == ps.rt_dim(el, p)


def test_rt_bubble_dims_and_traces():
    assert ps.rt_bubble_basis(SQUARE, 3).dim == 12
    for el in ELEMENTS:
        for p in (1, 2, 4, 6):
            rb = ps.rt_bubble_basis(el, p)
            assert rb.dim == ps.rt_bubble_dim(el, p)
            if rb.dim:
                s = np.linspace(0.03, 0.97, 9)
                worst = max(np.abs(rb.normal_trace_eval(e, s * e.length)).max()
                            for e in el.edges)
                assert worst <= 1e-11


def test_divergence_examples():
    rng = np.random.default_rng(1)
    for el in ELEMENTS:
        rt1 = ps.rt_basis(el, 1)
        r = element_rule(el, 4)
        c = np.einsum("pkd,pd,p->k", rt1.eval(r.nodes), r.nodes, r.weights)
        u = ps.RTPoly(rt1, c)  # the field (x1, x2)
        pts = rng.random((8, 2)) * 0.2 + 0.3
        assert np.abs(ps.divergence(u).eval(pts) - 2.0).max() < 1e-13
        # div curl = 0
        sb = ps.scalar_basis(el, 6)
        phi = ps.ScalarPoly(sb, rng.standard_normal(sb.dim))
        assert np.abs(ps.divergence(ps.vector_curl(phi)).coeffs).max() < 1e-10


def test_div_rank_on_rt_bubbles():
    # div maps the RT bubbles onto the mean-zero polynomials
    D = ps.div_matrix(SQUARE, 3) @ ps.rt_bubble_basis(SQUARE, 3).coords_in_parent
    assert np.linalg.matrix_rank(D, tol=1e-9) == 8


def test_vector_curl_examples():
    for el in ELEMENTS:
        b1 = ps.scalar_basis(el, 1)
        r = element_rule(el, 3)
        cx = ps.project_values(b1, r.nodes[:, 0], r)
        v = ps.vector_curl(ps.ScalarPoly(b1, cx))  # curl x1 = (0, -1)
        pts = np.array([[0.4, 0.3], [0.5, 0.2]])
        assert np.abs(v.eval(pts) - np.array([0.0, -1.0])).max() < 1e-13
        zero = ps.vector_curl(ps.ScalarPoly(b1, ps.project_values(
            b1, np.ones(len(r.nodes)), r)))
        assert zero.l2_norm() < 1e-14


def test_curl_of_bubble_is_rt_bubble():
    for el, p in ((SQUARE, 2), (TRIANGLE, 3)):
        bub = ps.bubble_basis(el, p)
        phi = ps.ScalarPoly(bub, np.ones(bub.dim)).in_full_basis()
        v = ps.vector_curl(phi)
        s = np.linspace(0.0, 1.0, 11)
        worst = max(np.abs(v.normal_trace_values(e, s * e.length)).max()
                    for e in el.edges)
        assert worst <= 1e-12
        assert ps.divergence(v).l2_norm() <= 1e-12


def test_normal_trace_poly_degree():
    rng = np.random.default_rng(3)
    for el in ELEMENTS:
        basis = ps.rt_basis(el, 5)
        u = ps.RTPoly(basis, rng.standard_normal(basis.dim))
        for e in el.edges:
            tr = u.normal_trace_poly(e)  # raises if not in P_{p-1}
            assert tr.basis.degree == 4


def test_de_rham_exactness_ranks():
    for el in ELEMENTS:
        for p in range(2, 7):
            rb = ps.rt_bubble_basis(el, p)
            D = ps.div_matrix(el, p) @ rb.coords_in_parent
            ker = rb.dim - np.linalg.matrix_rank(D, tol=1e-9)
            assert ker == ps.bubble_dim(el, p)


def test_eval_checks_containment():
    b = ps.scalar_basis(TRIANGLE, 2)
    poly = ps.ScalarPoly(b, np.ones(b.dim))
    with pytest.raises(ValueError):
        ps.eval_poly(poly, np.array([[2.0, 2.0]]))
    v = ps.eval_poly(poly, np.array([[0.5, 0.2]]))
    assert np.isfinite(v).all()


def test_eval_round_trip():
    rng = np.random.default_rng(5)
    for el in ELEMENTS:
        b = ps.scalar_basis(el, 6)
        c = rng.standard_normal(b.dim)
        poly = ps.ScalarPoly(b, c)
        rule = element_rule(el, 14)
        back = ps.project_values(b, poly.eval(rule.nodes), rule)
        assert np.abs(back - c).max() <= 1e-12


def test_vertex_interpolant():
    for el in ELEMENTS:
        vals = np.arange(1.0, 1.0 + len(el.vertices))
        g1 = ps.vertex_interpolant(el, vals)
        assert np.abs(g1.eval(el.vertices) - vals).max() < 1e-12
