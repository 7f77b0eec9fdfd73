import numpy as np
import pytest
import scipy.linalg as sla

import rtpi.legendre as leg
import rtpi.polyspace as ps
import rtpi.sobolev as sb
from rtpi.refelem import TRIANGLE, SQUARE, element_rule

from oracles import fourier_h_minus1_const_unit_square

ELEMENTS = [TRIANGLE, SQUARE]


@pytest.mark.parametrize("el", ELEMENTS, ids=lambda e: e.kind)
@pytest.mark.parametrize("variant", ["tilde", "plain"])
def test_dualhalf_gram_spd(el, variant):
    for p in (0, 2, 5, 8):
        g = sb.k_dualhalf_gram(el, p, variant)
        assert np.abs(g.matrix - g.matrix.T).max() <= 1e-12
        assert sla.eigvalsh(g.matrix)[0] > 0


@pytest.mark.parametrize("el", ELEMENTS, ids=lambda e: e.kind)
def test_constant_mode_identity(el):
    # <q, 1> in the tilde inner product equals int_K q, machine-exact
    for p in (0, 3, 6):
        g = sb.k_dualhalf_gram(el, p, "tilde")
        c1 = np.zeros(g.dim)
        c1[0] = np.sqrt(el.area)
        rhs = np.zeros(g.dim)
        rhs[0] = np.sqrt(el.area)
        assert np.abs(g.matrix @ c1 - rhs).max() <= 1e-12


def test_unit_constant_norm():
    g = sb.k_dualhalf_gram(SQUARE, 0, "tilde")
    assert g.matrix[0, 0] == pytest.approx(1.0, abs=1e-12)
    g = sb.k_dualhalf_gram(TRIANGLE, 0, "tilde")
    c = np.array([np.sqrt(TRIANGLE.area)])
    assert float(c @ g.matrix @ c) == pytest.approx(TRIANGLE.area, abs=1e-12)


@pytest.mark.parametrize("el", ELEMENTS, ids=lambda e: e.kind)
@pytest.mark.parametrize("variant", ["tilde", "plain"])
def test_fast_vs_dense_cylinder(el, variant):
    G1 = sb.k_dualhalf_gram(el, 2, variant, p3=5).matrix
    G2 = sb.dense_dualhalf_gram(el, 2, variant, 5)
    assert np.abs(G1 - G2).max() <= 1e-12


def test_h_minus1_constant_fourier_oracle():
    g = sb.dualone_gram(SQUARE, 0, "h-minus1", p_ref=14)
    assert g.matrix[0, 0] == pytest.approx(
        fourier_h_minus1_const_unit_square(), abs=2e-10)


@pytest.mark.parametrize("el", ELEMENTS, ids=lambda e: e.kind)
def test_dualone_grams(el):
    for kind in ("h-minus1", "h-tilde-minus1"):
        g = sb.dualone_gram(el, 4, kind)
        assert np.abs(g.matrix - g.matrix.T).max() <= 1e-12
        assert sla.eigvalsh(g.matrix)[0] > 0
    with pytest.raises(ValueError):
        sb.dualone_gram(el, 6, "h-minus1", p_ref=6)


@pytest.mark.parametrize("el", ELEMENTS, ids=lambda e: e.kind)
def test_edge_gram_basics(el):
    for p in (2, 4, 8):
        g = sb.edge_h12_gram(el, 0, p)
        assert g.dim == p - 1
        assert np.abs(g.matrix - g.matrix.T).max() <= 1e-12
        assert sla.eigvalsh(g.matrix)[0] > 0
    with pytest.raises(ValueError):
        sb.edge_h12_gram(el, 0, 4, p_lift=3)


@pytest.mark.parametrize("el", ELEMENTS, ids=lambda e: e.kind)
def test_edge_lift_invariants(el):
    g = sb.edge_h12_gram(el, 1 % el.nedges, 4, p_lift=10)
    lift = g.aux["lifts"][0]
    s = np.linspace(0.03, 0.97, 9)
    edge = g.aux["edge"]
    assert np.abs(lift.eval(edge.param(s)) - g.basis.eval(s)[:, 0]).max() <= 1e-10
    for e in el.edges:
        if e.index != edge.index:
            assert np.abs(lift.eval(e.param(s))).max() <= 1e-10
    S = ps.stiffness_matrix(el, 10)
    N = ps.bubble_basis(el, 10).coords_in_parent
    assert np.abs(N.T @ S @ lift.coeffs).max() <= 1e-10


@pytest.mark.parametrize("el", ELEMENTS, ids=lambda e: e.kind)
def test_edge_pairing_polynomial_exactness(el):
    rng = np.random.default_rng(0)
    g = sb.edge_h12_gram(el, 0, 5)
    d = rng.standard_normal(g.dim)
    s, w = leg.gauss01(40)
    fvals = g.basis.eval(s) @ d
    r = sb.edge_pairing(g, fvals, s, w)
    assert np.abs(r - g.matrix @ d).max() <= 1e-11


def test_edge_gram_lift_stability():
    # diagonal entry under a lift-degree increase; set by the corner
    # regularity of the auxiliary harmonic problem (faster on the triangle)
    for el, tol in ((TRIANGLE, 1e-6), (SQUARE, 5e-5)):
        a = sb.edge_h12_gram(el, 0, 3, p_lift=9).matrix[0, 0]
        b = sb.edge_h12_gram(el, 0, 3, p_lift=13).matrix[0, 0]
        assert abs(a - b) / abs(a) <= tol


def test_cylinder_gram_lift_stability():
    # tilde-variant self-convergence under p3 -> p3+4 at p <= 6
    for el in ELEMENTS:
        G1 = sb.k_dualhalf_gram(el, 6, "tilde", p3=12).matrix
        G2 = sb.k_dualhalf_gram(el, 6, "tilde", p3=16).matrix
        assert np.abs(G1 - G2).max() / np.abs(G2).max() <= 5e-6


@pytest.mark.parametrize("el", ELEMENTS, ids=lambda e: e.kind)
def test_pair_dualhalf_consistency(el):
    # pairing a polynomial through representers agrees with the Gram column
    rng = np.random.default_rng(1)
    g = sb.k_dualhalf_gram(el, 4, "tilde")
    c = rng.standard_normal(g.dim)
    poly = ps.ScalarPoly(ps.scalar_basis(el, 4), c)
    beta = sb.pair_dualhalf(lambda x: poly.eval(x), g)
    assert np.abs(beta - g.matrix @ c).max() <= 1e-11


def test_pair_dualhalf_constant_column():
    # <f, 1-mode> = int_K f / sqrt(|K|) for any integrable f (key identity)
    for el in ELEMENTS:
        g = sb.k_dualhalf_gram(el, 3, "tilde")
        f = lambda x: np.sin(np.pi * x[:, 0]) * np.sin(np.pi * x[:, 1])
        rule = element_rule(el, 60)
        beta = g.pair_values(f(rule.nodes), rule)
        exact = np.dot(rule.weights, f(rule.nodes)) / np.sqrt(el.area)
        assert beta[0] == pytest.approx(exact, abs=1e-11)
        if el is SQUARE:
            assert beta[0] * np.sqrt(el.area) == pytest.approx(4 / np.pi**2, abs=1e-10)


def test_error_norm_basics():
    for el in ELEMENTS:
        z = sb.error_norm(lambda x: np.zeros(len(x)), el, "l2", 8)
        assert z == 0.0
        # constant c has tilde-dualhalf norm |c| sqrt(<1,1>) = |c| sqrt(|K|)
        c = 0.7
        v = sb.error_norm(lambda x: np.full(len(x), c), el, "dualhalf", 8)
        assert v == pytest.approx(c * np.sqrt(el.area), abs=1e-10)
    with pytest.raises(ValueError):
        sb.error_norm(lambda x: np.zeros(len(x)), SQUARE, "h7", 4)


def test_error_norm_reference_stability():
    f = lambda x: np.sin(2 * x[:, 0]) * np.cos(x[:, 1])
    vals = [sb.error_norm(f, SQUARE, "dualhalf", p_ref) for p_ref in (10, 14, 18)]
    assert abs(vals[2] - vals[1]) <= abs(vals[1] - vals[0]) + 1e-12
    assert abs(vals[2] - vals[1]) / vals[2] <= 1e-6


def test_embedding_bound_trend():
    # ||q||_{H~-1/2} <= C ||q||_L2 with C nonincreasing as the space grows
    for el in ELEMENTS:
        tops = []
        for p in (2, 4, 6):
            G = sb.k_dualhalf_gram(el, p, "tilde").matrix
            tops.append(sla.eigvalsh(G)[-1])
        assert tops[0] >= tops[1] - 1e-12 >= tops[2] - 2e-12


def test_min_energy_extension_operator():
    for el in ELEMENTS:
        E = sb._edge_bubble_lift(el.kind, 0, 4, 4)
        eb = ps.edge_basis_on(el, 0, 4, bubble=True)
        s = np.linspace(0.05, 0.95, 7)
        full = ps.scalar_basis(el, 4)
        vals = full.eval(el.edges[0].param(s)) @ E
        assert np.abs(vals - eb.eval(s)).max() <= 1e-10
        for e in el.edges[1:]:
            assert np.abs(full.eval(e.param(s)) @ E).max() <= 1e-10
    with pytest.raises(ValueError):
        # a trace that no P_2 polynomial can match (degree-4 bubble)
        nodes_per_edge = 3
        tr = np.zeros((SQUARE.nedges * nodes_per_edge, 1))
        x, _ = leg.gauss01(nodes_per_edge)
        tr[:nodes_per_edge, 0] = (x * (1 - x)) ** 2
        sb.lift_boundary_traces(SQUARE, 2, tr)


def test_gram_dump_rows():
    g = sb.l2_gram(SQUARE, 1)
    rows = list(g.rows())
    assert len(rows) == g.dim**2
    assert rows[0] == (0, 0, 1.0)
