import numpy as np
import pytest

import rtpi.fields as fl
import rtpi.polyspace as ps
from rtpi.refelem import TRIANGLE, SQUARE, element_rule

ELEMENTS = [TRIANGLE, SQUARE]


@pytest.mark.parametrize("el", ELEMENTS, ids=lambda e: e.kind)
def test_catalog_divergence_fd(el):
    for f in fl.catalog(el):
        if f.kind != "vector":
            continue
        assert fl.check_divergence_fd(f, n=50) <= 1e-6, f.name


@pytest.mark.parametrize("el", ELEMENTS, ids=lambda e: e.kind)
def test_catalog_contents(el):
    names = [f.name for f in fl.catalog(el)]
    for expected in ("smooth_trig", "rt_random(3)", "curl_singular(0.6)",
                     "grad_singular(0.6)", "scalar_singular(0.6)",
                     "corner_curl_singular(0.6)"):
        assert expected in names


def test_field_by_name_parsing():
    f = fl.field_by_name(SQUARE, "curl_singular(0.4)")
    assert f.regularity == pytest.approx(0.39)
    f = fl.field_by_name(SQUARE, "rt_random(3)", seed=5)
    assert f.poly is not None and f.poly.order == 3
    with pytest.raises(KeyError):
        fl.field_by_name(SQUARE, "nonsense(1)")
    with pytest.raises(KeyError):
        fl.field_by_name(SQUARE, "curl_singular(not_a_number)")
    with pytest.raises(ValueError):
        fl.curl_singular(SQUARE, -0.5)


def test_rt_random_reproducible_and_unit():
    a = fl.rt_random(SQUARE, 3, seed=9)
    b = fl.rt_random(SQUARE, 3, seed=9)
    assert np.array_equal(a.poly.coeffs, b.poly.coeffs)
    assert a.poly.l2_norm() == pytest.approx(1.0)


@pytest.mark.parametrize("el", ELEMENTS, ids=lambda e: e.kind)
def test_corner_curl_singular_divfree(el):
    f = fl.corner_curl_singular(el, 0.6)
    pts = np.random.default_rng(0).random((30, 2)) * 0.4 + 0.2
    assert np.abs(f.div(pts)).max() == 0.0
    assert f.singular and f.singular_vertex == 0
    # harmonic-conjugate construction: u = (Re w, -Im w), w analytic
    assert fl.check_divergence_fd(f) <= 1e-6


@pytest.mark.parametrize("el", ELEMENTS, ids=lambda e: e.kind)
def test_ladder_block_masses(el):
    # density ladder: exact block masses (1+d)^-(2 alpha + 1) on the modal
    # hierarchy
    alpha = 0.6
    f = fl.density_singular(el, alpha)
    c = f.meta["poly"].coeffs
    degs = fl._block_degrees(el, f.meta["poly"].degree)
    for d in (3, 10, 25):
        mass = np.sum(c[degs == d] ** 2)
        assert mass == pytest.approx((1.0 + d) ** (-(2 * alpha + 1)), rel=1e-12)


@pytest.mark.parametrize("el", ELEMENTS, ids=lambda e: e.kind)
def test_scalar_singular_gradient(el):
    f = fl.scalar_singular(el, 0.6)
    pts = np.random.default_rng(1).random((10, 2)) * 0.5 + 0.2
    h = 1e-6
    g = f.grad(pts)
    for d, e in ((0, np.array([h, 0.0])), (1, np.array([0.0, h]))):
        fd = (f.eval(pts + e) - f.eval(pts - e)) / (2 * h)
        assert np.abs(fd - g[:, d]).max() <= 1e-5 * max(1, np.abs(g).max())


def test_ladder_l2_approximation_rate():
    # curl_singular has L2 approximation numbers decaying like p^-alpha:
    # the witness saturates H^alpha membership
    el = SQUARE
    alpha = 0.6
    f = fl.field_by_name(el, f"curl_singular({alpha})")
    rule = fl.area_rule(f, el, 100)
    uv = f.eval(rule.nodes)
    errs = []
    degrees = range(6, 15)
    for p in degrees:
        V = ps.scalar_basis(el, p).eval(rule.nodes)
        c = V.T @ (rule.weights[:, None] * uv)
        res = uv - V @ c
        errs.append(np.sqrt(np.sum(rule.weights @ res**2)))
    slope = np.polyfit(np.log(list(degrees)), np.log(errs), 1)[0]
    assert slope == pytest.approx(-alpha, abs=0.2)


@pytest.mark.parametrize("el", ELEMENTS, ids=lambda e: e.kind)
def test_edge_rules(el):
    f = fl.corner_grad_singular(el, 0.4)
    # flux of u over the edges adjacent to the singular vertex converges
    rule = fl.edge_rule(f, el, 0, 40)
    assert rule.s.shape == rule.weights.shape
    assert rule.pts.shape == (len(rule.s), 2)
    # nodes never collapse onto the singular vertex
    d = np.hypot(rule.pts[:, 0], rule.pts[:, 1])
    assert d.min() > 0
    smooth = fl.field_by_name(el, "smooth_trig")
    r2 = fl.edge_rule(smooth, el, 0, 20)
    assert r2.weights.sum() == pytest.approx(el.edges[0].length)


def test_area_rule_honors_min_degree():
    f = fl.field_by_name(SQUARE, "density_singular(0.6)")
    r = fl.area_rule(f, SQUARE, 10)
    assert len(r.weights) >= (fl.min_quad_degree(f) // 2) ** 2
