"""Analytic test fields with known regularity and exact divergences.

Rate-witness entries are spectral ladders of sharp Sobolev regularity
(r = alpha - EPS, with EPS a small haircut since membership fails at the
exact exponent).  The corner_* entries carry classical vertex
singularities; quadrature helpers return geometrically graded rules near a
singular vertex so their fluxes and pairings are accurate to ~1e-10.
"""

import re
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import polyspace as ps
from .refelem import (element_rule, graded_element_rule,
                      graded_interval_rule, reference_element)
from .legendre import gauss01

EPS_REGULARITY = 0.01


@dataclass(eq=False)
class Field:
    """Pointwise-evaluable test field.

    kind is 'vector' (with exact divergence evaluator) or 'scalar' (with
    gradient evaluator where the catalog provides one).  regularity is the
    Sobolev index r with u in H^r(div,K) for vectors, g in H^{1+r}(K) for
    scalar potentials, f in H^r(K) for scalar densities; np.inf marks
    analytic entries.

    singular_point locates a point singularity.  Entries used for rate
    verification place it strictly inside K: a boundary singularity would
    converge at twice its Sobolev rate under p-refinement, which does not
    witness the generic exponents.  The corner_* entries keep the classical
    vertex placement (singular_vertex is then the vertex index).
    """

    name: str
    kind: str
    element: object
    eval: object
    div: object = None
    grad: object = None
    regularity: float = np.inf
    singular_point: np.ndarray = None
    singular_vertex: int = None
    poly: object = None
    meta: dict = field(default_factory=dict)

    def __call__(self, pts):
        return self.eval(np.atleast_2d(pts))

    @property
    def singular(self):
        return self.singular_point is not None


def _trig_vector(element):
    def u(x):
        return np.column_stack([np.sin(np.pi * x[:, 0]) * np.cos(np.pi * x[:, 1]),
                                x[:, 0] * x[:, 1]])

    def du(x):
        return np.pi * np.cos(np.pi * x[:, 0]) * np.cos(np.pi * x[:, 1]) + x[:, 0]

    return Field("smooth_trig", "vector", element, u, div=du)


def _curl_smooth(element):
    def u(x):
        return np.column_stack([
            np.pi * np.sin(np.pi * x[:, 0]) * np.cos(np.pi * x[:, 1]),
            -np.pi * np.cos(np.pi * x[:, 0]) * np.sin(np.pi * x[:, 1]),
        ])

    f = Field("curl_smooth", "vector", element, u,
              div=lambda x: np.zeros(len(np.atleast_2d(x))))
    f.meta["potential"] = _scalar_smooth(element)
    return f


def _scalar_smooth(element):
    def g(x):
        return np.sin(np.pi * x[:, 0]) * np.sin(np.pi * x[:, 1])

    def dg(x):
        return np.column_stack([
            np.pi * np.cos(np.pi * x[:, 0]) * np.sin(np.pi * x[:, 1]),
            np.pi * np.sin(np.pi * x[:, 0]) * np.cos(np.pi * x[:, 1]),
        ])

    return Field("scalar_smooth", "scalar", element, g, grad=dg)


def rt_random(element, p0, seed=0):
    """Random RT field of order p0 with unit L2 norm; exact polynomial."""
    rng = np.random.default_rng(seed)
    basis = ps.rt_basis(element, p0)
    c = rng.standard_normal(basis.dim)
    c /= np.linalg.norm(c)
    u = ps.RTPoly(basis, c)
    du = ps.divergence(u)
    f = Field(f"rt_random({p0})", "vector", element,
              lambda x: u.eval(x), div=lambda x: du.eval(x), poly=u)
    f.meta["div_degree"] = p0 - 1
    return f


# Rate-witness fields are spectral ladders on degree-hierarchical bases
# orthonormalized in the norm each criterion measures: content of exact mass
# (1+d)^-(2r+1) in the degree-d block saturates membership in H^r and
# nothing better, so measured p-convergence tracks the generic Sobolev
# exponents.  Closed-form corner singularities are kept as the corner_*
# entries; under p-refinement those converge at roughly twice their Sobolev
# rate (classical vertex doubling), so they cannot witness the predicted
# exponents.
LADDER_DEGREE = 40
_MS_SEED = 1357


def _block_degrees(element, P):
    if element.kind == "tri":
        return np.concatenate([np.full(d + 1, d) for d in range(P + 1)])
    return np.concatenate([np.full(2 * d + 1, d) for d in range(P + 1)])


def _ladder_coeffs(element, alpha, seed_shift, D, start_degree):
    """Signed per-mode amplitudes giving exact block mass (1+d)^-(2*alpha+1)
    in each hierarchical degree block d >= start_degree."""
    degs = _block_degrees(element, D)
    rng = np.random.default_rng(_MS_SEED + seed_shift
                                + int(round(alpha * 1000)))
    signs = rng.choice([-1.0, 1.0], size=len(degs))
    counts = np.array([np.sum(degs == d) for d in degs])
    c = signs * (1.0 + degs) ** (-(alpha + 0.5)) / np.sqrt(counts)
    c[degs < start_degree] = 0.0
    return c, degs


@lru_cache(maxsize=None)
def _energy_chol(kind, D):
    """Upper-triangular factor orthonormalizing the non-constant modal block
    in the H1-seminorm (hierarchy preserved)."""
    import scipy.linalg as sla
    A = ps.stiffness_matrix(reference_element(kind), D)[1:, 1:]
    return sla.cholesky(0.5 * (A + A.T), lower=False)


@lru_cache(maxsize=None)
def _dualhalf_curl_chol(kind, D):
    """Upper-triangular factor orthonormalizing {curl q_n} (n nonconstant)
    in the componentwise discrete H~-1/2(K) inner product, hierarchically."""
    import scipy.linalg as sla
    from . import sobolev as sb
    element = reference_element(kind)
    basis = ps.scalar_basis(element, D)
    rule = element_rule(element, 2 * D)
    G = sb.k_dualhalf_gram(element, D, "tilde")
    V = basis.eval(rule.nodes)
    g = basis.grad_eval(rule.nodes)
    W = rule.weights[:, None]
    # modal coefficients of the curl components of every basis member
    C1 = V.T @ (W * g[:, :, 1])
    C2 = V.T @ (W * -g[:, :, 0])
    B = C1.T @ G.matrix @ C1 + C2.T @ G.matrix @ C2
    return sla.cholesky(0.5 * (B + B.T)[1:, 1:], lower=False)


def _h1_ladder_poly(element, alpha, seed_shift, D):
    """ScalarPoly whose H1-seminorm content has exact block masses
    (1+d)^-(2*alpha+1) (built on the H1-orthonormalized hierarchy)."""
    import scipy.linalg as sla
    c, _ = _ladder_coeffs(element, alpha, seed_shift, D, 2)
    R = _energy_chol(element.kind, D)
    e = sla.solve_triangular(R, c[1:], lower=False)
    coeffs = np.concatenate([[0.0], e])
    return ps.ScalarPoly(ps.scalar_basis(element, D), coeffs)


def _dual_curl_ladder_poly(element, alpha, seed_shift, D):
    """Potential whose curl has exact block masses (1+d)^-(2*(alpha+1/2)+1)
    in the componentwise discrete H~-1/2 metric; its L2 approximation
    numbers then decay at p^-alpha, i.e. sharp H^alpha(div) regularity."""
    import scipy.linalg as sla
    c, _ = _ladder_coeffs(element, alpha + 0.5, seed_shift, D, 2)
    R = _dualhalf_curl_chol(element.kind, D)
    e = sla.solve_triangular(R, c[1:], lower=False)
    coeffs = np.concatenate([[0.0], e])
    return ps.ScalarPoly(ps.scalar_basis(element, D), coeffs)


def _ladder_min_degree(D):
    return 2 * D + 12


def curl_singular(element, alpha, degree=LADDER_DEGREE):
    """Divergence-free field of sharp regularity H^(alpha-eps)(div,K),
    built so its content per degree block follows the exact power law of a
    worst-case H^alpha field in the measured dual norm."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    g = _dual_curl_ladder_poly(element, alpha, 11, degree)

    def u(x):
        dg = g.grad(np.atleast_2d(x))
        return np.column_stack([dg[:, 1], -dg[:, 0]])

    f = Field(f"curl_singular({alpha:g})", "vector", element, u,
              div=lambda x: np.zeros(len(np.atleast_2d(x))),
              regularity=alpha - EPS_REGULARITY)
    f.meta["min_quad_degree"] = _ladder_min_degree(degree)
    f.meta["potential"] = Field(
        f"curl_singular_potential({alpha:g})", "scalar", element,
        lambda x: g.eval(x), grad=lambda x: g.grad(np.atleast_2d(x)),
        regularity=alpha + 1 - EPS_REGULARITY,
        meta={"min_quad_degree": _ladder_min_degree(degree)})
    return f


def density_singular(element, alpha, degree=LADDER_DEGREE):
    """Scalar density of sharp regularity H^(alpha-eps): exact block masses
    (1+d)^-(2*alpha+1) on the L2-orthonormal modal hierarchy."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    c, _ = _ladder_coeffs(element, alpha, 23, degree, 1)
    h = ps.ScalarPoly(ps.scalar_basis(element, degree), c)
    fld = Field(f"density_singular({alpha:g})", "scalar", element,
                lambda x: h.eval(x), regularity=alpha - EPS_REGULARITY)
    fld.meta["min_quad_degree"] = _ladder_min_degree(degree)
    fld.meta["poly"] = h
    return fld


def grad_singular(element, alpha, degree=LADDER_DEGREE):
    """Field whose divergence is a sharp H^(alpha-eps) density ladder (the
    components, an exact coordinate antiderivative, are one order smoother),
    so u is in H^(alpha-eps)(div,K) with the divergence saturating rates."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    c, _ = _ladder_coeffs(element, alpha, 37, degree, 1)
    h = ps.ScalarPoly(ps.scalar_basis(element, degree), c)
    tq, wq = gauss01(degree // 2 + 2)

    def u(x):
        x = np.atleast_2d(x)
        # U(x) = int_0^{x1} h(t, x2) dt, exact Gauss per point batch
        pts = np.empty((len(x) * len(tq), 2))
        pts[:, 0] = (x[:, 0:1] * tq[None, :]).ravel()
        pts[:, 1] = np.repeat(x[:, 1], len(tq))
        hv = h.eval(pts).reshape(len(x), len(tq))
        return np.column_stack([x[:, 0] * (hv @ wq), np.zeros(len(x))])

    f = Field(f"grad_singular({alpha:g})", "vector", element, u,
              div=lambda x: h.eval(np.atleast_2d(x)),
              regularity=alpha - EPS_REGULARITY)
    f.meta["min_quad_degree"] = _ladder_min_degree(degree)
    return f


def scalar_singular(element, alpha, degree=LADDER_DEGREE):
    """Scalar potential of sharp regularity H^(1+alpha-eps): exact block
    masses on the H1-orthonormalized hierarchy."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    g = _h1_ladder_poly(element, alpha, 53, degree)
    f = Field(f"scalar_singular({alpha:g})", "scalar", element,
              lambda x: g.eval(x), grad=lambda x: g.grad(np.atleast_2d(x)),
              regularity=alpha - EPS_REGULARITY)
    f.meta["min_quad_degree"] = _ladder_min_degree(degree)
    f.meta["poly"] = g
    return f


def corner_curl_singular(element, alpha):
    """curl of the harmonic function rho^alpha sin(alpha theta) about vertex
    0: divergence-free, u ~ rho^(alpha-1).  Converges at roughly twice the
    Sobolev rate (vertex singularities double under p-refinement), so this
    entry exercises structure rather than rates."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")

    def u(x):
        z = x[:, 0] + 1j * x[:, 1]
        w = alpha * z ** (alpha - 1.0)
        return np.column_stack([w.real, -w.imag])

    return Field(f"corner_curl_singular({alpha:g})", "vector", element, u,
                 div=lambda x: np.zeros(len(np.atleast_2d(x))),
                 regularity=alpha - EPS_REGULARITY,
                 singular_point=element.vertices[0], singular_vertex=0)


def corner_grad_singular(element, alpha):
    """gradient of rho^(alpha+1) about vertex 0."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")

    def u(x):
        rho = np.hypot(x[:, 0], x[:, 1])
        return (alpha + 1.0) * rho[:, None] ** (alpha - 1.0) * x

    def du(x):
        rho = np.hypot(*np.atleast_2d(x).T)
        return (alpha + 1.0) ** 2 * rho ** (alpha - 1.0)

    return Field(f"corner_grad_singular({alpha:g})", "vector", element, u,
                 div=du, regularity=alpha - EPS_REGULARITY,
                 singular_point=element.vertices[0], singular_vertex=0)


def curl_of(scalar_field):
    """The divergence-free vector field curl g of a scalar catalog entry."""
    g = scalar_field

    def u(x):
        dg = g.grad(np.atleast_2d(x))
        return np.column_stack([dg[:, 1], -dg[:, 0]])

    f = Field(f"curl_of({g.name})", "vector", g.element, u,
              div=lambda x: np.zeros(len(np.atleast_2d(x))),
              regularity=g.regularity, singular_vertex=g.singular_vertex)
    f.meta["potential"] = g
    return f


def catalog(element, seed=0):
    """The standard test catalog on an element."""
    return [
        _trig_vector(element),
        rt_random(element, 3, seed=seed),
        curl_singular(element, 0.6),
        grad_singular(element, 0.6),
        corner_curl_singular(element, 0.6),
        corner_grad_singular(element, 0.6),
        _curl_smooth(element),
        _scalar_smooth(element),
        scalar_singular(element, 0.6),
        density_singular(element, 0.6),
    ]


_FIELD_MAKERS = {
    "smooth_trig": lambda el, a, seed: _trig_vector(el),
    "curl_smooth": lambda el, a, seed: _curl_smooth(el),
    "scalar_smooth": lambda el, a, seed: _scalar_smooth(el),
    "rt_random": lambda el, a, seed: rt_random(el, int(a), seed=seed),
    "curl_singular": lambda el, a, seed: curl_singular(el, float(a)),
    "grad_singular": lambda el, a, seed: grad_singular(el, float(a)),
    "scalar_singular": lambda el, a, seed: scalar_singular(el, float(a)),
    "density_singular": lambda el, a, seed: density_singular(el, float(a)),
    "corner_curl_singular": lambda el, a, seed: corner_curl_singular(el, float(a)),
    "corner_grad_singular": lambda el, a, seed: corner_grad_singular(el, float(a)),
}


def field_by_name(element, name, seed=0):
    """Resolve a CLI field name like 'curl_singular(0.6)' or 'smooth_trig'."""
    m = re.fullmatch(r"\s*([a-z_0-9]+)\s*(?:\(\s*([^)]*)\s*\))?\s*", name)
    if not m or m.group(1) not in _FIELD_MAKERS:
        raise KeyError(f"unknown field {name!r}")
    base, arg = m.group(1), m.group(2)
    try:
        return _FIELD_MAKERS[base](element, arg, seed)
    except (TypeError, ValueError) as exc:
        raise KeyError(f"bad field argument in {name!r}: {exc}") from exc


def field_names():
    return sorted(_FIELD_MAKERS)


# ---------------------------------------------------------------------------
# Quadrature adapted to a field's singularity structure
# ---------------------------------------------------------------------------

def min_quad_degree(field):
    return 0 if field is None else int(field.meta.get("min_quad_degree", 0))


def area_rule(field, element, degree):
    """Area rule resolving the field: radially graded toward the singular
    point when there is one; dense enough for the field's oscillatory
    content otherwise."""
    if field is not None and field.singular:
        nodes, weights = graded_element_rule(element, field.singular_point,
                                             npts=max(14, min(degree // 2 + 1, 24)))
        return _RuleView(nodes, weights)
    return element_rule(element, max(degree, min_quad_degree(field)))


@dataclass(eq=False)
class EdgeRule:
    """Edge quadrature carrying both representable arclength values (for
    polynomial factors) and exact 2D points (for singular field factors,
    built by offsets from the singular vertex so they never collapse onto
    it)."""

    s: np.ndarray
    pts: np.ndarray
    weights: np.ndarray


def singular_edge_end(field, element, edge_index):
    """'left'/'right' if the edge starts/ends at the field's singular
    vertex, else None (interior singular points never touch an edge)."""
    if field is None or field.singular_vertex is None:
        return None
    v = field.singular_vertex
    if edge_index == v:
        return "left"
    if (edge_index + 1) % len(element.vertices) == v:
        return "right"
    return None


def edge_rule(field, element, edge_index, degree, levels=30):
    """Edge rule on [0, length]: geometrically graded toward a singular
    endpoint; composite panels when the field is near-singular off the edge;
    plain Gauss otherwise."""
    e = element.edges[edge_index]
    sing = singular_edge_end(field, element, edge_index)
    npts = max(degree, min_quad_degree(field)) // 2 + 1
    if sing is not None:
        delta, w = graded_interval_rule(0.0, e.length, "left",
                                        npts=max(12, min(npts, 24)), levels=levels)
        if sing == "left":
            anchor, direction = e.a, (e.b - e.a) / e.length
            s = delta
        else:
            anchor, direction = e.b, (e.a - e.b) / e.length
            s = e.length - delta
        pts = anchor[None, :] + delta[:, None] * direction[None, :]
        return EdgeRule(s, pts, w)
    if field is not None and field.singular:
        s, w = composite_rule(0.0, e.length, panels=8, npts=16)
        return EdgeRule(s, e.param(s), w)
    x, w = gauss01(npts)
    return EdgeRule(x * e.length, e.param(x * e.length), w * e.length)


def composite_rule(a, b, panels=8, npts=16):
    """Uniform composite Gauss rule on (a,b)."""
    x, w = gauss01(npts)
    bounds = np.linspace(a, b, panels + 1)
    xs = np.concatenate([lo + (hi - lo) * x for lo, hi in zip(bounds[:-1], bounds[1:])])
    ws = np.concatenate([(hi - lo) * w for lo, hi in zip(bounds[:-1], bounds[1:])])
    return xs, ws


@dataclass(eq=False)
class _RuleView:
    nodes: np.ndarray
    weights: np.ndarray


def check_divergence_fd(field, n=50, h=1e-5, seed=0):
    """Max relative error of the declared divergence against centered
    differences at interior random points."""
    rng = np.random.default_rng(seed)
    element = field.element
    pts = []
    while len(pts) < n:
        cand = rng.random((4 * n, 2))
        if element.kind == "tri":
            cand = cand @ np.array([[1.0, 0.0], [0.5, np.sqrt(3) / 2]])
            keep = element.contains(cand, tol=-0.05)
        else:
            keep = element.contains(cand, tol=-0.05)
        pts.extend(cand[keep])
    pts = np.array(pts[:n])
    e1, e2 = np.array([h, 0.0]), np.array([0.0, h])
    fd = ((field.eval(pts + e1) - field.eval(pts - e1))[:, 0]
          + (field.eval(pts + e2) - field.eval(pts - e2))[:, 1]) / (2 * h)
    ref = field.div(pts)
    scale = np.maximum(np.abs(ref), 1.0)
    return float(np.abs(fd - ref).max() / scale.max()) if np.isscalar(ref) \
        else float((np.abs(fd - ref) / scale).max())
