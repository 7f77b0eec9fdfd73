"""The five projection operators.

interp_div_half assembles the H(div)-conforming interpolant in three stages:
a lowest-order edge-flux part, curls of minimal-energy extensions of edgewise
H~1/2-projected boundary potentials, and an interior RT bubble determined by
a divergence equation in the H~-1/2(K) inner product together with an L2
orthogonality to curls of scalar bubbles.  interp_div is the classical
variant with the interior divergence equation posed in L2(K); interp_h1 is
the scalar H1-conforming analogue; proj_l2 and proj_dualhalf are the plain
projections completing the commuting diagrams.

The interior system is solved through the discrete Helmholtz split of the RT
bubbles into curls of scalar bubbles and their L2-orthogonal complement, on
which the divergence is a bijection onto the mean-zero polynomials.
"""

from dataclasses import dataclass, field as dc_field
from functools import lru_cache

import numpy as np
import scipy.linalg as sla

from . import fields as fl
from . import legendre as leg
from . import polyspace as ps
from . import sobolev as sb
from .refelem import reference_element

RESID_TOL = 1e-9


class InterpolationError(Exception):
    """Stage consistency check failed."""


# ---------------------------------------------------------------------------
# Lowest order stage
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _flux_basis(kind):
    """RT_1 basis functions with unit normal trace on one edge, zero on the
    others."""
    element = reference_element(kind)
    basis = ps.rt_basis(element, 1)
    s, w = leg.gauss01(3)
    M = np.array([
        w @ basis.normal_trace_eval(e, s * e.length) for e in element.edges
    ])
    C = np.linalg.solve(M, np.eye(element.nedges))
    return basis, C


def normal_trace(u, edge):
    """s -> u(x(s)) . n for a pointwise-evaluable field."""
    def trace(s):
        return np.asarray(u(edge.param(s))) @ edge.normal
    return trace


def edge_fluxes(field, element, degree=40):
    """int_l u.n per edge, with grading near a singular vertex."""
    out = np.empty(element.nedges)
    for i, e in enumerate(element.edges):
        rule = fl.edge_rule(field, element, i, degree)
        out[i] = rule.weights @ (field.eval(rule.pts) @ e.normal)
    return out


def lowest_order(field, element=None):
    """The lowest-order interpolant: edge fluxes times unit-flux RT_1 basis."""
    element = element or field.element
    basis, C = _flux_basis(element.kind)
    fluxes = edge_fluxes(field, element)
    coeffs = C @ (fluxes / np.array([e.length for e in element.edges]))
    return ps.RTPoly(basis, coeffs)


# ---------------------------------------------------------------------------
# Boundary potential
# ---------------------------------------------------------------------------

class _PrefixIntegrator:
    """Cumulative integral of a 2D-point-evaluable function along a ray
    anchor + rho*direction, rho in [0, length], on graded or plain panels."""

    def __init__(self, dfun, anchor, direction, panels):
        self.dfun = dfun
        self.anchor = np.asarray(anchor)
        self.direction = np.asarray(direction)
        self.panels = panels
        x16, w16 = leg.gauss01(16)
        self._x16, self._w16 = x16, w16
        vals = [(hi - lo) * np.dot(w16, self._d(lo + (hi - lo) * x16))
                for lo, hi in zip(panels[:-1], panels[1:])]
        self.cums = np.concatenate([[0.0], np.cumsum(vals)])

    def _d(self, rho):
        pts = self.anchor[None, :] + np.atleast_1d(rho)[:, None] * self.direction
        return self.dfun(pts)

    @property
    def total(self):
        return self.cums[-1]

    def __call__(self, rho):
        rho = np.atleast_1d(rho)
        ks = np.clip(np.searchsorted(self.panels, rho, side="right") - 1,
                     0, len(self.panels) - 2)
        out = np.empty(len(rho))
        for j, (r, k) in enumerate(zip(rho, ks)):
            lo = self.panels[k]
            part = (r - lo) * np.dot(self._w16, self._d(lo + (r - lo) * self._x16)) \
                if r > lo else 0.0
            out[j] = self.cums[k] + part
        return out


@dataclass(eq=False)
class BoundaryPotential:
    """psi on the boundary with dpsi/ds = (u - u1).n, anchored to zero at
    vertex 0; evaluated by cumulative panel quadrature.

    Edges ending at a singular vertex are integrated by offsets from that
    vertex (psi(s) = start + total - tail(length - s)), so evaluation points
    never collapse onto the singularity.
    """

    element: object
    start_values: np.ndarray
    vertex_defect: float
    _edges: list = dc_field(default_factory=list, repr=False)

    def eval_edge(self, i, svals):
        mode, integ, length = self._edges[i]
        svals = np.atleast_1d(np.asarray(svals, dtype=float))
        if mode == "forward":
            vals = integ(svals)
        else:
            vals = integ.total - integ(length - svals)
        return self.start_values[i] + vals


def boundary_potential(field, u1, element=None, defect_tol=1e-8):
    """Construct psi from the defect normal trace (u - u1).n."""
    element = element or field.element
    edges_data = []
    integrals = np.empty(element.nedges)
    scale = 1.0
    for i, e in enumerate(element.edges):
        def d(pts, e=e):
            return (np.asarray(field.eval(pts)) - u1.eval(pts)) @ e.normal

        sing = fl.singular_edge_end(field, element, i)
        if sing is not None:
            from .refelem import graded_panels
            panels = graded_panels(e.length)
        else:
            n_panels = max(2 if field.singular else 1,
                           fl.min_quad_degree(field) // 16 + 1)
            panels = np.linspace(0.0, e.length, n_panels + 1)
        if sing == "right":
            integ = _PrefixIntegrator(d, e.b, (e.a - e.b) / e.length, panels)
            edges_data.append(("backward", integ, e.length))
            integrals[i] = integ.total
        else:
            integ = _PrefixIntegrator(d, e.a, (e.b - e.a) / e.length, panels)
            edges_data.append(("forward", integ, e.length))
            integrals[i] = integ.total
        s_probe, _ = leg.gauss01(8)
        scale = max(scale, np.abs(d(e.param(s_probe * e.length))).max())
    starts = np.concatenate([[0.0], np.cumsum(integrals)])
    defect = np.abs(starts).max() / scale
    if defect > defect_tol:
        raise InterpolationError(
            f"boundary potential vertex defect {defect:.2e} (flux mismatch)")
    return BoundaryPotential(element, starts[:-1], defect, edges_data)


# ---------------------------------------------------------------------------
# Minimal-energy extension
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class ExtensionOperator:
    """Per-edge minimal-H1-energy extensions of edge bubbles into P_p(K)."""

    element: object
    degree: int
    matrices: tuple

    def apply(self, edge_index, bubble_coeffs):
        E = self.matrices[edge_index]
        return ps.ScalarPoly(ps.scalar_basis(self.element, self.degree),
                             E @ bubble_coeffs)


@lru_cache(maxsize=None)
def _min_energy_extension(kind, p):
    element = reference_element(kind)
    mats = tuple(
        sb._edge_bubble_lift(kind, i, p, p) for i in range(element.nedges)
    )
    return ExtensionOperator(element, p, mats)


def min_energy_extension(element, p):
    if p < 2:
        raise ValueError("extensions need p >= 2")
    return _min_energy_extension(element.kind, p)


# ---------------------------------------------------------------------------
# Edge stage
# ---------------------------------------------------------------------------

def edge_projections(values_on_edges, element, p, field=None):
    """Per-edge H~1/2(l) projections onto the edge bubbles P^0_p(l).

    values_on_edges(i, svals) returns the data on edge i; returns a list of
    coefficient vectors in the edge-bubble bases.
    """
    out = []
    for i in range(element.nedges):
        gram = sb.edge_h12_gram(element, i, p)
        q = gram.aux["p_lift"]
        # shallow grading: the data is continuous (~rho^alpha), only the
        # pairing integral needs resolving
        rule = fl.edge_rule(field, element, i, 2 * q + 12, levels=12)
        fvals = values_on_edges(i, rule.s)
        r = sb.edge_pairing(gram, fvals, rule.s, rule.weights)
        out.append(gram.solve(r))
    return out


def edge_interpolant(psi, p, element, field=None):
    """u2 = sum_l curl(extension of the projected edge potential)."""
    if p < 2 or ps.edge_basis_on(element, 0, p, bubble=True).dim == 0:
        return ps.zero_rt(element, max(p, 1)), [None] * element.nedges
    ext = min_energy_extension(element, p)
    coeffs = edge_projections(lambda i, s: psi.eval_edge(i, s), element, p, field)
    u2 = ps.zero_rt(element, p)
    parts = []
    for i, c in enumerate(coeffs):
        psi2 = ext.apply(i, c)
        parts.append(ps.EdgePoly(ps.edge_basis_on(element, i, p, bubble=True), c, True))
        u2 = u2 + ps.vector_curl(psi2.to_degree(p))
    return u2, parts


# ---------------------------------------------------------------------------
# Interior stage
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _helmholtz_complement(kind, p):
    """Basis (in RT_p coordinates) of the L2-orthogonal complement of the
    curls of scalar bubbles inside the RT bubbles."""
    element = reference_element(kind)
    rtb = ps.rt_bubble_basis(element, p)
    if rtb.dim == 0:
        return np.zeros((ps.rt_dim(element, p), 0))
    Nb = rtb.coords_in_parent
    sbub = ps.bubble_basis(element, p)
    if sbub.dim == 0:
        return Nb
    Kb = ps.curl_matrix(element, p) @ sbub.coords_in_parent
    M = Kb.T @ Nb
    _, sv, Vt = np.linalg.svd(M)
    rank = int(np.sum(sv > 1e-10 * max(sv[0], 1e-30)))
    return Nb @ Vt[rank:].T


def div_pairing_vector(field, element, degree, inner="dualhalf"):
    """<div u, q_j> for the modal basis of P_degree(K): through representer
    tracesers for the H~-1/2 product, plain L2 projection otherwise."""
    if inner == "dualhalf":
        gram = sb.k_dualhalf_gram(element, degree)
        rule = fl.area_rule(field, element, 2 * gram.aux["p3"] + 10)
        return gram.pair_values(np.asarray(field.div(rule.nodes), dtype=float),
                                rule), gram
    rule = fl.area_rule(field, element, 4 * degree + 10)
    basis = ps.scalar_basis(element, degree)
    return ps.project_values(basis, np.asarray(field.div(rule.nodes), dtype=float),
                             rule), None


def interior_interpolant(field, u1, u2, p, element, inner="dualhalf",
                         resid_tol=RESID_TOL):
    """u3 in the RT bubbles solving the divergence equation (in H~-1/2 or
    L2) plus L2-orthogonality to curls of scalar bubbles."""
    rtb = ps.rt_bubble_basis(element, p)
    if rtb.dim == 0:
        return ps.zero_rt(element, p), {}
    Wc = _helmholtz_complement(element.kind, p)
    D = ps.div_matrix(element, p)
    Dw = D @ Wc
    du1 = ps.divergence(u1.to_order(p)).coeffs
    if inner == "dualhalf":
        beta, gram = div_pairing_vector(field, element, p - 1, "dualhalf")
        Gm = gram.matrix
    else:
        beta, _ = div_pairing_vector(field, element, p - 1, "l2")
        Gm = np.eye(len(beta))
    rhs = Dw.T @ (beta - Gm @ du1)
    Mw = Dw.T @ Gm @ Dw
    y = sla.solve(0.5 * (Mw + Mw.T), rhs, assume_a="pos")
    w = ps.RTPoly(ps.rt_basis(element, p), Wc @ y)

    sbub = ps.bubble_basis(element, p)
    diag = {}
    if sbub.dim:
        Kb = ps.curl_matrix(element, p) @ sbub.coords_in_parent
        A = sbub.coords_in_parent.T @ ps.stiffness_matrix(element, p) \
            @ sbub.coords_in_parent
        rule = fl.area_rule(field, element, 4 * p + 10)
        curlvals = np.einsum(
            "pkd,km->pmd", ps.rt_basis(element, p).eval(rule.nodes), Kb)
        uvals = np.asarray(field.eval(rule.nodes), dtype=float)
        rhs2 = np.einsum("pmd,pd,p->m", curlvals, uvals, rule.weights,
                         optimize=True)
        known = (u1.to_order(p) + u2.to_order(p) + w).coeffs
        rhs2 -= Kb.T @ known
        z = sla.solve(0.5 * (A + A.T), rhs2, assume_a="pos")
        u3 = w + ps.RTPoly(ps.rt_basis(element, p), Kb @ z)
        resid2 = np.abs(rhs2 - A @ z).max()
    else:
        u3 = w
        resid2 = 0.0

    # posterior residuals of the full interior system
    Db = D @ rtb.coords_in_parent
    du = ps.divergence((u1.to_order(p) + u3)).coeffs
    resid1 = np.abs(Db.T @ (beta - Gm @ du)).max()
    scale = max(1.0, np.abs(beta).max(), u3.l2_norm())
    diag["interior_div_resid"] = resid1 / scale
    diag["interior_curl_resid"] = resid2 / scale
    if resid1 / scale > resid_tol or resid2 / scale > resid_tol:
        raise InterpolationError(
            f"interior solve residuals {resid1 / scale:.2e}, "
            f"{resid2 / scale:.2e} exceed {resid_tol:.0e}")
    return u3, diag


# ---------------------------------------------------------------------------
# The interpolation operators
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class InterpolantParts:
    u1: object
    u2: object
    u3: object
    total: object
    edge_parts: list = None
    diagnostics: dict = dc_field(default_factory=dict)


def _assemble(field, p, element, inner):
    if p < 1:
        raise ValueError("order must be >= 1")
    element = element or field.element
    u1 = lowest_order(field, element)
    psi = boundary_potential(field, u1, element)
    u2, edge_parts = edge_interpolant(psi, p, element, field)
    u3, diag = interior_interpolant(field, u1, u2, p, element, inner)
    total = u1.to_order(p) + u2.to_order(p) + u3.to_order(p)
    diag["vertex_defect"] = psi.vertex_defect
    return InterpolantParts(u1, u2, u3, total, edge_parts, diag)


def interp_div_half(field, p, element=None):
    """The H(div)-conforming interpolant with the interior divergence
    equation in the H~-1/2(K) inner product."""
    return _assemble(field, p, element, "dualhalf")


def interp_div(field, p, element=None):
    """The classical H(div)-conforming interpolant (interior divergence
    equation in L2)."""
    return _assemble(field, p, element, "l2")


def interp_h1(field, p, element=None):
    """The H1-conforming scalar interpolant: vertex interpolation, edgewise
    H~1/2 projections with minimal-energy extensions, and an interior
    H1-seminorm projection onto the scalar bubbles."""
    element = element or field.element
    g1 = ps.vertex_interpolant(element, field.eval(element.vertices))
    total = g1.to_degree(max(p, 1))
    if p >= 2:
        ext = min_energy_extension(element, p)
        def edge_values(i, svals):
            e = element.edges[i]
            return field.eval(e.param(svals)) - g1.eval(e.param(svals))
        coeffs = edge_projections(edge_values, element, p, field)
        for i, c in enumerate(coeffs):
            if c.size:
                total = total + ext.apply(i, c).to_degree(p)
        sbub = ps.bubble_basis(element, p)
        if sbub.dim:
            N = sbub.coords_in_parent
            A = N.T @ ps.stiffness_matrix(element, p) @ N
            rule = fl.area_rule(field, element, 4 * p + 10)
            gb = np.einsum("pkd,km->pmd",
                           ps.scalar_basis(element, p).grad_eval(rule.nodes), N)
            gvals = np.asarray(field.grad(rule.nodes), dtype=float)
            rhs = np.einsum("pmd,pd,p->m", gb, gvals, rule.weights, optimize=True)
            rhs -= N.T @ (ps.stiffness_matrix(element, p) @ total.coeffs)
            z = sla.solve(0.5 * (A + A.T), rhs, assume_a="pos")
            total = total + ps.ScalarPoly(ps.scalar_basis(element, p), N @ z)
    return total


def proj_l2(f, element, p, rule=None, field=None):
    """L2(K) projection onto P_p(K)."""
    if rule is None:
        rule = fl.area_rule(field, element, 4 * p + 10)
    basis = ps.scalar_basis(element, p)
    vals = np.asarray(f(rule.nodes), dtype=float)
    return ps.ScalarPoly(basis, ps.project_values(basis, vals, rule))


def proj_dualhalf(f, element, p, rule=None, field=None):
    """H~-1/2(K) projection onto P_p(K), pairing f through representers."""
    gram = sb.k_dualhalf_gram(element, p)
    if rule is None:
        rule = fl.area_rule(field, element, 2 * gram.aux["p3"] + 10)
    vals = np.asarray(f(rule.nodes), dtype=float)
    b = gram.pair_values(vals, rule)
    return ps.ScalarPoly(ps.scalar_basis(element, p), gram.solve(b))


def proj_dualhalf_of_div(field, element, p):
    """H~-1/2 projection of div u, sharing the pairing vector with the
    interior solver so the commuting identity is exact."""
    beta, gram = div_pairing_vector(field, element, p, "dualhalf")
    return ps.ScalarPoly(ps.scalar_basis(element, p), gram.solve(beta)), gram


def proj_l2_of_div(field, element, p):
    beta, _ = div_pairing_vector(field, element, p, "l2")
    return ps.ScalarPoly(ps.scalar_basis(element, p), beta)
