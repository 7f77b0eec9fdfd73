"""Discrete fractional Sobolev inner products as Gram operators.

Four families are provided, all realized by single-element spectral Galerkin
discretizations of auxiliary harmonic problems:

* edge H~1/2: Dirichlet energy of minimal-energy polynomial lifts into K of
  zero-extended edge traces;
* H~-1/2(K) and H^-1/2(K): mixed Laplace problems on the cylinder
  D = K x (0,1) with the datum as Neumann trace on the bottom face, solved
  by tensor fast diagonalization; the Gram pairs the datum against the
  bottom trace of the solution, and the representer traces W_q extend the
  pairing to arbitrary integrable data exactly in the Galerkin sense;
* H^-1(K) and H~-1(K): dual norms through 2D solves with essential or
  natural boundary conditions.

The cylinder lift space contains 1 - x3, which makes the constant-mode
identity <q,1> = int_K q hold to machine precision in the tilde variant.
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.linalg as sla

from . import legendre as leg
from . import polyspace as ps
from .refelem import element_rule, quad_rule, reference_element

LIFT_MARGIN = 6


# ---------------------------------------------------------------------------
# Minimal-energy polynomial extension from the boundary
# ---------------------------------------------------------------------------

def _boundary_nodes(element, npts):
    x, _ = leg.gauss01(npts)
    pts = [e.param(x * e.length) for e in element.edges]
    return x, np.vstack(pts)


def lift_boundary_traces(element, p_space, trace_matrix):
    """Minimal-H1-seminorm extensions in P_{p_space}(K) of boundary traces.

    trace_matrix has shape (nedges*(p_space+1), ncols): values of each trace
    at p_space+1 Gauss points per edge (counterclockwise edge order).  The
    trace must be realizable, i.e. edgewise polynomial of degree <= p_space
    and continuous at vertices; a residual check guards this.  Returns modal
    coefficient columns.
    """
    full = ps.scalar_basis(element, p_space)
    _, nodes = _boundary_nodes(element, p_space + 1)
    A = full.eval(nodes)
    c0, *_ = np.linalg.lstsq(A, trace_matrix, rcond=None)
    resid = np.abs(A @ c0 - trace_matrix).max()
    scale = max(1.0, np.abs(trace_matrix).max())
    if resid > 1e-9 * scale:
        raise ValueError(f"boundary trace not realizable in P_{p_space}: "
                         f"residual {resid:.2e}")
    N = ps.bubble_basis(element, p_space).coords_in_parent
    if N.shape[1]:
        S = ps.stiffness_matrix(element, p_space)
        K = N.T @ S @ N
        y = sla.solve(K, -N.T @ (S @ c0), assume_a="pos")
        c0 = c0 + N @ y
    return c0


@lru_cache(maxsize=None)
def _edge_bubble_lift(kind, edge_index, p_trace, p_space):
    """Extension matrix: edge-bubble coefficients on one edge (zero-extended
    to the rest of the boundary) to modal P_{p_space}(K) coefficients."""
    element = reference_element(kind)
    eb = ps.edge_basis_on(element, edge_index, p_trace, bubble=True)
    x, _ = leg.gauss01(p_space + 1)
    n = element.nedges
    traces = np.zeros((n * (p_space + 1), eb.dim))
    block = slice(edge_index * (p_space + 1), (edge_index + 1) * (p_space + 1))
    traces[block] = eb.eval(x * element.edges[edge_index].length)
    return lift_boundary_traces(element, p_space, traces)


# ---------------------------------------------------------------------------
# Gram operators
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class GramOperator:
    """SPD matrix of a discrete inner product plus the data needed to pair
    non-polynomial functions against basis members."""

    space: str
    element: object
    degree: int
    matrix: np.ndarray
    basis: object
    rep_basis: object = None
    rep_coeffs: np.ndarray = None
    aux: dict = field(default_factory=dict)
    _chol: np.ndarray = None

    @property
    def dim(self):
        return self.matrix.shape[0]

    def inner(self, c1, c2):
        return float(c1 @ self.matrix @ c2)

    def norm(self, c):
        return float(np.sqrt(max(self.inner(c, c), 0.0)))

    def solve(self, b):
        if self._chol is None:
            self._chol = sla.cho_factor(self.matrix)
        return sla.cho_solve(self._chol, b)

    def representer_values(self, pts):
        """Values of the representer traces W_{q_j} at 2D points."""
        if self.rep_coeffs is None:
            raise ValueError(f"gram {self.space} carries no representers")
        return self.rep_basis.eval(pts) @ self.rep_coeffs

    def pair_values(self, fvals, rule):
        """<f, q_j> in this inner product for all basis members, from values
        of f on an area quadrature rule (exact in the Galerkin sense)."""
        W = self.representer_values(rule.nodes)
        return W.T @ (rule.weights * fvals)

    def rows(self):
        for i in range(self.dim):
            for j in range(self.dim):
                yield i, j, self.matrix[i, j]


@lru_cache(maxsize=None)
def _cross_mass(kind, pa, pb):
    """<q_i^(pa), q_m^(pb)>_L2(K): cross mass between modal bases."""
    element = reference_element(kind)
    rule = element_rule(element, pa + pb)
    Va = ps.scalar_basis(element, pa).eval(rule.nodes)
    Vb = ps.scalar_basis(element, pb).eval(rule.nodes)
    return Va.T @ (rule.weights[:, None] * Vb)


def cross_mass(element, pa, pb):
    return _cross_mass(element.kind, pa, pb)


# -- edge H~1/2 --------------------------------------------------------------

@dataclass(eq=False)
class Lift2D:
    """Discrete harmonic lift of one zero-extended edge bubble."""

    element: object
    edge: object
    p_lift: int
    coeffs: np.ndarray

    def eval(self, pts):
        return ps.scalar_basis(self.element, self.p_lift).eval(pts) @ self.coeffs

    def normal_deriv_on_edge(self, s):
        g = ps.scalar_basis(self.element, self.p_lift).grad_eval(self.edge.param(s))
        return np.einsum("pkd,k,d->p", g, self.coeffs, self.edge.normal)

    def boundary_values(self, pts):
        return self.eval(pts)


@lru_cache(maxsize=None)
def _edge_h12_gram(kind, edge_index, p, p_lift):
    element = reference_element(kind)
    if p_lift < p:
        raise ValueError("lift degree must be at least the edge degree")
    edge = element.edges[edge_index]
    q = p_lift
    Eq = _edge_bubble_lift(kind, edge_index, q, p_lift)
    S = ps.stiffness_matrix(element, p_lift)
    G_full = Eq.T @ S @ Eq
    G_full = 0.5 * (G_full + G_full.T)
    bq = ps.edge_basis_on(element, edge_index, q, bubble=True)
    bp = ps.edge_basis_on(element, edge_index, p, bubble=True)
    s, w = leg.gauss01(q + 1)
    M = bq.eval(s).T @ (w[:, None] * bp.eval(s))
    G = M.T @ G_full @ M
    G = 0.5 * (G + G.T)
    lifts = tuple(
        Lift2D(element, edge, p_lift, (Eq @ M)[:, k]) for k in range(bp.dim)
    )
    return GramOperator(
        "edge-h12-bubble", element, p, G, bp,
        aux={"edge": edge, "p_lift": p_lift, "G_full": G_full, "M": M,
             "pair_matrix": M.T @ G_full, "bq": bq, "lifts": lifts,
             "E_p": Eq @ M},
    )


def edge_h12_gram(element, edge_index, p, p_lift=None):
    """H~1/2(l) Gram of the edge bubbles P^0_p(l) via discrete harmonic
    lifts at degree p_lift (default p + LIFT_MARGIN)."""
    if p_lift is None:
        p_lift = p + LIFT_MARGIN
    return _edge_h12_gram(element.kind, edge_index, p, p_lift)


def edge_pairing(gram, fvals, svals, wvals):
    """<f, phi_k>_H~1/2(l) for the edge-bubble basis.

    The part of f in the lift-level bubble space is paired Galerkin-
    consistently through the shared lift energy (exact when f lies in that
    space, which preserves polynomial reproduction); the small remainder is
    paired with the lift normal-derivative representers, whose consistency
    defect then acts only on the remainder.
    """
    Vq = gram.aux["bq"].eval(svals)
    cq = Vq.T @ (wvals * fvals)
    r = gram.aux["pair_matrix"] @ cq
    tail = fvals - Vq @ cq
    if np.abs(tail).max() > 1e-14 * max(np.abs(fvals).max(), 1e-30):
        Pn = np.column_stack([lf.normal_deriv_on_edge(svals)
                              for lf in gram.aux["lifts"]])
        r = r + Pn.T @ (wvals * tail)
    return r


# -- H~-1/2(K) and H^-1/2(K) -------------------------------------------------

@lru_cache(maxsize=None)
def _lift1d(q):
    """Mass/stiffness of the 1D basis (1-x)L_j, j < q (vanishing at x=1),
    and its values at x = 0."""
    x, w = leg.gauss01(q + 2)
    V = leg.leg_vander(x, q - 1)
    D = leg.leg_deriv_matrix(q - 1)
    vals = (1.0 - x)[:, None] * V
    dvals = -V + (1.0 - x)[:, None] * (V @ D)
    M = vals.T @ (w[:, None] * vals)
    S = dvals.T @ (w[:, None] * dvals)
    l0 = leg.leg_end_values(q - 1)[0]
    return M, S, l0


@lru_cache(maxsize=None)
def _k_dualhalf_gram(kind, p, variant, p3):
    element = reference_element(kind)
    if p3 < max(p, 1) + 2:
        raise ValueError("cylinder lift degree p3 too small")
    A2 = ps.stiffness_matrix(element, p3)
    X = cross_mass(element, p3, p)
    if variant == "plain":
        N = ps.bubble_basis(element, p3).coords_in_parent
        A2 = N.T @ A2 @ N
        X = N.T @ X
    elif variant != "tilde":
        raise ValueError(f"unknown variant {variant!r}")
    theta, U = np.linalg.eigh(0.5 * (A2 + A2.T))
    theta = np.clip(theta, 0.0, None)
    M1, S1, l0 = _lift1d(p3)
    lam, Z = sla.eigh(S1, M1)
    g2 = (Z.T @ l0) ** 2
    sigma = np.array([np.sum(g2 / (t + lam)) for t in theta])
    T = U @ (sigma[:, None] * (U.T @ X))
    G = X.T @ T
    G = 0.5 * (G + G.T)
    if variant == "plain":
        T = N @ T
    return GramOperator(
        f"k-dualhalf-{variant}", element, p, G,
        ps.scalar_basis(element, p),
        rep_basis=ps.scalar_basis(element, p3), rep_coeffs=T,
        aux={"p3": p3, "variant": variant},
    )


def k_dualhalf_gram(element, p, variant="tilde", p3=None):
    """Gram of the H~-1/2(K) (tilde) or H^-1/2(K) (plain) inner product on
    the modal basis of P_p(K), via the cylinder lift at degree p3."""
    if p3 is None:
        p3 = max(p, 1) + LIFT_MARGIN
    return _k_dualhalf_gram(element.kind, p, variant, p3)


# -- H^-1(K) and H~-1(K) ------------------------------------------------------

@lru_cache(maxsize=None)
def _dualone_gram(kind, p, variant, p_ref):
    element = reference_element(kind)
    if p_ref < p + 2:
        raise ValueError("reference degree p_ref too small")
    X = cross_mass(element, p_ref, p)
    A = ps.stiffness_matrix(element, p_ref)
    if variant == "h-minus1":
        N = ps.bubble_basis(element, p_ref).coords_in_parent
        Ab = N.T @ A @ N
        Xb = N.T @ X
        sol = sla.solve(Ab, Xb, assume_a="pos")
        G = Xb.T @ sol
        rep = N @ sol
    elif variant == "h-tilde-minus1":
        sol = sla.solve(A + np.eye(A.shape[0]), X, assume_a="pos")
        G = X.T @ sol
        rep = sol
    else:
        raise ValueError(f"unknown variant {variant!r}")
    G = 0.5 * (G + G.T)
    return GramOperator(variant, element, p, G, ps.scalar_basis(element, p),
                        rep_basis=ps.scalar_basis(element, p_ref),
                        rep_coeffs=rep, aux={"p_ref": p_ref})


def dualone_gram(element, p, variant="h-minus1", p_ref=None):
    """Gram of the H^-1(K) or H~-1(K) inner product on P_p(K) by dual
    solves in P_{p_ref}(K)."""
    if p_ref is None:
        p_ref = p + LIFT_MARGIN
    return _dualone_gram(element.kind, p, variant, p_ref)


def l2_gram(element, p):
    """L2 Gram on the modal basis (the identity, by orthonormality)."""
    return GramOperator("l2", element, p, np.eye(ps.scalar_dim(element, p)),
                        ps.scalar_basis(element, p))


def h1_semi_gram(element, p):
    return GramOperator("h1-semi", element, p, ps.stiffness_matrix(element, p),
                        ps.scalar_basis(element, p))


GRAM_KINDS = ("edge-h12-bubble", "k-dualhalf-tilde", "k-dualhalf-plain",
              "l2", "h1-semi", "h-minus1", "h-tilde-minus1")


def make_gram(element, kind, p, edge_index=0):
    """Uniform constructor used by the CLI."""
    if kind == "edge-h12-bubble":
        return edge_h12_gram(element, edge_index, p)
    if kind == "k-dualhalf-tilde":
        return k_dualhalf_gram(element, p, "tilde")
    if kind == "k-dualhalf-plain":
        return k_dualhalf_gram(element, p, "plain")
    if kind == "l2":
        return l2_gram(element, p)
    if kind == "h1-semi":
        return h1_semi_gram(element, p)
    if kind in ("h-minus1", "h-tilde-minus1"):
        return dualone_gram(element, p, kind)
    raise ValueError(f"unknown gram kind {kind!r}")


def pair_dualhalf(f, gram, rule=None):
    """<f, q_j>_H~-1/2(K) for all modal basis members q_j, by pairing f
    against the representer traces W_{q_j}."""
    if rule is None:
        rule = element_rule(gram.element, 2 * gram.aux["p3"] + 10)
    fvals = np.asarray(f(rule.nodes), dtype=float)
    return gram.pair_values(fvals, rule)


# ---------------------------------------------------------------------------
# Error norms
# ---------------------------------------------------------------------------

def error_norm(f, element, norm, p_ref, rule=None):
    """Norm of a pointwise-evaluable residual.

    norm is 'l2' or 'dualhalf' (scalar H~-1/2(K), computed as the Gram norm
    of the L2 projection onto P_{p_ref}(K)); vector-valued residuals are
    measured componentwise.
    """
    if rule is None:
        rule = element_rule(element, 2 * p_ref + 10)
    vals = np.asarray(f(rule.nodes), dtype=float)
    if vals.ndim == 1:
        vals = vals[:, None]
    if norm == "l2":
        return float(np.sqrt(np.sum(rule.weights @ vals**2)))
    if norm == "dualhalf":
        gram = k_dualhalf_gram(element, p_ref, "tilde")
        basis = ps.scalar_basis(element, p_ref)
        V = basis.eval(rule.nodes)
        total = 0.0
        for c in range(vals.shape[1]):
            coef = V.T @ (rule.weights * vals[:, c])
            total += max(coef @ gram.matrix @ coef, 0.0)
        return float(np.sqrt(total))
    raise ValueError(f"unknown norm tag {norm!r}")


def hdiv_error_norms(u_res, div_res, element, p_ref, rule=None):
    """The five sweep norms of a vector residual and its divergence:
    err_l2, err_div_l2, err_hdiv, err_dualhalf, err_dualhalf_div."""
    if rule is None:
        rule = element_rule(element, 2 * p_ref + 10)
    uvals = np.asarray(u_res(rule.nodes), dtype=float)
    dvals = np.asarray(div_res(rule.nodes), dtype=float)
    w = rule.weights
    e_l2 = float(np.sqrt(np.sum(w @ uvals**2)))
    e_div = float(np.sqrt(np.dot(w, dvals**2)))
    gram = k_dualhalf_gram(element, p_ref, "tilde")
    V = ps.scalar_basis(element, p_ref).eval(rule.nodes)
    cu = V.T @ (w[:, None] * uvals)
    cd = V.T @ (w * dvals)
    e_half = float(np.sqrt(max(np.einsum("kd,kl,ld->", cu, gram.matrix, cu), 0.0)))
    e_half_div = float(np.sqrt(max(cd @ gram.matrix @ cd, 0.0)))
    return {
        "err_l2": e_l2,
        "err_div_l2": e_div,
        "err_hdiv": float(np.hypot(e_l2, e_div)),
        "err_dualhalf": e_half,
        "err_dualhalf_div": float(np.hypot(e_half, e_half_div)),
    }


# ---------------------------------------------------------------------------
# Brute-force cylinder assembly (used by self-checks and tests)
# ---------------------------------------------------------------------------

def dense_dualhalf_gram(element, p, variant, p3):
    """Assemble the cylinder-lift Gram by dense 3D quadrature instead of
    tensor diagonalization; cross-validates the fast path."""
    rule3 = quad_rule("prism3d" if element.kind == "tri" else "cube3d", 2 * p3 + 2)
    pts2, x3 = rule3.nodes[:, :2], rule3.nodes[:, 2]
    basis2 = ps.scalar_basis(element, p3)
    if variant == "plain":
        N = ps.bubble_basis(element, p3).coords_in_parent
    else:
        N = np.eye(basis2.dim)
    V2 = basis2.eval(pts2) @ N
    g2 = np.einsum("pkd,km->pmd", basis2.grad_eval(pts2), N)
    V1 = leg.leg_vander(x3, p3 - 1)
    D1 = leg.leg_deriv_matrix(p3 - 1)
    l1 = (1.0 - x3)[:, None] * V1
    dl1 = -V1 + (1.0 - x3)[:, None] * (V1 @ D1)
    n2, n1 = V2.shape[1], l1.shape[1]
    w = rule3.weights
    Bx = np.einsum("pmd,pj,p,pnd,pk->mjnk", g2, l1, w, g2, l1, optimize=True)
    Bz = np.einsum("pm,pj,p,pn,pk->mjnk", V2, dl1, w, V2, dl1, optimize=True)
    A = (Bx + Bz).reshape(n2 * n1, n2 * n1)
    rule2 = element_rule(element, p3 + p)
    Vd = ps.scalar_basis(element, p).eval(rule2.nodes)
    V2b = basis2.eval(rule2.nodes) @ N
    Xc = V2b.T @ (rule2.weights[:, None] * Vd)
    l0 = leg.leg_end_values(p3 - 1)[0]
    rhs = np.einsum("md,j->mjd", Xc, l0).reshape(n2 * n1, -1)
    sol = sla.solve(0.5 * (A + A.T), rhs, assume_a="pos")
    t = np.einsum("mjd,j->md", sol.reshape(n2, n1, -1), l0)
    G = Xc.T @ t
    return 0.5 * (G + G.T)
