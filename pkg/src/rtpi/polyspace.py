"""Orthonormal scalar bases, bubble subsets, Raviart-Thomas spaces and the
exact differential operators between them.

Scalar bases are L2(K)-orthonormal and hierarchical by degree: tensor
products of shifted Legendre polynomials on the square, Dubiner polynomials
(mapped affinely, evaluated by homogenized recurrences that are stable at
any point) on the equilateral triangle.  Values and gradients of basis
members are exact pointwise, and every operator matrix (divergence, curl,
stiffness, projections) is assembled with quadrature that is exact for the
polynomial integrands, so structural identities hold to roundoff.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg as sla
from scipy.special import eval_jacobi

from . import legendre as leg
from .refelem import SQRT3, element_rule, reference_element

_ORTHO_TOL = 1e-12


def tri_dim(p):
    return (p + 1) * (p + 2) // 2


def scalar_dim(element, p):
    return tri_dim(p) if element.kind == "tri" else (p + 1) ** 2


def bubble_dim(element, p):
    if element.kind == "tri":
        return max(0, (p - 1) * (p - 2) // 2)
    return max(0, (p - 1) ** 2)


def rt_dim(element, p):
    return p * (p + 2) if element.kind == "tri" else 2 * p * (p + 1)


def rt_bubble_dim(element, p):
    return p * (p - 1) if element.kind == "tri" else 2 * p * (p - 1)


# ---------------------------------------------------------------------------
# Dubiner evaluation on the equilateral triangle
# ---------------------------------------------------------------------------

def _dubiner(pts, p, grad=False):
    """Values (and optionally gradients) of the orthonormal Dubiner basis of
    P_p on the equilateral triangle, ordered by total degree.

    The radial factor is evaluated in the homogenized form
    q_m(a,c) = c^m P_m((2a-c)/c), which is a polynomial in (a,c) with a
    stable three-term recurrence, so there is no collapsed-coordinate
    singularity anywhere in the plane.
    """
    pts = np.atleast_2d(pts)
    x1, x2 = pts[:, 0], pts[:, 1]
    a = x1 - x2 / SQRT3
    b = 2.0 * x2 / SQRT3
    c = 1.0 - b
    t = 2.0 * b - 1.0
    m0 = len(x1)
    q = np.empty((p + 1, m0))
    q[0] = 1.0
    if p >= 1:
        q[1] = 2.0 * a - c
    for m in range(1, p):
        q[m + 1] = ((2 * m + 1) * (2 * a - c) * q[m] - m * c**2 * q[m - 1]) / (m + 1)
    if grad:
        qa = np.zeros((p + 1, m0))
        qc = np.zeros((p + 1, m0))
        if p >= 1:
            qa[1] = 2.0
            qc[1] = -1.0
        for m in range(1, p):
            qa[m + 1] = ((2 * m + 1) * (2 * q[m] + (2 * a - c) * qa[m])
                         - m * c**2 * qa[m - 1]) / (m + 1)
            qc[m + 1] = ((2 * m + 1) * (-q[m] + (2 * a - c) * qc[m])
                         - m * (2 * c * q[m - 1] + c**2 * qc[m - 1])) / (m + 1)
    norm = 1.0 / np.sqrt(SQRT3 / 2.0)
    vals = np.empty((m0, tri_dim(p)))
    if grad:
        gx = np.empty((m0, tri_dim(p)))
        gy = np.empty((m0, tri_dim(p)))
    k = 0
    for d in range(p + 1):
        for m in range(d + 1):
            n = d - m
            cmn = norm * np.sqrt(2.0 * (2 * m + 1) * (m + n + 1))
            J = eval_jacobi(n, 2 * m + 1, 0, t)
            vals[:, k] = cmn * q[m] * J
            if grad:
                dJ = 0.0 if n == 0 else 0.5 * (n + 2 * m + 2) * eval_jacobi(
                    n - 1, 2 * m + 2, 1, t)
                # x1: only through a; x2: through a, c and t
                gx[:, k] = cmn * qa[m] * J
                gy[:, k] = cmn * ((-qa[m] - 2.0 * qc[m]) * J
                                  + q[m] * dJ * 4.0) / SQRT3
            k += 1
    if grad:
        return vals, np.stack([gx, gy], axis=-1)
    return vals


def _tensor_scalar(pts, p, grad=False):
    """Tensor shifted-Legendre basis of Q_p, ordered hierarchically by
    blocks of max(i,j)."""
    pts = np.atleast_2d(pts)
    V1 = leg.leg_vander(pts[:, 0], p)
    V2 = leg.leg_vander(pts[:, 1], p)
    order = _quad_order(p)
    vals = (V1[:, order[:, 0]] * V2[:, order[:, 1]])
    if not grad:
        return vals
    D = leg.leg_deriv_matrix(p)
    dV1 = V1 @ D
    dV2 = V2 @ D
    gx = dV1[:, order[:, 0]] * V2[:, order[:, 1]]
    gy = V1[:, order[:, 0]] * dV2[:, order[:, 1]]
    return vals, np.stack([gx, gy], axis=-1)


@lru_cache(maxsize=None)
def _quad_order(p):
    pairs = []
    for q in range(p + 1):
        for i in range(q + 1):
            pairs.append((i, q))
        for j in range(q):
            pairs.append((q, j))
    return np.array(pairs)


# ---------------------------------------------------------------------------
# Basis handles
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class ScalarBasis:
    """Orthonormal basis of a scalar polynomial space on an element.

    For bubble spaces, coords_in_parent expresses the members in the full
    scalar basis of the same degree.
    """

    space: str
    element: object
    degree: int
    coords_in_parent: np.ndarray = None

    @property
    def dim(self):
        if self.coords_in_parent is not None:
            return self.coords_in_parent.shape[1]
        return scalar_dim(self.element, self.degree)

    def _full_eval(self, pts, grad):
        if self.element.kind == "tri":
            return _dubiner(pts, self.degree, grad)
        return _tensor_scalar(pts, self.degree, grad)

    def eval(self, pts):
        v = self._full_eval(pts, False)
        if self.coords_in_parent is not None:
            v = v @ self.coords_in_parent
        return v

    def grad_eval(self, pts):
        _, g = self._full_eval(pts, True)
        if self.coords_in_parent is not None:
            g = np.einsum("pkd,km->pmd", g, self.coords_in_parent)
        return g


@dataclass(eq=False)
class EdgeBasis:
    """Orthonormal basis of P_p or its endpoint-vanishing subset on an edge,
    in the arclength parameter (all reference edges have unit length)."""

    space: str
    edge: object
    degree: int
    C: np.ndarray  # (degree+1, dim) 1D Legendre coefficients

    @property
    def dim(self):
        return self.C.shape[1]

    def eval(self, s):
        V = leg.leg_vander(np.atleast_1d(s), self.degree)
        return V @ self.C

    def deriv_eval(self, s):
        D = leg.leg_deriv_matrix(self.degree)
        V = leg.leg_vander(np.atleast_1d(s), self.degree)
        return V @ (D @ self.C)


@dataclass(eq=False)
class RTBasis:
    """Orthonormal basis of the Raviart-Thomas space of a given order, or of
    its vanishing-normal-trace (bubble) subset.

    Members are combinations (matrix W) of stable generators: the two
    Cartesian copies of the scalar modal basis of degree p-1 plus, on the
    triangle, the radial supplement (x - centroid) * h with h spanning the
    homogeneous polynomials of degree p-1 about the centroid.
    """

    space: str
    element: object
    order: int
    W: np.ndarray
    coords_in_parent: np.ndarray = None

    @property
    def dim(self):
        return self.W.shape[1]

    def _generators(self, pts, need_div):
        return _rt_generators(self.element.kind, self.order, pts, need_div)

    def eval(self, pts):
        G = self._generators(np.atleast_2d(pts), False)
        return np.einsum("pgd,gk->pkd", G, self.W, optimize=True)

    def div_eval(self, pts):
        _, Gd = self._generators(np.atleast_2d(pts), True)
        return Gd @ self.W

    def normal_trace_eval(self, edge, s):
        vals = self.eval(edge.param(s))
        return vals[:, :, 0] * edge.normal[0] + vals[:, :, 1] * edge.normal[1]


def _rt_generators(kind, p, pts, need_div):
    """Values (npts, ngen, 2) and optionally divergences of the RT generator
    set; exact closed forms, stable at any point of the element."""
    element = reference_element(kind)
    pts = np.atleast_2d(pts)
    npts = len(pts)
    if kind == "quad":
        V1 = leg.leg_vander(pts[:, 0], p)
        V2 = leg.leg_vander(pts[:, 1], p)
        n1 = (p + 1) * p
        G = np.zeros((npts, 2 * n1, 2))
        k = 0
        for i in range(p + 1):
            for j in range(p):
                G[:, k, 0] = V1[:, i] * V2[:, j]
                k += 1
        for i in range(p):
            for j in range(p + 1):
                G[:, k, 1] = V1[:, i] * V2[:, j]
                k += 1
        if not need_div:
            return G
        D = leg.leg_deriv_matrix(p)
        dV1 = V1 @ D
        dV2 = V2 @ D
        Gd = np.zeros((npts, 2 * n1))
        k = 0
        for i in range(p + 1):
            for j in range(p):
                Gd[:, k] = dV1[:, i] * V2[:, j]
                k += 1
        for i in range(p):
            for j in range(p + 1):
                Gd[:, k] = V1[:, i] * dV2[:, j]
                k += 1
        return G, Gd
    sc = ScalarBasis("scalar", element, p - 1)
    if need_div:
        vals, grads = sc._full_eval(pts, True)
    else:
        vals = sc._full_eval(pts, False)
    nsc = vals.shape[1]
    hvals, hgrads = _homogeneous_family(element, p - 1, pts)
    nh = hvals.shape[1]
    c = element.centroid
    xt = pts - c
    G = np.zeros((npts, 2 * nsc + nh, 2))
    G[:, :nsc, 0] = vals
    G[:, nsc: 2 * nsc, 1] = vals
    G[:, 2 * nsc:, 0] = xt[:, 0:1] * hvals
    G[:, 2 * nsc:, 1] = xt[:, 1:2] * hvals
    if not need_div:
        return G
    Gd = np.zeros((npts, 2 * nsc + nh))
    Gd[:, :nsc] = grads[:, :, 0]
    Gd[:, nsc: 2 * nsc] = grads[:, :, 1]
    Gd[:, 2 * nsc:] = (2.0 * hvals + xt[:, 0:1] * hgrads[:, :, 0]
                       + xt[:, 1:2] * hgrads[:, :, 1])
    return G, Gd


def _homogeneous_family(element, d, pts):
    """Harmonically organized basis of homogeneous degree-d polynomials about
    the element centroid: |z|^(d-k) Re/Im(z^k); values and gradients."""
    c = element.centroid
    z = (pts[:, 0] - c[0]) + 1j * (pts[:, 1] - c[1])
    r2 = (z * z.conj()).real
    vals, gx, gy = [], [], []
    for k in range(d, -1, -2):
        zk = z**k
        zk1 = k * z ** (k - 1) if k >= 1 else np.zeros_like(z)
        m = (d - k) // 2
        rad = r2**m
        drad = m * r2 ** (m - 1) if m >= 1 else np.zeros_like(r2)
        vals.append(rad * zk.real)
        gx.append(2.0 * (pts[:, 0] - c[0]) * drad * zk.real + rad * zk1.real)
        gy.append(2.0 * (pts[:, 1] - c[1]) * drad * zk.real - rad * zk1.imag)
        if k > 0:
            vals.append(rad * zk.imag)
            gx.append(2.0 * (pts[:, 0] - c[0]) * drad * zk.imag + rad * zk1.imag)
            gy.append(2.0 * (pts[:, 1] - c[1]) * drad * zk.imag + rad * zk1.real)
    V = np.column_stack(vals)
    Gr = np.stack([np.column_stack(gx), np.column_stack(gy)], axis=-1)
    return V, Gr


# ---------------------------------------------------------------------------
# Basis builders (cached per element kind and degree)
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _scalar_basis(kind, p):
    element = reference_element(kind)
    basis = ScalarBasis("scalar", element, p)
    rule = element_rule(element, 2 * p)
    V = basis.eval(rule.nodes)
    G = V.T @ (rule.weights[:, None] * V)
    err = np.abs(G - np.eye(basis.dim)).max()
    if err > _ORTHO_TOL:
        raise RuntimeError(f"scalar basis not orthonormal on {kind}, p={p}: {err:.2e}")
    return basis


def scalar_basis(element, p):
    """Orthonormal modal basis of P_p(K)."""
    if p < 0:
        raise ValueError("degree must be >= 0")
    return _scalar_basis(element.kind, p)


def _boundary_samples(element, npts):
    x, _ = leg.gauss01(npts)
    return np.vstack([e.param(x * e.length) for e in element.edges])


@lru_cache(maxsize=None)
def _bubble_basis(kind, p):
    element = reference_element(kind)
    full = _scalar_basis(kind, p)
    target = bubble_dim(element, p)
    if target == 0:
        return ScalarBasis("scalar-bubble", element, p, np.zeros((full.dim, 0)))
    A = full.eval(_boundary_samples(element, p + 1))
    _, sv, Vt = np.linalg.svd(A)
    rank = int(np.sum(sv > 1e-10 * sv[0]))
    null = Vt[rank:]
    if null.shape[0] != target:
        raise RuntimeError(f"bubble dimension mismatch on {kind}, p={p}: "
                           f"{null.shape[0]} != {target}")
    return ScalarBasis("scalar-bubble", element, p, null.T)


def bubble_basis(element, p):
    """Orthonormal basis of the scalar bubbles P^0_p(K)."""
    return _bubble_basis(element.kind, p)


@lru_cache(maxsize=None)
def _rt_basis(kind, p):
    if p < 1:
        raise ValueError("RT order must be >= 1")
    element = reference_element(kind)
    dim = rt_dim(element, p)
    if kind == "quad":
        basis = RTBasis("rt", element, p, np.eye(dim))
    else:
        nsc = tri_dim(p - 1)
        rule = element_rule(element, 2 * p)
        G = _rt_generators(kind, p, rule.nodes, False)
        W = np.zeros((2 * nsc + p, dim))
        W[: 2 * nsc, : 2 * nsc] = np.eye(2 * nsc)
        # project the radial supplement off the Cartesian blocks, then
        # orthonormalize it (two passes against the exact quadrature Gram)
        vals = np.einsum("pgd,p->pgd", G, np.sqrt(rule.weights))
        flat = np.concatenate([vals[:, :, 0], vals[:, :, 1]], axis=0)
        Q = flat[:, : 2 * nsc]
        S0 = flat[:, 2 * nsc:]
        # project the radial supplement off the Cartesian blocks and
        # orthonormalize; repeat once to undo cancellation roundoff
        Proj = np.zeros((2 * nsc, p))
        Wt = np.eye(p)
        for _ in range(2):
            S = S0 @ Wt - Q @ Proj
            dP = Q.T @ S
            Proj += dP @ np.eye(p)
            S -= Q @ dP
            R = sla.cholesky(S.T @ S, lower=False)
            Wt = sla.solve_triangular(R, Wt.T, trans="T", lower=False).T
            Proj = sla.solve_triangular(R, Proj.T, trans="T", lower=False).T
        W[: 2 * nsc, 2 * nsc:] = -Proj
        W[2 * nsc:, 2 * nsc:] = Wt
        basis = RTBasis("rt", element, p, W)
    rule = element_rule(element, 2 * p)
    V = basis.eval(rule.nodes)
    Gram = np.einsum("pkd,pld,p->kl", V, V, rule.weights, optimize=True)
    err = np.abs(Gram - np.eye(dim)).max()
    # evaluation through the generators floors at ~1e-16/ratio, where ratio
    # is the (intrinsically small) complement content of the radial block
    tol = _ORTHO_TOL if p <= 10 else 1e-10
    if err > tol:
        raise RuntimeError(f"RT basis not orthonormal on {kind}, p={p}: {err:.2e}")
    return basis


def rt_basis(element, p):
    """Orthonormal basis of the Raviart-Thomas space of order p."""
    return _rt_basis(element.kind, p)


@lru_cache(maxsize=None)
def _rt_bubble_basis(kind, p):
    element = reference_element(kind)
    full = _rt_basis(kind, p)
    target = rt_bubble_dim(element, p)
    if target == 0:
        return RTBasis("rt-bubble", element, p, np.zeros((full.W.shape[0], 0)),
                       np.zeros((full.dim, 0)))
    x, _ = leg.gauss01(p)
    A = np.vstack([full.normal_trace_eval(e, x * e.length) for e in element.edges])
    _, sv, Vt = np.linalg.svd(A)
    rank = int(np.sum(sv > 1e-10 * sv[0]))
    null = Vt[rank:]
    if null.shape[0] != target:
        raise RuntimeError(f"RT bubble dimension mismatch on {kind}, p={p}: "
                           f"{null.shape[0]} != {target}")
    N = null.T
    return RTBasis("rt-bubble", element, p, full.W @ N, N)


def rt_bubble_basis(element, p):
    """Orthonormal basis of the RT bubbles (vanishing normal trace)."""
    return _rt_bubble_basis(element.kind, p)


@lru_cache(maxsize=None)
def _edge_basis(kind, edge_index, p, bubble):
    element = reference_element(kind)
    edge = element.edges[edge_index]
    if not bubble:
        return EdgeBasis("edge", edge, p, np.eye(p + 1))
    if p < 2:
        return EdgeBasis("edge-bubble", edge, p, np.zeros((p + 1, 0)))
    lo, hi = leg.leg_end_values(p)
    _, sv, Vt = np.linalg.svd(np.vstack([lo, hi]))
    return EdgeBasis("edge-bubble", edge, p, Vt[2:].T)


def edge_basis_on(element, edge_index, p, bubble=False):
    """Orthonormal basis of P_p (or the endpoint-vanishing subset P^0_p) on
    an element edge, in the arclength parameter."""
    return _edge_basis(element.kind, edge_index, p, bubble)


# ---------------------------------------------------------------------------
# Polynomials
# ---------------------------------------------------------------------------

@dataclass
class ScalarPoly:
    basis: ScalarBasis
    coeffs: np.ndarray

    @property
    def element(self):
        return self.basis.element

    @property
    def degree(self):
        return self.basis.degree

    def eval(self, pts, check=False):
        pts = np.atleast_2d(pts)
        if check and not self.element.contains(pts).all():
            raise ValueError("evaluation point outside the element")
        return self.basis.eval(pts) @ self.coeffs

    __call__ = eval

    def grad(self, pts):
        return np.einsum("pkd,k->pd", self.basis.grad_eval(np.atleast_2d(pts)),
                         self.coeffs)

    def in_full_basis(self):
        if self.basis.coords_in_parent is None:
            return self
        full = scalar_basis(self.element, self.degree)
        return ScalarPoly(full, self.basis.coords_in_parent @ self.coeffs)

    def to_degree(self, p):
        """Embed into the modal basis of degree p (hierarchical zero-pad)."""
        me = self.in_full_basis()
        if p < me.degree:
            raise ValueError("cannot lower the degree exactly")
        target = scalar_basis(self.element, p)
        c = np.zeros(target.dim)
        c[: me.coeffs.size] = me.coeffs
        return ScalarPoly(target, c)

    def l2_norm(self):
        return float(np.linalg.norm(self.coeffs))

    def mean(self):
        full = self.in_full_basis()
        return float(full.coeffs[0]) * np.sqrt(self.element.area)

    def __add__(self, other):
        a, b = _common_scalar(self, other)
        return ScalarPoly(a.basis, a.coeffs + b.coeffs)

    def __sub__(self, other):
        a, b = _common_scalar(self, other)
        return ScalarPoly(a.basis, a.coeffs - b.coeffs)

    def __mul__(self, scalar):
        return ScalarPoly(self.basis, self.coeffs * float(scalar))

    __rmul__ = __mul__


def _common_scalar(a, b):
    p = max(a.degree, b.degree)
    return a.to_degree(p), b.to_degree(p)


@dataclass
class EdgePoly:
    basis: EdgeBasis
    coeffs: np.ndarray
    bubble: bool = False

    def eval(self, s):
        return self.basis.eval(s) @ self.coeffs

    __call__ = eval


@dataclass
class RTPoly:
    basis: RTBasis
    coeffs: np.ndarray

    @property
    def element(self):
        return self.basis.element

    @property
    def order(self):
        return self.basis.order

    def eval(self, pts, check=False):
        pts = np.atleast_2d(pts)
        if check and not self.element.contains(pts).all():
            raise ValueError("evaluation point outside the element")
        return np.einsum("pkd,k->pd", self.basis.eval(pts), self.coeffs)

    __call__ = eval

    def in_full_basis(self):
        if self.basis.coords_in_parent is None:
            return self
        full = rt_basis(self.element, self.order)
        return RTPoly(full, self.basis.coords_in_parent @ self.coeffs)

    def to_order(self, p):
        me = self.in_full_basis()
        if p == me.order:
            return me
        if p < me.order:
            raise ValueError("cannot lower the order exactly")
        target = rt_basis(self.element, p)
        rule = element_rule(self.element, 2 * p)
        vals = me.eval(rule.nodes)
        c = np.einsum("pkd,pd,p->k", target.eval(rule.nodes), vals, rule.weights,
                      optimize=True)
        return RTPoly(target, c)

    def l2_norm(self):
        return float(np.linalg.norm(self.coeffs))

    def div(self):
        return divergence(self)

    def normal_trace_values(self, edge, s):
        vals = self.eval(edge.param(s))
        return vals @ edge.normal

    def normal_trace_poly(self, edge, tol=1e-11):
        """Normal trace on an edge, fitted to P_{p-1} in the arclength
        parameter; raises if the fit residual exceeds tol."""
        q = self.order - 1
        s, w = leg.gauss01(self.order + 2)
        s = s * edge.length
        vals = self.normal_trace_values(edge, s)
        V = leg.leg_vander(s / edge.length, q)
        c, *_ = np.linalg.lstsq(np.sqrt(w)[:, None] * V, np.sqrt(w) * vals,
                                rcond=None)
        resid = np.abs(V @ c - vals).max()
        scale = max(1.0, np.abs(vals).max())
        if resid > tol * scale:
            raise RuntimeError(f"normal trace not in P_{q} on edge: {resid:.2e}")
        eb = edge_basis_on(self.element, edge.index, q)
        return EdgePoly(eb, c)

    def __add__(self, other):
        a, b = _common_rt(self, other)
        return RTPoly(a.basis, a.coeffs + b.coeffs)

    def __sub__(self, other):
        a, b = _common_rt(self, other)
        return RTPoly(a.basis, a.coeffs - b.coeffs)

    def __mul__(self, scalar):
        return RTPoly(self.basis, self.coeffs * float(scalar))

    __rmul__ = __mul__


def _common_rt(a, b):
    p = max(a.order, b.order)
    return a.to_order(p), b.to_order(p)


def zero_rt(element, p):
    basis = rt_basis(element, p)
    return RTPoly(basis, np.zeros(basis.dim))


# ---------------------------------------------------------------------------
# Projections
# ---------------------------------------------------------------------------

def project_values(basis, fvals, rule):
    """L2-projection coefficients from point values on a quadrature rule."""
    return basis.eval(rule.nodes).T @ (rule.weights * fvals)


def project_function(basis, f, rule):
    return project_values(basis, np.asarray(f(rule.nodes), dtype=float), rule)


# ---------------------------------------------------------------------------
# Differential operators (cached exact matrices)
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _div_matrix(kind, p):
    element = reference_element(kind)
    rt = _rt_basis(kind, p)
    target = _scalar_basis(kind, p - 1)
    rule = element_rule(element, 2 * p)
    dv = rt.div_eval(rule.nodes)
    return target.eval(rule.nodes).T @ (rule.weights[:, None] * dv)


def div_matrix(element, p):
    """Matrix taking RT_p coefficients to modal P_{p-1} coefficients of the
    divergence (exact)."""
    return _div_matrix(element.kind, p)


@lru_cache(maxsize=None)
def _curl_matrix(kind, p):
    element = reference_element(kind)
    sc = _scalar_basis(kind, p)
    rt = _rt_basis(kind, p)
    rule = element_rule(element, 2 * p)
    g = sc.grad_eval(rule.nodes)
    curl = np.stack([g[:, :, 1], -g[:, :, 0]], axis=-1)
    vals = rt.eval(rule.nodes)
    return np.einsum("pkd,pmd,p->km", vals, curl, rule.weights, optimize=True)


def curl_matrix(element, p):
    """Matrix taking modal P_p coefficients to RT_p coefficients of the
    vector curl (d/dx2, -d/dx1) (exact)."""
    return _curl_matrix(element.kind, p)


def divergence(v):
    """Exact divergence of an RT polynomial, in P_{p-1}(K)."""
    v = v.in_full_basis()
    D = div_matrix(v.element, v.order)
    return ScalarPoly(scalar_basis(v.element, v.order - 1), D @ v.coeffs)


def vector_curl(phi):
    """Exact vector curl of a scalar polynomial, in RT_p(K)."""
    phi = phi.in_full_basis()
    p = max(phi.degree, 1)
    phi = phi.to_degree(p)
    K = curl_matrix(phi.element, p)
    return RTPoly(rt_basis(phi.element, p), K @ phi.coeffs)


@lru_cache(maxsize=None)
def _stiffness(kind, p):
    element = reference_element(kind)
    basis = _scalar_basis(kind, p)
    rule = element_rule(element, 2 * p)
    g = basis.grad_eval(rule.nodes)
    A = np.einsum("pkd,pld,p->kl", g, g, rule.weights, optimize=True)
    return 0.5 * (A + A.T)


def stiffness_matrix(element, p):
    """H1-seminorm Gram of the modal scalar basis of P_p(K)."""
    return _stiffness(element.kind, p)


def vertex_interpolant(element, values):
    """The degree-1 polynomial (bilinear on the square) matching the given
    vertex values."""
    basis = scalar_basis(element, 1)
    V = basis.eval(element.vertices)
    return ScalarPoly(basis, np.linalg.solve(V, np.asarray(values, dtype=float)))


def eval_poly(poly, pts):
    """Batch pointwise evaluation with containment check."""
    return poly.eval(pts, check=True)
