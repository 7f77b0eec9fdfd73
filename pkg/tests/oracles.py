"""Independent brute-force oracles for cross-validation.

These deliberately avoid the package's basis and Gram machinery: raw
monomial / tensor-Legendre representations, hand-coded derivatives, their
own Duffy quadrature, and dense scipy eigensolves.
"""

import numpy as np
import scipy.linalg as sla
from numpy.polynomial.legendre import leggauss

SQRT3 = np.sqrt(3.0)


def gauss01(n):
    x, w = leggauss(n)
    return 0.5 * (x + 1), 0.5 * w


def tri_rule(n):
    """Duffy rule on the equilateral triangle, exact to ~2n-2 total degree."""
    xu, wu = gauss01(n)
    xv, wv = gauss01(n + 1)
    U, V = np.meshgrid(xu, xv, indexing="ij")
    W = np.outer(wu, wv) * (1 - V) * (SQRT3 / 2)
    a, b = U * (1 - V), V
    pts = np.column_stack([(a + 0.5 * b).ravel(), (SQRT3 / 2 * b).ravel()])
    return pts, W.ravel()


def quad_rule_(n):
    x, w = gauss01(n)
    X, Y = np.meshgrid(x, x, indexing="ij")
    return np.column_stack([X.ravel(), Y.ravel()]), np.outer(w, w).ravel()


def element_rule(kind, n):
    return tri_rule(n) if kind == "tri" else quad_rule_(n)


def fourier_h_minus1_const_unit_square(terms=200000):
    """||1||^2 in H^-1((0,1)^2): int of the zero-Dirichlet Poisson solution
    of -Lap(phi) = 1; series accelerated by the closed-form inner sum
    sum_{odd n} 1/(n^2+a^2) = pi tanh(pi a/2)/(4a)."""
    m = np.arange(1, terms, 2, dtype=float)
    inner = (np.pi**2 / 8 - np.pi * np.tanh(np.pi * m / 2) / (4 * m)) / m**2
    return float(64 / np.pi**6 * np.sum(inner / m**2))


# ---------------------------------------------------------------------------
# Dense Friedrichs constant at p = 2
# ---------------------------------------------------------------------------

def _monomials_scalar(maxdeg, total=False):
    pairs = [(i, j) for i in range(maxdeg + 1) for j in range(maxdeg + 1)
             if not total or i + j <= maxdeg]
    def ev(pts):
        return np.column_stack([pts[:, 0]**i * pts[:, 1]**j for i, j in pairs])
    def grad(pts):
        gx = np.column_stack([
            (i * pts[:, 0]**max(i - 1, 0) * pts[:, 1]**j) if i else 0 * pts[:, 0]
            for i, j in pairs])
        gy = np.column_stack([
            (j * pts[:, 0]**i * pts[:, 1]**max(j - 1, 0)) if j else 0 * pts[:, 0]
            for i, j in pairs])
        return gx, gy
    return pairs, ev, grad


def _rt2_basis(kind):
    """Evaluators for RT_2 component functions and their divergences."""
    if kind == "quad":
        comps = []
        for i in range(3):
            for j in range(2):
                comps.append((("x", i, j)))
        for i in range(2):
            for j in range(3):
                comps.append((("y", i, j)))
    else:
        comps = [("x", 0, 0), ("x", 1, 0), ("x", 0, 1),
                 ("y", 0, 0), ("y", 1, 0), ("y", 0, 1),
                 ("rx", 0, 0), ("ry", 0, 0)]

    def ev(pts):
        x, y = pts[:, 0], pts[:, 1]
        out = np.zeros((len(pts), len(comps), 2))
        for k, c in enumerate(comps):
            tag, i, j = c
            if tag == "x":
                out[:, k, 0] = x**i * y**j
            elif tag == "y":
                out[:, k, 1] = x**i * y**j
            elif tag == "rx":  # x * (x, y) homogeneous supplement
                out[:, k, 0] = x * x
                out[:, k, 1] = x * y
            else:
                out[:, k, 0] = x * y
                out[:, k, 1] = y * y
        return out

    def div(pts):
        x, y = pts[:, 0], pts[:, 1]
        out = np.zeros((len(pts), len(comps)))
        for k, c in enumerate(comps):
            tag, i, j = c
            if tag == "x":
                out[:, k] = i * x**max(i - 1, 0) * y**j if i else 0.0
            elif tag == "y":
                out[:, k] = j * x**i * y**max(j - 1, 0) if j else 0.0
            elif tag == "rx":
                out[:, k] = 3 * x
            else:
                out[:, k] = 3 * y
        return out

    return comps, ev, div


def _element_edges(kind):
    if kind == "quad":
        verts = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float)
    else:
        verts = np.array([[0, 0], [1, 0], [0.5, SQRT3 / 2]])
    n = len(verts)
    edges = []
    for i in range(n):
        a, b = verts[i], verts[(i + 1) % n]
        t = (b - a) / np.hypot(*(b - a))
        edges.append((a, b, np.array([t[1], -t[0]])))
    return edges


def _boundary_zero_space(kind, ev, ncols, per_edge=8):
    rows = []
    for a, b, nrm in _element_edges(kind):
        s = np.linspace(0.04, 0.96, per_edge)[:, None]
        pts = a[None, :] + s * (b - a)[None, :]
        vals = ev(pts)
        if vals.ndim == 3:
            rows.append(vals[:, :, 0] * nrm[0] + vals[:, :, 1] * nrm[1])
        else:
            rows.append(vals)
    A = np.vstack(rows)
    _, sv, Vt = np.linalg.svd(A)
    rank = int(np.sum(sv > 1e-9 * sv[0]))
    return Vt[rank:].T


def _h_dual_gram_of(kind, fvals_cols, pts, w, variant, ref_deg=9):
    """Gram <f_i, phi_j> with (-Lap+1) phi = f (natural BC, 'h-tilde-minus1')
    or -Lap phi = f (zero trace, 'h-minus1'), solved densely in a raw
    tensor-Legendre space of per-variable degree ref_deg."""
    from numpy.polynomial.legendre import legvander
    t1 = legvander(2 * pts[:, 0] - 1, ref_deg)
    t2 = legvander(2 * pts[:, 1] - 1, ref_deg)
    nb = (ref_deg + 1)**2
    V = np.einsum("pi,pj->pij", t1, t2).reshape(len(pts), nb)
    # derivative of Legendre via recurrence matrix
    D = np.zeros((ref_deg + 1, ref_deg + 1))
    for n in range(ref_deg + 1):
        for k in range(n - 1, -1, -2):
            D[k, n] = 2 * (2 * k + 1)
    dt1 = t1 @ D
    dt2 = t2 @ D
    Gx = np.einsum("pi,pj->pij", dt1, t2).reshape(len(pts), nb) * 2
    Gy = np.einsum("pi,pj->pij", t1, dt2).reshape(len(pts), nb) * 2
    M = V.T @ (w[:, None] * V)
    A = Gx.T @ (w[:, None] * Gx) + Gy.T @ (w[:, None] * Gy)
    if variant == "h-tilde-minus1":
        Z = np.eye(nb)
        K = A + M
    else:
        def evv(q):
            s1 = legvander(2 * q[:, 0] - 1, ref_deg)
            s2 = legvander(2 * q[:, 1] - 1, ref_deg)
            return np.einsum("pi,pj->pij", s1, s2).reshape(len(q), nb)
        Z = _boundary_zero_space(kind, evv, nb, per_edge=ref_deg + 2)
        K = Z.T @ A @ Z
    rhs = Z.T @ (V.T @ (w[:, None] * fvals_cols))
    sol = sla.solve(0.5 * (K + K.T), rhs, assume_a="pos")
    phi_vals = (V @ Z) @ sol
    return fvals_cols.T @ (w[:, None] * phi_vals)


def dense_friedrichs_p2(kind, variant):
    """Brute-force Friedrichs constant at p = 2 over an explicit basis."""
    pts, w = element_rule(kind, 14)
    comps, ev, div = _rt2_basis(kind)
    vals = ev(pts)
    dvals = div(pts)
    nb = len(comps)
    Mass = np.einsum("pid,pjd,p->ij", vals, vals, w)
    # subspace: bubble -> zero normal trace and orthogonal to curls of
    # scalar bubbles; full -> orthogonal to curls of all P_2
    if variant == "bubble":
        N = _boundary_zero_space(kind, ev, nb)
        if kind == "quad":
            x, y = pts[:, 0], pts[:, 1]
            gb = np.column_stack([(1 - 2 * x) * y * (1 - y),
                                  x * (1 - x) * (1 - 2 * y)])
            curls = np.stack([gb[:, 1], -gb[:, 0]], axis=-1)[:, None, :]
        else:
            curls = np.zeros((len(pts), 0, 2))
    else:
        N = np.eye(nb)
        pairs, sev, sgrad = _monomials_scalar(2, total=True)
        gx, gy = sgrad(pts)
        curls = np.stack([gy, -gx], axis=-1)
    if curls.shape[1]:
        C = np.einsum("pkd,pjd,p->kj", curls, vals, w) @ N
        _, sv, Vt = np.linalg.svd(C)
        rank = int(np.sum(sv > 1e-9 * max(sv[0], 1e-30)))
        N = N @ Vt[rank:].T
    dual_kind = "h-tilde-minus1" if variant == "bubble" else "h-minus1"
    Gd = _h_dual_gram_of(kind, dvals @ N, pts, w, dual_kind)
    Msub = N.T @ Mass @ N
    lam = sla.eigh(0.5 * (Gd + Gd.T), 0.5 * (Msub + Msub.T),
                   eigvals_only=True)
    return float(1.0 / np.sqrt(lam[0]))


def dense_inverse_ratio_p2(kind):
    """Brute-force sup ||v||_H1 / ||v||_L2 over P_2 (monomial basis)."""
    pts, w = element_rule(kind, 10)
    pairs, ev, grad = _monomials_scalar(2, total=kind == "tri")
    V = ev(pts)
    gx, gy = grad(pts)
    M = V.T @ (w[:, None] * V)
    A = gx.T @ (w[:, None] * gx) + gy.T @ (w[:, None] * gy)
    lam = sla.eigh(0.5 * (A + A.T) + 0.5 * (M + M.T), 0.5 * (M + M.T),
                   eigvals_only=True)
    return float(np.sqrt(lam[-1]))
