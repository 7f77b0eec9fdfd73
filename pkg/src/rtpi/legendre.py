"""Shifted-Legendre building blocks.

Everything downstream represents a polynomial on the plane by a coefficient
matrix C with f(x) = sum_ij C[i,j] * L_i(x1) * L_j(x2), where L_n is the
L2(0,1)-orthonormal shifted Legendre polynomial of degree n.  Evaluation,
differentiation and coordinate multiplication are exact coefficient
operations, so structural identities (div curl = 0, exact traces) hold to
roundoff rather than to quadrature error.
"""

import numpy as np
from numpy.polynomial.legendre import leggauss


def gauss01(n):
    """n-point Gauss-Legendre rule on (0,1); exact through degree 2n-1."""
    x, w = leggauss(int(n))
    return 0.5 * (x + 1.0), 0.5 * w


def leg_vander(x, degree):
    """Values of L_0..L_degree at points x, shape (len(x), degree+1)."""
    x = np.asarray(x, dtype=float)
    t = 2.0 * x - 1.0
    V = np.empty((x.size, degree + 1))
    V[:, 0] = 1.0
    if degree >= 1:
        V[:, 1] = t
    for n in range(1, degree):
        V[:, n + 1] = ((2 * n + 1) * t * V[:, n] - n * V[:, n - 1]) / (n + 1)
    scale = np.sqrt(2.0 * np.arange(degree + 1) + 1.0)
    return V * scale


def leg_deriv_matrix(degree):
    """Matrix D with L_n' = sum_k D[k,n] L_k (exact)."""
    D = np.zeros((degree + 1, degree + 1))
    for n in range(degree + 1):
        for k in range(n - 1, -1, -2):
            D[k, n] = 2.0 * np.sqrt((2 * n + 1) * (2 * k + 1))
    return D


def leg_mulx_matrix(degree):
    """Matrix X, shape (degree+2, degree+1), with x*L_n = sum_k X[k,n] L_k."""
    X = np.zeros((degree + 2, degree + 1))
    for n in range(degree + 1):
        X[n, n] = 0.5
        X[n + 1, n] = 0.5 * (n + 1) / np.sqrt((2 * n + 1) * (2 * n + 3))
        if n >= 1:
            X[n - 1, n] += 0.5 * n / np.sqrt((2 * n + 1) * (2 * n - 1))
    return X


def leg_end_values(degree):
    """(values at 0, values at 1) of L_0..L_degree."""
    s = np.sqrt(2.0 * np.arange(degree + 1) + 1.0)
    signs = np.where(np.arange(degree + 1) % 2 == 0, 1.0, -1.0)
    return signs * s, s


# ---------------------------------------------------------------------------
# 2D tensor coefficient operations.  C has shape (d1+1, d2+1).
# ---------------------------------------------------------------------------

def tensor_eval(C, pts):
    """Evaluate sum_ij C[i,j] L_i(x1) L_j(x2) at pts (m,2)."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    V1 = leg_vander(pts[:, 0], C.shape[0] - 1)
    V2 = leg_vander(pts[:, 1], C.shape[1] - 1)
    return np.einsum("pi,ij,pj->p", V1, C, V2)


def tensor_eval_many(Cs, pts):
    """Evaluate a stack of coefficient matrices Cs (k, d1+1, d2+1) at pts."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    V1 = leg_vander(pts[:, 0], Cs.shape[1] - 1)
    V2 = leg_vander(pts[:, 1], Cs.shape[2] - 1)
    return np.einsum("pi,kij,pj->pk", V1, Cs, V2)


def tensor_dx(C, axis):
    """Exact partial derivative along axis 0 (x1) or 1 (x2)."""
    if axis == 0:
        D = leg_deriv_matrix(C.shape[0] - 1)
        return D @ C
    D = leg_deriv_matrix(C.shape[1] - 1)
    return C @ D.T


def tensor_mulx(C, axis):
    """Exact multiplication by x1 (axis 0) or x2 (axis 1); grows the shape."""
    if axis == 0:
        X = leg_mulx_matrix(C.shape[0] - 1)
        return X @ C
    X = leg_mulx_matrix(C.shape[1] - 1)
    return C @ X.T


def tensor_pad(C, shape):
    """Zero-pad C to the given shape."""
    if C.shape == tuple(shape):
        return C
    out = np.zeros(shape)
    out[: C.shape[0], : C.shape[1]] = C
    return out


def tensor_coeffs_from_values(fvals, grid_x, grid_w, degree):
    """Recover tensor coefficients of a polynomial from values on a tensor
    Gauss grid.

    fvals has shape (n, n) with fvals[a,b] = f(grid_x[a], grid_x[b]); the
    result is exact when deg(f) <= degree per variable and n >= degree+1.
    """
    V = leg_vander(grid_x, degree)
    W = V * grid_w[:, None]
    return W.T @ fvals @ W
