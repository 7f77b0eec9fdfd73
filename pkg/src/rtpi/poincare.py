"""Regularized Poincare-type integral operators and their consequences.

R turns scalars into vector fields and is a right inverse of div; A turns
divergence-free vector fields into scalar potentials and is a right inverse
of the vector curl.  Both average classical Poincare path integrals against
a smooth interior bump.  The bump integral is discretized by a polar rule
whose weights are normalized to unit mass: each node then contributes an
exact classical Poincare operator, so the right-inverse and polynomial-range
properties hold pointwise to roundoff, independent of how well the rule
resolves the bump profile.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from . import legendre as leg
from . import polyspace as ps
from . import sobolev as sb
from .refelem import element_rule, reference_element


class MembershipError(Exception):
    """Polynomial-range fit residual exceeded its threshold."""


@dataclass(frozen=True)
class SmoothingBump:
    """C^inf bump exp(-1/(1-t^2)) scaled to the ball B(center, radius)."""

    center: tuple
    radius: float

    def profile(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        inside = np.abs(t) < 1.0
        out[inside] = np.exp(-1.0 / (1.0 - t[inside] ** 2))
        return out


def default_bump(element):
    if element.kind == "tri":
        return SmoothingBump((0.5, np.sqrt(3.0) / 6.0), 0.2)
    return SmoothingBump((0.5, 0.5), 0.3)


@dataclass(eq=False)
class PoincareConfig:
    """Discrete smoothing measure plus the path-integral Gauss rule."""

    bump: SmoothingBump
    n_radial: int = 24
    n_angular: int = 48
    n_t: int = 32
    nodes: np.ndarray = field(init=False)
    weights: np.ndarray = field(init=False)
    t_nodes: np.ndarray = field(init=False)
    t_weights: np.ndarray = field(init=False)

    def __post_init__(self):
        c = np.asarray(self.bump.center)
        rho = self.bump.radius
        r, wr = leg.gauss01(self.n_radial)
        r = r * rho
        wr = wr * rho
        phi = 2.0 * np.pi * np.arange(self.n_angular) / self.n_angular
        wphi = 2.0 * np.pi / self.n_angular
        R, PHI = np.meshgrid(r, phi, indexing="ij")
        nodes = np.column_stack([
            (c[0] + R * np.cos(PHI)).ravel(),
            (c[1] + R * np.sin(PHI)).ravel(),
        ])
        theta = self.bump.profile(R / rho)
        w = (theta * R * wr[:, None] * wphi).ravel()
        self.nodes = nodes
        self.weights = w / w.sum()
        self.t_nodes, self.t_weights = leg.gauss01(self.n_t)

    def validate(self, element, p, rng=None, tol=1e-9):
        """(R1)/(A1) residual check on random degree-p data."""
        rng = rng or np.random.default_rng(0)
        basis = ps.scalar_basis(element, p)
        psi = ps.ScalarPoly(basis, rng.standard_normal(basis.dim))
        v = R_poly(psi, element, self)
        resid = (ps.divergence(v) - psi.to_degree(p)).l2_norm() / max(psi.l2_norm(), 1e-30)
        if resid > tol:
            raise ValueError(f"Poincare config fails (R1) at degree {p}: {resid:.2e}")
        return resid


def default_config(element):
    return PoincareConfig(default_bump(element))


def apply_R(psi, x, cfg):
    """R psi at points x: the div right inverse, by nested quadrature.

    psi is a callable on (n,2) arrays; x may be a single point or (m,2).
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    a, w = cfg.nodes, cfg.weights
    acc = np.zeros((len(x), len(a)))
    for t, wt in zip(cfg.t_nodes, cfg.t_weights):
        pts = (1.0 - t) * a[None, :, :] + t * x[:, None, :]
        vals = np.asarray(psi(pts.reshape(-1, 2)), dtype=float).reshape(len(x), len(a))
        acc += (wt * t) * vals
    diff0 = x[:, 0:1] - a[None, :, 0]
    diff1 = x[:, 1:2] - a[None, :, 1]
    return np.column_stack([(diff0 * acc) @ w, (diff1 * acc) @ w])


def apply_A(u, x, cfg):
    """A u at points x: the scalar potential of a divergence-free field."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    a, w = cfg.nodes, cfg.weights
    acc1 = np.zeros((len(x), len(a)))
    acc2 = np.zeros((len(x), len(a)))
    for t, wt in zip(cfg.t_nodes, cfg.t_weights):
        pts = (1.0 - t) * a[None, :, :] + t * x[:, None, :]
        vals = np.asarray(u(pts.reshape(-1, 2)), dtype=float).reshape(len(x), len(a), 2)
        acc1 += wt * vals[:, :, 0]
        acc2 += wt * vals[:, :, 1]
    d0 = x[:, 0:1] - a[None, :, 0]
    d1 = x[:, 1:2] - a[None, :, 1]
    return (d1 * acc1 - d0 * acc2) @ w


def _fit(vals, basis_vals, weights, tol, what):
    coeffs = np.einsum("pk...,p...,p->k", basis_vals, vals, weights) \
        if vals.ndim == 1 else \
        np.einsum("pkd,pd,p->k", basis_vals, vals, weights, optimize=True)
    fitted = basis_vals @ coeffs if vals.ndim == 1 else \
        np.einsum("pkd,k->pd", basis_vals, coeffs)
    num = np.sqrt(np.sum(weights @ np.atleast_2d((vals - fitted).T ** 2).T))
    den = max(np.sqrt(np.sum(weights @ np.atleast_2d(vals.T**2).T)), 1e-30)
    if num / den > tol:
        raise MembershipError(f"{what} fit residual {num / den:.2e} exceeds {tol:.0e}")
    return coeffs, num / den


def R_poly(psi, element, cfg, tol=1e-8):
    """R acting on a polynomial, fitted into RT_{p+1}(K); the fit residual
    certifies the polynomial range."""
    p = psi.degree
    rt = ps.rt_basis(element, p + 1)
    rule = element_rule(element, 2 * (p + 2))
    vals = apply_R(lambda q: psi.eval(q), rule.nodes, cfg)
    coeffs, _ = _fit(vals, rt.eval(rule.nodes), rule.weights, tol, "R_poly range")
    return ps.RTPoly(rt, coeffs)


def A_poly(u, cfg, tol=1e-8):
    """A acting on an RT polynomial, fitted into P_p(K)."""
    element = u.element
    p = u.order
    target = ps.scalar_basis(element, p)
    rule = element_rule(element, 2 * (p + 1))
    vals = apply_A(lambda q: u.eval(q), rule.nodes, cfg)
    coeffs, _ = _fit(vals, target.eval(rule.nodes), rule.weights, tol, "A_poly range")
    return ps.ScalarPoly(target, coeffs)


@dataclass(eq=False)
class Decomposition:
    """u = curl psi + v with v = R(div u)."""

    psi: object  # callable (n,2) -> (n,)
    v: object    # RTPoly
    div_degree: int

    def reconstruct(self, pts):
        eps = 1e-6
        pts = np.atleast_2d(pts)
        e1 = np.array([eps, 0.0])
        e2 = np.array([0.0, eps])
        psi_y = (self.psi(pts + e2) - self.psi(pts - e2)) / (2 * eps)
        psi_x = (self.psi(pts + e1) - self.psi(pts - e1)) / (2 * eps)
        return np.column_stack([psi_y, -psi_x]) + self.v.eval(pts)


def decompose(u, div_u, element, cfg, div_degree=10):
    """Regular decomposition u = curl psi + v.

    div_u is represented in P_{div_degree}(K) before applying R (exact for
    the polynomial and divergence-free catalog fields), which keeps psi a
    single nested quadrature; psi = A(u - v) stays pointwise.
    """
    basis = ps.scalar_basis(element, div_degree)
    rule = element_rule(element, 2 * div_degree + 10)
    c = ps.project_values(basis, np.asarray(div_u(rule.nodes), dtype=float), rule)
    if np.linalg.norm(c) < 1e-14:
        v = ps.zero_rt(element, 1)
    else:
        v = R_poly(ps.ScalarPoly(basis, c), element, cfg)

    def psi(pts):
        return apply_A(lambda q: np.asarray(u(q)) - v.eval(q), pts, cfg)

    return Decomposition(psi, v, div_degree)


def right_inverse_div(psi, p, cfg, trace_tol=1e-9):
    """The divergence right inverse T psi = R psi - curl(extension) mapping
    mean-zero P_{p-1}(K) into the RT_p bubbles."""
    element = psi.element
    if psi.degree > p - 1:
        raise ValueError("input degree must be at most p-1")
    mean = psi.mean()
    if abs(mean) > 1e-10 * max(psi.l2_norm(), 1.0):
        raise ValueError(f"input must have zero mean, got {mean:.2e}")
    v = R_poly(psi.to_degree(p - 1), element, cfg)
    phi_tilde = _boundary_potential_extension(v, p)
    T = v - ps.vector_curl(phi_tilde)
    scale = max(1.0, psi.l2_norm())
    svals = np.linspace(0.04, 0.96, p + 3)
    tr = max(np.abs(T.normal_trace_values(e, svals * e.length)).max()
             for e in element.edges)
    if tr > trace_tol * scale:
        raise RuntimeError(f"right inverse trace residual {tr:.2e}")
    return T


def _boundary_potential_extension(v, p):
    """P_p(K) extension of the boundary potential phi with dphi/ds = v.n
    (phi is a continuous piecewise polynomial of degree <= p on the closed
    boundary; all reference edges have unit length)."""
    element = v.element
    s, w = leg.gauss01(p + 2)
    start = 0.0
    vertex_vals = []
    edge_phi_vals = []
    for e in element.edges:
        vertex_vals.append(start)
        tr = v.normal_trace_poly(e)
        phi_vals = start + np.array([si * np.dot(w, tr.eval(si * s)) for si in s])
        edge_phi_vals.append(phi_vals)
        start = start + np.dot(w, tr.eval(s))
    if abs(start) > 1e-9 * max(1.0, v.l2_norm()):
        raise RuntimeError(f"boundary potential fails to close: {start:.2e}")
    g1 = ps.vertex_interpolant(element, np.array(vertex_vals))
    total = g1.to_degree(p)
    for i, e in enumerate(element.edges):
        eb = ps.edge_basis_on(element, i, p, bubble=True)
        if eb.dim == 0:
            continue
        bubble_vals = edge_phi_vals[i] - g1.eval(e.param(s))
        c = eb.eval(s).T @ (w * bubble_vals)
        E = sb._edge_bubble_lift(element.kind, i, p, p)
        total = total + ps.ScalarPoly(ps.scalar_basis(element, p), E @ c)
    return total
