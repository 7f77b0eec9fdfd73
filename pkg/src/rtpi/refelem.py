"""Reference elements, edge frames and quadrature rules.

The two reference elements are the equilateral triangle T with vertices
(0,0), (1,0), (1/2, sqrt(3)/2) and the unit square Q = (0,1)^2.  All edges
of both elements have length one, and vertices are ordered counterclockwise
with outward unit normals on each edge.
"""

import os
from dataclasses import dataclass, field

import numpy as np

from .legendre import gauss01

SQRT3 = np.sqrt(3.0)

DEFAULT_QUAD_MAX = 200


class CapabilityError(Exception):
    """Requested quadrature degree exceeds the configured cap."""


def quad_max():
    return int(os.environ.get("RTPI_QUAD_MAX", DEFAULT_QUAD_MAX))


@dataclass(frozen=True, eq=False)
class Edge:
    """Directed edge with outward normal and arclength parametrization."""

    index: int
    a: np.ndarray
    b: np.ndarray
    normal: np.ndarray
    length: float

    def param(self, s):
        """Points x(s) = a + s*(b-a)/length for s in [0, length]."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        d = (self.b - self.a) / self.length
        return self.a[None, :] + s[:, None] * d[None, :]

    @property
    def tangent(self):
        return (self.b - self.a) / self.length


@dataclass(frozen=True, eq=False)
class Element:
    kind: str
    vertices: np.ndarray
    edges: tuple = field(repr=False)
    area: float = 0.0

    @property
    def nedges(self):
        return len(self.edges)

    @property
    def perimeter(self):
        return sum(e.length for e in self.edges)

    @property
    def centroid(self):
        return self.vertices.mean(axis=0)

    def contains(self, pts, tol=1e-12):
        """Boolean mask for points inside the closure of the element."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        x, y = pts[:, 0], pts[:, 1]
        if self.kind == "quad":
            return (x >= -tol) & (x <= 1 + tol) & (y >= -tol) & (y <= 1 + tol)
        return (y >= -tol) & (y <= SQRT3 * x + tol) & (y <= SQRT3 * (1 - x) + tol)


def _make_element(kind, vertices):
    vertices = np.asarray(vertices, dtype=float)
    nv = len(vertices)
    edges = []
    for i in range(nv):
        a, b = vertices[i], vertices[(i + 1) % nv]
        t = b - a
        length = float(np.hypot(*t))
        t = t / length
        normal = np.array([t[1], -t[0]])
        edges.append(Edge(i, a, b, normal, length))
    area = 0.5 * abs(
        sum(
            vertices[i, 0] * vertices[(i + 1) % nv, 1]
            - vertices[(i + 1) % nv, 0] * vertices[i, 1]
            for i in range(nv)
        )
    )
    return Element(kind, vertices, tuple(edges), area)


TRIANGLE = _make_element("tri", [(0.0, 0.0), (1.0, 0.0), (0.5, SQRT3 / 2)])
SQUARE = _make_element("quad", [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)])

_ELEMENTS = {"tri": TRIANGLE, "quad": SQUARE, "triangle": TRIANGLE, "square": SQUARE}


def reference_element(kind):
    try:
        return _ELEMENTS[kind]
    except KeyError:
        raise ValueError(f"unknown element kind {kind!r}") from None


def edge_frame(element, edge_index):
    if not 0 <= edge_index < element.nedges:
        raise IndexError(f"edge index {edge_index} out of range for {element.kind}")
    return element.edges[edge_index]


def boundary_arclength(element, point, tol=1e-12):
    """Cumulative counterclockwise arclength from vertex 0 to a boundary point."""
    p = np.asarray(point, dtype=float)
    acc = 0.0
    for e in element.edges:
        d = e.b - e.a
        t = float(np.dot(p - e.a, d)) / e.length**2
        t = min(max(t, 0.0), 1.0)
        if np.hypot(*(p - (e.a + t * d))) <= tol:
            s = acc + t * e.length
            return 0.0 if s >= element.perimeter - tol else s
        acc += e.length
    raise ValueError(f"point {point} not on the boundary of {element.kind}")


@dataclass(frozen=True, eq=False)
class QuadRule:
    domain: str
    degree: int
    nodes: np.ndarray
    weights: np.ndarray

    def integrate(self, f):
        return float(np.dot(self.weights, f(self.nodes)))


def _check_degree(degree):
    if degree < 0:
        raise ValueError("quadrature degree must be >= 0")
    if degree > quad_max():
        raise CapabilityError(
            f"quadrature degree {degree} exceeds cap {quad_max()} "
            "(override with RTPI_QUAD_MAX)"
        )


def quad_rule(domain, degree):
    """Quadrature rule exact for polynomials up to the given degree.

    The degree is total for triangle/prism3d domains and per-variable for
    interval/square/cube3d.  The triangle rule collapses a tensor rule onto
    the equilateral reference triangle with the Jacobian in the weights.
    """
    degree = int(degree)
    _check_degree(degree)
    if domain == "interval":
        x, w = gauss01(degree // 2 + 1)
        return QuadRule(domain, degree, x[:, None], w)
    if domain == "square":
        x, w = gauss01(degree // 2 + 1)
        X1, X2 = np.meshgrid(x, x, indexing="ij")
        W = np.outer(w, w)
        return QuadRule(domain, degree, np.column_stack([X1.ravel(), X2.ravel()]), W.ravel())
    if domain == "triangle":
        xu, wu = gauss01(degree // 2 + 1)
        xv, wv = gauss01((degree + 1) // 2 + 1)
        U, V = np.meshgrid(xu, xv, indexing="ij")
        W = np.outer(wu, wv) * (1.0 - V)
        a, b = U * (1.0 - V), V
        x1 = a + 0.5 * b
        x2 = (SQRT3 / 2) * b
        return QuadRule(domain, degree, np.column_stack([x1.ravel(), x2.ravel()]),
                        (SQRT3 / 2) * W.ravel())
    if domain in ("prism3d", "cube3d"):
        base = quad_rule("triangle" if domain == "prism3d" else "square", degree)
        x, w = gauss01(degree // 2 + 1)
        n2, n1 = len(base.weights), len(x)
        nodes = np.empty((n2 * n1, 3))
        nodes[:, :2] = np.repeat(base.nodes, n1, axis=0)
        nodes[:, 2] = np.tile(x, n2)
        weights = (base.weights[:, None] * w[None, :]).ravel()
        return QuadRule(domain, degree, nodes, weights)
    raise ValueError(f"unknown quadrature domain {domain!r}")


def element_rule(element, degree):
    return quad_rule("triangle" if element.kind == "tri" else "square", degree)


# ---------------------------------------------------------------------------
# Graded rules for integrands with a point singularity at a vertex.
# ---------------------------------------------------------------------------

def graded_panels(length, ratio=0.15, levels=30):
    """Geometric panel boundaries on (0, length) accumulating at 0."""
    pts = [0.0] + [length * ratio**k for k in range(levels, -1, -1)]
    return np.array(pts)


def graded_interval_rule(a, b, singular_end=None, npts=16, ratio=0.15, levels=30):
    """Composite Gauss rule on (a,b), geometrically refined toward a
    singular endpoint ('left'/'right'/None)."""
    x0, w0 = gauss01(npts)
    if singular_end is None:
        return a + (b - a) * x0, (b - a) * w0
    panels = graded_panels(b - a, ratio, levels)
    if singular_end == "right":
        panels = b - panels[::-1]
    else:
        panels = a + panels
    xs, ws = [], []
    for lo, hi in zip(panels[:-1], panels[1:]):
        xs.append(lo + (hi - lo) * x0)
        ws.append((hi - lo) * w0)
    return np.concatenate(xs), np.concatenate(ws)


def _radial_fan_rule(vertex, q0, q1, npts, ratio, levels, n_ang):
    """Rule over the triangle (vertex, q0, q1), radially graded toward vertex.

    The grading depth is capped so node offsets from the vertex stay well
    above the floating-point spacing at the vertex coordinates (offsets that
    round onto the vertex would evaluate singular integrands at it)."""
    floor = max(np.abs(vertex).max(), 1e-12) * 1e-12
    levels = min(levels, int(np.log(floor) / np.log(ratio)))
    s, ws = graded_interval_rule(0.0, 1.0, "left", npts, ratio, levels)
    t, wt = gauss01(n_ang)
    gamma = q0[None, :] + t[:, None] * (q1 - q0)[None, :]
    cross = gamma[:, 0] * (q1 - q0)[1] - gamma[:, 1] * (q1 - q0)[0]
    cross -= vertex[0] * (q1 - q0)[1] - vertex[1] * (q1 - q0)[0]
    nodes = vertex[None, None, :] + s[:, None, None] * (gamma - vertex)[None, :, :]
    weights = ws[:, None] * (wt * np.abs(cross))[None, :] * s[:, None]
    return nodes.reshape(-1, 2), weights.ravel()


def graded_element_rule(element, point, npts=16, ratio=0.15, levels=30, n_ang=None):
    """Area rule on the element, radially graded toward a point (a vertex
    index, or any point of the closed element).

    The element is fanned into triangles from the point; the radial factor
    absorbs the polar Jacobian so integrands like rho^(alpha-1) are resolved
    to ~1e-10 for alpha > 0.3.  Edges collinear with the point are skipped
    (degenerate fans).
    """
    if n_ang is None:
        n_ang = npts
    if np.isscalar(point):
        v = element.vertices[int(point)]
    else:
        v = np.asarray(point, dtype=float)
    nv = len(element.vertices)
    xs, ws = [], []
    for k in range(nv):
        q0, q1 = element.vertices[k], element.vertices[(k + 1) % nv]
        cross = (q0[0] - v[0]) * (q1[1] - v[1]) - (q0[1] - v[1]) * (q1[0] - v[0])
        if abs(cross) < 1e-14:
            continue
        x, w = _radial_fan_rule(v, q0, q1, npts, ratio, levels, n_ang)
        xs.append(x)
        ws.append(w)
    return np.vstack(xs), np.concatenate(ws)
