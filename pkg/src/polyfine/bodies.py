"""Convex body oracles: membership, support, radial, boundary and polar queries.

Every body answers four queries (plus batch variants used by the hot paths):

* ``contains(x)``          -- membership in the closed body,
* ``support(u)``           -- max of <., u> over the body and an attaining point,
* ``radial(u)``            -- distance from the origin to the boundary along u,
* ``boundary(u)``          -- a boundary point together with an outer unit normal.

``boundary(u)`` follows the normal parameterization: it returns the support
point in direction u, for which u itself is a valid outer normal (for a
polytope, flat faces are reached only through their exposed normals).
``normal_at(x)`` gives an outer normal at a prescribed boundary point, which
is what the radial parameterization and the polar boundary map need.
"""

import json
from dataclasses import dataclass

import numpy as np


class InvalidBodyError(ValueError):
    """The described set is not a usable convex body for the request."""


def unit(v):
    n = np.linalg.norm(v)
    if n == 0:
        raise ValueError("zero vector has no direction")
    return np.asarray(v, dtype=float) / n


def unit_rows(V):
    V = np.atleast_2d(np.asarray(V, dtype=float))
    n = np.linalg.norm(V, axis=1, keepdims=True)
    if np.any(n == 0):
        raise ValueError("zero vector has no direction")
    return V / n


def sphere_points(rng, n, d):
    """n independent uniform points on the unit sphere S^{d-1}."""
    g = rng.standard_normal((n, d))
    return unit_rows(g)


@dataclass(frozen=True)
class BoundaryPoint:
    x: np.ndarray
    nu: np.ndarray


class ConvexBody:
    """Oracle base class; subclasses fill in the batch queries."""

    dim = None
    origin_interior = True

    # -- batch queries (subclass responsibility) --------------------------

    def contains_batch(self, X, tol=0.0):
        raise NotImplementedError

    def support_batch(self, U):
        raise NotImplementedError

    def radial_batch(self, U):
        """Boundary distance along unit directions U (rows assumed unit)."""
        return _radial_bisect(self, U)

    def normal_at_batch(self, X):
        raise NotImplementedError(f"{type(self).__name__} has no normal_at oracle")

    # -- scalar conveniences ----------------------------------------------

    def contains(self, x, tol=0.0):
        return bool(self.contains_batch(np.asarray(x, dtype=float)[None, :], tol)[0])

    def support(self, u):
        h, pts = self.support_batch(np.asarray(u, dtype=float)[None, :])
        return float(h[0]), pts[0]

    def radial(self, u):
        if not self.origin_interior:
            raise InvalidBodyError("radial query needs the origin in the interior")
        return float(self.radial_batch(unit_rows(u))[0])

    def boundary(self, u):
        X, NU = self.boundary_batch(np.asarray(u, dtype=float)[None, :])
        return BoundaryPoint(X[0], NU[0])

    def boundary_batch(self, U):
        U = unit_rows(U)
        _, pts = self.support_batch(U)
        return pts, U

    def boundary_pairs_mixed(self, U, rng=None):
        """Boundary pairs, half support- and half radially parameterized.

        The support stream reaches normal fans (polytope vertices), the
        radial one reaches flat faces; together they hit every (point,
        normal) pair with positive density.  Polytopes additionally snap
        onto their ridges, whose normal arcs neither stream sees.
        """
        U = unit_rows(U)
        k = len(U) // 2
        X1, NU1 = self.boundary_batch(U[:k])
        try:
            r = self.radial_batch(U[k:])
            Z = r[:, None] * U[k:]
            NZ = self.normal_at_batch(Z)
        except NotImplementedError:
            return self.boundary_batch(U)
        return np.vstack([X1, Z]), np.vstack([NU1, NZ])

    def normal_at(self, x):
        return self.normal_at_batch(np.asarray(x, dtype=float)[None, :])[0]

    def gauge(self, x):
        return float(self.gauge_batch(np.asarray(x, dtype=float)[None, :])[0])

    def gauge_batch(self, X):
        """Minkowski functional |x| / radial(x/|x|); gauge(0) = 0."""
        if not self.origin_interior:
            raise InvalidBodyError("gauge needs the origin in the interior")
        X = np.atleast_2d(np.asarray(X, dtype=float))
        norms = np.linalg.norm(X, axis=1)
        out = np.zeros(len(X))
        nz = norms > 0
        if np.any(nz):
            out[nz] = norms[nz] / self.radial_batch(X[nz] / norms[nz, None])
        return out

    # -- enclosure ----------------------------------------------------------

    @property
    def bounding_radius(self):
        lo, hi = self.bounding_box()
        return float(np.sqrt(np.sum(np.maximum(np.abs(lo), np.abs(hi)) ** 2)))

    def bounding_box(self):
        """Axis-aligned box [lo, hi] containing the body, via support values."""
        eye = np.eye(self.dim)
        hi, _ = self.support_batch(eye)
        lo, _ = self.support_batch(-eye)
        return -lo, hi


def _radial_bisect(body, U, rtol=1e-12):
    """Generic radial query: bisection on contains along each ray."""
    U = np.atleast_2d(U)
    m = len(U)
    hi_r = body.bounding_radius * (1 + 1e-9)
    lo = np.zeros(m)
    hi = np.full(m, hi_r)
    if not body.contains_batch(np.zeros((1, body.dim)))[0]:
        raise InvalidBodyError("origin not inside the body")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        inside = body.contains_batch(mid[:, None] * U)
        lo = np.where(inside, mid, lo)
        hi = np.where(inside, hi, mid)
        if np.max((hi - lo) / np.maximum(hi, 1e-300)) <= rtol:
            break
    if np.any(lo <= 0):
        raise InvalidBodyError("origin not interior: radial <= 0 along some direction")
    return lo


# ---------------------------------------------------------------------------
# concrete kinds
# ---------------------------------------------------------------------------

class Ball(ConvexBody):
    def __init__(self, dim, radius=1.0):
        if radius <= 0:
            raise InvalidBodyError("ball radius must be positive")
        self.dim = int(dim)
        self.radius = float(radius)

    def contains_batch(self, X, tol=0.0):
        X = np.atleast_2d(X)
        return np.linalg.norm(X, axis=1) <= self.radius + tol

    def support_batch(self, U):
        U = np.atleast_2d(U)
        n = np.linalg.norm(U, axis=1)
        if np.any(n == 0):
            raise ValueError("support direction must be nonzero")
        return self.radius * n, self.radius * U / n[:, None]

    def radial_batch(self, U):
        return np.full(len(np.atleast_2d(U)), self.radius)

    def normal_at_batch(self, X):
        return unit_rows(X)

    def bounding_box(self):
        r = np.full(self.dim, self.radius)
        return -r, r


class Ellipsoid(ConvexBody):
    """Image A . (unit ball) of a nonsingular matrix A."""

    def __init__(self, matrix):
        A = np.asarray(matrix, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise InvalidBodyError("ellipsoid matrix must be square")
        self.dim = A.shape[0]
        self.A = A
        try:
            self.A_inv = np.linalg.inv(A)
        except np.linalg.LinAlgError as e:
            raise InvalidBodyError("ellipsoid matrix must be nonsingular") from e
        self._quad_inv = self.A_inv.T @ self.A_inv   # (A A^T)^{-1}

    def contains_batch(self, X, tol=0.0):
        X = np.atleast_2d(X)
        return np.linalg.norm(X @ self.A_inv.T, axis=1) <= 1 + tol

    def support_batch(self, U):
        U = np.atleast_2d(U)
        W = U @ self.A
        n = np.linalg.norm(W, axis=1)
        if np.any(n == 0):
            raise ValueError("support direction must be nonzero")
        return n, (W / n[:, None]) @ self.A.T

    def radial_batch(self, U):
        U = np.atleast_2d(U)
        return 1.0 / np.linalg.norm(U @ self.A_inv.T, axis=1)

    def normal_at_batch(self, X):
        return unit_rows(np.atleast_2d(X) @ self._quad_inv.T)

    @property
    def bounding_radius(self):
        return float(np.linalg.svd(self.A, compute_uv=False)[0])


class LpBall(ConvexBody):
    def __init__(self, dim, p):
        if p < 1:
            raise InvalidBodyError("lp_ball needs p >= 1")
        self.dim = int(dim)
        self.p = float(p)

    def contains_batch(self, X, tol=0.0):
        X = np.atleast_2d(X)
        return np.sum(np.abs(X) ** self.p, axis=1) ** (1 / self.p) <= 1 + tol

    def support_batch(self, U):
        U = np.atleast_2d(U)
        absU = np.abs(U)
        if np.any(absU.sum(axis=1) == 0):
            raise ValueError("support direction must be nonzero")
        if self.p == 1.0:
            # dual is sup norm; maximizer at the largest-coordinate vertex
            j = np.argmax(absU, axis=1)
            h = absU[np.arange(len(U)), j]
            pts = np.zeros_like(U)
            pts[np.arange(len(U)), j] = np.sign(U[np.arange(len(U)), j])
            return h, pts
        q = self.p / (self.p - 1)
        hq = np.sum(absU ** q, axis=1) ** (1 / q)
        pts = np.sign(U) * (absU / hq[:, None]) ** (q - 1)
        return hq, pts

    def radial_batch(self, U):
        U = np.atleast_2d(U)
        return 1.0 / np.sum(np.abs(U) ** self.p, axis=1) ** (1 / self.p)

    def normal_at_batch(self, X):
        X = np.atleast_2d(X)
        if self.p == 1.0:
            s = np.where(X == 0.0, 1.0, np.sign(X))
            return s / np.sqrt(self.dim)
        return unit_rows(np.sign(X) * np.abs(X) ** (self.p - 1))

    @property
    def bounding_radius(self):
        return float(max(1.0, self.dim ** (0.5 - 1 / self.p)))


class Cube(ConvexBody):
    """The cube [-1, 1]^d."""

    def __init__(self, dim):
        self.dim = int(dim)

    def contains_batch(self, X, tol=0.0):
        return np.max(np.abs(np.atleast_2d(X)), axis=1) <= 1 + tol

    def support_batch(self, U):
        U = np.atleast_2d(U)
        if np.any(np.all(U == 0, axis=1)):
            raise ValueError("support direction must be nonzero")
        pts = np.where(U < 0, -1.0, 1.0)
        return np.sum(np.abs(U), axis=1), pts

    def radial_batch(self, U):
        return 1.0 / np.max(np.abs(np.atleast_2d(U)), axis=1)

    def normal_at_batch(self, X):
        X = np.atleast_2d(X)
        j = np.argmax(np.abs(X), axis=1)
        out = np.zeros_like(X)
        rows = np.arange(len(X))
        out[rows, j] = np.where(X[rows, j] < 0, -1.0, 1.0)
        return out

    def bounding_box(self):
        r = np.ones(self.dim)
        return -r, r


class Polytope(ConvexBody):
    """Bounded polytope holding both vertex and facet representations."""

    def __init__(self, vertices, normals, offsets):
        self.vertices = np.asarray(vertices, dtype=float)
        A = np.asarray(normals, dtype=float)
        b = np.asarray(offsets, dtype=float)
        scale = np.linalg.norm(A, axis=1)
        if np.any(scale == 0):
            raise InvalidBodyError("zero facet normal")
        self.A = A / scale[:, None]
        self.b = b / scale
        self.dim = self.vertices.shape[1]
        self.origin_interior = bool(np.all(self.b > 0))

    @classmethod
    def from_vertices(cls, points):
        points = np.asarray(points, dtype=float)
        if points.ndim != 2 or len(points) < points.shape[1] + 1:
            raise InvalidBodyError("polytope_v needs at least d+1 points")
        d = points.shape[1]
        if d == 1:
            lo, hi = points.min(), points.max()
            if hi <= lo:
                raise InvalidBodyError("degenerate interval")
            return cls([[lo], [hi]], [[1.0], [-1.0]], [hi, -lo])
        from scipy.spatial import ConvexHull
        try:
            hull = ConvexHull(points)
        except Exception as e:
            raise InvalidBodyError(f"degenerate vertex set: {e}") from e
        A = hull.equations[:, :-1]
        b = -hull.equations[:, -1]
        return cls(points[np.unique(hull.vertices)], A, b)

    @classmethod
    def from_halfspaces(cls, normals, offsets, interior_point=None):
        A = np.asarray(normals, dtype=float)
        b = np.asarray(offsets, dtype=float)
        d = A.shape[1]
        if d == 1:
            pos = A[:, 0] > 0
            neg = A[:, 0] < 0
            if not (pos.any() and neg.any()):
                raise InvalidBodyError("unbounded interval")
            hi = np.min(b[pos] / A[pos, 0])
            lo = np.max(b[neg] / A[neg, 0])
            if hi <= lo:
                raise InvalidBodyError("empty interval")
            return cls([[lo], [hi]], A, b)
        from scipy.spatial import HalfspaceIntersection
        if interior_point is None:
            interior_point = _chebyshev_center(A, b)
        try:
            hs = HalfspaceIntersection(np.c_[A, -b], np.asarray(interior_point, float))
        except Exception as e:
            raise InvalidBodyError(f"halfspace intersection failed: {e}") from e
        verts = hs.intersections
        if not np.all(np.isfinite(verts)):
            raise InvalidBodyError("polytope_h describes an unbounded set")
        return cls(verts, A, b)

    def contains_batch(self, X, tol=0.0):
        X = np.atleast_2d(X)
        return np.all(X @ self.A.T <= self.b + tol, axis=1)

    def support_batch(self, U):
        U = np.atleast_2d(U)
        if np.any(np.all(U == 0, axis=1)):
            raise ValueError("support direction must be nonzero")
        prods = U @ self.vertices.T
        j = np.argmax(prods, axis=1)          # lowest index among maximizers
        return prods[np.arange(len(U)), j], self.vertices[j]

    def radial_batch(self, U):
        U = np.atleast_2d(U)
        den = U @ self.A.T
        with np.errstate(divide="ignore", invalid="ignore"):
            ratios = np.where(den > 0, self.b / den, np.inf)
        r = ratios.min(axis=1)
        if np.any(~np.isfinite(r)) or np.any(r <= 0):
            raise InvalidBodyError("origin not interior: radial <= 0 along some direction")
        return r

    def normal_at_batch(self, X):
        X = np.atleast_2d(X)
        slack = self.b - X @ self.A.T
        return self.A[np.argmin(slack, axis=1)]

    def boundary_pairs_mixed(self, U, rng=None):
        """Adds a ridge stream: boundary pairs on codimension-2 faces.

        A point near two facets is projected onto their intersection and
        paired with a random normal from the arc the facets span; such a
        pair is exactly supporting since the normal is a nonnegative
        combination of tight facet normals.  Without this stream the
        ridge fans of the lifted surface carry no candidate density (the
        support stream lands on vertices for almost every direction).
        """
        if rng is None:
            return super().boundary_pairs_mixed(U)
        U = unit_rows(U)
        k = len(U) // 3
        X1, NU1 = self.boundary_batch(U[:k])
        r = self.radial_batch(U[k:])
        Z = r[:, None] * U[k:]
        NZ = self.normal_at_batch(Z)
        half = len(Z) // 2
        Xs, NUs = self._snap_to_ridges(Z[half:], rng)
        return (np.vstack([X1, Z[:half], Xs]),
                np.vstack([NU1, NZ[:half], NUs]))

    def _snap_to_ridges(self, Z, rng, tol=0.1):
        Z = np.atleast_2d(Z)
        out_x = Z.copy()
        out_nu = self.normal_at_batch(Z)
        slack = self.b - Z @ self.A.T
        tight = slack <= tol
        cand = np.flatnonzero(tight.sum(axis=1) >= 2)
        if not len(cand):
            return out_x, out_nu
        # pick two random tight facets per point via random keys
        keys = np.where(tight[cand], rng.random((len(cand), len(self.b))), np.inf)
        two = np.argpartition(keys, 1, axis=1)[:, :2]
        a1 = self.A[two[:, 0]]
        a2 = self.A[two[:, 1]]
        g = np.einsum("ij,ij->i", a1, a2)          # rows are unit normals
        det = 1.0 - g * g
        ok = det > 1e-12
        r1 = self.b[two[:, 0]] - np.einsum("ij,ij->i", a1, Z[cand])
        r2 = self.b[two[:, 1]] - np.einsum("ij,ij->i", a2, Z[cand])
        with np.errstate(divide="ignore", invalid="ignore"):
            c1 = (r1 - g * r2) / det
            c2 = (r2 - g * r1) / det
        xs = Z[cand] + c1[:, None] * a1 + c2[:, None] * a2
        ok &= self.contains_batch(xs, 1e-9)
        t = rng.random(len(cand))
        idx = cand[ok]
        out_x[idx] = xs[ok]
        out_nu[idx] = unit_rows(t[ok, None] * a1[ok] + (1.0 - t[ok, None]) * a2[ok])
        return out_x, out_nu


def _chebyshev_center(A, b):
    """Interior point of {Ax <= b} via the largest inscribed ball (LP)."""
    from scipy.optimize import linprog
    d = A.shape[1]
    norms = np.linalg.norm(A, axis=1)
    c = np.zeros(d + 1)
    c[-1] = -1.0
    res = linprog(c, A_ub=np.c_[A, norms], b_ub=b,
                  bounds=[(None, None)] * d + [(0, None)], method="highs")
    if not res.success or res.x[-1] <= 0:
        raise InvalidBodyError("could not find an interior point")
    return res.x[:d]


class LinearImage(ConvexBody):
    """T . inner + t for a nonsingular matrix T."""

    def __init__(self, inner, matrix, translation=None):
        self.inner = inner
        T = np.asarray(matrix, dtype=float)
        self.T = T
        try:
            self.T_inv = np.linalg.inv(T)
        except np.linalg.LinAlgError as e:
            raise InvalidBodyError("linear_image matrix must be nonsingular") from e
        self.t = (np.zeros(inner.dim) if translation is None
                  else np.asarray(translation, dtype=float))
        self.dim = inner.dim
        self._centered = bool(np.all(self.t == 0))
        self.origin_interior = inner.contains(self.T_inv @ (-self.t))

    def contains_batch(self, X, tol=0.0):
        X = np.atleast_2d(X)
        return self.inner.contains_batch((X - self.t) @ self.T_inv.T, tol)

    def support_batch(self, U):
        U = np.atleast_2d(U)
        h, pts = self.inner.support_batch(U @ self.T)
        return h + U @ self.t, pts @ self.T.T + self.t

    def radial_batch(self, U):
        if not self._centered:
            return _radial_bisect(self, np.atleast_2d(U))
        W = np.atleast_2d(U) @ self.T_inv.T
        wn = np.linalg.norm(W, axis=1)
        return self.inner.radial_batch(W / wn[:, None]) / wn

    def normal_at_batch(self, X):
        X = np.atleast_2d(X)
        inner_nu = self.inner.normal_at_batch((X - self.t) @ self.T_inv.T)
        return unit_rows(inner_nu @ self.T_inv)

    def boundary_pairs_mixed(self, U, rng=None):
        # supporting pairs transform covariantly, so delegate to the inner
        # body (preserving its ridge streams) and map them through
        W = unit_rows(np.atleast_2d(U) @ self.T)
        X, NU = self.inner.boundary_pairs_mixed(W, rng)
        return X @ self.T.T + self.t, unit_rows(NU @ self.T_inv)

    @property
    def bounding_radius(self):
        op = np.linalg.svd(self.T, compute_uv=False)[0]
        return float(np.linalg.norm(self.t) + op * self.inner.bounding_radius)


class PolarBody(ConvexBody):
    """Polar K* = {y : <x,y> <= 1 for all x in K} of a body with 0 interior."""

    def __init__(self, base):
        if not base.origin_interior:
            raise InvalidBodyError("polar body needs the origin interior to K")
        self.base = base
        self.dim = base.dim

    def contains_batch(self, Y, tol=0.0):
        Y = np.atleast_2d(Y)
        out = np.ones(len(Y), dtype=bool)
        nz = np.linalg.norm(Y, axis=1) > 0
        if np.any(nz):
            if hasattr(self.base, "support_leq"):
                # bodies with numeric support expose a certified level test
                out[nz] = self.base.support_leq(Y[nz], 1.0, tol)
            else:
                h, _ = self.base.support_batch(Y[nz])
                out[nz] = h <= 1 + tol
        return out

    def support_batch(self, U):
        U = np.atleast_2d(U)
        un = np.linalg.norm(U, axis=1)
        if np.any(un == 0):
            raise ValueError("support direction must be nonzero")
        Uh = U / un[:, None]
        r = self.base.radial_batch(Uh)
        Z = r[:, None] * Uh                       # radial boundary point of K
        NU = self.base.normal_at_batch(Z)          # outer normal of K there
        pts = NU / np.einsum("ij,ij->i", Z, NU)[:, None]   # star map
        return un / r, pts

    def radial_batch(self, U):
        h, _ = self.base.support_batch(np.atleast_2d(U))
        return 1.0 / h

    def normal_at_batch(self, Y):
        _, pts = self.base.support_batch(np.atleast_2d(Y))
        return unit_rows(pts)

    def bounding_box(self):
        eye = np.eye(self.dim)
        hi = self.base.gauge_batch(eye)
        lo = self.base.gauge_batch(-eye)
        return -lo, hi


def polar(body):
    """Polar body oracle; polar(polar(K)) agrees with K on samples."""
    if isinstance(body, PolarBody):
        return body.base
    return PolarBody(body)


# ---------------------------------------------------------------------------
# BodySpec JSON
# ---------------------------------------------------------------------------

def _simplex_vertices(d):
    """Regular d-simplex centered at the origin, circumradius 1."""
    n = d + 1
    verts = np.eye(n) - np.full((n, n), 1.0 / n)
    # orthonormal basis of the hyperplane sum(x) = 0
    basis = np.linalg.svd(verts, full_matrices=False)[2][:d]
    V = verts @ basis.T
    return V / np.linalg.norm(V, axis=1)[:, None]


def make_body(spec):
    """Build a ConvexBody oracle from a BodySpec dict (see README schema)."""
    if not isinstance(spec, dict) or "kind" not in spec:
        raise InvalidBodyError("body spec must be a dict with a 'kind'")
    kind = spec["kind"]
    if kind == "ball":
        return Ball(spec["dim"], spec.get("radius", 1.0))
    if kind == "ellipsoid":
        return Ellipsoid(spec["matrix"])
    if kind == "lp_ball":
        return LpBall(spec["dim"], spec["p"])
    if kind == "cube":
        return Cube(spec["dim"])
    if kind == "simplex":
        return Polytope.from_vertices(_simplex_vertices(spec["dim"]))
    if kind == "polytope_h":
        return Polytope.from_halfspaces(spec["normals"], spec["offsets"])
    if kind == "polytope_v":
        return Polytope.from_vertices(spec["points"])
    if kind == "linear_image":
        return LinearImage(make_body(spec["inner"]), spec["matrix"],
                           spec.get("translation"))
    raise InvalidBodyError(f"unknown body kind {kind!r}")


def load_body(path):
    with open(path) as f:
        return make_body(json.load(f))
