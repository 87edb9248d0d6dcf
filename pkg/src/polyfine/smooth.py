"""Radial smoothing map and the uniformly 2-convex surrogate body.

For a scale parameter delta the map x -> x * phi(delta, |x|), with
phi(delta, r) the positive root of  phi + delta r^2 phi^2 = 1, sends every
half-space {<x, nu> <= h} into a ball of radius sqrt(1/(4 delta^2 h^2) +
1/delta) centered at -nu/(2 delta h).  Applied to a body in standard
position it produces a body that can be touched from outside by a ball of
radius 1/delta at every boundary point, while staying within a
(1 - delta d^4) factor of the original.  Approximating the smoothed body to
eps/2 then yields an eps-approximation of the original (valid whenever
delta < 1/(4 d^4)).
"""

from dataclasses import dataclass

import numpy as np

from .bodies import ConvexBody, unit_rows, sphere_points


@dataclass(frozen=True)
class SmoothParams:
    dim: int
    delta: float = None
    R: float = None

    def __post_init__(self):
        d = self.dim
        if self.delta is None:
            object.__setattr__(self, "delta", 1.0 / (4 * d ** 5))
        if not 0 < self.delta < 0.5:
            raise ValueError("delta must lie in (0, 1/2)")
        if self.R is None:
            object.__setattr__(self, "R", 1.0 / self.delta)


def phi(delta, r):
    """Positive root of phi + delta r^2 phi^2 = 1, in cancellation-free form."""
    r = np.asarray(r, dtype=float)
    return 2.0 / (1.0 + np.sqrt(1.0 + 4.0 * delta * r * r))


def phi_map(delta, x):
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        return x * phi(delta, np.linalg.norm(x))
    return x * phi(delta, np.linalg.norm(x, axis=1))[:, None]


def phi_inverse(delta, y):
    """Inverse map y -> y / (1 - delta |y|^2), defined for |y| < delta^{-1/2}."""
    y = np.asarray(y, dtype=float)
    s2 = np.sum(y * y, axis=-1, keepdims=y.ndim > 1)
    if np.any(delta * s2 >= 1.0):
        raise ValueError("point outside the image ball of radius delta^{-1/2}")
    return y / (1.0 - delta * s2)


@dataclass(frozen=True)
class HalfSpaceImage:
    nu: np.ndarray
    h: float
    center: np.ndarray
    radius: float


def halfspace_image(delta, nu, h):
    """Ball containing the image of the half-space {<x, nu> <= h}, h > 0."""
    if h <= 0:
        raise ValueError("half-space offset h must be positive")
    nu = np.asarray(nu, dtype=float)
    if abs(np.linalg.norm(nu) - 1.0) > 1e-9:
        raise ValueError("nu must be a unit vector")
    center = -nu / (2.0 * delta * h)
    radius = float(np.sqrt(1.0 / (4.0 * delta ** 2 * h ** 2) + 1.0 / delta))
    return HalfSpaceImage(nu=nu, h=float(h), center=center, radius=radius)


def transfer_epsilon(eps, delta=None, dim=None):
    """Approximation target for the smoothed body: eps/2.

    An eps/2-approximation of the smoothed body pulls back to an
    eps-approximation of the original provided delta < 1/(4 d^4).
    """
    if not 0 < eps < 0.5:
        raise ValueError("eps must lie in (0, 1/2)")
    if delta is not None and dim is not None and delta >= 1.0 / (4 * dim ** 4):
        raise ValueError("transfer requires delta < 1/(4 d^4)")
    return eps / 2.0


class SmoothedBody(ConvexBody):
    """Image of a standardized body under the radial smoothing map.

    Membership and radial queries are exact via the closed-form inverse.
    The support function has no closed form; it is maximized by a
    multi-start pattern search over the radial parameterization of the
    boundary, warm-started from a cached sample of pushed-forward boundary
    pairs.  The same cache gives two-sided support bounds (inner: cached
    boundary points, outer: enclosing balls of cached half-spaces) so that
    most polar membership tests never reach the optimizer.
    """

    def __init__(self, base, params, cache_size=None, support_tol=1e-8):
        if not base.origin_interior:
            raise ValueError("smoothing requires the origin inside the body")
        self.base = base
        self.params = params
        self.delta = params.delta
        self.R = params.R
        self.dim = base.dim
        self.support_tol = support_tol
        self._cache_size = cache_size or (2048 if base.dim <= 2 else 8192)
        self._cache = None

    # -- exact queries ------------------------------------------------------

    def contains_batch(self, Y, tol=0.0):
        Y = np.atleast_2d(Y)
        s2 = np.sum(Y * Y, axis=1)
        ok = self.delta * s2 < 1.0
        out = np.zeros(len(Y), dtype=bool)
        if np.any(ok):
            out[ok] = self.base.contains_batch(
                Y[ok] / (1.0 - self.delta * s2[ok])[:, None], tol)
        return out

    def radial_batch(self, U):
        r = self.base.radial_batch(np.atleast_2d(U))
        return r * phi(self.delta, r)

    def push_pairs(self, X, NU):
        """Map boundary pairs (x, nu) of the base body to pairs of the image."""
        H = np.einsum("ij,ij->i", X, NU)
        P = phi_map(self.delta, X)
        N2 = unit_rows(P + NU / (2.0 * self.delta * H)[:, None])
        return P, N2

    def boundary_batch(self, U):
        X, NU = self.base.boundary_batch(U)
        return self.push_pairs(X, NU)

    def boundary_pairs_mixed(self, U, rng=None):
        """Pushforward of the base body's mixed boundary-pair streams.

        Any supporting pair of the base maps to a supporting pair of the
        image (the touching-ball construction only needs a supporting
        half-space), so the base streams' coverage carries over.
        """
        X, NU = self.base.boundary_pairs_mixed(U, rng)
        return self.push_pairs(X, NU)

    def normal_at_batch(self, Y):
        Y = np.atleast_2d(Y)
        X = phi_inverse(self.delta, Y)
        NU = self.base.normal_at_batch(X)
        H = np.einsum("ij,ij->i", X, NU)
        return unit_rows(Y + NU / (2.0 * self.delta * H)[:, None])

    # -- support via pattern search ------------------------------------------

    def _ensure_cache(self):
        if self._cache is not None:
            return self._cache
        rng = np.random.default_rng(0x5EED)
        q = self._cache_size
        P, NU2 = self.boundary_pairs_mixed(sphere_points(rng, q, self.dim))
        # enclosing balls come from supporting half-spaces of the base body
        U = sphere_points(rng, q, self.dim)
        Xs, NUs = self.base.boundary_batch(U)
        r = self.base.radial_batch(U)
        Z = r[:, None] * U
        NZ = self.base.normal_at_batch(Z)
        Xb = np.vstack([Xs, Z])
        NUb = np.vstack([NUs, NZ])
        H = np.einsum("ij,ij->i", Xb, NUb)
        keep = H > 1e-12
        Xb, NUb, H = Xb[keep], NUb[keep], H[keep]
        centers = -NUb / (2.0 * self.delta * H)[:, None]
        radii = np.sqrt(1.0 / (4.0 * self.delta ** 2 * H ** 2) + 1.0 / self.delta)
        self._cache = {
            "points": P,                       # on the boundary of the image
            "dirs": unit_rows(P),
            "centers": centers,
            "radii": radii,
            "center_norms": np.linalg.norm(centers, axis=1),
        }
        return self._cache

    def _eval_dirs(self, V, U):
        """g(v) = radial(v) <v, u> for row-paired unit v and query u."""
        return self.radial_batch(V) * np.einsum("ij,ij->i", V, U)

    def _pattern_search(self, U, starts, step_tol=1e-6):
        """Maximize g over unit v for each query row; starts (m, s, d)."""
        m, s, d = starts.shape
        V = unit_rows(starts.reshape(m * s, d))
        Urep = np.repeat(U, s, axis=0)
        g = self._eval_dirs(V, Urep)
        step = np.full(m * s, 0.25)
        live = np.arange(m * s)
        for _ in range(200):
            if not len(live):
                break
            improved = np.zeros(len(live), dtype=bool)
            for k in range(d):
                for sign in (1.0, -1.0):
                    Vp = V[live].copy()
                    Vp[:, k] += sign * step[live]
                    Vp = unit_rows(Vp)
                    gp = self._eval_dirs(Vp, Urep[live])
                    better = gp > g[live] + 1e-15
                    if np.any(better):
                        rows = live[better]
                        V[rows] = Vp[better]
                        g[rows] = gp[better]
                        improved |= better
            stuck = live[~improved]
            step[stuck] *= 0.5
            live = live[step[live] > step_tol]
        g = g.reshape(m, s)
        V = V.reshape(m, s, d)
        best = np.argmax(g, axis=1)
        rows = np.arange(m)
        return g[rows, best], V[rows, best]

    def support_batch(self, U):
        U = np.atleast_2d(np.asarray(U, dtype=float))
        un = np.linalg.norm(U, axis=1)
        if np.any(un == 0):
            raise ValueError("support direction must be nonzero")
        Uh = U / un[:, None]
        cache = self._ensure_cache()
        n_starts = min(4 * self.dim, len(cache["points"]))
        scores = Uh @ cache["points"].T
        top = np.argpartition(-scores, n_starts - 1, axis=1)[:, :n_starts]
        starts = np.concatenate([cache["dirs"][top], Uh[:, None, :]], axis=1)
        h, vstar = self._pattern_search(Uh, starts)
        r = self.base.radial_batch(vstar)
        pts = (r * phi(self.delta, r))[:, None] * vstar
        return h * un, pts

    def support_leq(self, Y, level=1.0, slack=1e-6):
        """Certified test h(y) <= level, resolving via cached bounds first."""
        Y = np.atleast_2d(Y)
        cache = self._ensure_cache()
        lb = np.full(len(Y), -np.inf)
        ub = np.full(len(Y), np.inf)
        yn = np.linalg.norm(Y, axis=1)
        chunk = max(1, (1 << 22) // max(len(cache["points"]), 1))
        for i0 in range(0, len(Y), chunk):
            i1 = min(i0 + chunk, len(Y))
            S = Y[i0:i1] @ cache["points"].T
            lb[i0:i1] = S.max(axis=1)
            T = Y[i0:i1] @ cache["centers"].T + yn[i0:i1, None] * cache["radii"]
            ub[i0:i1] = T.min(axis=1)
        out = ub <= level + slack
        out[lb > level + slack] = False
        hard = (lb <= level + slack) & (ub > level + slack)
        if np.any(hard):
            h, _ = self.support_batch(Y[hard])
            out[hard] = h <= level + slack
        return out

    @property
    def bounding_radius(self):
        r = self.base.bounding_radius
        return float(r * phi(self.delta, r) * (1 + 1e-12))

    def bounding_box(self):
        lo, hi = self.base.bounding_box()
        # the image sits inside the base body, whose box this is
        return lo, hi


def smooth_body(body, params=None):
    """Oracle for the smoothed image of a standardized body."""
    if params is None:
        params = SmoothParams(dim=body.dim)
    return SmoothedBody(body, params)
