"""Standard position: recenter at the center of mass, then whiten K ∩ -K.

The whitening map sends the minimum-volume origin-centered ellipsoid of
sampled boundary points of L = K ∩ -K to the unit ball; if the inscribed
unit ball check then fails (skinny asymmetric bodies), the map is rescaled
so it passes.  The result is verified to satisfy B ⊂ K' ⊂ d^2 B.
"""

from dataclasses import dataclass

import numpy as np

from . import capmeasure
from .bodies import (Ball, ConvexBody, Cube, Ellipsoid, InvalidBodyError,
                     LinearImage, LpBall, sphere_points)


class StandardizationError(RuntimeError):
    def __init__(self, msg, inner=None, outer=None):
        super().__init__(msg)
        self.inner = inner
        self.outer = outer


def center_of_mass(body, n_samples, rng):
    """Monte Carlo centroid estimate with per-coordinate standard errors."""
    if n_samples < 1000:
        raise ValueError("need at least 10^3 samples for a usable centroid")
    X = capmeasure.uniform_in_body(body, n_samples, rng)
    return X.mean(axis=0), X.std(axis=0, ddof=1) / np.sqrt(len(X))


def exact_center(body):
    """Closed-form centroid for symmetric kinds, None when unavailable."""
    if isinstance(body, (Ball, Cube, LpBall)):
        return np.zeros(body.dim)
    if isinstance(body, Ellipsoid):
        return np.zeros(body.dim)
    if isinstance(body, LinearImage):
        inner = exact_center(body.inner)
        if inner is not None:
            return body.T @ inner + body.t
    return None


def mvee(points, tol=1e-3, max_iter=200000):
    """Minimum-volume origin-centered ellipsoid {x : x^T M x <= 1} of points.

    Khachiyan-style multiplicative weights for the central problem; the
    returned form is optimal within relative volume factor (1 + tol).
    """
    P = np.asarray(points, dtype=float)
    n, d = P.shape
    if n < d:
        raise InvalidBodyError("mvee needs at least d points")
    u = np.full(n, 1.0 / n)
    X = P.T @ (u[:, None] * P)
    for _ in range(max_iter):
        try:
            Xi = np.linalg.inv(X)
        except np.linalg.LinAlgError as e:
            raise InvalidBodyError("rank-deficient point set in mvee") from e
        g = np.einsum("ij,jk,ik->i", P, Xi, P)
        j = int(np.argmax(g))
        gmax = g[j]
        if gmax <= d * (1.0 + tol):
            break
        beta = (gmax - d) / (d * (gmax - 1.0))
        u *= 1.0 - beta
        u[j] += beta
        X = (1.0 - beta) * X + beta * np.outer(P[j], P[j])
    else:
        raise InvalidBodyError("mvee iteration did not converge")
    if np.linalg.matrix_rank(X, tol=1e-12 * np.trace(X)) < d:
        raise InvalidBodyError("rank-deficient point set in mvee")
    return np.linalg.inv(X) / d


@dataclass(frozen=True)
class StandardizedBody:
    """transformed = matrix @ (K - translation); checks are measured radii."""
    body: ConvexBody
    matrix: np.ndarray
    translation: np.ndarray
    inner_radius_check: float
    outer_radius_check: float
    center_se: np.ndarray

    def map_points(self, X):
        return (np.atleast_2d(X) - self.translation) @ self.matrix.T

    def unmap_points(self, Y):
        return np.linalg.solve(self.matrix, np.atleast_2d(Y).T).T + self.translation

    def map_directions(self, U):
        """Support directions of the original body matching transformed ones."""
        W = np.atleast_2d(U) @ self.matrix
        return W / np.linalg.norm(W, axis=1, keepdims=True)


def standardize(body, rng, n_boundary_samples=None, center=None,
                n_center_samples=100000, mvee_tol=1e-3, verify_dirs=None,
                inner_slack=0.02):
    """Bring a body into the sandwich B ⊂ K' ⊂ d^2 B; verified, not assumed."""
    d = body.dim
    if n_boundary_samples is None:
        n_boundary_samples = 200 * d * d
    if verify_dirs is None:
        verify_dirs = max(2000, 200 * d * d)
    se = np.zeros(d)
    if center is None:
        center = exact_center(body)
        if center is None:
            center, se = center_of_mass(body, n_center_samples, rng)
    center = np.asarray(center, dtype=float)

    recentered = LinearImage(body, np.eye(d), -center)
    if not recentered.contains(np.zeros(d)):
        raise StandardizationError("origin not interior after recentering")

    # boundary of L = K ∩ -K along sampled directions
    V = sphere_points(rng, n_boundary_samples, d)
    rad_l = np.minimum(recentered.radial_batch(V), recentered.radial_batch(-V))
    pts = rad_l[:, None] * V
    M = mvee(np.vstack([pts, -pts]), tol=mvee_tol)

    evals, evecs = np.linalg.eigh(M)
    if np.any(evals <= 0):
        raise StandardizationError("mvee form not positive definite")
    W = (evecs * np.sqrt(evals)) @ evecs.T        # symmetric square root

    probe = np.vstack([sphere_points(rng, verify_dirs, d), np.eye(d), -np.eye(d)])

    def checks(mat):
        transformed = LinearImage(body, mat, -mat @ center)
        r = transformed.radial_batch(probe)
        return transformed, float(r.min()), float(r.max())

    transformed, inner, outer = checks(W)
    if inner < 1.0:
        # inscribed-ball shortfall: rescale so the probe-net inner radius is 1
        W = W / inner
        transformed, inner, outer = checks(W)
    if inner < 1.0 - inner_slack or outer > d * d:
        raise StandardizationError(
            f"standardization failed: measured radii [{inner:.4f}, {outer:.4f}] "
            f"outside [1 - {inner_slack}, d^2 = {d * d}]",
            inner=inner, outer=outer)
    return StandardizedBody(body=transformed, matrix=W, translation=center,
                            inner_radius_check=inner, outer_radius_check=outer,
                            center_se=se)
