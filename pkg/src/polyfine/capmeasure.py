"""The boundary measure mu: half cone-volume of K, half pulled back from K*.

mu(S) = (vol(C(S))/vol(K) + vol(C(S*))/vol(K*)) / 2, where C(S) is the cone
over a boundary set S and S* its image on the polar boundary under the star
map x -> nu_x / <x, nu_x>.  Sampling realizes it exactly as a fair mixture
of two radial-projection pushforwards, so cap masses are estimated without
ever computing cone volumes.  Uniform-in-body sampling and Monte Carlo
volume live here too.
"""

from dataclasses import dataclass

import numpy as np

from .bodies import BoundaryPoint, polar, unit_rows


class SamplingError(RuntimeError):
    pass


def worker_streams(seed, n_workers):
    """Independent, reproducible per-worker generators for a master seed."""
    return [np.random.default_rng(np.random.SeedSequence([int(seed), i]))
            for i in range(n_workers)]


def uniform_in_body(body, n, rng, method="auto", burn_in=None, thinning=None,
                    contains_tol=0.0):
    """n independent-ish uniform points in the body.

    Rejection from the axis-aligned bounding box for d <= 6; hit-and-run
    with burn-in 50 d and thinning d beyond that (or on request).
    """
    n = int(n)
    if method == "auto":
        method = "rejection" if body.dim <= 6 else "hit-and-run"
    if method == "rejection":
        return _rejection_sample(body, n, rng, contains_tol)
    return _hit_and_run(body, n, rng, burn_in, thinning, contains_tol)


def _rejection_sample(body, n, rng, tol):
    lo, hi = body.bounding_box()
    out = np.empty((n, body.dim))
    got = 0
    tried = 0
    chunk = max(2 * n, 1024)
    while got < n:
        X = rng.uniform(lo, hi, size=(chunk, body.dim))
        keep = X[body.contains_batch(X, tol)]
        take = min(len(keep), n - got)
        out[got:got + take] = keep[:take]
        got += take
        tried += chunk
        if tried >= 1e7 and got / tried < 1e-6:
            raise SamplingError(
                f"rejection acceptance {got / tried:.2e} < 1e-6; "
                "bounding box looks far too large for this body")
        chunk = min(4 * chunk, 1 << 20)
    return out


def _hit_and_run(body, n, rng, burn_in, thinning, tol):
    d = body.dim
    burn_in = 50 * d if burn_in is None else burn_in
    thinning = d if thinning is None else thinning
    if not body.contains(np.zeros(d)):
        raise SamplingError("hit-and-run needs the origin inside the body")
    rad = body.bounding_radius
    z = np.zeros(d)
    out = np.empty((n, d))
    steps = burn_in + n * thinning
    kept = 0
    for step in range(steps):
        u = unit_rows(rng.standard_normal(d))[0]
        t_hi = _chord_end(body, z, u, rad, tol)
        t_lo = -_chord_end(body, z, -u, rad, tol)
        z = z + rng.uniform(t_lo, t_hi) * u
        if step >= burn_in and (step - burn_in) % thinning == thinning - 1:
            out[kept] = z
            kept += 1
    return out[:kept] if kept < n else out


def _chord_end(body, z, u, rad, tol, iters=60):
    lo, hi = 0.0, rad + np.linalg.norm(z) + 1.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if body.contains(z + mid * u, tol):
            lo = mid
        else:
            hi = mid
    return lo


def radial_project(body, X):
    """Project points along rays from the origin onto the boundary.

    Pushes the uniform law on the body forward to the cone-volume measure
    on the boundary.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    norms = np.linalg.norm(X, axis=1)
    if np.any(norms == 0):
        raise ValueError("cannot radially project the origin")
    Uh = X / norms[:, None]
    return body.radial_batch(Uh)[:, None] * Uh


def star_map(body, bp):
    """x -> nu / <x, nu>, the boundary-to-polar-boundary bijection."""
    x = np.asarray(bp.x, dtype=float)
    nu = np.asarray(bp.nu, dtype=float)
    s = float(x @ nu)
    if s <= 0:
        raise ValueError("star map needs <x, nu> > 0 (body not standardized?)")
    return nu / s


def star_map_batch(X, NU):
    S = np.einsum("ij,ij->i", X, NU)
    if np.any(S <= 0):
        raise ValueError("star map needs <x, nu> > 0 (body not standardized?)")
    return NU / S[:, None]


def star_inverse(body, y):
    """Inverse star map: the support point of K in direction y, normal y/|y|."""
    y = np.asarray(y, dtype=float)
    _, pt = body.support_batch(y[None, :])
    return BoundaryPoint(pt[0], unit_rows(y)[0])


@dataclass(frozen=True)
class Cap:
    """Boundary cap S(x, eps) = {y on bd K : <y, nu> >= (1-eps) <x, nu>}."""
    apex: BoundaryPoint
    eps: float

    @property
    def threshold(self):
        return (1.0 - self.eps) * float(self.apex.x @ self.apex.nu)

    def contains_points(self, Y):
        return np.atleast_2d(Y) @ self.apex.nu >= self.threshold


class CapSampler:
    """Draws boundary points of K with law mu.

    Fair coin: heads project a uniform point of K radially to the boundary;
    tails project a uniform point of the polar body to its boundary and pull
    back through the star map (one support evaluation of K per point).
    """

    def __init__(self, body, method="auto", burn_in=None, thinning=None,
                 polar_contains_tol=1e-6):
        self.body = body
        self.polar = polar(body)
        self.method = method
        self.burn_in = burn_in
        self.thinning = thinning
        self.polar_contains_tol = polar_contains_tol
        self.samples_drawn = 0

    def sample(self, n, rng):
        """Returns (points, normals) of n mu-distributed boundary points."""
        n = int(n)
        d = self.body.dim
        heads = int(rng.binomial(n, 0.5))
        X = np.empty((n, d))
        NU = np.empty((n, d))
        if heads:
            Z = uniform_in_body(self.body, heads, rng, self.method,
                                self.burn_in, self.thinning)
            P = radial_project(self.body, Z)
            X[:heads] = P
            NU[:heads] = self.body.normal_at_batch(P)
        tails = n - heads
        if tails:
            W = uniform_in_body(self.polar, tails, rng, self.method,
                                self.burn_in, self.thinning,
                                contains_tol=self.polar_contains_tol)
            dirs = unit_rows(W)
            h, pts = self.body.support_batch(dirs)
            X[heads:] = pts
            NU[heads:] = dirs
        self.samples_drawn += n
        return X, NU


def sample_mu(sampler, rng, n=1):
    return sampler.sample(n, rng)


def mu_cap_estimate(sampler, cap, n, rng):
    """Monte Carlo estimate of mu(cap) with its binomial standard error."""
    X, _ = sampler.sample(n, rng)
    hits = int(np.count_nonzero(cap.contains_points(X)))
    est = hits / n
    se = float(np.sqrt(est * (1.0 - est) / n))
    return est, se


def cap_mass_table(sampler, apexes, eps_list, n, rng):
    """Shared-sample estimates of mu(S(x, eps)) for many apexes and eps.

    Returns an array of shape (len(eps_list), len(apexes)) of estimates and
    the matching standard errors.
    """
    X, _ = sampler.sample(n, rng)
    AX, ANU = apexes
    heights = X @ ANU.T                                  # (n, n_apex)
    base = np.einsum("ij,ij->i", AX, ANU)
    est = np.empty((len(eps_list), len(AX)))
    for k, eps in enumerate(eps_list):
        est[k] = (heights >= (1.0 - eps) * base).mean(axis=0)
    se = np.sqrt(est * (1.0 - est) / n)
    return est, se


def mc_volume(body, n, rng):
    """Bounding-box rejection estimate of the volume, with standard error."""
    n = int(n)
    lo, hi = body.bounding_box()
    box_vol = float(np.prod(hi - lo))
    hits = 0
    chunk = 1 << 18
    done = 0
    while done < n:
        m = min(chunk, n - done)
        X = rng.uniform(lo, hi, size=(m, body.dim))
        hits += int(np.count_nonzero(body.contains_batch(X)))
        done += m
    p = hits / n
    est = box_vol * p
    se = box_vol * float(np.sqrt(p * (1.0 - p) / n))
    return est, se
