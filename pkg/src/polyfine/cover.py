"""Random transversals of cap families and containment certification.

Rogers' construction: sample ceil(log(N theta) / theta) points from a
measure giving every cap mass >= theta, then patch each still-empty cap
with its own apex.  Certification is dual: (1 - eps) K lies in conv(Y) iff
max_y <y, u> >= (1 - eps) h_K(u) for every direction u, which is probed on
random plus structured directions and, for the finite net, checked exactly.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .bodies import sphere_points, unit_rows


class CertificateError(RuntimeError):
    pass


class CapFamily:
    """Caps S(x_j, eps) of a boundary cap family, vectorized over rows.

    Rows handed to hit tests are (x, nu) pairs concatenated; the x part is
    what the half-space tests see.
    """

    def __init__(self, apex_x, apex_nu, eps):
        self.apex_x = np.asarray(apex_x, dtype=float)
        self.apex_nu = np.asarray(apex_nu, dtype=float)
        self.eps = float(eps)
        self.thresholds = (1.0 - eps) * np.einsum(
            "ij,ij->i", self.apex_x, self.apex_nu)

    @classmethod
    def from_net(cls, net, eps):
        return cls(net.x, net.nu, eps)

    @property
    def n_caps(self):
        return len(self.apex_x)

    @property
    def dim(self):
        return self.apex_x.shape[1]

    def _points_of(self, rows):
        return np.atleast_2d(rows)[:, : self.dim]

    def hit_counts(self, rows):
        return _kernels.cap_hit_counts(self._points_of(rows),
                                       self.apex_nu, self.thresholds)

    def hits_any(self, rows):
        return _kernels.point_hits_any(self._points_of(rows),
                                       self.apex_nu, self.thresholds)

    def apex_rows(self, idx):
        return np.hstack([self.apex_x[idx], self.apex_nu[idx]])


class IntervalFamily:
    """Synthetic model: subintervals of [0, 1] under the uniform measure."""

    def __init__(self, starts, length):
        self.starts = np.asarray(starts, dtype=float)
        self.length = float(length)

    @property
    def n_caps(self):
        return len(self.starts)

    def hit_counts(self, rows):
        p = np.atleast_2d(rows)[:, 0]
        inside = (p[:, None] >= self.starts) & (p[:, None] <= self.starts + self.length)
        return inside.sum(axis=0)

    def hits_any(self, rows):
        p = np.atleast_2d(rows)[:, 0]
        return ((p[:, None] >= self.starts) &
                (p[:, None] <= self.starts + self.length)).any(axis=1)

    def apex_rows(self, idx):
        return (self.starts[idx] + 0.5 * self.length)[:, None]

    def sample(self, rng, m):
        return rng.uniform(0.0, 1.0, size=(m, 1))


@dataclass
class TransversalResult:
    points: np.ndarray          # rows as handed back by the sampler / apexes
    sampled_count: int
    retained_count: int
    patched_count: int
    theta_used: float
    per_cap_hits: np.ndarray = field(repr=False)

    @property
    def size(self):
        return len(self.points)


def rogers_sample_count(n_caps, theta):
    """ceil(theta^{-1} log(N theta)), zero when N theta <= 1."""
    nt = n_caps * theta
    if nt <= 1.0:
        return 0
    return int(math.ceil(math.log(nt) / theta))


def rogers_cover(caps, sample_fn, theta, rng):
    """Sample M = ceil(theta^{-1} log(N theta)) points, patch empty caps.

    Samples that land in no cap are dropped; every cap ends up hit, so the
    expected total size is at most M + N e^{-theta M}.
    """
    if not 0 < theta <= 1:
        raise ValueError("theta must lie in (0, 1]")
    n = caps.n_caps
    if n == 0:
        raise ValueError("cap family is empty")
    m = rogers_sample_count(n, theta)
    rows = sample_fn(rng, m)
    if m:
        counts = caps.hit_counts(rows)
        keep = caps.hits_any(rows)
        retained = rows[keep]
    else:
        counts = np.zeros(n, dtype=np.int64)
        retained = rows
    uncovered = np.flatnonzero(counts == 0)
    patch = caps.apex_rows(uncovered)
    if len(uncovered):
        counts = counts + caps.hit_counts(patch)
    points = np.vstack([retained, patch]) if len(retained) or len(patch) else retained
    return TransversalResult(points=points, sampled_count=m,
                             retained_count=len(retained),
                             patched_count=len(uncovered),
                             theta_used=theta, per_cap_hits=counts)


def estimate_theta(caps, sample_fn, rng, n_per_cap=1000, safety=0.5):
    """Lower confidence bound on the min cap mass, scaled by a safety factor.

    One shared batch of draws scores every cap; per-cap bounds are
    estimate - 3 SE, floored at 1/n_per_cap.
    """
    if n_per_cap < 1000:
        raise ValueError("need n_per_cap >= 10^3")
    rows = sample_fn(rng, n_per_cap)
    est = caps.hit_counts(rows) / n_per_cap
    se = np.sqrt(est * (1.0 - est) / n_per_cap)
    lb = np.maximum(est - 3.0 * se, 1.0 / n_per_cap)
    return float(safety * lb.min())


def adaptive_cover(caps, sample_fn, rng, target_uncovered=0.05, round_cap=64):
    """Doubling fallback when theta is unknown.

    Rounds of sampling, starting at 2 sqrt(N) draws and doubling, until at
    most 5% of caps are uncovered or 64 N total samples are reached; the
    rest is patched with apexes.
    """
    n = caps.n_caps
    if n == 0:
        raise ValueError("cap family is empty")
    counts = np.zeros(n, dtype=np.int64)
    kept = []
    total = 0
    m_round = max(int(math.ceil(2.0 * math.sqrt(n))), 1)
    while total < round_cap * n:
        m_round = min(m_round, round_cap * n - total)
        rows = sample_fn(rng, m_round)
        counts = counts + caps.hit_counts(rows)
        kept.append(rows[caps.hits_any(rows)])
        total += m_round
        if np.count_nonzero(counts == 0) <= target_uncovered * n:
            break
        m_round *= 2
    uncovered = np.flatnonzero(counts == 0)
    patch = caps.apex_rows(uncovered)
    if len(uncovered):
        counts = counts + caps.hit_counts(patch)
    retained = np.vstack(kept) if kept else np.empty((0, patch.shape[1]))
    points = np.vstack([retained, patch])
    return TransversalResult(points=points, sampled_count=total,
                             retained_count=len(retained),
                             patched_count=len(uncovered),
                             theta_used=float("nan"), per_cap_hits=counts)


@dataclass
class Certificate:
    eps_target: float
    eps_achieved: float
    n_directions: int
    worst_direction: np.ndarray
    max_gauge_violation: float

    @property
    def ok(self):
        return self.eps_achieved <= self.eps_target + 1e-6


def achieved_epsilon(body, Y, n_directions, rng, eps_target=float("nan"),
                     y_normals=None, extra_normals=None, chunk=4096):
    """Probe-based certificate for (1 - eps) K ⊂ conv(Y) ⊂ K.

    eps_achieved = 1 - min over probed u of max_y <y,u> / h_K(u); probes are
    uniform directions plus the normals of Y and of the net.  The gauge of
    every y certifies conv(Y) ⊂ K; a violation beyond 1e-6 raises.
    """
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if len(Y) == 0:
        raise ValueError("empty vertex set")
    g = body.gauge_batch(Y)
    max_violation = float(np.max(g) - 1.0)
    if max_violation > 1e-6:
        raise CertificateError(
            f"vertex set leaves the body: max gauge {1 + max_violation:.9f}")
    probes = [sphere_points(rng, int(n_directions), body.dim)]
    if y_normals is not None and len(y_normals):
        probes.append(unit_rows(y_normals))
    if extra_normals is not None and len(extra_normals):
        probes.append(unit_rows(extra_normals))
    U = np.vstack(probes)
    worst_ratio = np.inf
    worst_u = U[0]
    for i0 in range(0, len(U), chunk):
        block = U[i0:i0 + chunk]
        h, _ = body.support_batch(block)
        best = (block @ Y.T).max(axis=1)
        ratios = best / h
        j = int(np.argmin(ratios))
        if ratios[j] < worst_ratio:
            worst_ratio = float(ratios[j])
            worst_u = block[j]
    return Certificate(eps_target=float(eps_target),
                       eps_achieved=float(1.0 - worst_ratio),
                       n_directions=len(U), worst_direction=worst_u,
                       max_gauge_violation=max_violation)


def cap_coverage_check(body, net, Y, eps_half, chunk=4096):
    """Exact check that every net cap S(x_j, eps_half) holds a point of Y."""
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    thresholds = (1.0 - eps_half) * np.einsum("ij,ij->i", net.x, net.nu)
    misses = []
    for j0 in range(0, net.size, chunk):
        nu_block = net.nu[j0:j0 + chunk]
        best = (nu_block @ Y.T).max(axis=1) if len(Y) else np.full(len(nu_block), -np.inf)
        bad = np.flatnonzero(best < thresholds[j0:j0 + chunk])
        misses.extend((bad + j0).tolist())
    return len(misses) == 0, np.asarray(misses, dtype=int)
