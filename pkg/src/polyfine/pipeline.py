"""End-to-end pipeline: standardize, smooth, net, Rogers cover, certify.

The construction never trusts the theorem: every run certifies its output
on the original body (support probes in all dimensions, plus the exact
polygon oracle in d = 2) and reports measured sizes next to the formula
constants.
"""

import io
import json
import logging
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import capmeasure, cover, net as netmod, position, smooth
from ._kernels import BACKEND
from .bodies import make_body, sphere_points
from .plot2d import polygon_containment_check

log = logging.getLogger("polyfine")

EXIT_OK = 0
EXIT_CERT_MISS = 2
EXIT_STAGE_FAILURE = 3
EXIT_INVALID_CONFIG = 4


class ConfigError(ValueError):
    pass


class StageError(RuntimeError):
    def __init__(self, stage, msg):
        super().__init__(f"[{stage}] {msg}")
        self.stage = stage


@dataclass(frozen=True)
class PipelineConfig:
    body: dict
    eps: float
    seed: int = 0
    delta_override: float = None
    n_dirs_verify: int = 10000
    sampler_method: str = "auto"
    theta_mode: str = "estimated"        # estimated | adaptive | fixed
    theta_value: float = None
    theta_samples: int = 4000
    rho_mode: str = "auto"               # auto | formula | adaptive
    workers: int = 1
    out_dir: str = None

    def validate(self):
        if not isinstance(self.body, dict) or "kind" not in self.body:
            raise ConfigError("config.body must be a BodySpec dict")
        if not 0 < self.eps < 0.5:
            raise ConfigError("eps must lie in (0, 1/2)")
        if self.theta_mode not in ("estimated", "adaptive", "fixed"):
            raise ConfigError(f"unknown theta mode {self.theta_mode!r}")
        if self.theta_mode == "fixed" and not (self.theta_value and 0 < self.theta_value <= 1):
            raise ConfigError("fixed theta mode needs theta_value in (0, 1]")
        if self.rho_mode not in ("auto", "formula", "adaptive"):
            raise ConfigError(f"unknown rho mode {self.rho_mode!r}")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.delta_override is not None and not 0 < self.delta_override < 0.5:
            raise ConfigError("delta must lie in (0, 1/2)")

    def to_dict(self):
        return {
            "body": self.body, "eps": self.eps, "seed": self.seed,
            "delta_override": self.delta_override,
            "n_dirs_verify": self.n_dirs_verify,
            "sampler_method": self.sampler_method,
            "theta_mode": self.theta_mode, "theta_value": self.theta_value,
            "theta_samples": self.theta_samples, "rho_mode": self.rho_mode,
            "workers": self.workers,
        }


@dataclass
class ApproxResult:
    vertices: np.ndarray
    n_vertices: int
    eps_target: float
    eps_achieved: float
    polygon_ok: bool            # None outside d = 2
    success: bool
    dim: int
    net_size: int
    rho: float
    rho_mode: str
    delta: float
    R: float
    eps_inner: float
    eps_caps: float
    theta_used: float
    theta_mode: str
    sampled_count: int
    retained_count: int
    patched_count: int
    coverage_radius: float
    net_attempts: int
    rejection_streak: int
    max_gauge_violation: float
    worst_direction: np.ndarray
    standardization: dict
    samples_used: dict
    measured: dict
    config: dict
    timings: dict = field(default_factory=dict)

    def to_json_dict(self, include_timings=False):
        def clean(v):
            if isinstance(v, np.ndarray):
                return v.tolist()
            if isinstance(v, (np.floating, np.integer)):
                return v.item()
            if isinstance(v, float) and math.isnan(v):
                return None
            if isinstance(v, dict):
                return {k: clean(x) for k, x in v.items()}
            if isinstance(v, (list, tuple)):
                return [clean(x) for x in v]
            return v
        out = {
            "config": clean(self.config),
            "dim": self.dim,
            "eps_target": self.eps_target,
            "eps_achieved": self.eps_achieved,
            "polygon_ok": self.polygon_ok,
            "success": self.success,
            "n_vertices": self.n_vertices,
            "vertices": clean(self.vertices),
            "net_size": self.net_size,
            "rho": self.rho,
            "rho_mode": self.rho_mode,
            "delta": self.delta,
            "R": self.R,
            "eps_inner": self.eps_inner,
            "eps_caps": self.eps_caps,
            "theta_used": clean(self.theta_used),
            "theta_mode": self.theta_mode,
            "sampled_count": self.sampled_count,
            "retained_count": self.retained_count,
            "patched_count": self.patched_count,
            "coverage_radius": self.coverage_radius,
            "net_attempts": self.net_attempts,
            "rejection_streak": self.rejection_streak,
            "max_gauge_violation": self.max_gauge_violation,
            "worst_direction": clean(self.worst_direction),
            "standardization": clean(self.standardization),
            "samples_used": clean(self.samples_used),
            "measured": clean(self.measured),
        }
        if include_timings:
            out["timings"] = clean(self.timings)
        return out


def dumps_canonical(d):
    return json.dumps(d, sort_keys=True, indent=2) + "\n"


def _stage_rng(config, idx):
    return np.random.default_rng(
        np.random.SeedSequence([int(config.seed), int(idx), int(config.workers)]))


def _coverage_probe_count(n):
    return int(min(100 * n, max(10 * n, 2_000_000)))


def _adaptive_rho(body, eps_inner, rng, n_pool=8192, n_probe=1024, k_nn=8,
                  safety=0.75):
    """Mesh size from the discretization chain with measured local geometry.

    Transferring a cap hit from a net pair (x_q, nu_q) to a nearby boundary
    pair costs a eta + eps_caps |x_q| eta + W, where a and eta are the point
    and normal gaps and W = max_{y in cap(q)} |<y - x_q, nu_p - nu_q>| is a
    directional cap width (tiny on flat faces and along straight edges,
    where |y - x_q| itself can be large).  The cost rates are measured on
    nearest-neighbor boundary pairs and linearized in rho; the largest rho
    whose worst-case cost stays within (eps_inner - eps_caps) h_min is
    returned, times a safety factor.  The end certificate arbitrates.
    """
    from scipy.spatial import cKDTree
    d = body.dim
    eps_caps = eps_inner / 2.0
    X, NU = body.boundary_pairs_mixed(sphere_points(rng, n_pool, d), rng)
    h = np.einsum("ij,ij->i", X, NU)
    r = np.linalg.norm(X, axis=1)
    h_min = float(h.min())
    r_max = float(r.max())
    budget = (eps_inner - eps_caps) * h_min
    pairs = np.hstack([X, NU])
    tree = cKDTree(pairs)
    probe = rng.choice(len(X), size=min(n_probe, len(X)), replace=False)
    dists, nbrs = tree.query(pairs[probe], k=k_nn + 1)
    thr = (1.0 - eps_caps) * h
    quad = np.full((len(probe), k_nn), np.inf)   # rho^2 coefficients
    lin = np.full((len(probe), k_nn), np.inf)    # rho coefficients
    for col in range(1, k_nn + 1):
        j = nbrs[:, col]
        ell = dists[:, col]
        dnu = NU[probe] - NU[j]
        eta = np.linalg.norm(dnu, axis=1)
        a = np.linalg.norm(X[probe] - X[j], axis=1)
        heights = X @ NU[j].T                      # (n_pool, n_probe)
        in_cap = heights >= thr[j]
        for t in range(len(probe)):
            if ell[t] <= 1e-12:
                continue
            members = X[in_cap[:, t]]
            w = float(np.abs((members - X[j[t]]) @ dnu[t]).max()) if len(members) else 0.0
            quad[t, col - 1] = a[t] * eta[t] / ell[t] ** 2
            lin[t, col - 1] = (eps_caps * r_max * eta[t] + w) / ell[t]
    usable = np.isfinite(lin).any(axis=1)
    quad, lin = quad[usable], lin[usable]
    # per probed pair, the typical (median) neighbor cost: the cheapest
    # neighbor direction can be degenerate (along a straight edge transfers
    # are free) and the worst pairs mismatched regimes that a covering net
    # never forces together
    lo, hi = 1e-5, 0.45
    for _ in range(60):
        mid = math.sqrt(lo * hi)
        costs = quad * mid * mid + lin * mid
        costs = np.where(np.isfinite(costs), costs, np.nan)
        worst = float(np.nanmax(np.nanmedian(costs, axis=1)))
        if worst <= budget:
            lo = mid
        else:
            hi = mid
    rho = lo * safety
    measured = {"r_max": r_max, "h_min": h_min, "budget": budget,
                "rho_unsafe": lo, "pool_size": n_pool,
                "probe_count": int(len(probe)), "k_nn": k_nn}
    return rho, measured


def approximate(config):
    """Run the full construction; the returned result carries its certificate."""
    config.validate()
    body = make_body(config.body)
    d = body.dim
    timings = {}
    samples_used = {}

    def timed(name):
        class _T:
            def __enter__(self):
                self.t0 = time.perf_counter()
            def __exit__(self, *exc):
                timings[name] = timings.get(name, 0.0) + time.perf_counter() - self.t0
        return _T()

    # 1: standard position
    with timed("standardize"):
        try:
            std = position.standardize(body, _stage_rng(config, 0))
        except Exception as e:
            raise StageError("standardize", str(e)) from e

    # 2: smoothing
    with timed("smooth"):
        delta = config.delta_override if config.delta_override else 1.0 / (4 * d ** 5)
        params = smooth.SmoothParams(dim=d, delta=delta)
        body_s = smooth.smooth_body(std.body, params)
        body_s._ensure_cache()

    # 3: mesh size, net, cover, certificate; a certification miss halves rho
    eps_inner = smooth.transfer_epsilon(config.eps, delta, d)
    eps_caps = eps_inner / 2.0
    measured = {}
    rho_mode = config.rho_mode
    if rho_mode == "auto":
        rho_mode = "formula" if d <= 2 else "adaptive"
    rho = None
    for rho_attempt in range(3):
        def srng(idx, _at=rho_attempt):
            return _stage_rng(config, idx + 10 * _at)

        with timed("net"):
            if rho is None:
                if rho_mode == "formula":
                    rho = float(netmod.rho_for_epsilon(d, params.R, eps_inner))
                    rho_gate = rho
                else:
                    rho, measured = _adaptive_rho(body_s, eps_inner, srng(1))
                    # the separation/gate split carries the safety factor:
                    # the transfer budget is feasible up to rho_unsafe
                    rho_gate = measured["rho_unsafe"]
            log.info("rho=%.6g gate=%.6g (%s), eps_inner=%.4g",
                     rho, rho_gate, rho_mode, eps_inner)
            rng_net = srng(2)
            # greedy saturation has a heavy tail beyond d = 2; stop early and
            # let targeted probe-and-patch rounds restore the covering property
            stop = None if d <= 2 else (8, 2000)
            try:
                lifted_net = netmod.build_net(body_s, rho, rng_net, stop_streak=stop)
                n_probe = _coverage_probe_count(lifted_net.size)
                lifted_net, coverage, attempts, patched_in = netmod.ensure_coverage(
                    lifted_net, body_s, n_probe, rng_net, gate=rho_gate)
            except Exception as e:
                raise StageError("net", str(e)) from e
            log.info("net size %d (streak %d, +%d patched), coverage %.4g",
                     lifted_net.size, lifted_net.rejection_streak, patched_in,
                     coverage)
        samples_used["coverage_probes"] = _coverage_probe_count(lifted_net.size)
        samples_used["net_patch_insertions"] = patched_in

        # 4-5: caps and the transversal
        with timed("cover"):
            caps = cover.CapFamily.from_net(lifted_net, eps_caps)
            sampler = capmeasure.CapSampler(body_s, method=config.sampler_method)

            def sample_rows(rng, m):
                X, NU = sampler.sample(m, rng)
                return np.hstack([X, NU])

            theta = float("nan")
            rng_cover = srng(3)
            try:
                if config.theta_mode == "adaptive":
                    result = cover.adaptive_cover(caps, sample_rows, rng_cover)
                else:
                    if config.theta_mode == "fixed":
                        theta = float(config.theta_value)
                    else:
                        # min cap mass shrinks like eps_caps^{(d-1)/2}; grow
                        # the sample budget alike so the 3 SE penalty stays
                        # proportionate, else the floor flattens the
                        # vertex-count scaling
                        n_cap = int(min(1e5, config.theta_samples *
                                        max(1.0, (0.05 / eps_caps) ** ((d - 1) / 2))))
                        theta = cover.estimate_theta(caps, sample_rows, srng(4),
                                                     n_per_cap=n_cap)
                    result = cover.rogers_cover(caps, sample_rows, theta, rng_cover)
            except capmeasure.SamplingError as e:
                raise StageError("cover", str(e)) from e
            theta = result.theta_used
            rows = result.points
            y_s = rows[:, :d]
            ok, misses = cover.cap_coverage_check(body_s, lifted_net, y_s, eps_caps)
            if not ok:
                raise StageError("cover", f"{len(misses)} net caps left uncovered "
                                          "after patching; this should be impossible")
        samples_used["mu_samples"] = sampler.samples_drawn

        # 6: pull back and certify on the original body
        with timed("certify"):
            x_std = smooth.phi_inverse(delta, y_s)
            vertices = std.unmap_points(x_std)
            try:
                y_normals = body.normal_at_batch(vertices)
            except NotImplementedError:
                y_normals = None
            net_dirs = std.map_directions(lifted_net.nu)
            rng_cert = srng(5)
            try:
                cert = cover.achieved_epsilon(body, vertices, config.n_dirs_verify,
                                              rng_cert, eps_target=config.eps,
                                              y_normals=y_normals,
                                              extra_normals=net_dirs)
            except cover.CertificateError as e:
                raise StageError("certify", str(e)) from e
            polygon_ok = None
            if d == 2:
                polygon_ok = polygon_containment_check(body, vertices, config.eps)
            success = bool(cert.ok and (polygon_ok is not False))
        samples_used["certificate_probes"] = cert.n_directions
        if success:
            break
        if rho_attempt < 2:
            rho *= 0.5
            rho_gate *= 0.5
            log.warning("certification miss (achieved %.4g > %.4g), "
                        "retrying with rho=%.4g", cert.eps_achieved,
                        config.eps, rho)
    measured = dict(measured)
    measured["rho_gate"] = rho_gate
    measured["coverage_rounds"] = attempts

    std_info = {
        "matrix": std.matrix, "translation": std.translation,
        "inner_radius_check": std.inner_radius_check,
        "outer_radius_check": std.outer_radius_check,
        "center_se": std.center_se,
    }
    res = ApproxResult(
        vertices=vertices, n_vertices=len(vertices), eps_target=config.eps,
        eps_achieved=cert.eps_achieved, polygon_ok=polygon_ok, success=success,
        dim=d, net_size=lifted_net.size, rho=rho, rho_mode=rho_mode,
        delta=delta, R=params.R, eps_inner=eps_inner, eps_caps=eps_caps,
        theta_used=theta, theta_mode=config.theta_mode,
        sampled_count=result.sampled_count, retained_count=result.retained_count,
        patched_count=result.patched_count, coverage_radius=coverage,
        net_attempts=attempts, rejection_streak=lifted_net.rejection_streak,
        max_gauge_violation=cert.max_gauge_violation,
        worst_direction=cert.worst_direction, standardization=std_info,
        samples_used=samples_used, measured=measured, config=config.to_dict(),
        timings=timings)
    if not success:
        log.error("certification miss: achieved %.6g > target %.6g",
                  cert.eps_achieved, config.eps)
    return res


SWEEP_COLUMNS = ["body", "d", "eps", "trial", "n_vertices", "net_size",
                 "eps_achieved", "wall_time"]


@dataclass
class SweepResult:
    rows: list
    slopes: dict
    failures: list

    def to_csv(self):
        buf = io.StringIO()
        buf.write(",".join(SWEEP_COLUMNS) + "\n")
        for r in self.rows:
            buf.write(",".join(str(r[c]) for c in SWEEP_COLUMNS) + "\n")
        return buf.getvalue()


def sweep(config_template, eps_list, bodies, trials):
    """Vertex-count scaling runs plus log-log regression per body.

    bodies is a list of (name, body_spec) pairs; the slope regresses
    log(mean n_vertices) on log(1/eps) with trials averaged per eps.
    """
    if len(eps_list) < 3:
        raise ConfigError("sweep needs at least 3 eps values")
    rows, failures = [], []
    slopes = {}
    for bi, (name, spec) in enumerate(bodies):
        means = []
        for ei, eps in enumerate(eps_list):
            counts = []
            for t in range(trials):
                child = int(np.random.SeedSequence(
                    [config_template.seed, bi, ei, t]).generate_state(1)[0] % (2 ** 31))
                cfg = replace(config_template, body=spec, eps=float(eps), seed=child)
                t0 = time.perf_counter()
                try:
                    res = approximate(cfg)
                except Exception as e:   # keep sweeping, record the failure
                    failures.append({"body": name, "eps": eps, "trial": t,
                                     "error": str(e)})
                    continue
                wall = time.perf_counter() - t0
                rows.append({"body": name, "d": res.dim, "eps": eps, "trial": t,
                             "n_vertices": res.n_vertices, "net_size": res.net_size,
                             "eps_achieved": res.eps_achieved,
                             "wall_time": round(wall, 3)})
                counts.append(res.n_vertices)
            if counts:
                means.append((eps, float(np.mean(counts))))
        if len(means) >= 3:
            xs = np.log([1.0 / e for e, _ in means])
            ys = np.log([m for _, m in means])
            slopes[name] = float(np.polyfit(xs, ys, 1)[0])
    return SweepResult(rows=rows, slopes=slopes, failures=failures)


def baseline_sphere_sampling(body, eps, rng, n_dirs=10000, batch=64,
                             cap=1_000_000):
    """Uniform-normal boundary sampling until the certificate reaches eps."""
    d = body.dim
    probes = sphere_points(rng, n_dirs, d)
    h, _ = body.support_batch(probes)
    best = np.full(n_dirs, -np.inf)
    count = 0
    while count < cap:
        U = sphere_points(rng, batch, d)
        _, pts = body.support_batch(U)
        np.maximum(best, (probes @ pts.T).max(axis=1), out=best)
        count += batch
        eps_run = float(1.0 - (best / h).min())
        if eps_run <= eps:
            return {"n_points": count, "eps_achieved": eps_run, "success": True}
    raise StageError("baseline", f"no eps <= {eps} certificate within {cap} points")


def santalo_product(body_spec, n, rng):
    """Monte Carlo vol(K) vol(K*) for a (recentered) body spec."""
    from .bodies import polar
    body = make_body(body_spec)
    vol_k, se_k = capmeasure.mc_volume(body, n, rng)
    body_p = polar(body)
    vol_p, se_p = capmeasure.mc_volume(body_p, n, rng)
    prod = vol_k * vol_p
    se = prod * math.sqrt((se_k / vol_k) ** 2 + (se_p / vol_p) ** 2)
    return {"vol": vol_k, "vol_se": se_k, "vol_polar": vol_p,
            "vol_polar_se": se_p, "product": prod, "product_se": se,
            "backend": BACKEND}
