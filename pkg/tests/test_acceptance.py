"""Acceptance suite.

Eight criteria: end-to-end certified runs, vertex-count scaling slopes,
smoothing-map geometry, net census, cap-mass measurements, the synthetic
transversal model, volume products, and byte-level determinism.  Each test
prints one pass/fail line (run pytest -s to see them live).
"""

import time

import numpy as np

from polyfine import (Ball, BoundaryPoint, Cap, CapSampler, Cube,
                      IntervalFamily, PipelineConfig, SmoothParams,
                      approximate, build_net, coverage_radius_check,
                      halfspace_image, mc_volume, mu_cap_estimate,
                      net_cardinality_bound, phi_inverse, phi_map, polar,
                      rogers_cover, smooth_body, sphere_points, standardize,
                      sweep)
from polyfine.capmeasure import cap_mass_table
from polyfine.pipeline import dumps_canonical


def report(num, ok, desc):
    print(f"ACCEPTANCE {num}: {'PASS' if ok else 'FAIL'} - {desc}", flush=True)
    assert ok, f"criterion {num} failed: {desc}"


END_TO_END = [
    ("disk", {"kind": "ball", "dim": 2}),
    ("square", {"kind": "cube", "dim": 2}),
    ("ellipse(2,1/2)", {"kind": "ellipsoid", "matrix": [[2.0, 0.0], [0.0, 0.5]]}),
    ("ball3", {"kind": "ball", "dim": 3}),
    ("cube3", {"kind": "cube", "dim": 3}),
]


def test_acceptance_1_end_to_end():
    failures = []
    for name, spec in END_TO_END:
        for eps in (0.2, 0.1, 0.05):
            t0 = time.perf_counter()
            res = approximate(PipelineConfig(body=spec, eps=eps, seed=20240817))
            wall = time.perf_counter() - t0
            ok = (res.success and res.eps_achieved <= eps + 1e-6
                  and wall < 120.0
                  and (res.polygon_ok is True or res.dim != 2))
            if not ok:
                failures.append((name, eps, res.eps_achieved, wall))
            print(f"  [1] {name} eps={eps}: achieved {res.eps_achieved:.5f} "
                  f"nY {res.n_vertices} wall {wall:.1f}s", flush=True)
    report(1, not failures,
           f"15 seed-fixed runs certified at target under 120 s {failures or ''}")


def test_acceptance_2_scaling_slopes():
    cfg = PipelineConfig(body={"kind": "ball", "dim": 2}, eps=0.1, seed=1234)
    sw2 = sweep(cfg, [0.2, 0.1, 0.05, 0.025, 0.0125],
                [("disk", {"kind": "ball", "dim": 2})], trials=5)
    slope2 = sw2.slopes["disk"]
    sw3 = sweep(cfg, [0.2, 0.1, 0.05],
                [("ball3", {"kind": "ball", "dim": 3})], trials=5)
    slope3 = sw3.slopes["ball3"]
    n_by_eps = {}
    for row in sw2.rows:
        n_by_eps.setdefault(row["eps"], []).append(row["n_vertices"])
    means = [np.mean(n_by_eps[e]) for e in sorted(n_by_eps, reverse=True)]
    monotone = all(a <= b + 1e-9 for a, b in zip(means, means[1:]))
    ok = (0.35 <= slope2 <= 0.8 and 0.8 <= slope3 <= 1.3
          and not sw2.failures and not sw3.failures and monotone)
    report(2, ok, f"log-vertex slopes d2 {slope2:.3f} in [0.35,0.8], "
                  f"d3 {slope3:.3f} in [0.8,1.3], means nonincreasing in eps")


def test_acceptance_3_smoothing_geometry():
    rng = np.random.default_rng(3)
    worst_rel = 0.0
    for _ in range(20):
        d = int(rng.integers(2, 5))
        delta = rng.uniform(0.01, 0.45)
        h = rng.uniform(0.5, 5.0)
        nu = sphere_points(rng, 1, d)[0]
        hs = halfspace_image(delta, nu, h)
        basis = np.linalg.svd(nu[None])[2][1:]
        pts = h * nu + (rng.standard_normal((1000, d - 1)) * 3) @ basis
        dist = np.linalg.norm(phi_map(delta, pts) - hs.center, axis=1)
        worst_rel = max(worst_rel, np.abs(dist - hs.radius).max() / hs.radius)
    rt_worst = 0.0
    for d in (2, 3, 4):
        delta = 1.0 / (4 * d ** 5)
        X = rng.standard_normal((10000, d))
        X *= (rng.uniform(0, d * d, 10000) / np.linalg.norm(X, axis=1))[:, None]
        back = phi_inverse(delta, phi_map(delta, X))
        denom = np.maximum(np.linalg.norm(X, axis=1), 1e-30)
        rt_worst = max(rt_worst, (np.linalg.norm(back - X, axis=1) / denom).max())
    ok = worst_rel < 1e-9 and rt_worst < 1e-12
    report(3, ok, f"half-space image identity rel {worst_rel:.2e} < 1e-9; "
                  f"round trip rel {rt_worst:.2e} < 1e-12")


def test_acceptance_4_net_census():
    rng = np.random.default_rng(4)
    std = standardize(Ball(2), rng)
    body = smooth_body(std.body, SmoothParams(2))
    net = build_net(body, 0.1, rng)
    cov = coverage_radius_check(net, body, 100 * net.size, rng)
    X, NU = body.boundary_pairs_mixed(sphere_points(rng, 4000, 2), rng)
    i, j = rng.integers(0, len(X), size=(2, 10000))
    lift_ok = np.all(
        np.sum((X[i] + NU[i] - X[j] - NU[j]) ** 2, axis=1)
        >= np.sum((X[i] - X[j]) ** 2, axis=1)
        + np.sum((NU[i] - NU[j]) ** 2, axis=1) - 1e-9)
    ok = (57 <= net.size <= 126 and net.size <= net_cardinality_bound(2, 0.1)
          and cov <= 0.1 and net.min_separation() >= 0.1 and lift_ok)
    report(4, ok, f"smoothed-disk net N={net.size} in [57,126] <= 1960, "
                  f"coverage {cov:.4f} <= 0.1, lifting inequality on 10^4 pairs")


def test_acceptance_5_cap_masses():
    rng = np.random.default_rng(5)
    est2, se2 = mu_cap_estimate(
        CapSampler(Ball(2)),
        Cap(BoundaryPoint(np.array([1.0, 0.0]), np.array([1.0, 0.0])), 0.5),
        100000, rng)
    est3, se3 = mu_cap_estimate(
        CapSampler(Ball(3)),
        Cap(BoundaryPoint(np.array([0.0, 0.0, 1.0]), np.array([0.0, 0.0, 1.0])),
            0.5), 100000, rng)
    std = standardize(Cube(2), np.random.default_rng(55))
    body = smooth_body(std.body, SmoothParams(2))
    AX, ANU = body.boundary_pairs_mixed(sphere_points(rng, 50, 2), rng)
    eps_list = [0.2, 0.1, 0.05, 0.025]
    table, _ = cap_mass_table(CapSampler(body), (AX, ANU), eps_list, 40000, rng)
    ratios = [table[k].min() / np.sqrt(e) for k, e in enumerate(eps_list)]
    spread = max(ratios) / min(ratios)
    ok = (abs(est2 - 1 / 3) <= 3 * se2 and abs(est3 - 0.25) <= 3 * se3
          and spread < 4.0)
    report(5, ok, f"cap masses: disk {est2:.4f}~1/3, ball3 {est3:.4f}~1/4; "
                  f"smoothed-square min mass/sqrt(eps) spread {spread:.2f} < 4")


def test_acceptance_6_rogers_model():
    sizes = []
    hits_ok = True
    for seed in range(20):
        rng = np.random.default_rng(seed)
        starts = rng.uniform(0, 0.99, 1000)
        fam = IntervalFamily(starts, 0.01)
        res = rogers_cover(fam, fam.sample, 0.01, rng)
        sizes.append(res.size)
        hits_ok &= bool(res.per_cap_hits.min() >= 1)
        assert res.sampled_count == 231
    mean = float(np.mean(sizes))
    ok = mean <= 331 * 1.1 and hits_ok
    report(6, ok, f"interval model mean |Y| {mean:.1f} <= 364.1 over 20 seeds, "
                  "every cap hit in every run")


def test_acceptance_7_volume_products():
    rng = np.random.default_rng(7)
    prods = {}
    for name, spec, d in [("disk", Ball(2), 2), ("square", Cube(2), 2),
                          ("ball3", Ball(3), 3)]:
        v, _ = mc_volume(spec, 1_000_000, rng)
        vp, _ = mc_volume(polar(spec), 1_000_000, rng)
        prods[name] = v * vp
    targets = {"disk": (np.pi ** 2, 0.05), "square": (8.0, 0.05),
               "ball3": ((4 * np.pi / 3) ** 2, 0.07)}
    devs = {k: abs(prods[k] - t) / t for k, (t, _) in targets.items()}
    ok = all(devs[k] <= tol for k, (_, tol) in targets.items())
    report(7, ok, "Santalo products " +
           ", ".join(f"{k} {prods[k]:.3f} (dev {devs[k]:.3%})" for k in prods))


def test_acceptance_8_determinism():
    cfg = PipelineConfig(body={"kind": "ball", "dim": 2}, eps=0.15, seed=33)
    payloads = [dumps_canonical(approximate(cfg).to_json_dict())
                for _ in range(2)]
    ok = payloads[0] == payloads[1]
    report(8, ok, "two identical configs produce byte-identical result JSON")
