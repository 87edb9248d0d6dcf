"""Rogers transversals, theta estimation and containment certification."""

import numpy as np
import pytest

from polyfine import (Ball, CapFamily, CapSampler, CertificateError,
                      IntervalFamily, SmoothParams, achieved_epsilon,
                      adaptive_cover, build_net, cap_coverage_check,
                      cap_diameter_bound, dv_margin, estimate_theta,
                      rho_for_epsilon, rogers_cover, smooth_body,
                      sphere_points, standardize)
from polyfine.cover import rogers_sample_count


def interval_model(rng, n=1000, length=0.01):
    starts = rng.uniform(0, 1 - length, n)
    fam = IntervalFamily(starts, length)
    return fam, fam.sample


class TestRogers:
    def test_sample_count_formula(self):
        assert rogers_sample_count(1, 1.0) == 0
        assert rogers_sample_count(100, 0.05) == 33
        assert rogers_sample_count(1000, 0.01) == 231

    def test_single_cap_patched(self, rng):
        fam = IntervalFamily(np.array([0.4]), 0.01)
        res = rogers_cover(fam, fam.sample, 1.0, rng)
        assert res.sampled_count == 0
        assert res.size == 1
        assert res.patched_count == 1
        assert res.per_cap_hits.min() >= 1

    def test_interval_model_expected_size(self):
        sizes = []
        for seed in range(20):
            rng = np.random.default_rng(seed)
            fam, sample = interval_model(rng)
            res = rogers_cover(fam, sample, 0.01, rng)
            assert res.sampled_count == 231
            assert res.per_cap_hits.min() >= 1
            sizes.append(res.size)
        assert np.mean(sizes) <= 331 * 1.1

    def test_bound_with_spread(self):
        # expectation bound M + N e^{-theta M} plus sampling spread
        sizes = []
        for seed in range(50):
            rng = np.random.default_rng(1000 + seed)
            fam, sample = interval_model(rng)
            sizes.append(rogers_cover(fam, sample, 0.01, rng).size)
        bound = np.ceil(100 * np.log(10)) + 100
        assert np.mean(sizes) <= bound + 3 * np.std(sizes)

    def test_invalid_theta(self, rng):
        fam, sample = interval_model(rng)
        with pytest.raises(ValueError):
            rogers_cover(fam, sample, 0.0, rng)


class TestEstimateTheta:
    def test_disk_half_caps(self, rng):
        body = Ball(2)
        sampler = CapSampler(body)
        AX, ANU = body.boundary_pairs_mixed(sphere_points(rng, 20, 2), rng)
        caps = CapFamily(AX, ANU, 0.5)

        def rows(r, m):
            X, NU = sampler.sample(m, r)
            return np.hstack([X, NU])

        theta = estimate_theta(caps, rows, rng, n_per_cap=2000)
        # every cap has true mass 1/3; the bound sits a few SE below half
        assert 0.13 <= theta <= 0.5 * (1 / 3)

    def test_floor_rule(self, rng):
        fam = IntervalFamily(np.array([0.5]), 1e-9)  # essentially zero mass
        theta = estimate_theta(fam, fam.sample, rng, n_per_cap=1000)
        assert theta == pytest.approx(0.5 / 1000)

    def test_never_exceeds_safety(self, rng):
        fam, sample = interval_model(rng, n=50, length=0.3)
        assert estimate_theta(fam, sample, rng, n_per_cap=2000) <= 0.5

    def test_min_samples(self, rng):
        fam, sample = interval_model(rng)
        with pytest.raises(ValueError):
            estimate_theta(fam, sample, rng, n_per_cap=100)


class TestAdaptiveCover:
    def test_identical_caps(self, rng):
        fam = IntervalFamily(np.full(64, 0.45), 0.1)
        res = adaptive_cover(fam, fam.sample, rng)
        assert res.per_cap_hits.min() >= 1
        assert res.size <= 40

    def test_disjoint_caps_all_covered(self, rng):
        starts = np.arange(100) / 100.0
        fam = IntervalFamily(starts, 0.01 - 1e-12)
        res = adaptive_cover(fam, fam.sample, rng)
        assert res.per_cap_hits.min() >= 1

    def test_no_patching_when_easy(self, rng):
        fam = IntervalFamily(np.full(16, 0.0), 1.0)  # caps cover everything
        res = adaptive_cover(fam, fam.sample, rng)
        assert res.patched_count == 0


class TestAchievedEpsilon:
    def test_square_polygon_on_disk(self, rng):
        k = 4
        ang = 2 * np.pi * np.arange(k) / k
        Y = np.c_[np.cos(ang), np.sin(ang)]
        cert = achieved_epsilon(Ball(2), Y, 10000, rng, eps_target=0.3)
        # probes approach the mid-edge optimum linearly in the angular gap
        assert abs(cert.eps_achieved - (1 - np.cos(np.pi / k))) < 1e-4
        assert cert.ok

    def test_12gon_on_disk(self, rng):
        k = 12
        ang = 2 * np.pi * np.arange(k) / k
        Y = np.c_[np.cos(ang), np.sin(ang)]
        cert = achieved_epsilon(Ball(2), Y, 10000, rng)
        assert abs(cert.eps_achieved - 0.034074) < 1e-4

    def test_dense_cloud_near_zero(self, rng):
        ang = rng.uniform(0, 2 * np.pi, 10000)
        Y = np.c_[np.cos(ang), np.sin(ang)]
        cert = achieved_epsilon(Ball(2), Y, 10000, rng)
        assert cert.eps_achieved < 1e-4

    def test_probe_superset_monotone(self, rng):
        ang = 2 * np.pi * np.arange(6) / 6
        Y = np.c_[np.cos(ang), np.sin(ang)]
        body = Ball(2)
        U1 = sphere_points(rng, 500, 2)
        U2 = np.vstack([U1, sphere_points(rng, 2000, 2)])
        def worst(U):
            h, _ = body.support_batch(U)
            return 1 - ((U @ Y.T).max(axis=1) / h).min()
        assert worst(U2) >= worst(U1) - 1e-15

    def test_gauge_violation_raises(self, rng):
        Y = np.array([[1.1, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])
        with pytest.raises(CertificateError):
            achieved_epsilon(Ball(2), Y, 100, rng)

    def test_normals_probe_structured_directions(self, rng):
        ang = 2 * np.pi * np.arange(8) / 8
        Y = np.c_[np.cos(ang), np.sin(ang)]
        mid = ang + np.pi / 8
        worst_dirs = np.c_[np.cos(mid), np.sin(mid)]
        cert = achieved_epsilon(Ball(2), Y, 10, rng, extra_normals=worst_dirs)
        assert cert.eps_achieved == pytest.approx(1 - np.cos(np.pi / 8), abs=1e-12)


@pytest.fixture(scope="module")
def disk_net():
    rng = np.random.default_rng(0)
    std = standardize(Ball(2), rng)
    body = smooth_body(std.body, SmoothParams(2))
    return body, build_net(body, 0.1, rng)


class TestCapCoverage:
    def test_apexes_cover_their_own_caps(self, disk_net):
        body, net = disk_net
        ok, misses = cap_coverage_check(body, net, net.x, 0.05)
        assert ok and len(misses) == 0

    def test_empty_y_covers_nothing(self, disk_net):
        body, net = disk_net
        ok, misses = cap_coverage_check(body, net, np.empty((0, 2)), 0.05)
        assert not ok
        assert len(misses) == net.size

    def test_discretization_chain_end_to_end(self):
        # formula mesh, caps at eps/2, Rogers cover, certified at eps
        rng = np.random.default_rng(12)
        eps = 0.3
        std = standardize(Ball(2), rng)
        body = smooth_body(std.body, SmoothParams(2))
        d, R = 2, body.R
        rho = rho_for_epsilon(d, R, eps)
        assert dv_margin(rho, eps, d,
                         cap_diameter_bound(d, R, eps / 2)) <= eps / 2
        net = build_net(body, rho, rng)
        caps = CapFamily.from_net(net, eps / 2)
        sampler = CapSampler(body)

        def rows(r, m):
            X, NU = sampler.sample(m, r)
            return np.hstack([X, NU])

        theta = estimate_theta(caps, rows, rng, n_per_cap=2000)
        res = rogers_cover(caps, rows, theta, rng)
        y = res.points[:, :2]
        ok, _ = cap_coverage_check(body, net, y, eps / 2)
        assert ok
        cert = achieved_epsilon(body, y, 10000, rng, eps_target=eps,
                                extra_normals=net.nu)
        assert cert.eps_achieved <= eps + 1e-6
