"""Sampling the boundary measure: pushforwards, the star map, cap masses."""

import numpy as np
import pytest
from scipy import stats

from polyfine import (Ball, BoundaryPoint, Cap, CapSampler, Cube, Ellipsoid,
                      LinearImage, mc_volume, mu_cap_estimate, polar,
                      radial_project, sample_mu, sphere_points, star_inverse,
                      star_map, uniform_in_body)
from polyfine.capmeasure import cap_mass_table, star_map_batch


class TestUniformInBody:
    def test_ball_mean_and_shell(self, rng):
        X = uniform_in_body(Ball(2), 100000, rng)
        se = X.std(axis=0) / np.sqrt(len(X))
        assert np.all(np.abs(X.mean(axis=0)) <= 3 * se)
        frac = np.mean(np.linalg.norm(X, axis=1) <= 0.5)
        assert abs(frac - 0.25) <= 3 * np.sqrt(0.25 * 0.75 / len(X))

    def test_cube_coordinates_uniform(self, rng):
        X = uniform_in_body(Cube(2), 40000, rng)
        for k in range(2):
            counts, _ = np.histogram(X[:, k], bins=10, range=(-1, 1))
            chi2 = np.sum((counts - 4000.0) ** 2 / 4000.0)
            assert chi2 < stats.chi2.ppf(0.99, 9)

    def test_hit_and_run_ball(self, rng):
        X = uniform_in_body(Ball(3), 3000, rng, method="hit-and-run")
        assert len(X) == 3000
        assert np.all(np.linalg.norm(X, axis=1) <= 1 + 1e-9)
        # fraction within half radius ~ (1/2)^3
        frac = np.mean(np.linalg.norm(X, axis=1) <= 0.5)
        assert abs(frac - 0.125) < 0.035


class TestRadialProject:
    def test_examples(self):
        assert np.allclose(radial_project(Ball(2), [[0.3, 0.4]]), [[0.6, 0.8]])
        assert np.allclose(radial_project(Cube(2), [[0.5, 0.25]]), [[1.0, 0.5]])
        assert np.allclose(radial_project(Cube(2), [[1.0, 0.5]]), [[1.0, 0.5]])

    def test_origin_rejected(self):
        with pytest.raises(ValueError):
            radial_project(Ball(2), [[0.0, 0.0]])

    def test_pushforward_uniform_on_circle(self, rng):
        X = uniform_in_body(Ball(2), 36000, rng)
        P = radial_project(Ball(2), X)
        ang = np.arctan2(P[:, 1], P[:, 0])
        counts, _ = np.histogram(ang, bins=36, range=(-np.pi, np.pi))
        chi2 = np.sum((counts - 1000.0) ** 2 / 1000.0)
        assert chi2 < stats.chi2.ppf(0.99, 35)


class TestStarMap:
    def test_examples(self):
        e1 = np.array([1.0, 0.0])
        assert np.allclose(star_map(Ball(2), BoundaryPoint(e1, e1)), e1)
        assert np.allclose(star_map(Ball(2, 2.0), BoundaryPoint(2 * e1, e1)),
                           0.5 * e1)
        assert np.allclose(star_map(Cube(2), BoundaryPoint([1.0, 0.3], e1)), e1)

    def test_duality_pairing(self, rng):
        for body in [Ball(3), Ellipsoid([[2, 0.1, 0], [0, 1, 0], [0, 0, 0.6]])]:
            X, NU = body.boundary_pairs_mixed(sphere_points(rng, 2000, 3), rng)
            S = star_map_batch(X, NU)
            assert np.allclose(np.einsum("ij,ij->i", X, S), 1.0, atol=1e-9)
            assert np.allclose(polar(body).gauge_batch(S), 1.0, atol=1e-9)

    def test_invalid_position(self):
        with pytest.raises(ValueError):
            star_map(Ball(2), BoundaryPoint([1.0, 0.0], [-1.0, 0.0]))

    def test_inverse_examples(self):
        e1 = np.array([1.0, 0.0])
        bp = star_inverse(Ball(2), e1)
        assert np.allclose(bp.x, e1) and np.allclose(bp.nu, e1)
        bp = star_inverse(Cube(2), np.array([0.5, 0.5]))  # (1,1)/2 on bd K*
        assert np.allclose(bp.x, [1.0, 1.0])

    def test_round_trip_on_ellipsoid(self, rng):
        body = Ellipsoid([[1.5, 0.0], [0.3, 0.8]])
        X, NU = body.boundary_pairs_mixed(sphere_points(rng, 500, 2), rng)
        S = star_map_batch(X, NU)
        for i in range(0, 500, 25):
            bp = star_inverse(body, S[i])
            assert np.linalg.norm(bp.x - X[i]) < 1e-8
            assert abs(bp.x @ S[i] - 1.0) < 1e-8


class TestSampleMu:
    def test_disk_law_uniform_angle(self, rng):
        sampler = CapSampler(Ball(2))
        X, NU = sample_mu(sampler, rng, 100000)
        ang = np.arctan2(X[:, 1], X[:, 0])
        u = (ang + np.pi) / (2 * np.pi)
        res = stats.kstest(u, "uniform")
        assert res.pvalue > 0.01
        assert np.allclose(np.linalg.norm(X, axis=1), 1.0, atol=1e-9)

    def test_disk_cap_mass_third(self, rng):
        sampler = CapSampler(Ball(2))
        apex = BoundaryPoint(np.array([1.0, 0.0]), np.array([1.0, 0.0]))
        est, se = mu_cap_estimate(sampler, Cap(apex, 0.5), 20000, rng)
        assert abs(est - 1 / 3) <= 3 * se

    def test_ball3_cap_mass_quarter(self, rng):
        sampler = CapSampler(Ball(3))
        apex = BoundaryPoint(np.array([0.0, 0.0, 1.0]), np.array([0.0, 0.0, 1.0]))
        est, se = mu_cap_estimate(sampler, Cap(apex, 0.5), 20000, rng)
        assert abs(est - 0.25) <= 3 * se

    def test_linear_invariance(self, rng):
        body = Ball(2)
        T = np.array([[1.3, 0.4], [-0.2, 0.8]])
        image = LinearImage(body, T)
        x = np.array([np.cos(0.7), np.sin(0.7)])
        cap_k = Cap(BoundaryPoint(x, x), 0.3)
        tx = T @ x
        tnu = np.linalg.solve(T.T, x)
        tnu /= np.linalg.norm(tnu)
        cap_tk = Cap(BoundaryPoint(tx, tnu), 0.3)
        n = 40000
        est_k, se_k = mu_cap_estimate(CapSampler(body), cap_k, n, rng)
        est_t, se_t = mu_cap_estimate(CapSampler(image), cap_tk, n, rng)
        assert abs(est_k - est_t) <= 3 * np.hypot(se_k, se_t)

    def test_tiny_eps_mass_vanishes(self, rng):
        sampler = CapSampler(Ball(2))
        apex = BoundaryPoint(np.array([1.0, 0.0]), np.array([1.0, 0.0]))
        est, _ = mu_cap_estimate(sampler, Cap(apex, 1e-6), 5000, rng)
        assert est < 0.01

    def test_cap_mass_table_shared_samples(self, rng):
        sampler = CapSampler(Ball(2))
        AX, ANU = Ball(2).boundary_pairs_mixed(sphere_points(rng, 10, 2), rng)
        est, se = cap_mass_table(sampler, (AX, ANU), [0.5, 0.25], 20000, rng)
        assert est.shape == (2, 10)
        assert np.all(np.abs(est[0] - 1 / 3) <= 4 * se[0] + 1e-12)
        arc = np.arccos(0.75) / np.pi
        assert np.all(np.abs(est[1] - arc) <= 4 * se[1] + 1e-12)


class TestMcVolume:
    def test_disk_pi(self, rng):
        est, se = mc_volume(Ball(2), 200000, rng)
        assert abs(est - np.pi) <= 3 * se

    def test_cube_exact_box(self, rng):
        est, se = mc_volume(Cube(2), 10000, rng)
        assert est == pytest.approx(4.0)
        assert se == 0.0

    def test_santalo_product_disk(self, rng):
        est, _ = mc_volume(Ball(2), 300000, rng)
        est_p, _ = mc_volume(polar(Ball(2)), 300000, rng)
        assert abs(est * est_p - np.pi ** 2) / np.pi ** 2 < 0.05

    def test_zoo_products_between_known_extremes(self, rng):
        # conjectured minimizer (cube x cross-polytope) and round maximum
        d = 2
        lower = 8.0
        upper = np.pi ** 2
        from conftest import zoo
        for body in zoo(d):
            v, _ = mc_volume(body, 150000, rng)
            vp, _ = mc_volume(polar(body), 150000, rng)
            assert lower * 0.93 <= v * vp <= upper * 1.05
