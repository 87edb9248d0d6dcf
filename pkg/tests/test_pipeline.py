"""Pipeline-level behavior: configs, the end-to-end run, baseline, products."""

import numpy as np
import pytest

from polyfine import (Ball, ConfigError, PipelineConfig, StageError,
                      approximate, baseline_sphere_sampling, polygon_containment_check,
                      santalo_product, sweep)
from polyfine.pipeline import dumps_canonical


class TestConfig:
    def test_eps_range(self):
        with pytest.raises(ConfigError):
            PipelineConfig(body={"kind": "ball", "dim": 2}, eps=0.5).validate()
        with pytest.raises(ConfigError):
            PipelineConfig(body={"kind": "ball", "dim": 2}, eps=-0.1).validate()

    def test_theta_modes(self):
        base = dict(body={"kind": "ball", "dim": 2}, eps=0.2)
        with pytest.raises(ConfigError):
            PipelineConfig(**base, theta_mode="bogus").validate()
        with pytest.raises(ConfigError):
            PipelineConfig(**base, theta_mode="fixed").validate()
        PipelineConfig(**base, theta_mode="fixed", theta_value=0.2).validate()

    def test_body_required(self):
        with pytest.raises(ConfigError):
            PipelineConfig(body={}, eps=0.2).validate()


@pytest.fixture(scope="module")
def disk_run():
    cfg = PipelineConfig(body={"kind": "ball", "dim": 2}, eps=0.1, seed=42)
    return approximate(cfg)


class TestApproximate:
    def test_disk_run(self, disk_run):
        res = disk_run
        assert res.success
        assert res.eps_achieved <= 0.1 + 1e-6
        assert res.n_vertices >= 7      # any 0.1-certificate on the disk needs that many
        assert res.polygon_ok is True
        assert res.max_gauge_violation <= 1e-9

    def test_vertices_on_original_boundary(self, disk_run):
        g = Ball(2).gauge_batch(disk_run.vertices)
        assert np.all(g <= 1 + 1e-9)
        assert np.all(g >= 1 - 1e-6)

    def test_constants_plumbing(self, disk_run):
        from polyfine import rho_for_epsilon
        res = disk_run
        d = res.dim
        assert res.delta == pytest.approx(1.0 / (4 * d ** 5))
        assert res.R == pytest.approx(1.0 / res.delta)
        assert res.eps_inner == pytest.approx(res.eps_target / 2)
        assert res.rho == pytest.approx(rho_for_epsilon(d, res.R, res.eps_inner))

    def test_polygon_oracle_independent(self, disk_run):
        assert polygon_containment_check(Ball(2), disk_run.vertices, 0.1)
        assert not polygon_containment_check(
            Ball(2), disk_run.vertices[:3], 0.001)

    def test_json_payload_fields(self, disk_run):
        payload = disk_run.to_json_dict()
        for key in ("vertices", "eps_achieved", "net_size", "rho", "delta",
                    "R", "theta_used", "standardization", "config"):
            assert key in payload
        assert "timings" not in payload
        text = dumps_canonical(payload)
        assert text == dumps_canonical(disk_run.to_json_dict())

    def test_fixed_theta_mode(self):
        cfg = PipelineConfig(body={"kind": "ball", "dim": 2}, eps=0.25,
                             seed=2, theta_mode="fixed", theta_value=0.1)
        res = approximate(cfg)
        assert res.success and res.theta_used == 0.1

    def test_adaptive_cover_mode(self):
        cfg = PipelineConfig(body={"kind": "ball", "dim": 2}, eps=0.25,
                             seed=2, theta_mode="adaptive")
        res = approximate(cfg)
        assert res.success
        assert np.isnan(res.theta_used)


class TestBaseline:
    def test_disk_terminates(self, rng):
        out = baseline_sphere_sampling(Ball(2), 0.1, rng, n_dirs=2000)
        assert out["success"]
        assert out["eps_achieved"] <= 0.1

    def test_ball3_under_cap(self, rng):
        out = baseline_sphere_sampling(Ball(3), 0.2, rng, n_dirs=2000)
        assert out["success"] and out["n_points"] < 1_000_000

    def test_loose_eps_needs_few_points(self, rng):
        out = baseline_sphere_sampling(Ball(2), 0.45, rng, n_dirs=1000)
        assert out["n_points"] <= 256

    def test_impossible_target_fails_loudly(self, rng):
        with pytest.raises(StageError):
            baseline_sphere_sampling(Ball(2), 1e-9, rng, n_dirs=500,
                                     cap=2000)


class TestSweepFunction:
    def test_needs_three_eps(self):
        cfg = PipelineConfig(body={"kind": "ball", "dim": 2}, eps=0.2)
        with pytest.raises(ConfigError):
            sweep(cfg, [0.2, 0.1], [("disk", {"kind": "ball", "dim": 2})], 1)

    def test_failures_recorded_not_raised(self):
        cfg = PipelineConfig(body={"kind": "ball", "dim": 2}, eps=0.2)
        bad = {"kind": "polytope_v", "points": [[0, 0], [1, 0], [2, 0]]}
        res = sweep(cfg, [0.3, 0.2, 0.1], [("bad", bad)], 1)
        assert len(res.failures) == 3
        assert res.rows == []


def test_santalo_product_function(rng):
    out = santalo_product({"kind": "cube", "dim": 2}, 200000, rng)
    assert abs(out["product"] - 8.0) / 8.0 < 0.05
