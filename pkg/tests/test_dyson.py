import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sle_dyson import dyson
from sle_dyson.dyson import (TWO_PI, AngleConfig, CollisionError,
                             ProcessParams, drift, equally_spaced, potential,
                             sample_stationary, simulate, step, wrap_angle)
from sle_dyson.ensembles import (gap_cdf_n2, ks_statistic, ks_threshold,
                                 ks_two_sample, ks_two_sample_threshold,
                                 row_gaps)


def distinct_config(rng, n, min_gap=0.3):
    base = equally_spaced(n).angles
    jitter = rng.uniform(-0.3 * np.pi / n, 0.3 * np.pi / n, size=n)
    return AngleConfig(np.sort(wrap_angle(base + jitter)))


class TestConfigValidation:
    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            AngleConfig(np.array([0.0, TWO_PI]))

    def test_rejects_coincident(self):
        with pytest.raises(CollisionError):
            AngleConfig(np.array([1.0, 1.0]))

    def test_rejects_nonpositive_kappa(self):
        with pytest.raises(ValueError):
            ProcessParams(n_particles=2, kappa=0.0)

    def test_default_burn_in(self):
        p = ProcessParams(n_particles=3, kappa=2.0)
        assert p.effective_burn_in == pytest.approx(10.0 + 2.0 * math.log(3))

    def test_beta(self):
        assert ProcessParams(n_particles=2, kappa=8.0 / 3.0).beta == \
            pytest.approx(1.5)


class TestPotentialAndDrift:
    def test_equally_spaced_potential_n3(self):
        # product of pairwise chord sines is (3/4)^... : V = 3 ln(4/3)
        v = potential(equally_spaced(3))
        assert v == pytest.approx(3.0 * math.log(4.0 / 3.0), abs=1e-12)

    def test_equally_spaced_drift_vanishes(self):
        for n in (2, 3, 5, 8):
            assert np.max(np.abs(drift(equally_spaced(n, 0.3)))) < 1e-12

    def test_single_particle_free(self):
        assert drift(AngleConfig(np.array([1.0]))) == pytest.approx(0.0)
        assert potential(AngleConfig(np.array([1.0]))) == 0.0

    def test_drift_is_negative_gradient(self):
        rng = np.random.default_rng(3)
        eps = 1e-5
        for _ in range(100):
            n = int(rng.integers(2, 7))
            cfg = distinct_config(rng, n)
            mu = drift(cfg)
            for j in range(n):
                up, dn = cfg.angles.copy(), cfg.angles.copy()
                up[j] += eps
                dn[j] -= eps
                fd = -(potential(AngleConfig(up))
                       - potential(AngleConfig(dn))) / (2 * eps)
                assert mu[j] == pytest.approx(fd, abs=1e-5)

    def test_drift_sums_to_zero(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            cfg = distinct_config(rng, int(rng.integers(2, 8)))
            assert abs(np.sum(drift(cfg))) < 1e-10

    def test_rotation_equivariance(self):
        rng = np.random.default_rng(5)
        cfg = distinct_config(rng, 4)
        rot = AngleConfig(wrap_angle(cfg.angles + 1.234))
        assert drift(rot) == pytest.approx(drift(cfg), abs=1e-10)
        assert potential(rot) == pytest.approx(potential(cfg), abs=1e-10)


@given(st.floats(min_value=-50.0, max_value=50.0,
                 allow_nan=False, allow_infinity=False))
def test_wrap_angle_range(x):
    w = wrap_angle(x)
    assert 0.0 <= w < TWO_PI
    assert math.cos(w) == pytest.approx(math.cos(x), abs=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=2, max_value=7), st.integers(min_value=0, max_value=10**6))
def test_drift_antisymmetry_property(n, seed):
    rng = np.random.default_rng(seed)
    cfg = distinct_config(rng, n)
    # total angular momentum is conserved by the interaction
    assert abs(np.sum(drift(cfg))) < 1e-9


class TestStepping:
    def test_step_noise_shape_checked(self):
        p = ProcessParams(n_particles=2, kappa=2.0)
        with pytest.raises(ValueError):
            step(equally_spaced(2), p, np.zeros(3))

    def test_one_step_variance(self):
        # increment variance about the drift is kappa*dt, within 3 SE
        kappa, dt, reps = 2.0, 1e-3, 4000
        p = ProcessParams(n_particles=2, kappa=kappa, dt=dt)
        rng = np.random.default_rng(11)
        cfg = equally_spaced(2)
        incs = []
        for _ in range(reps):
            noise = rng.standard_normal(2)
            new = step(cfg, p, noise)
            d = wrap_angle(new.angles - cfg.angles + np.pi) - np.pi
            incs.extend(d - drift(cfg) * dt)
        var = np.var(incs)
        se = kappa * dt * math.sqrt(2.0 / (len(incs) - 1))
        assert abs(var - kappa * dt) < 3.0 * se

    def test_order_preserved_along_path(self):
        rec = simulate(ProcessParams(n_particles=4, kappa=6.0, seed=2),
                       t_end=1.0)
        orders = np.argsort(rec.states, axis=1)
        # cyclic order never changes, only a possible common rotation
        ranks = np.argsort(orders, axis=1)
        first = ranks[0]
        for r in ranks:
            shift = (r - first) % 4
            assert np.all(shift == shift[0])

    def test_collision_error_on_absurd_step(self):
        a = np.array([0.0, 1e-9])
        with pytest.raises(CollisionError):
            for _ in range(200):
                a, _ = dyson.step_attempt(a, 8.0, 10.0, np.array([3.0, -3.0]))


class TestSimulate:
    def test_shapes_and_grid(self):
        p = ProcessParams(n_particles=3, kappa=2.0, dt=1e-3)
        rec = simulate(p, t_end=0.05)
        assert rec.states.shape == (rec.times.size, 3)
        assert rec.times[0] == 0.0
        assert np.allclose(np.diff(rec.times), 1e-3)

    def test_determinism(self):
        p = ProcessParams(n_particles=3, kappa=3.0, seed=42)
        a = simulate(p, t_end=0.2)
        b = simulate(p, t_end=0.2)
        assert np.array_equal(a.states, b.states)

    def test_seed_changes_path(self):
        pa = ProcessParams(n_particles=3, kappa=3.0, seed=1)
        pb = ProcessParams(n_particles=3, kappa=3.0, seed=2)
        a = simulate(pa, t_end=0.1)
        b = simulate(pb, t_end=0.1)
        assert not np.allclose(a.states[-1], b.states[-1])

    def test_small_kappa_is_gradient_flow(self):
        # vanishing noise: relaxation to the equally spaced configuration
        rng = np.random.default_rng(9)
        init = distinct_config(rng, 3, min_gap=0.5)
        p = ProcessParams(n_particles=3, kappa=1e-8, dt=2e-3)
        rec = simulate(p, t_end=8.0, initial=init)
        gaps = np.sort(np.diff(np.sort(rec.states[-1])))
        assert np.max(np.abs(
            np.append(gaps, TWO_PI - gaps.sum()) - TWO_PI / 3)) < 1e-2

    def test_single_particle_pure_diffusion(self):
        p = ProcessParams(n_particles=1, kappa=4.0, seed=3)
        rec = simulate(p, t_end=0.5, record_noise=True)
        incs = np.diff(np.unwrap(rec.states[:, 0]))
        # recorded increments are sqrt(dt)-scaled draws; kappa multiplies in
        expected = math.sqrt(4.0) * rec.brownian_increments[:, 0]
        assert np.allclose(incs, expected, atol=1e-12)


class TestStationarySampling:
    def test_batch_shape_and_meta(self):
        p = ProcessParams(n_particles=2, kappa=2.0, seed=5)
        batch = sample_stationary(p, 64)
        assert batch.rows.shape == (64, 2)
        assert batch.meta["kappa"] == 2.0
        assert batch.meta["beta"] == 2.0

    def test_determinism(self):
        p = ProcessParams(n_particles=2, kappa=4.0, seed=6)
        a = sample_stationary(p, 32)
        b = sample_stationary(p, 32)
        assert np.array_equal(a.rows, b.rows)

    def test_gap_law_small(self):
        # coarse check at modest sample size; the tight version is the
        # acceptance suite
        p = ProcessParams(n_particles=2, kappa=4.0, seed=7)
        batch = sample_stationary(p, 4000)
        d = ks_statistic(row_gaps(batch.rows), gap_cdf_n2(1.0))
        assert d < ks_threshold(4000, alpha=0.01)

    def test_two_seeds_same_law(self):
        pa = ProcessParams(n_particles=3, kappa=2.0, seed=8)
        pb = ProcessParams(n_particles=3, kappa=2.0, seed=9)
        ga = row_gaps(sample_stationary(pa, 3000).rows)
        gb = row_gaps(sample_stationary(pb, 3000).rows)
        assert ks_two_sample(ga, gb) < ks_two_sample_threshold(3000, 3000)

    def test_single_particle_uniform(self):
        p = ProcessParams(n_particles=1, kappa=2.0, seed=10, burn_in=2.0)
        rows = sample_stationary(p, 4000).rows[:, 0]
        d = ks_statistic(rows, lambda x: np.asarray(x) / TWO_PI)
        assert d < ks_threshold(4000, alpha=0.01)
