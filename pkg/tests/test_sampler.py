"""Transition kernels: NUTS doubling behavior and the fixed-length HMC baseline."""

import math

import numpy as np
import pytest

from turnstile.integrator import MassMatrix, PhasePoint
from turnstile.models import std_normal_model
from turnstile.rng import RngKey
from turnstile.sampler import (
    ITERATIVE,
    RECURSIVE,
    SamplerConfig,
    hmc_transition,
    nuts_transition,
    nuts_transition_from,
)


def config_for(dim, step_size, **kw):
    return SamplerConfig(step_size=step_size, mass=MassMatrix.identity(dim), **kw)


class CountingModel:
    """Wraps a model and counts gradient evaluations."""

    def __init__(self, inner):
        self._inner = inner
        self.name = inner.name
        self.dim = inner.dim
        self.params = inner.params
        self.gradient_calls = 0

    def potential(self, q):
        return self._inner.potential(q)

    def gradient(self, q):
        self.gradient_calls += 1
        return self._inner.gradient(q)


class TestNutsTransition:
    def test_depth_cap_one_is_single_step_accept_reject(self):
        model = std_normal_model(1)
        cfg = config_for(1, 0.9, max_tree_depth=1)
        key = RngKey.from_seed(1)
        q = np.array([0.2])
        draws = []
        for i in range(4000):
            q, stats = nuts_transition(q, cfg, model, key.fold(i))
            assert stats.leapfrog_calls == 1
            draws.append(q[0])
        draws = np.asarray(draws[500:])
        assert abs(draws.mean()) < 0.1
        assert 0.8 < draws.var() < 1.2

    def test_periodic_target_terminates_before_depth_cap(self):
        model = std_normal_model(1)
        cfg = config_for(1, 0.1)
        key = RngKey.from_seed(7)
        q = np.array([0.5])
        early = 0
        for i in range(1000):
            q, stats = nuts_transition(q, cfg, model, key.fold(i))
            early += stats.depth_reached < cfg.max_tree_depth
        assert early >= 990

    def test_builder_swap_is_bitwise_identical(self):
        model = std_normal_model(3)
        key = RngKey.from_seed(42)
        streams = {}
        for builder in (RECURSIVE, ITERATIVE):
            cfg = config_for(3, 0.4, tree_builder=builder)
            q = np.zeros(3)
            out = []
            for i in range(200):
                q, stats = nuts_transition(q, cfg, model, key.fold(i))
                out.append((q.copy(), stats))
            streams[builder] = out
        for (qa, sa), (qb, sb) in zip(streams[RECURSIVE], streams[ITERATIVE]):
            assert np.array_equal(qa, qb)
            assert sa == sb

    def test_leapfrog_calls_equal_gradient_calls(self):
        model = CountingModel(std_normal_model(4))
        cfg = config_for(4, 0.3)
        key = RngKey.from_seed(5)
        z = PhasePoint.from_position(model, np.zeros(4), np.zeros(4))
        start_count = model.gradient_calls
        for i in range(50):
            before = model.gradient_calls
            z, stats = nuts_transition_from(z, cfg, model, key.fold(i))
            assert model.gradient_calls - before == stats.leapfrog_calls
        assert start_count == 1  # sole extra evaluation was the initial cache

    def test_accept_stat_in_unit_interval_and_energy_finite(self):
        model = std_normal_model(2)
        cfg = config_for(2, 0.5)
        key = RngKey.from_seed(9)
        q = np.array([1.0, -1.0])
        for i in range(100):
            q, stats = nuts_transition(q, cfg, model, key.fold(i))
            assert 0.0 <= stats.accept_stat <= 1.0
            assert math.isfinite(stats.energy)
            assert stats.leapfrog_calls >= 1

    def test_divergence_recorded_not_raised(self):
        model = std_normal_model(1)
        cfg = SamplerConfig(step_size=50.0, mass=MassMatrix.identity(1),
                            divergence_threshold=50.0)
        key = RngKey.from_seed(3)
        q = np.array([3.0])
        seen = False
        for i in range(50):
            q, stats = nuts_transition(q, cfg, model, key.fold(i))
            seen = seen or stats.diverged
            assert np.isfinite(q).all()
        assert seen

    def test_config_validation(self):
        with pytest.raises(ValueError):
            config_for(1, -0.1)
        with pytest.raises(ValueError):
            config_for(1, 0.1, max_tree_depth=0)
        with pytest.raises(ValueError):
            config_for(1, 0.1, max_tree_depth=31)
        with pytest.raises(ValueError):
            config_for(1, 0.1, criterion="bogus")
        with pytest.raises(ValueError):
            config_for(1, 0.1, tree_builder="bogus")


class TestHmcTransition:
    def test_tiny_step_accepts_and_stays(self):
        model = std_normal_model(2)
        cfg = config_for(2, 1e-6)
        q = np.array([0.7, -0.3])
        q2, stats = hmc_transition(q, cfg, model, RngKey.from_seed(1), num_steps=1)
        assert stats.accept_stat > 0.999999
        assert np.allclose(q2, q, atol=1e-5)

    def test_rejection_returns_exact_input(self):
        model = std_normal_model(1)
        cfg = config_for(1, 30.0)  # wildly unstable: always rejected
        q = np.array([0.25])
        rejected = 0
        for i in range(20):
            q2, stats = hmc_transition(q, cfg, model, RngKey.from_seed(2).fold(i), 3)
            if stats.accept_stat < 1e-12:
                rejected += 1
                assert q2 is q
        assert rejected == 20

    def test_rejects_bad_num_steps(self):
        model = std_normal_model(1)
        with pytest.raises(ValueError):
            hmc_transition(np.zeros(1), config_for(1, 0.1), model, RngKey.from_seed(0), 0)

    def test_stationary_moments_match_target(self):
        # Long-run check against the exact standard normal.
        model = std_normal_model(1)
        cfg = config_for(1, 0.2)
        key = RngKey.from_seed(314)
        q = np.array([0.0])
        draws = np.empty(20000)
        for i in range(draws.size):
            q, _ = hmc_transition(q, cfg, model, key.fold(i), num_steps=50)
            draws[i] = q[0]
        assert abs(draws.mean()) < 0.05
        assert 0.9 < draws.var() < 1.1


class TestDetailedBalanceSmoke:
    @pytest.mark.parametrize("dim", [1, 5])
    def test_ks_against_exact_marginals(self, dim):
        from scipy import stats

        from turnstile.chains import RunConfig, run

        config = RunConfig(model={"model": "std_normal", "params": {"dim": dim}},
                           num_chains=4, num_warmup=200, num_samples=5000,
                           seed=60 + dim)
        pooled = np.concatenate([r.samples for r in run(config)])
        threshold = 0.001 / dim  # Bonferroni across the marginals tested
        for d in range(dim):
            p = stats.kstest(pooled[:, d], "norm").pvalue
            assert p > threshold, (d, p)


class TestClassicCriterionEndToEnd:
    def test_classic_ks_against_exact_marginals(self):
        # Exercises the time-oriented displacement check through full
        # transitions in both directions.
        from scipy import stats

        from turnstile.chains import RunConfig, run
        from turnstile.integrator import MassMatrix
        from turnstile.tree import CLASSIC

        base = SamplerConfig(step_size=1.0, mass=MassMatrix.identity(2),
                             criterion=CLASSIC)
        config = RunConfig(model={"model": "std_normal", "params": {"dim": 2}},
                           num_chains=4, num_warmup=200, num_samples=3000,
                           seed=71, sampler=base)
        pooled = np.concatenate([r.samples for r in run(config)])
        for d in range(2):
            assert stats.kstest(pooled[:, d], "norm").pvalue > 0.001 / 2
