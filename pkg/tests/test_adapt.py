"""Warmup adaptation: dual averaging, online variance, phase schedule."""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from turnstile.adapt import (
    DualAveragingState,
    WelfordState,
    da_update,
    find_reasonable_step_size,
    warmup_schedule,
    welford_regularized_variance,
    welford_update,
    welford_variance,
)
from turnstile.integrator import MassMatrix, PhasePoint
from turnstile.models import std_normal_model
from turnstile.rng import RngKey


class TestDualAveraging:
    def test_on_target_acceptance_is_a_fixed_point(self):
        state = DualAveragingState(mu=0.4, log_eps=0.4)
        for _ in range(200):
            state = da_update(state, state.delta)
        assert state.h_bar == pytest.approx(0.0, abs=1e-14)
        assert state.log_eps == pytest.approx(0.4, abs=1e-12)

    def test_single_update_hand_computed(self):
        state = DualAveragingState(mu=0.0, log_eps=0.0)
        state = da_update(state, 0.0)
        assert state.t == 1
        assert state.h_bar == pytest.approx(0.8 / 11.0, abs=1e-15)
        assert state.log_eps == pytest.approx(-(1.0 / 0.05) * (0.8 / 11.0), abs=1e-12)
        # log_eps_bar at t=1 equals log_eps since the weight is 1
        assert state.log_eps_bar == pytest.approx(state.log_eps, abs=1e-15)

    def test_persistently_low_acceptance_shrinks_step(self):
        state = DualAveragingState.init(1.0)
        trail = []
        for _ in range(1000):
            state = da_update(state, 0.2)
            trail.append(state.log_eps)
        # After the early shrink-to-mu transient, the iterates decrease.
        assert all(b < a for a, b in zip(trail[10:], trail[11:]))
        assert state.step_size < 1.0

    def test_rejects_out_of_range_accept(self):
        state = DualAveragingState.init(0.5)
        with pytest.raises(ValueError):
            da_update(state, 1.5)
        with pytest.raises(ValueError):
            da_update(state, -0.1)

    def test_init_anchors_above_initial_step(self):
        state = DualAveragingState.init(0.25)
        assert state.mu == pytest.approx(math.log(2.5))
        assert state.step_size == pytest.approx(0.25)


class TestWelford:
    def test_constant_stream(self):
        state = WelfordState.init(1)
        for _ in range(3):
            state = welford_update(state, np.array([1.0]))
        assert state.mean[0] == pytest.approx(1.0)
        assert welford_variance(state)[0] == pytest.approx(0.0)
        assert welford_regularized_variance(state)[0] > 0.0

    def test_two_samples_hand_computed(self):
        state = WelfordState.init(1)
        state = welford_update(state, np.array([0.0]))
        state = welford_update(state, np.array([2.0]))
        assert state.mean[0] == pytest.approx(1.0)
        assert welford_variance(state)[0] == pytest.approx(2.0)

    def test_variance_undefined_below_two(self):
        state = welford_update(WelfordState.init(1), np.array([3.0]))
        with pytest.raises(ValueError):
            welford_variance(state)

    def test_statistical_recovery(self):
        gen = RngKey.from_seed(88).fold(0).generator()
        state = WelfordState.init(1)
        for x in gen.standard_normal(10000) * 2.0:
            state = welford_update(state, np.array([x]))
        assert 3.6 <= welford_variance(state)[0] <= 4.4

    @given(st.lists(st.floats(-1e6, 1e6), min_size=2, max_size=60))
    def test_matches_numpy_oracle(self, values):
        state = WelfordState.init(1)
        for v in values:
            state = welford_update(state, np.array([v]))
        arr = np.asarray(values)
        assert state.mean[0] == pytest.approx(arr.mean(), rel=1e-9, abs=1e-6)
        assert welford_variance(state)[0] == pytest.approx(
            arr.var(ddof=1), rel=1e-6, abs=1e-3
        )

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            welford_update(WelfordState.init(2), np.zeros(3))


class TestWarmupSchedule:
    def test_golden_1000(self):
        assert warmup_schedule(1000).phases == (
            ("init", 150),
            ("window", 25), ("window", 50), ("window", 100), ("window", 200),
            ("window", 300), ("window", 75),
            ("terminal", 100),
        )

    def test_golden_minimum(self):
        assert warmup_schedule(20).phases == (("init", 3), ("window", 15), ("terminal", 2))

    def test_rejects_tiny_budgets(self):
        with pytest.raises(ValueError):
            warmup_schedule(19)

    @pytest.mark.parametrize("total", list(range(20, 2500, 37)))
    def test_partition_invariant(self, total):
        schedule = warmup_schedule(total)
        assert schedule.total == total
        kinds = [k for k, _ in schedule.phases]
        assert kinds[0] == "init" and kinds[-1] == "terminal"
        assert all(k == "window" for k in kinds[1:-1]) and len(kinds) >= 3
        assert all(length > 0 for _, length in schedule.phases)

    def test_window_steps_cover_middle(self):
        schedule = warmup_schedule(1000)
        inside, ends = schedule.window_steps()
        assert min(inside) == 150 and max(inside) == 899
        assert len(inside) == 750
        assert ends == {174, 224, 324, 524, 824, 899}


class TestFindReasonableStepSize:
    def test_std_normal_lands_near_unit(self):
        model = std_normal_model(5)
        z = PhasePoint.from_position(model, np.zeros(5), np.zeros(5))
        eps = find_reasonable_step_size(z, MassMatrix.identity(5), model,
                                        RngKey.from_seed(4))
        assert 0.125 <= eps <= 8.0

    def test_narrow_target_gets_small_step(self):
        from turnstile.models import gaussian_model

        model = gaussian_model([1e-4])
        z = PhasePoint.from_position(model, np.array([0.01]), np.zeros(1))
        eps = find_reasonable_step_size(z, MassMatrix.identity(1), model,
                                        RngKey.from_seed(4))
        assert eps < 0.1

    def test_deterministic_in_key(self):
        model = std_normal_model(3)
        z = PhasePoint.from_position(model, np.ones(3), np.zeros(3))
        a = find_reasonable_step_size(z, MassMatrix.identity(3), model, RngKey.from_seed(1))
        b = find_reasonable_step_size(z, MassMatrix.identity(3), model, RngKey.from_seed(1))
        assert a == b


class TestWarmupQuality:
    def test_adapted_step_hits_target_band_on_std_normal(self):
        from turnstile.chains import RunConfig, run

        config = RunConfig(model={"model": "std_normal", "params": {"dim": 10}},
                           num_chains=1, num_warmup=1000, num_samples=500, seed=23)
        results = run(config)
        accept = float(np.mean([s.accept_stat for s in results[0].stats]))
        assert 0.7 <= accept <= 0.9

    def test_step_size_freezes_at_averaged_iterate(self):
        from turnstile.adapt import WarmupAdapter
        from turnstile.integrator import MassMatrix
        from turnstile.sampler import SamplerConfig

        base = SamplerConfig(step_size=0.5, mass=MassMatrix.identity(2))
        adapter = WarmupAdapter(base, num_warmup=60)
        gen = RngKey.from_seed(2).fold(0).generator()
        for i in range(60):
            adapter.config_for_draw()
            adapter.update(i, gen.standard_normal(2), float(gen.uniform(0.5, 1.0)))
        final = adapter.finalize()
        assert final.step_size == pytest.approx(math.exp(adapter.da.log_eps_bar))
        assert np.array_equal(final.mass.inv_diag, adapter.mass.inv_diag)


def test_regularized_variance_exact_formula():
    state = WelfordState.init(1)
    for v in (0.0, 2.0, 4.0):
        state = welford_update(state, np.array([v]))
    raw = welford_variance(state)[0]
    expect = (3.0 / 8.0) * raw + (5.0 / 8.0) * 1e-3
    assert welford_regularized_variance(state)[0] == pytest.approx(expect, rel=1e-15)
