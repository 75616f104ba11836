"""Quick self-contained checks behind ``turnstile selftest``.

A condensed version of the test suite: analytic examples with known answers
and the core properties, small enough to finish in seconds.  Each check
raises on failure; the CLI prints one PASS/FAIL line per check.
"""

from __future__ import annotations

import math

import numpy as np

from .adapt import DualAveragingState, WelfordState, da_update, warmup_schedule, welford_update, welford_variance
from .crosscheck import compare_builders
from .integrator import MassMatrix, PhasePoint, hamiltonian, leapfrog
from .models import fd_gradient, funnel_model, gaussian_model, logistic_regression_model, std_normal_model, LogisticRegressionData
from .rng import RngKey
from .sampler import SamplerConfig
from .tree import TreeTrace, build_tree_iterative
from .treemath import bit_count, candidate_set, subtree_leftmost, trailing_ones


def check_bit_math():
    assert bit_count(6) == 2 and bit_count(0) == 0 and bit_count(11) == 3
    assert trailing_ones(11) == 2 and trailing_ones(6) == 0 and trailing_ones(7) == 3
    assert candidate_set(11) == [(10, 2), (8, 1)]
    assert candidate_set(6) == []
    assert candidate_set(7) == [(6, 2), (4, 1), (0, 0)]
    assert subtree_leftmost(6, 1) == 6 and subtree_leftmost(11, 2) == 8
    for n in range(1 << 12):
        expect = [
            (subtree_leftmost(n, k), bit_count(subtree_leftmost(n, k)))
            for k in range(1, trailing_ones(n) + 1)
        ]
        assert candidate_set(n) == expect, f"candidate_set({n}) brute-force mismatch"


def _builtin_models():
    gen = RngKey.from_seed(2024).fold(0).generator()
    x = gen.standard_normal((12, 3))
    y = (gen.random(12) < 0.5).astype(float)
    return [
        std_normal_model(3),
        gaussian_model([4.0, 0.25, 1.0]),
        logistic_regression_model(LogisticRegressionData(x, y)),
        funnel_model(4),
    ]


def check_gradients():
    gen = RngKey.from_seed(7).fold(0).generator()
    for model in _builtin_models():
        for _ in range(20):
            q = gen.standard_normal(model.dim)
            analytic = model.gradient(q)
            numeric = fd_gradient(model, q, 1e-5)
            rel = np.linalg.norm(analytic - numeric) / (1.0 + np.linalg.norm(analytic))
            assert rel <= 1e-5, f"{model.name}: gradient mismatch {rel:.2e}"


def check_leapfrog():
    model = std_normal_model(1)
    mass = MassMatrix.identity(1)
    z = PhasePoint.from_position(model, [1.0], [0.0])
    z1 = leapfrog(z, 0.1, mass, model)
    assert abs(z1.position[0] - 0.995) < 1e-12 and abs(z1.momentum[0] + 0.09975) < 1e-12
    back = leapfrog(z1, -0.1, mass, model)
    assert abs(back.position[0] - 1.0) < 1e-10 and abs(back.momentum[0]) < 1e-10


def check_storage_schedule():
    model = std_normal_model(2)
    config = SamplerConfig(step_size=1e-3, mass=MassMatrix.identity(2), max_tree_depth=10)
    z = PhasePoint.from_position(model, [0.5, -0.2], [1.0, 0.3])
    trace = TreeTrace()
    tree = build_tree_iterative(z, 4, 1e-3, config, model, RngKey.from_seed(3), trace=trace)
    assert not tree.turning and tree.leapfrog_count == 16
    at_11 = [(slot, leaf) for (n, slot, leaf) in trace.checks if n == 11]
    assert at_11 == [(2, 10), (1, 8)], f"schedule at step 11 was {at_11}"
    for depth in range(1, 9):
        trace = TreeTrace()
        build_tree_iterative(z, depth, 1e-3, config, model, RngKey.from_seed(4), trace=trace)
        assert trace.max_occupied <= depth


def check_builders_agree():
    result = compare_builders(depth_max=6, trials=10, seed=99)
    assert result.all_passed, f"{len(result.failures)} mismatching cases"


def check_dual_averaging():
    state = DualAveragingState(mu=0.0, log_eps=0.0)
    state = da_update(state, 0.0)
    assert abs(state.h_bar - 0.8 / 11.0) < 1e-12
    assert abs(state.log_eps + (1.0 / 0.05) * 0.8 / 11.0) < 1e-12
    fixed = DualAveragingState(mu=0.3, log_eps=0.3)
    for _ in range(50):
        fixed = da_update(fixed, fixed.delta)
    assert abs(fixed.h_bar) < 1e-12 and abs(fixed.log_eps - 0.3) < 1e-12


def check_welford_and_schedule():
    state = WelfordState.init(1)
    for v in (0.0, 2.0):
        state = welford_update(state, np.array([v]))
    assert abs(state.mean[0] - 1.0) < 1e-12
    assert abs(welford_variance(state)[0] - 2.0) < 1e-12
    phases = warmup_schedule(1000).phases
    assert phases == (
        ("init", 150),
        ("window", 25), ("window", 50), ("window", 100), ("window", 200),
        ("window", 300), ("window", 75),
        ("terminal", 100),
    )
    assert warmup_schedule(20).phases == (("init", 3), ("window", 15), ("terminal", 2))


def check_hamiltonian_drift():
    model = std_normal_model(1)
    mass = MassMatrix.identity(1)
    z = PhasePoint.from_position(model, [1.0], [0.5])
    h0 = hamiltonian(z, mass)
    worst = 0.0
    for _ in range(100):
        z = leapfrog(z, 0.1, mass, model)
        worst = max(worst, abs(hamiltonian(z, mass) - h0))
    assert worst < 0.01, f"energy drift {worst:.4f}"


def all_checks():
    return [
        ("bit-math", check_bit_math),
        ("gradients-vs-finite-differences", check_gradients),
        ("leapfrog-values-and-reversibility", check_leapfrog),
        ("storage-schedule", check_storage_schedule),
        ("builders-agree", check_builders_agree),
        ("dual-averaging", check_dual_averaging),
        ("welford-and-schedule", check_welford_and_schedule),
        ("hamiltonian-drift", check_hamiltonian_drift),
    ]
