"""Randomized cross-validation of the two tree builders.

Each case draws a model, dimension, starting phase point, signed step size,
termination criterion, and mass matrix from a case key, builds the same tree
with both builders from identical inputs, and demands bitwise agreement on
endpoints, proposal, flags, step counts, weights, and momentum sums.  The
battery is the package's flagship check: the memory-light iterative builder
must be indistinguishable from the recursive reference.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .integrator import MassMatrix, PhasePoint
from .models import (
    LogisticRegressionData,
    TargetModel,
    funnel_model,
    gaussian_model,
    logistic_regression_model,
    std_normal_model,
)
from .rng import RngKey
from .sampler import SamplerConfig
from .tree import CLASSIC, GENERALIZED, build_tree_iterative, build_tree_recursive, trees_equal


@dataclass
class CaseResult:
    depth: int
    trial: int
    model: str
    dim: int
    eps: float
    criterion: str
    matched: bool


@dataclass
class BatteryResult:
    per_depth: dict = field(default_factory=dict)  # depth -> (passed, total)
    failures: list = field(default_factory=list)  # CaseResult entries

    @property
    def all_passed(self) -> bool:
        return not self.failures

    @property
    def total(self) -> int:
        return sum(t for _, t in self.per_depth.values())


def _random_model(gen: np.random.Generator) -> TargetModel:
    kind = int(gen.integers(0, 4))
    if kind == 0:
        return std_normal_model(int(gen.integers(1, 11)))
    if kind == 1:
        dim = int(gen.integers(1, 11))
        return gaussian_model(np.exp(gen.uniform(-2.0, 2.0, dim)))
    if kind == 2:
        rows = int(gen.integers(5, 21))
        feats = int(gen.integers(1, 4))
        x = gen.standard_normal((rows, feats))
        y = (gen.random(rows) < 0.5).astype(float)
        return logistic_regression_model(LogisticRegressionData(x, y))
    return funnel_model(int(gen.integers(2, 11)))


def build_case(case_key: RngKey, depth: int, trial: int):
    """Deterministically derive one comparison case from its key."""
    gen = case_key.fold(0).generator()
    model = _random_model(gen)
    if gen.random() < 0.5:
        mass = MassMatrix.identity(model.dim)
    else:
        mass = MassMatrix(gen.uniform(0.5, 2.0, model.dim))
    eps = float(gen.uniform(0.01, 1.0))
    if gen.random() < 0.5:
        eps = -eps
    criterion = CLASSIC if trial % 2 == 0 else GENERALIZED
    q = gen.standard_normal(model.dim) * 1.5
    r = gen.standard_normal(model.dim) * mass.momentum_std
    z = PhasePoint.from_position(model, q, r)
    config = SamplerConfig(
        step_size=abs(eps),
        mass=mass,
        max_tree_depth=max(depth, 1),
        criterion=criterion,
    )
    return z, eps, config, model


def compare_builders(depth_max: int, trials: int, seed: int) -> BatteryResult:
    """Run ``trials`` cases at every depth in [0, depth_max]."""
    root = RngKey.from_seed(seed)
    result = BatteryResult()
    for depth in range(depth_max + 1):
        passed = 0
        for trial in range(trials):
            case_key = root.fold(depth * 1_000_000 + trial)
            z, eps, config, model = build_case(case_key, depth, trial)
            tree_key = case_key.fold(1)
            tree_rec = build_tree_recursive(z, depth, eps, config, model, tree_key)
            tree_it = build_tree_iterative(z, depth, eps, config, model, tree_key)
            matched = trees_equal(tree_rec, tree_it)
            if matched:
                passed += 1
            else:
                result.failures.append(
                    CaseResult(depth, trial, model.name, model.dim, eps, config.criterion, False)
                )
        result.per_depth[depth] = (passed, trials)
    return result
