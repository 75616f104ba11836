"""Single-transition kernels: the doubling NUTS step and fixed-length HMC.

One NUTS transition refreshes the momentum, then repeatedly appends a tree
of doubling depth to a random end of the trajectory until a tree stops
internally (U-turn or divergence), the merged trajectory U-turns across its
extremes, or the depth cap is hit.  The proposal moves to each new tree's
candidate with probability min(1, w_new / w_old) -- biased toward the fresh
half, which pushes the draw away from the current point.

Randomness is consumed from per-purpose child keys (momentum, the
direction/acceptance stream, one key per tree build), so swapping the tree
builder or the execution mode can never shift any draw.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .integrator import MassMatrix, PhasePoint, hamiltonian, is_divergent, leapfrog
from .models import TargetModel
from .rng import RngKey
from .tree import (
    CLASSIC,
    GENERALIZED,
    build_tree_iterative,
    build_tree_recursive,
    check_uturn,
)
from .treemath import MAX_TREE_DEPTH_LIMIT

RECURSIVE = "recursive"
ITERATIVE = "iterative"


@dataclass(frozen=True)
class SamplerConfig:
    """Knobs shared by the tree builders and the transition kernel."""

    step_size: float
    mass: MassMatrix
    max_tree_depth: int = 10
    criterion: str = GENERALIZED
    divergence_threshold: float = 1000.0
    tree_builder: str = ITERATIVE

    def __post_init__(self):
        if not (self.step_size > 0 and math.isfinite(self.step_size)):
            raise ValueError("step_size must be positive and finite")
        if not 1 <= self.max_tree_depth <= MAX_TREE_DEPTH_LIMIT:
            raise ValueError(f"max_tree_depth must be in [1, {MAX_TREE_DEPTH_LIMIT}]")
        if self.criterion not in (CLASSIC, GENERALIZED):
            raise ValueError(f"unknown criterion {self.criterion!r}")
        if self.tree_builder not in (RECURSIVE, ITERATIVE):
            raise ValueError(f"unknown tree builder {self.tree_builder!r}")
        if self.divergence_threshold <= 0:
            raise ValueError("divergence_threshold must be positive")

    @property
    def build_tree(self):
        return build_tree_recursive if self.tree_builder == RECURSIVE else build_tree_iterative

    def with_step_size(self, step_size: float) -> "SamplerConfig":
        return replace(self, step_size=step_size)

    def with_mass(self, mass: MassMatrix) -> "SamplerConfig":
        return replace(self, mass=mass)


@dataclass(frozen=True)
class TransitionStats:
    """Per-transition bookkeeping for adaptation and diagnostics."""

    depth_reached: int
    leapfrog_calls: int
    diverged: bool
    accept_stat: float
    energy: float


def nuts_transition_from(
    z0: PhasePoint,
    config: SamplerConfig,
    model: TargetModel,
    rng: RngKey,
) -> tuple[PhasePoint, TransitionStats]:
    """One NUTS transition starting from a phase point with cached gradient.

    Returns the selected phase point (its position is the draw; its cache
    seeds the next transition without re-evaluating the model).
    """
    mass = config.mass
    r0 = rng.fold(0).generator().standard_normal(model.dim) * mass.momentum_std
    z = z0.with_momentum(r0)
    h0 = hamiltonian(z, mass)

    gen = rng.fold(1).generator()  # direction bits and acceptance uniforms
    traj_left = z  # earliest point in time
    traj_right = z  # latest point in time
    proposal = z
    log_weight = -h0
    rho = z.momentum
    leapfrogs = 0
    sum_metro = 0.0
    diverged = False
    depth_reached = 0

    for j in range(config.max_tree_depth):
        go_right = gen.random() < 0.5
        eps = config.step_size if go_right else -config.step_size
        frontier = traj_right if go_right else traj_left
        tree = config.build_tree(
            frontier, j, eps, config, model, rng.fold(2 + j), h_ref=h0
        )
        leapfrogs += tree.leapfrog_count
        sum_metro += tree.sum_metropolis

        if tree.turning or tree.diverging:
            # The half-built flank is discarded; the trajectory so far stands.
            diverged = diverged or tree.diverging
            depth_reached = j
            break

        u = gen.random()
        if tree.log_weight >= log_weight or u < math.exp(tree.log_weight - log_weight):
            proposal = tree.proposal
        log_weight = float(np.logaddexp(log_weight, tree.log_weight))
        rho = rho + tree.momentum_sum
        if go_right:
            traj_right = tree.right
        else:
            traj_left = tree.right  # last generated leaf is the new earliest point
        depth_reached = j + 1

        momentum_sum = rho if config.criterion == GENERALIZED else None
        if check_uturn(traj_left, traj_right, mass, config.criterion, momentum_sum):
            break

    stats = TransitionStats(
        depth_reached=depth_reached,
        leapfrog_calls=leapfrogs,
        diverged=diverged,
        accept_stat=sum_metro / leapfrogs if leapfrogs else 0.0,
        energy=hamiltonian(proposal, mass),
    )
    return proposal, stats


def nuts_transition(
    q: np.ndarray,
    config: SamplerConfig,
    model: TargetModel,
    rng: RngKey,
) -> tuple[np.ndarray, TransitionStats]:
    """Position-in/position-out wrapper around :func:`nuts_transition_from`."""
    z0 = PhasePoint.from_position(model, q, np.zeros(model.dim))
    z_new, stats = nuts_transition_from(z0, config, model, rng)
    return z_new.position, stats


def hmc_transition(
    q: np.ndarray,
    config: SamplerConfig,
    model: TargetModel,
    rng: RngKey,
    num_steps: int,
) -> tuple[np.ndarray, TransitionStats]:
    """Fixed-length HMC baseline: ``num_steps`` leapfrogs then accept/reject.

    The trajectory-length tuning burden this carries is exactly what the
    doubling transition above removes.
    """
    if num_steps < 1:
        raise ValueError("num_steps must be >= 1")
    mass = config.mass
    r0 = rng.fold(0).generator().standard_normal(model.dim) * mass.momentum_std
    z = PhasePoint.from_position(model, q, r0)
    h0 = hamiltonian(z, mass)

    z_new = z
    steps_taken = 0
    for _ in range(num_steps):
        z_new = leapfrog(z_new, config.step_size, mass, model)
        steps_taken += 1
        if not math.isfinite(z_new.potential):
            break
    h1 = hamiltonian(z_new, mass)
    delta = h1 - h0
    p_accept = math.exp(-delta) if math.isfinite(delta) and delta > 0 else (
        1.0 if math.isfinite(delta) else 0.0
    )
    accept = rng.fold(1).generator().random() < p_accept
    result = z_new if accept else z
    stats = TransitionStats(
        depth_reached=0,
        leapfrog_calls=steps_taken,
        diverged=is_divergent(delta, config.divergence_threshold),
        accept_stat=p_accept,
        energy=hamiltonian(result, mass),
    )
    return (result.position if accept else q), stats
