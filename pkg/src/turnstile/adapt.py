"""Warmup adaptation: dual-averaging step size and windowed mass estimation.

The warmup budget is carved into an initial step-size-only buffer, a block
of covariance windows, and a terminal step-size buffer.  One dual-averaging
run drives the log step size toward the target acceptance statistic across
all of warmup; its decaying gains absorb the optimum shifts caused by mass
installs, and the averaged iterate gets the whole budget to settle (a fresh
averaging epoch after the last install would leave it oscillation-biased
toward small, over-accepting steps).  Each covariance window accumulates
draws into an online variance estimate and installs the regularized
variance as the new inverse mass diagonal at its end.  At the end of warmup
the step size freezes at the averaged iterate and never moves again.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .integrator import MassMatrix, PhasePoint, hamiltonian, leapfrog
from .models import TargetModel
from .rng import RngKey
from .sampler import SamplerConfig


@dataclass(frozen=True)
class DualAveragingState:
    """State of the Nesterov dual-averaging recursion on log step size."""

    mu: float
    log_eps: float
    log_eps_bar: float = 0.0
    h_bar: float = 0.0
    t: int = 0
    gamma: float = 0.05
    t0: float = 10.0
    kappa: float = 0.75
    delta: float = 0.8

    @staticmethod
    def init(step_size: float, target_accept: float = 0.8) -> "DualAveragingState":
        # Shrink toward 10x the starting value so early iterates can explore up.
        return DualAveragingState(
            mu=math.log(10.0 * step_size),
            log_eps=math.log(step_size),
            delta=target_accept,
        )

    @property
    def step_size(self) -> float:
        return math.exp(self.log_eps)

    @property
    def averaged_step_size(self) -> float:
        return math.exp(self.log_eps_bar)


def da_update(state: DualAveragingState, accept_stat: float) -> DualAveragingState:
    """One dual-averaging step pulling acceptance toward ``state.delta``."""
    if not (0.0 <= accept_stat <= 1.0):
        raise ValueError("accept_stat must lie in [0, 1]")
    t = state.t + 1
    frac = 1.0 / (t + state.t0)
    h_bar = (1.0 - frac) * state.h_bar + frac * (state.delta - accept_stat)
    log_eps = state.mu - math.sqrt(t) / state.gamma * h_bar
    weight = t ** (-state.kappa)
    log_eps_bar = weight * log_eps + (1.0 - weight) * state.log_eps_bar
    return replace(state, t=t, h_bar=h_bar, log_eps=log_eps, log_eps_bar=log_eps_bar)


@dataclass(frozen=True)
class WelfordState:
    """Online mean and sum of squared deviations."""

    count: int
    mean: np.ndarray
    m2: np.ndarray

    @staticmethod
    def init(dim: int) -> "WelfordState":
        return WelfordState(0, np.zeros(dim), np.zeros(dim))


def welford_update(state: WelfordState, sample: np.ndarray) -> WelfordState:
    sample = np.asarray(sample, dtype=np.float64)
    if sample.shape != state.mean.shape:
        raise ValueError("sample dimension does not match the accumulator")
    count = state.count + 1
    delta = sample - state.mean
    mean = state.mean + delta / count
    m2 = state.m2 + delta * (sample - mean)
    return WelfordState(count, mean, m2)


def welford_variance(state: WelfordState) -> np.ndarray:
    """Unbiased sample variance; undefined below two samples."""
    if state.count < 2:
        raise ValueError("variance needs at least two samples")
    return state.m2 / (state.count - 1)


def welford_regularized_variance(state: WelfordState) -> np.ndarray:
    """Variance shrunk toward 1e-3, safe to install as an inverse mass."""
    var = welford_variance(state)
    n = state.count
    return (n / (n + 5.0)) * var + (5.0 / (n + 5.0)) * 1e-3


@dataclass(frozen=True)
class WarmupSchedule:
    """Phase layout: ("init", k) / ("window", k)* / ("terminal", k)."""

    phases: tuple

    @property
    def total(self) -> int:
        return sum(length for _, length in self.phases)

    def window_steps(self) -> tuple[set, set]:
        """(steps inside covariance windows, steps that end a window)."""
        inside, ends = set(), set()
        at = 0
        for kind, length in self.phases:
            if kind == "window":
                inside.update(range(at, at + length))
                ends.add(at + length - 1)
            at += length
        return inside, ends


def warmup_schedule(num_warmup: int) -> WarmupSchedule:
    """Carve ``num_warmup`` draws into adaptation phases.

    15% initial buffer, 10% terminal buffer.  The middle is covariance
    windows: sizes double from 25, a final doubling window absorbs whatever
    the doubling sequence leaves over, and the last tenth of the middle is a
    short trailing window.  When the middle cannot fit even the base window
    it becomes a single window.
    """
    if num_warmup < 20:
        raise ValueError("warmup adaptation needs at least 20 draws")
    init = round(0.15 * num_warmup)
    terminal = round(0.10 * num_warmup)
    middle = num_warmup - init - terminal

    reserve = middle // 10
    region = middle - reserve
    if region < 25:
        windows = [middle]
    else:
        windows = []
        used, w = 0, 25
        while used + w <= region:
            windows.append(w)
            used += w
            w *= 2
        if used < region:
            windows.append(region - used)
        if reserve > 0:
            windows.append(reserve)

    phases = [("init", init)]
    phases += [("window", w) for w in windows]
    phases.append(("terminal", terminal))
    schedule = WarmupSchedule(tuple(phases))
    assert schedule.total == num_warmup
    return schedule


def find_reasonable_step_size(
    z: PhasePoint,
    mass: MassMatrix,
    model: TargetModel,
    rng: RngKey,
    target: float = 0.5,
    init: float = 1.0,
) -> float:
    """Double or halve the step size until one leapfrog step crosses
    acceptance ``target``.

    Uses a single refreshed momentum for all probes.  Bounded to stay inside
    a sane range even on pathological targets.
    """
    r = rng.generator().standard_normal(model.dim) * mass.momentum_std
    z = z.with_momentum(r)
    h0 = hamiltonian(z, mass)

    def accept_prob(eps: float) -> float:
        h1 = hamiltonian(leapfrog(z, eps, mass, model), mass)
        return math.exp(min(0.0, h0 - h1)) if math.isfinite(h1) else 0.0

    eps = init
    direction = 1 if accept_prob(eps) > target else -1
    for _ in range(64):
        eps_next = eps * (2.0 ** direction)
        if not 1e-10 < eps_next < 1e7:
            break
        prob = accept_prob(eps_next)
        if (direction == 1 and prob <= target) or (direction == -1 and prob > target):
            return eps_next if direction == -1 else eps
        eps = eps_next
    return eps


class WarmupAdapter:
    """Per-chain warmup driver holding the evolving step size and mass."""

    def __init__(self, base: SamplerConfig, num_warmup: int, target_accept: float = 0.8):
        self.schedule = warmup_schedule(num_warmup)
        self._in_window, self._window_ends = self.schedule.window_steps()
        self.da = DualAveragingState.init(base.step_size, target_accept)
        self.mass = base.mass
        self.welford = WelfordState.init(base.mass.dim)
        self._base = base
        self.step_size_trace: list[float] = []

    def config_for_draw(self) -> SamplerConfig:
        cfg = self._base.with_step_size(self.da.step_size).with_mass(self.mass)
        self.step_size_trace.append(cfg.step_size)
        return cfg

    def update(self, step: int, position: np.ndarray, accept_stat: float) -> None:
        # Dual averaging runs uninterrupted across mass installs; its
        # decaying gains re-tune the step size after each metric change.
        self.da = da_update(self.da, min(1.0, max(0.0, accept_stat)))
        if step in self._in_window:
            self.welford = welford_update(self.welford, position)
        if step in self._window_ends and self.welford.count >= 2:
            self.mass = MassMatrix(welford_regularized_variance(self.welford))
            self.welford = WelfordState.init(self.mass.dim)

    def finalize(self) -> SamplerConfig:
        """Frozen post-warmup configuration (averaged step size, final mass)."""
        return self._base.with_step_size(self.da.averaged_step_size).with_mass(self.mass)
