"""Multi-chain execution with deterministic, mode-invariant randomness.

Each chain's key is split off the root seed, and every transition draws from
a child key indexed by its draw number, so a chain's entire sample stream is
a pure function of (seed, chain index, configuration).  Sequential and
parallel modes therefore produce bitwise-identical results; parallel mode
only changes who executes the work.  ``TURNSTILE_THREADS`` caps the thread
pool.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .adapt import WarmupAdapter, find_reasonable_step_size
from .integrator import MassMatrix, PhasePoint
from .models import TargetModel, model_from_descriptor
from .rng import RngKey
from .sampler import SamplerConfig, TransitionStats, nuts_transition_from

MODE_SEQUENTIAL = "sequential"
MODE_PARALLEL = "parallel"

# Child-key indices inside a chain key.
_KEY_INIT_POSITION = 0
_KEY_STEP_SIZE_SEARCH = 1
_KEY_FIRST_DRAW = 10


@dataclass(frozen=True)
class RunConfig:
    """Everything a reproducible multi-chain run depends on."""

    model: dict
    num_chains: int = 4
    num_warmup: int = 1000
    num_samples: int = 1000
    mode: str = MODE_SEQUENTIAL
    seed: int = 0
    sampler: Optional[SamplerConfig] = None  # base settings; None -> defaults
    target_accept: float = 0.8

    def __post_init__(self):
        if self.num_chains < 1:
            raise ValueError("num_chains must be >= 1")
        if self.num_samples < 1:
            raise ValueError("num_samples must be >= 1")
        if self.num_warmup != 0 and self.num_warmup < 20:
            raise ValueError("num_warmup must be 0 (off) or at least 20")
        if self.mode not in (MODE_SEQUENTIAL, MODE_PARALLEL):
            raise ValueError(f"unknown mode {self.mode!r}")


@dataclass
class ChainResult:
    """Samples plus per-draw statistics and the adaptation record."""

    chain_id: int
    samples: np.ndarray  # (num_samples, dim)
    stats: list = field(default_factory=list)  # TransitionStats per draw
    adaptation: dict = field(default_factory=dict)
    elapsed_ns: int = 0
    total_leapfrogs: int = 0  # warmup + sampling
    sampling_leapfrogs: int = 0

    @property
    def divergences(self) -> int:
        return sum(1 for s in self.stats if s.diverged)


def chain_keys(seed: int, num_chains: int) -> list[RngKey]:
    """One key per chain, split off the root in chain order."""
    carry = RngKey.from_seed(seed)
    keys = []
    for _ in range(num_chains):
        key, carry = carry.split()
        keys.append(key)
    return keys


def _base_config(config: RunConfig, model: TargetModel) -> SamplerConfig:
    if config.sampler is not None:
        if config.sampler.mass.dim != model.dim:
            raise ValueError(
                f"mass matrix dimension {config.sampler.mass.dim} does not match "
                f"model dimension {model.dim}"
            )
        return config.sampler
    return SamplerConfig(step_size=1.0, mass=MassMatrix.identity(model.dim))


def run_chain(
    chain_id: int,
    key: RngKey,
    model: TargetModel,
    config: RunConfig,
    base: SamplerConfig,
) -> ChainResult:
    """Warm up and sample one chain; pure in (key, model, config)."""
    t_start = time.perf_counter_ns()
    q0 = key.fold(_KEY_INIT_POSITION).generator().uniform(-2.0, 2.0, model.dim)
    z = PhasePoint.from_position(model, q0, np.zeros(model.dim))

    total_leapfrogs = 0
    adaptation: dict = {}

    if config.num_warmup > 0:
        eps0 = find_reasonable_step_size(
            z, base.mass, model, key.fold(_KEY_STEP_SIZE_SEARCH), init=base.step_size
        )
        adapter = WarmupAdapter(
            base.with_step_size(eps0), config.num_warmup, config.target_accept
        )
        for i in range(config.num_warmup):
            cfg = adapter.config_for_draw()
            z, stats = nuts_transition_from(z, cfg, model, key.fold(_KEY_FIRST_DRAW + i))
            adapter.update(i, z.position, stats.accept_stat)
            total_leapfrogs += stats.leapfrog_calls
        final_cfg = adapter.finalize()
        adaptation = {
            "initial_step_size": eps0,
            "step_size_trace": adapter.step_size_trace,
            "final_step_size": final_cfg.step_size,
            "inv_mass_diag": final_cfg.mass.inv_diag.tolist(),
        }
    else:
        final_cfg = base
        if config.sampler is None:
            eps0 = find_reasonable_step_size(
                z, base.mass, model, key.fold(_KEY_STEP_SIZE_SEARCH)
            )
            final_cfg = base.with_step_size(eps0)
        adaptation = {
            "final_step_size": final_cfg.step_size,
            "inv_mass_diag": final_cfg.mass.inv_diag.tolist(),
        }

    samples = np.empty((config.num_samples, model.dim))
    stats_list: list[TransitionStats] = []
    sampling_leapfrogs = 0
    for i in range(config.num_samples):
        draw_key = key.fold(_KEY_FIRST_DRAW + config.num_warmup + i)
        z, stats = nuts_transition_from(z, final_cfg, model, draw_key)
        samples[i] = z.position
        stats_list.append(stats)
        sampling_leapfrogs += stats.leapfrog_calls
    total_leapfrogs += sampling_leapfrogs

    return ChainResult(
        chain_id=chain_id,
        samples=samples,
        stats=stats_list,
        adaptation=adaptation,
        elapsed_ns=time.perf_counter_ns() - t_start,
        total_leapfrogs=total_leapfrogs,
        sampling_leapfrogs=sampling_leapfrogs,
    )


def _max_threads() -> int:
    raw = os.environ.get("TURNSTILE_THREADS", "").strip()
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return os.cpu_count() or 1


def run(config: RunConfig, model: Optional[TargetModel] = None) -> list[ChainResult]:
    """Run all chains; results are identical across modes for equal config."""
    if model is None:
        model = model_from_descriptor(config.model)
    base = _base_config(config, model)
    keys = chain_keys(config.seed, config.num_chains)

    if config.mode == MODE_PARALLEL and config.num_chains > 1:
        workers = min(config.num_chains, _max_threads())
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(run_chain, c, keys[c], model, config, base)
                for c in range(config.num_chains)
            ]
            return [f.result() for f in futures]
    return [run_chain(c, keys[c], model, config, base) for c in range(config.num_chains)]
