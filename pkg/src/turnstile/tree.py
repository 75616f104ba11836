"""Trajectory tree construction: recursive reference and iterative builder.

A depth-d tree is the set of 2**d leapfrog states reached from a starting
phase point, organized as an implicit balanced binary tree.  Construction
stops early when any completed subtree's endpoints satisfy the U-turn test
or when a step diverges.  Two builders produce the result:

* :func:`build_tree_recursive` -- textbook divide-and-combine; builds the two
  half-depth subtrees and merges them.  Simple enough to trust by
  inspection, it serves as the correctness oracle.
* :func:`build_tree_iterative` -- generates the leaves one by one and uses
  the bit pattern of each leaf index (:mod:`turnstile.treemath`) to decide
  where to store even leaves and which stored leaves to test odd leaves
  against.  Peak auxiliary storage is one :class:`NodeStore` slot per tree
  level, even though the trajectory has 2**d states.

The two builders are bitwise-interchangeable, not merely equal in
distribution.  They share one uniform-draw schedule: exactly one draw per
subtree merge, consumed in completion order (merges complete in the order
their rightmost leaves are generated, innermost subtree first).  Both
builders also compute every momentum segment sum with the same prefix-sum
expression, so even floating-point rounding agrees.  Proposals are selected
among leaves with probability proportional to exp(-H) (multinomial
weighting): each merge keeps the right subtree's candidate with probability
w_right / (w_left + w_right).

When a stop condition fires mid-build, the partially built right flank is
merged into its pending ancestors exactly as the recursive unwind would do,
so even stopped trees agree bitwise between builders.  A divergent leaf is
excluded from the proposal weights; its tree is returned immediately with
the ``diverging`` flag set.

Direction: ``eps < 0`` integrates backward in time.  Leaves are always
numbered in generation order, and the U-turn test receives its endpoints in
*time* order (earlier time first), which makes the termination rule a
property of the trajectory alone, independent of the direction it was
built in.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Optional, Union

import numpy as np

from . import kernels
from .integrator import PhasePoint, MassMatrix, hamiltonian, is_divergent, leapfrog
from .models import TargetModel
from .rng import RngKey
from .treemath import MAX_TREE_DEPTH_LIMIT

if TYPE_CHECKING:  # pragma: no cover
    from .sampler import SamplerConfig

CLASSIC = "classic"
GENERALIZED = "generalized"

_STOP_NONE = 0
_STOP_TURN = 1
_STOP_DIV = 2


@dataclass(frozen=True)
class Tree:
    """Summary of a (sub)trajectory built by either builder.

    ``left`` is the first leaf generated and ``right`` the last; for a
    backward build (eps < 0) ``right`` is therefore the *earlier* point in
    time.  ``log_weight`` is logsumexp of -H over all generated,
    non-divergent leaves.  ``momentum_sum`` is the elementwise sum of leaf
    momenta.  ``sum_metropolis`` accumulates min(1, exp(h_ref - H_leaf)) per
    leaf for the acceptance statistic fed to step-size adaptation.
    """

    left: PhasePoint
    right: PhasePoint
    proposal: PhasePoint
    log_weight: float
    turning: bool
    diverging: bool
    leapfrog_count: int
    momentum_sum: np.ndarray
    sum_metropolis: float


def check_uturn(
    left: PhasePoint,
    right: PhasePoint,
    mass: MassMatrix,
    criterion: str,
    momentum_sum: Optional[np.ndarray] = None,
) -> bool:
    """U-turn test across a subtrajectory's endpoints, given in time order.

    Classic: the endpoint displacement projected on either endpoint velocity
    turns negative.  Generalized: the subtrajectory's total momentum replaces
    the displacement, which also catches turns interior to the segment.
    """
    if criterion == GENERALIZED:
        if momentum_sum is None:
            raise ValueError("generalized criterion requires the momentum sum")
        rho = momentum_sum
    elif criterion == CLASSIC:
        rho = right.position - left.position
    else:
        raise ValueError(f"unknown criterion {criterion!r}")
    return bool(kernels.uturn_dots(rho, mass.inv_diag, left.momentum, right.momentum))


@dataclass(slots=True)
class _Subtree:
    """Running summary of a completed subtree, in generation order."""

    first: PhasePoint
    last: PhasePoint
    proposal: PhasePoint
    log_weight: float
    cum_first: np.ndarray  # momentum prefix sum, inclusive of the first leaf
    cum_last: np.ndarray  # momentum prefix sum, inclusive of the last leaf
    leapfrogs: int
    sum_metro: float


def _segment_momentum(sub: _Subtree) -> np.ndarray:
    # Prefix-sum form shared by both builders so rounding is identical.
    return kernels.segment_sum(sub.cum_last, sub.cum_first, sub.first.momentum)


def _logaddexp(a: float, b: float) -> float:
    if a == -math.inf:
        return b
    if b == -math.inf:
        return a
    hi, lo = (a, b) if a >= b else (b, a)
    return hi + math.log1p(math.exp(lo - hi))


def _merge(left: _Subtree, right: _Subtree, u: float) -> _Subtree:
    log_weight = _logaddexp(left.log_weight, right.log_weight)
    if right.log_weight == -math.inf:
        p_right = 0.0
    else:
        p_right = math.exp(right.log_weight - log_weight)
    proposal = right.proposal if u < p_right else left.proposal
    return _Subtree(
        left.first,
        right.last,
        proposal,
        log_weight,
        left.cum_first,
        right.cum_last,
        left.leapfrogs + right.leapfrogs,
        left.sum_metro + right.sum_metro,
    )


def _merged_turning(sub: _Subtree, eps: float, config: "SamplerConfig") -> bool:
    lo, hi = (sub.first, sub.last) if eps > 0 else (sub.last, sub.first)
    rho = _segment_momentum(sub) if config.criterion == GENERALIZED else None
    return check_uturn(lo, hi, config.mass, config.criterion, rho)


@dataclass
class TreeTrace:
    """Optional instrumentation collected during a build.

    ``writes`` holds (step, slot) for every even-leaf store; ``checks`` holds
    (step, slot, stored leaf index) for every U-turn comparison, in the order
    performed; ``leaf_log_weights`` records each generated leaf's multinomial
    log weight (-H, or -inf for a divergent leaf).
    """

    writes: list = field(default_factory=list)
    checks: list = field(default_factory=list)
    leaf_log_weights: list = field(default_factory=list)
    max_occupied: int = 0

    def storage_trace(self) -> list:
        """Chronological schedule: ("write", n, [slot]) / ("check", n, [slots])."""
        events: dict[tuple[int, str], list] = {}
        for n, slot in self.writes:
            events[(n, "write")] = [slot]
        for n, slot, _leaf in self.checks:
            events.setdefault((n, "check"), []).append(slot)
        return [(kind, n, slots) for (n, kind), slots in sorted(events.items())]


class NodeStore:
    """Per-level storage of the iterative builder.

    Slot i holds the most recent even leaf whose index has i set bits,
    together with the running summary of the completed subtree rooted at
    that leaf.  At most one slot per tree level is ever occupied, which is
    the entire memory footprint of the iterative builder.
    """

    def __init__(self, capacity: int):
        self.capacity = capacity
        self._leaf_index = [-1] * capacity
        self._summary: list[Optional[_Subtree]] = [None] * capacity

    @property
    def occupied(self) -> int:
        return sum(1 for s in self._summary if s is not None)

    @property
    def high_water(self) -> int:
        # Slots are never vacated, so the current count is the high-water mark.
        return self.occupied

    def slot_record(self, slot: int):
        """(phase, cumulative momentum, leaf index) of a slot, or None."""
        summary = self._summary[slot]
        if summary is None:
            return None
        return summary.first, summary.cum_first, self._leaf_index[slot]


class _DrawStream:
    """Uniforms pulled from a generator in fixed-size blocks.

    Block refills consume the underlying stream exactly like repeated scalar
    draws, so values match the recursive builder's one-at-a-time consumption
    while costing a fraction of a scalar call.  Block size is constant:
    auxiliary memory stays O(1).
    """

    __slots__ = ("_gen", "_buf", "_pos")
    _BLOCK = 64

    def __init__(self, gen: np.random.Generator):
        self._gen = gen
        self._buf = gen.random(self._BLOCK)
        self._pos = 0

    def take(self) -> float:
        pos = self._pos
        if pos == self._BLOCK:
            self._buf = self._gen.random(self._BLOCK)
            pos = 0
        self._pos = pos + 1
        return self._buf[pos]


def _resolve_generator(rng: Union[RngKey, np.random.Generator]) -> np.random.Generator:
    if isinstance(rng, RngKey):
        return rng.generator()
    return rng


def _validate(depth: int, config: "SamplerConfig") -> None:
    if depth < 0:
        raise ValueError("depth must be non-negative")
    if depth > config.max_tree_depth:
        raise ValueError(f"depth {depth} exceeds max_tree_depth {config.max_tree_depth}")
    if depth > MAX_TREE_DEPTH_LIMIT:
        raise ValueError(f"depth {depth} exceeds the hard limit {MAX_TREE_DEPTH_LIMIT}")


def _leaf_summary(
    z_new: PhasePoint,
    cum: np.ndarray,
    h_ref: float,
    config: "SamplerConfig",
    trace: Optional[TreeTrace],
) -> tuple[_Subtree, bool]:
    h = hamiltonian(z_new, config.mass)
    delta = h - h_ref
    diverged = is_divergent(delta, config.divergence_threshold)
    log_weight = -math.inf if diverged else -h
    if not math.isfinite(delta):
        metro = 0.0
    else:
        metro = math.exp(-delta) if delta > 0 else 1.0
    if trace is not None:
        trace.leaf_log_weights.append(log_weight)
    sub = _Subtree(z_new, z_new, z_new, log_weight, cum, cum, 1, metro)
    return sub, diverged


def _as_tree(sub: _Subtree, stop: int) -> Tree:
    return Tree(
        left=sub.first,
        right=sub.last,
        proposal=sub.proposal,
        log_weight=sub.log_weight,
        turning=stop == _STOP_TURN,
        diverging=stop == _STOP_DIV,
        leapfrog_count=sub.leapfrogs,
        momentum_sum=_segment_momentum(sub),
        sum_metropolis=sub.sum_metro,
    )


def build_tree_recursive(
    z: PhasePoint,
    depth: int,
    eps: float,
    config: "SamplerConfig",
    model: TargetModel,
    rng: Union[RngKey, np.random.Generator],
    h_ref: Optional[float] = None,
    trace: Optional[TreeTrace] = None,
) -> Tree:
    """Reference builder: recursive divide-and-combine.

    Builds the left half, aborts if it stopped, then builds the right half
    from the left's last state and merges.  One uniform draw per merge, in
    recursion (post-) order.  ``h_ref`` anchors divergence and acceptance
    statistics; it defaults to the energy of ``z``.
    """
    _validate(depth, config)
    gen = _resolve_generator(rng)
    if h_ref is None:
        h_ref = hamiltonian(z, config.mass)
    cum_holder = {"cum": np.zeros(z.position.size)}

    def make_leaf(z_from: PhasePoint) -> tuple[_Subtree, int]:
        z_new = leapfrog(z_from, eps, config.mass, model)
        cum_holder["cum"] = cum_holder["cum"] + z_new.momentum
        sub, diverged = _leaf_summary(z_new, cum_holder["cum"], h_ref, config, trace)
        return sub, _STOP_DIV if diverged else _STOP_NONE

    def recurse(z_from: PhasePoint, d: int) -> tuple[_Subtree, int]:
        if d == 0:
            return make_leaf(z_from)
        left, stop = recurse(z_from, d - 1)
        if stop:
            return left, stop
        right, stop = recurse(left.last, d - 1)
        merged = _merge(left, right, float(gen.random()))
        if stop:
            return merged, stop
        if _merged_turning(merged, eps, config):
            return merged, _STOP_TURN
        return merged, _STOP_NONE

    sub, stop = recurse(z, depth)
    return _as_tree(sub, stop)


def build_tree_iterative(
    z: PhasePoint,
    depth: int,
    eps: float,
    config: "SamplerConfig",
    model: TargetModel,
    rng: Union[RngKey, np.random.Generator],
    h_ref: Optional[float] = None,
    trace: Optional[TreeTrace] = None,
) -> Tree:
    """Iterative builder with one storage slot per tree level.

    Runs the integrator once per leaf.  Even leaves are stored at the slot
    given by their index's bit count; at odd leaf n every subtree that n
    completes is merged (innermost first) and its endpoints are U-turn
    tested against the stored leaf at the matching slot.  Equivalent to
    :func:`build_tree_recursive` bit for bit, including the uniform draws
    consumed.
    """
    _validate(depth, config)
    gen = _resolve_generator(rng)
    mass = config.mass
    if h_ref is None:
        h_ref = hamiltonian(z, mass)

    cum = np.zeros(z.position.size)
    z_cur = z

    if depth == 0:
        # A single-leaf tree is never U-turn checked, so nothing is stored.
        z_cur = leapfrog(z_cur, eps, mass, model)
        cum = cum + z_cur.momentum
        sub, diverged = _leaf_summary(z_cur, cum, h_ref, config, trace)
        return _as_tree(sub, _STOP_DIV if diverged else _STOP_NONE)

    store = NodeStore(depth)
    summaries = store._summary
    leaf_indices = store._leaf_index
    running: Optional[_Subtree] = None

    # Hot loop: slot arrays are indexed directly, the treemath bit formulas
    # are inlined, the leaf summary is built in place, and uniforms come from
    # a block buffer.  All values computed match the recursive builder's.
    draws = _DrawStream(gen)
    inv_diag = mass.inv_diag
    generalized = config.criterion == GENERALIZED
    forward = eps > 0
    threshold = config.divergence_threshold
    segment_sum = kernels.segment_sum
    uturn_dots = kernels.uturn_dots

    def merge_out(start_slot: int, partial: _Subtree) -> _Subtree:
        # Fold the pending left siblings below start_slot into a stopped
        # flank, innermost first -- mirrors the recursive unwind.
        for s in range(start_slot - 1, -1, -1):
            partial = _merge(summaries[s], partial, draws.take())
        return partial

    for n in range(1 << depth):
        z_cur = leapfrog(z_cur, eps, mass, model)
        cum = cum + z_cur.momentum
        h = hamiltonian(z_cur, mass)
        delta = h - h_ref
        # Same predicate as is_divergent: non-finite or above threshold.
        if not (math.isfinite(delta) and delta <= threshold):
            log_weight = -math.inf
            metro = math.exp(-delta) if math.isfinite(delta) else 0.0
            if trace is not None:
                trace.leaf_log_weights.append(log_weight)
            leaf = _Subtree(z_cur, z_cur, z_cur, log_weight, cum, cum, 1, metro)
            return _as_tree(merge_out(n.bit_count(), leaf), _STOP_DIV)
        log_weight = -h
        metro = math.exp(-delta) if delta > 0 else 1.0
        if trace is not None:
            trace.leaf_log_weights.append(log_weight)
        leaf = _Subtree(z_cur, z_cur, z_cur, log_weight, cum, cum, 1, metro)

        if n & 1 == 0:
            slot = n.bit_count()
            summaries[slot] = leaf
            leaf_indices[slot] = n
            if trace is not None:
                trace.writes.append((n, slot))
                trace.max_occupied = max(trace.max_occupied, store.occupied)
        else:
            slot = n.bit_count() - 1  # i_max; last slot is i_min
            i_min = slot - (((n + 1) & ~n) - 1).bit_count() + 1
            running = leaf
            while slot >= i_min:
                if trace is not None:
                    trace.checks.append((n, slot, leaf_indices[slot]))
                running = _merge(summaries[slot], running, draws.take())
                if generalized:
                    # The momentum sum is orientation-free, as is the OR of
                    # the two projections, so no direction branch is needed.
                    rho = segment_sum(running.cum_last, running.cum_first, running.first.momentum)
                    turned = uturn_dots(rho, inv_diag, running.first.momentum, running.last.momentum)
                elif forward:
                    dq = running.last.position - running.first.position
                    turned = uturn_dots(dq, inv_diag, running.first.momentum, running.last.momentum)
                else:
                    dq = running.first.position - running.last.position
                    turned = uturn_dots(dq, inv_diag, running.last.momentum, running.first.momentum)
                if turned:
                    return _as_tree(merge_out(slot, running), _STOP_TURN)
                slot -= 1
            summaries[i_min] = running

    assert running is not None and running.leapfrogs == 1 << depth
    return _as_tree(running, _STOP_NONE)


def trees_equal(a: Tree, b: Tree) -> bool:
    """Bitwise agreement on every field the builders promise to match."""

    def arr_eq(x: np.ndarray, y: np.ndarray) -> bool:
        return bool(np.array_equal(x, y, equal_nan=True))

    def pp_eq(x: PhasePoint, y: PhasePoint) -> bool:
        return (
            arr_eq(x.position, y.position)
            and arr_eq(x.momentum, y.momentum)
            and (x.potential == y.potential or (math.isnan(x.potential) and math.isnan(y.potential)))
        )

    return (
        pp_eq(a.left, b.left)
        and pp_eq(a.right, b.right)
        and pp_eq(a.proposal, b.proposal)
        and (a.log_weight == b.log_weight)
        and a.turning == b.turning
        and a.diverging == b.diverging
        and a.leapfrog_count == b.leapfrog_count
        and arr_eq(a.momentum_sum, b.momentum_sum)
    )
