"""Leapfrog integration of Hamiltonian dynamics with a diagonal mass matrix.

States are :class:`PhasePoint` values carrying the potential and its
gradient alongside position and momentum, so a trajectory never re-evaluates
the model at a point it has already visited: one leapfrog step costs exactly
one gradient evaluation.  Direction is encoded in the sign of the step size;
integrating with ``-eps`` walks the same orbit backward in time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import kernels
from .models import TargetModel


@dataclass(frozen=True)
class MassMatrix:
    """Diagonal mass matrix M, stored as the inverse diagonal M^-1."""

    inv_diag: np.ndarray

    def __post_init__(self):
        inv = np.ascontiguousarray(np.asarray(self.inv_diag, dtype=np.float64).ravel())
        if inv.size < 1 or not (np.isfinite(inv).all() and (inv > 0).all()):
            raise ValueError("inverse mass diagonal must be positive and finite")
        object.__setattr__(self, "inv_diag", inv)

    @staticmethod
    def identity(dim: int) -> "MassMatrix":
        return MassMatrix(np.ones(dim))

    @property
    def dim(self) -> int:
        return self.inv_diag.size

    @property
    def momentum_std(self) -> np.ndarray:
        """Per-coordinate std of r ~ N(0, M)."""
        return 1.0 / np.sqrt(self.inv_diag)


@dataclass(slots=True)
class PhasePoint:
    """Position/momentum pair with the cached potential and gradient.

    Treated as immutable everywhere (one is created per leapfrog step, so
    construction stays cheap: slots, no frozen-field indirection).
    """

    position: np.ndarray
    momentum: np.ndarray
    potential: float
    grad: np.ndarray

    @staticmethod
    def from_position(model: TargetModel, q, r) -> "PhasePoint":
        q = np.ascontiguousarray(np.asarray(q, dtype=np.float64).ravel())
        r = np.ascontiguousarray(np.asarray(r, dtype=np.float64).ravel())
        if q.size != model.dim or r.size != q.size:
            raise ValueError("position/momentum length must match the model dimension")
        u = float(model.potential(q))
        if not math.isfinite(u):
            u = math.inf
        g = np.asarray(model.gradient(q), dtype=np.float64)
        return PhasePoint(q, r, u, g)

    def with_momentum(self, r: np.ndarray) -> "PhasePoint":
        """Same position (and cached model values) under a fresh momentum."""
        return replace(self, momentum=np.ascontiguousarray(np.asarray(r, dtype=np.float64)))


def kinetic_energy(momentum: np.ndarray, mass: MassMatrix) -> float:
    """(1/2) r^T M^-1 r."""
    return float(kernels.kinetic_energy_impl(momentum, mass.inv_diag))


def hamiltonian(z: PhasePoint, mass: MassMatrix) -> float:
    """Total energy U(q) + K(r); +inf sentinel when either piece is non-finite."""
    if not math.isfinite(z.potential):
        return math.inf
    h = z.potential + kinetic_energy(z.momentum, mass)
    return h if math.isfinite(h) else math.inf


def leapfrog(z: PhasePoint, eps: float, mass: MassMatrix, model: TargetModel) -> PhasePoint:
    """One leapfrog step: half momentum kick, position drift, half kick.

    A non-finite potential or gradient at the new position is not an error;
    the returned point simply carries a +inf Hamiltonian and the caller
    treats the step as divergent.
    """
    q_new, r_half = kernels.leapfrog_drift(z.position, z.momentum, z.grad, eps, mass.inv_diag)
    u_new = float(model.potential(q_new))
    if not math.isfinite(u_new):
        u_new = math.inf
    g_new = np.asarray(model.gradient(q_new), dtype=np.float64)
    r_new = kernels.leapfrog_kick(r_half, g_new, eps)
    return PhasePoint(q_new, r_new, u_new, g_new)


def is_divergent(delta_h: float, threshold: float) -> bool:
    """True when the energy error exceeds ``threshold`` or is non-finite."""
    return not math.isfinite(delta_h) or delta_h > threshold
