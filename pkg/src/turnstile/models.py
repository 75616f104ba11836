"""Target densities: potential energy U(q) = -log p(q) with analytic gradients.

A :class:`TargetModel` is a dimension plus two callables, so any
differentiable target can be plugged in.  The built-ins cover the test and
benchmark surface: a standard normal, a diagonal-covariance normal, Bayesian
logistic regression with a unit-normal prior, and a funnel whose neck drives
divergence detection.  Normalizing constants are dropped throughout; only
potential differences matter to the sampler.  ``fd_gradient`` is the
independent oracle every analytic gradient is tested against.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import kernels


@dataclass(frozen=True)
class TargetModel:
    """A target distribution seen through its potential energy surface."""

    name: str
    dim: int
    potential: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("model dimension must be positive")

    def descriptor(self) -> dict:
        return {"model": self.name, "params": self.params}


@dataclass(frozen=True)
class LogisticRegressionData:
    """Covariate matrix and binary labels for the logistic model."""

    x: np.ndarray  # (N, p)
    y: np.ndarray  # (N,), entries in {0, 1}

    def __post_init__(self):
        x = np.atleast_2d(np.asarray(self.x, dtype=np.float64))
        y = np.asarray(self.y, dtype=np.float64).ravel()
        if x.shape[0] != y.shape[0]:
            raise ValueError("covariate rows and labels disagree in length")
        if not np.isfinite(x).all() or not np.isfinite(y).all():
            raise ValueError("logistic data must be free of NaN/Inf")
        if not np.isin(y, (0.0, 1.0)).all():
            raise ValueError("labels must be 0 or 1")
        object.__setattr__(self, "x", np.ascontiguousarray(x))
        object.__setattr__(self, "y", np.ascontiguousarray(y))

    @property
    def num_features(self) -> int:
        return self.x.shape[1]


def std_normal_model(dim: int) -> TargetModel:
    """U(q) = ||q||^2 / 2."""
    if dim < 1:
        raise ValueError("dim must be >= 1")

    def potential(q: np.ndarray) -> float:
        return float(kernels.std_normal_potential(q))

    def gradient(q: np.ndarray) -> np.ndarray:
        return kernels.std_normal_gradient(q)

    return TargetModel("std_normal", dim, potential, gradient, {"dim": dim})


def gaussian_model(cov_diag) -> TargetModel:
    """Independent zero-mean normal coordinates with variances ``cov_diag``."""
    var = np.asarray(cov_diag, dtype=np.float64).ravel()
    if var.size < 1:
        raise ValueError("cov_diag must be non-empty")
    if not (np.isfinite(var).all() and (var > 0).all()):
        raise ValueError("variances must be positive and finite")
    inv_var = np.ascontiguousarray(1.0 / var)

    def potential(q: np.ndarray) -> float:
        return float(kernels.diag_gaussian_potential(q, inv_var))

    def gradient(q: np.ndarray) -> np.ndarray:
        return kernels.diag_gaussian_gradient(q, inv_var)

    return TargetModel(
        "gaussian", var.size, potential, gradient, {"cov_diag": var.tolist()}
    )


def logistic_regression_model(data: LogisticRegressionData) -> TargetModel:
    """Bayesian logistic regression, unit-normal prior on weights and bias.

    The parameter vector is ``(m_1 .. m_p, b)``.  The likelihood term is
    computed through a stable log(1 + exp) so large logits cannot overflow.
    """
    x, y = data.x, data.y
    dim = data.num_features + 1

    def potential(q: np.ndarray) -> float:
        if q.size != dim:
            raise ValueError(f"expected parameter vector of length {dim}, got {q.size}")
        return float(kernels.logistic_potential(x, y, q))

    def gradient(q: np.ndarray) -> np.ndarray:
        if q.size != dim:
            raise ValueError(f"expected parameter vector of length {dim}, got {q.size}")
        return kernels.logistic_gradient(x, y, q)

    return TargetModel(
        "logistic_regression",
        dim,
        potential,
        gradient,
        {"num_data": int(x.shape[0]), "num_features": int(x.shape[1])},
    )


def funnel_model(dim: int = 10) -> TargetModel:
    """Funnel target: v ~ N(0, 9), x_i | v ~ N(0, e^v) for i = 1 .. dim-1.

    The conditional log-scale term is kept (it depends on v), so the neck is
    as sharp as advertised; included to exercise divergence handling.
    """
    if dim < 2:
        raise ValueError("funnel needs the scale coordinate plus at least one other")

    def potential(q: np.ndarray) -> float:
        return float(kernels.funnel_potential(q))

    def gradient(q: np.ndarray) -> np.ndarray:
        return kernels.funnel_gradient(q)

    return TargetModel("funnel", dim, potential, gradient, {"dim": dim})


def fd_gradient(model: TargetModel, q: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Central-difference gradient oracle: (U(q + h e_i) - U(q - h e_i)) / 2h."""
    if h <= 0:
        raise ValueError("step h must be positive")
    q = np.asarray(q, dtype=np.float64)
    out = np.empty_like(q)
    for i in range(q.size):
        bumped = q.copy()
        bumped[i] = q[i] + h
        up = model.potential(bumped)
        bumped[i] = q[i] - h
        down = model.potential(bumped)
        out[i] = (up - down) / (2.0 * h)
    return out


def load_logistic_csv(path) -> LogisticRegressionData:
    """Read logistic data from CSV: header row, label in the last column."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ValueError(f"{path}: empty CSV")
        for row in reader:
            if row:
                rows.append([float(v) for v in row])
    if not rows:
        raise ValueError(f"{path}: no data rows")
    mat = np.asarray(rows, dtype=np.float64)
    return LogisticRegressionData(mat[:, :-1], mat[:, -1])


def model_from_descriptor(descriptor, base_dir=None) -> TargetModel:
    """Build a model from a JSON descriptor (dict, JSON path, or JSON text).

    Schema: ``{"model": name, "params": {...}, "data_path": optional}``.
    A relative ``data_path`` is resolved against the descriptor file's
    directory when the descriptor was given as a path.
    """
    if isinstance(descriptor, (str, Path)):
        p = Path(descriptor)
        if p.exists():
            desc = json.loads(p.read_text())
            base_dir = p.parent if base_dir is None else base_dir
        else:
            desc = json.loads(str(descriptor))
    else:
        desc = dict(descriptor)

    name = desc.get("model")
    params = dict(desc.get("params") or {})
    if name == "std_normal":
        return std_normal_model(int(params.get("dim", 1)))
    if name == "gaussian":
        if "cov_diag" not in params:
            raise ValueError("gaussian descriptor needs params.cov_diag")
        return gaussian_model(params["cov_diag"])
    if name == "funnel":
        return funnel_model(int(params.get("dim", 10)))
    if name == "logistic_regression":
        data_path = desc.get("data_path")
        if data_path is None:
            raise ValueError("logistic_regression descriptor needs data_path")
        data_path = Path(data_path)
        if not data_path.is_absolute() and base_dir is not None:
            data_path = Path(base_dir) / data_path
        return logistic_regression_model(load_logistic_csv(data_path))
    raise ValueError(f"unknown model name: {name!r}")


BUILTIN_MODELS = ("std_normal", "gaussian", "logistic_regression", "funnel")
