"""Sample-quality diagnostics: effective sample size, split R-hat, summaries.

ESS uses the split-chain autocovariance estimator with Geyer's
initial-monotone truncation: autocorrelations are summed in consecutive
pairs until a pair turns non-positive, and the running pair sequence is
forced non-increasing before summation.  R-hat is the split-chain potential
scale reduction factor.  Both treat a zero-variance (constant) dimension as
degenerate and report NaN with a warning rather than failing the run.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np


def _stack_chains(chains) -> np.ndarray:
    arr = np.asarray(chains, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[None, :, :]
    if arr.ndim != 3:
        raise ValueError("expected chains shaped (num_chains, num_draws, dim)")
    return arr


def _split_halves(arr: np.ndarray) -> np.ndarray:
    m, n, dim = arr.shape
    half = n // 2
    if half < 2:
        raise ValueError("need at least 4 draws per chain to split")
    first = arr[:, :half, :]
    second = arr[:, half : 2 * half, :]
    return np.concatenate([first, second], axis=0)


def _autocov(seq: np.ndarray) -> np.ndarray:
    """Autocovariance (1/n normalization) of each row via FFT; seq is (m, n)."""
    m, n = seq.shape
    centered = seq - seq.mean(axis=1, keepdims=True)
    size = 2 ** int(np.ceil(np.log2(2 * n)))
    f = np.fft.rfft(centered, size, axis=1)
    acov = np.fft.irfft(f * np.conj(f), size, axis=1)[:, :n].real
    return acov / n


def ess(chains) -> np.ndarray:
    """Per-dimension effective sample size over split chains."""
    arr = _stack_chains(chains)
    seqs = _split_halves(arr)  # (2m, half, dim)
    m, n, dim = seqs.shape
    out = np.empty(dim)
    for d in range(dim):
        x = seqs[:, :, d]
        acov = _autocov(x)
        chain_var = acov[:, 0] * n / (n - 1.0)
        mean_var = float(np.mean(chain_var))
        var_plus = mean_var * (n - 1.0) / n
        if m > 1:
            var_plus += float(np.var(x.mean(axis=1), ddof=1))
        if not (var_plus > 0.0 and math.isfinite(var_plus)):
            warnings.warn(f"dimension {d} is constant; ESS undefined", RuntimeWarning)
            out[d] = math.nan
            continue
        rho = 1.0 - (mean_var - acov.mean(axis=0)) / var_plus
        rho[0] = 1.0
        # Geyer pairs: accumulate while positive, enforce monotone decrease.
        tau = 0.0
        prev = math.inf
        k = 0
        while 2 * k + 1 < n:
            pair = rho[2 * k] + rho[2 * k + 1]
            if pair <= 0.0:
                break
            pair = min(pair, prev)
            tau += 2.0 * pair
            prev = pair
            k += 1
        tau -= 1.0
        # Strongly antithetic chains can drive tau to zero or below; they
        # are superefficient, so report the draw-count ceiling.  The same
        # ceiling caps raw estimates that exceed the number of draws.
        out[d] = m * n if tau <= 0 else min(m * n / tau, m * n)
    return out


def split_rhat(chains) -> np.ndarray:
    """Per-dimension split-chain potential scale reduction factor."""
    arr = _stack_chains(chains)
    seqs = _split_halves(arr)
    m, n, dim = seqs.shape
    out = np.empty(dim)
    for d in range(dim):
        x = seqs[:, :, d]
        w = float(np.mean(np.var(x, axis=1, ddof=1)))
        b_over_n = float(np.var(x.mean(axis=1), ddof=1))
        if not (w > 0.0 and math.isfinite(w)):
            warnings.warn(f"dimension {d} is constant; R-hat undefined", RuntimeWarning)
            out[d] = math.nan
            continue
        var_plus = w * (n - 1.0) / n + b_over_n
        out[d] = math.sqrt(var_plus / w)
    return out


@dataclass(frozen=True)
class Summary:
    """Per-dimension moments and quality metrics plus run-level counters."""

    mean: np.ndarray
    std: np.ndarray
    ess: np.ndarray
    split_rhat: np.ndarray
    total_leapfrogs: int
    divergences: int
    elapsed_ns: int
    time_per_leapfrog_ns: float
    time_per_effective_sample_ns: float

    def to_dict(self) -> dict:
        return {
            "mean": self.mean.tolist(),
            "std": self.std.tolist(),
            "ess": self.ess.tolist(),
            "split_rhat": self.split_rhat.tolist(),
            "total_leapfrogs": self.total_leapfrogs,
            "divergences": self.divergences,
            "elapsed_ns": self.elapsed_ns,
            "time_per_leapfrog_ns": self.time_per_leapfrog_ns,
            "time_per_effective_sample_ns": self.time_per_effective_sample_ns,
        }


def summarize(results) -> Summary:
    """Summary over a list of ChainResult (same shapes, one run)."""
    chains = np.stack([r.samples for r in results])
    pooled = chains.reshape(-1, chains.shape[-1])
    ess_vec = ess(chains)
    rhat_vec = split_rhat(chains)
    total_leapfrogs = sum(r.total_leapfrogs for r in results)
    divergences = sum(r.divergences for r in results)
    elapsed = sum(r.elapsed_ns for r in results)
    mean_ess = float(np.nanmean(ess_vec)) if np.isfinite(ess_vec).any() else math.nan
    return Summary(
        mean=pooled.mean(axis=0),
        std=pooled.std(axis=0, ddof=1),
        ess=ess_vec,
        split_rhat=rhat_vec,
        total_leapfrogs=total_leapfrogs,
        divergences=divergences,
        elapsed_ns=elapsed,
        time_per_leapfrog_ns=elapsed / total_leapfrogs if total_leapfrogs else math.nan,
        time_per_effective_sample_ns=elapsed / mean_ess if mean_ess and not math.isnan(mean_ess) else math.nan,
    )
