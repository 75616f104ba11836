"""Hot numeric kernels: numba-compiled fast path with a pure-numpy fallback.

The path is chosen once at import time.  If numba imports cleanly and the
``TURNSTILE_DISABLE_NUMBA`` environment variable is unset (or falsy), the
loop kernels below are compiled with ``@njit``; otherwise the vectorized
numpy definitions are used.  ``benchmarks/kernel_paths.py`` compares the two.

Elementwise kernels (the leapfrog updates) compute bit-identical results on
both paths.  Reductions (potentials, kinetic energy) may differ in the last
ulp across paths because numpy sums pairwise while the compiled loops
accumulate left to right; every bitwise guarantee in this package (builder
equivalence, sequential/parallel invariance) therefore holds within a single
process, where the path is fixed.
"""

from __future__ import annotations

import math
import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None


def _env_disabled() -> bool:
    return os.environ.get("TURNSTILE_DISABLE_NUMBA", "").strip().lower() in (
        "1",
        "true",
        "yes",
        "on",
    )


NUMBA_ENABLED = numba is not None and not _env_disabled()


if NUMBA_ENABLED:
    _jit = numba.njit(cache=True, fastmath=False)

    @_jit
    def std_normal_potential(q):
        acc = 0.0
        for i in range(q.size):
            acc += 0.5 * q[i] * q[i]
        return acc

    @_jit
    def std_normal_gradient(q):
        return q.copy()

    @_jit
    def diag_gaussian_potential(q, inv_var):
        acc = 0.0
        for i in range(q.size):
            acc += 0.5 * q[i] * q[i] * inv_var[i]
        return acc

    @_jit
    def diag_gaussian_gradient(q, inv_var):
        out = np.empty_like(q)
        for i in range(q.size):
            out[i] = q[i] * inv_var[i]
        return out

    @_jit
    def funnel_potential(q):
        # q[0] is the log-scale coordinate, q[1:] the conditionally normal block
        v = q[0]
        ssq = 0.0
        for i in range(1, q.size):
            ssq += q[i] * q[i]
        return v * v / 18.0 + 0.5 * (q.size - 1) * v + 0.5 * math.exp(-v) * ssq

    @_jit
    def funnel_gradient(q):
        v = q[0]
        inv_scale = math.exp(-v)
        out = np.empty_like(q)
        ssq = 0.0
        for i in range(1, q.size):
            out[i] = inv_scale * q[i]
            ssq += q[i] * q[i]
        out[0] = v / 9.0 + 0.5 * (q.size - 1) - 0.5 * inv_scale * ssq
        return out

    @_jit
    def logistic_potential(x, y, theta):
        p = x.shape[1]
        acc = 0.5 * theta[p] * theta[p]
        for j in range(p):
            acc += 0.5 * theta[j] * theta[j]
        for i in range(x.shape[0]):
            eta = theta[p]
            for j in range(p):
                eta += x[i, j] * theta[j]
            # log(1 + exp(eta)) without overflow
            m = eta if eta > 0.0 else 0.0
            log1pexp = m + math.log1p(math.exp(-abs(eta)))
            acc -= y[i] * eta - log1pexp
        return acc

    @_jit
    def logistic_gradient(x, y, theta):
        p = x.shape[1]
        out = theta.copy()
        for i in range(x.shape[0]):
            eta = theta[p]
            for j in range(p):
                eta += x[i, j] * theta[j]
            if eta >= 0.0:
                sig = 1.0 / (1.0 + math.exp(-eta))
            else:
                e = math.exp(eta)
                sig = e / (1.0 + e)
            resid = y[i] - sig
            for j in range(p):
                out[j] -= resid * x[i, j]
            out[p] -= resid
        return out

    @_jit
    def kinetic_energy_impl(r, inv_diag):
        acc = 0.0
        for i in range(r.size):
            acc += 0.5 * r[i] * r[i] * inv_diag[i]
        return acc

    @_jit
    def uturn_dots(rho, inv_diag, r_left, r_right):
        a = 0.0
        b = 0.0
        for i in range(rho.size):
            a += rho[i] * inv_diag[i] * r_left[i]
            b += rho[i] * inv_diag[i] * r_right[i]
        return a < 0.0 or b < 0.0

    @_jit
    def segment_sum(cum_last, cum_first, r_first):
        out = np.empty_like(cum_last)
        for i in range(out.size):
            out[i] = (cum_last[i] - cum_first[i]) + r_first[i]
        return out

    @_jit
    def leapfrog_drift(q, r, grad, eps, inv_diag):
        # half momentum kick followed by a full position drift
        half = 0.5 * eps
        r_half = np.empty_like(r)
        q_new = np.empty_like(q)
        for i in range(q.size):
            r_half[i] = r[i] - half * grad[i]
            q_new[i] = q[i] + eps * (inv_diag[i] * r_half[i])
        return q_new, r_half

    @_jit
    def leapfrog_kick(r_half, grad_new, eps):
        half = 0.5 * eps
        r_new = np.empty_like(r_half)
        for i in range(r_half.size):
            r_new[i] = r_half[i] - half * grad_new[i]
        return r_new

else:

    def std_normal_potential(q):
        return float(0.5 * np.dot(q, q))

    def std_normal_gradient(q):
        return q.copy()

    def diag_gaussian_potential(q, inv_var):
        return float(0.5 * np.dot(q * q, inv_var))

    def diag_gaussian_gradient(q, inv_var):
        return q * inv_var

    def funnel_potential(q):
        v = q[0]
        ssq = float(np.dot(q[1:], q[1:]))
        return float(v * v / 18.0 + 0.5 * (q.size - 1) * v + 0.5 * math.exp(-v) * ssq)

    def funnel_gradient(q):
        v = q[0]
        inv_scale = math.exp(-v)
        out = np.empty_like(q)
        out[1:] = inv_scale * q[1:]
        out[0] = v / 9.0 + 0.5 * (q.size - 1) - 0.5 * inv_scale * float(np.dot(q[1:], q[1:]))
        return out

    def logistic_potential(x, y, theta):
        p = x.shape[1]
        m, b = theta[:p], theta[p]
        eta = x @ m + b
        prior = 0.5 * float(np.dot(m, m)) + 0.5 * b * b
        return float(prior - np.sum(y * eta - np.logaddexp(0.0, eta)))

    def logistic_gradient(x, y, theta):
        p = x.shape[1]
        m, b = theta[:p], theta[p]
        eta = x @ m + b
        # sigmoid via tanh is stable for large |eta|
        sig = 0.5 * (1.0 + np.tanh(0.5 * eta))
        resid = y - sig
        out = theta.copy()
        out[:p] -= x.T @ resid
        out[p] -= float(np.sum(resid))
        return out

    def kinetic_energy_impl(r, inv_diag):
        return float(0.5 * np.dot(r * r, inv_diag))

    def uturn_dots(rho, inv_diag, r_left, r_right):
        scaled = rho * inv_diag
        return bool(np.dot(scaled, r_left) < 0.0 or np.dot(scaled, r_right) < 0.0)

    def segment_sum(cum_last, cum_first, r_first):
        return (cum_last - cum_first) + r_first

    def leapfrog_drift(q, r, grad, eps, inv_diag):
        half = 0.5 * eps
        r_half = r - half * grad
        q_new = q + eps * (inv_diag * r_half)
        return q_new, r_half

    def leapfrog_kick(r_half, grad_new, eps):
        return r_half - 0.5 * eps * grad_new


def warm_up() -> None:
    """Trigger JIT compilation of every kernel on tiny inputs.

    No-op on the numpy path.  Called by the benchmark harness so timing
    loops never include compilation.
    """
    q = np.array([0.1, -0.2])
    inv = np.array([1.0, 2.0])
    x = np.array([[0.5, -1.0]])
    y = np.array([1.0])
    theta = np.array([0.1, 0.2, -0.3])
    std_normal_potential(q)
    std_normal_gradient(q)
    diag_gaussian_potential(q, inv)
    diag_gaussian_gradient(q, inv)
    funnel_potential(q)
    funnel_gradient(q)
    logistic_potential(x, y, theta)
    logistic_gradient(x, y, theta)
    kinetic_energy_impl(q, inv)
    uturn_dots(q, inv, q, q)
    segment_sum(q, q, q)
    q2, rh = leapfrog_drift(q, q, q, 0.1, inv)
    leapfrog_kick(rh, q2, 0.1)
