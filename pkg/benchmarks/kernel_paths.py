"""Benchmark the numba-compiled kernels against the pure-numpy fallback.

The kernel path is fixed at import time by TURNSTILE_DISABLE_NUMBA, so this
driver spawns one subprocess per path, runs identical workloads in each, and
prints the timings side by side:

    python benchmarks/kernel_paths.py

Workloads: raw kernel evaluations at small and large dimension, a logistic
potential+gradient over a sizeable dataset, a long leapfrog chain, and a
short end-to-end sampling run.
"""

import argparse
import json
import os
import subprocess
import sys
import time


def _time(fn, min_reps=5, min_seconds=0.2) -> float:
    """Best-of timing in ns, adaptively repeated."""
    fn()
    reps = min_reps
    while True:
        best = float("inf")
        start = time.perf_counter()
        for _ in range(reps):
            t0 = time.perf_counter_ns()
            fn()
            best = min(best, time.perf_counter_ns() - t0)
        if time.perf_counter() - start >= min_seconds or reps >= 10_000:
            return best
        reps *= 4


def run_workloads() -> dict:
    from turnstile import kernels
    from turnstile.chains import RunConfig, run
    from turnstile.integrator import MassMatrix, PhasePoint, leapfrog
    from turnstile.models import LogisticRegressionData, logistic_regression_model, std_normal_model
    from turnstile.rng import RngKey

    kernels.warm_up()
    gen = RngKey.from_seed(0).fold(0).generator()
    out = {"numba_enabled": kernels.NUMBA_ENABLED}

    for dim in (10, 1000):
        q = gen.standard_normal(dim)
        inv = gen.uniform(0.5, 2.0, dim)
        out[f"std_normal_potential_dim{dim}_ns"] = _time(
            lambda: kernels.std_normal_potential(q)
        )
        out[f"diag_gaussian_gradient_dim{dim}_ns"] = _time(
            lambda: kernels.diag_gaussian_gradient(q, inv)
        )
        out[f"leapfrog_drift_dim{dim}_ns"] = _time(
            lambda: kernels.leapfrog_drift(q, q, q, 0.01, inv)
        )

    x = gen.standard_normal((50_000, 20))
    y = (gen.random(50_000) < 0.5).astype(float)
    theta = gen.standard_normal(21)
    out["logistic_potential_50kx20_ns"] = _time(
        lambda: kernels.logistic_potential(x, y, theta), min_reps=3
    )
    out["logistic_gradient_50kx20_ns"] = _time(
        lambda: kernels.logistic_gradient(x, y, theta), min_reps=3
    )

    model = std_normal_model(25)
    mass = MassMatrix.identity(25)
    z0 = PhasePoint.from_position(model, gen.standard_normal(25), gen.standard_normal(25))

    def chain_of_steps():
        z = z0
        for _ in range(500):
            z = leapfrog(z, 0.05, mass, model)
        return z

    out["leapfrog_chain_500_steps_dim25_ns"] = _time(chain_of_steps, min_reps=3)

    small = logistic_regression_model(
        LogisticRegressionData(x[:2000, :5], y[:2000])
    )
    cfg = RunConfig(model=small.descriptor(), num_chains=1, num_warmup=100,
                    num_samples=100, seed=1)
    t0 = time.perf_counter_ns()
    run(cfg, small)
    out["sampling_logistic_2000x5_100w_100s_ns"] = time.perf_counter_ns() - t0
    return out


def run_one_path(disable_numba: bool) -> dict:
    env = dict(os.environ)
    env["TURNSTILE_DISABLE_NUMBA"] = "1" if disable_numba else "0"
    proc = subprocess.run(
        [sys.executable, __file__, "--inner"],
        capture_output=True, text=True, env=env, check=True,
    )
    return json.loads(proc.stdout.splitlines()[-1])


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--inner", action="store_true",
                        help="run workloads in the current path and print JSON")
    args = parser.parse_args()

    if args.inner:
        print(json.dumps(run_workloads()))
        return 0

    numba_path = run_one_path(disable_numba=False)
    numpy_path = run_one_path(disable_numba=True)
    assert numba_path.pop("numba_enabled") is True
    assert numpy_path.pop("numba_enabled") is False

    width = max(map(len, numba_path)) + 2
    print(f"{'workload':<{width}} {'numba':>14} {'numpy':>14} {'numpy/numba':>12}")
    for key in numba_path:
        a, b = numba_path[key], numpy_path[key]
        print(f"{key:<{width}} {a:>14,.0f} {b:>14,.0f} {b / a:>12.2f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
