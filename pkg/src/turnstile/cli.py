"""Command-line interface.

Subcommands:

* ``sample``        run chains against a model descriptor, write samples/summary
* ``compare-trees`` cross-validate the two tree builders bitwise
* ``bench``         time the builders side by side (per leapfrog, per effective sample)
* ``selftest``      quick analytic and property battery

Exit codes: 0 success, 1 check failure, 2 bad usage (argparse default).
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .chains import MODE_PARALLEL, MODE_SEQUENTIAL, RunConfig, run
from .crosscheck import compare_builders
from .diagnostics import summarize
from .integrator import MassMatrix, PhasePoint
from .models import model_from_descriptor
from .output import run_report, write_json, write_samples_csv
from .rng import RngKey
from .sampler import ITERATIVE, RECURSIVE, SamplerConfig
from .tree import CLASSIC, GENERALIZED, build_tree_iterative, build_tree_recursive

_MODES = {"seq": MODE_SEQUENTIAL, "sequential": MODE_SEQUENTIAL,
          "par": MODE_PARALLEL, "parallel": MODE_PARALLEL}
_BUILDERS = {"rec": RECURSIVE, "recursive": RECURSIVE,
             "iter": ITERATIVE, "iterative": ITERATIVE}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="turnstile",
        description="No-U-Turn sampler with interchangeable recursive/iterative tree builders",
    )
    parser.add_argument("--version", action="version", version=f"turnstile {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="run chains and write samples plus a summary")
    p.add_argument("--model", required=True, help="path to a JSON model descriptor")
    p.add_argument("--chains", type=int, default=4)
    p.add_argument("--warmup", type=int, default=1000)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", choices=sorted(_MODES), default="seq")
    p.add_argument("--builder", choices=sorted(_BUILDERS), default="iter")
    p.add_argument("--criterion", choices=[CLASSIC, GENERALIZED], default=GENERALIZED)
    p.add_argument("--max-depth", type=int, default=10)
    p.add_argument("--step-size", type=float, default=None,
                   help="fixed/initial step size (required when --warmup 0)")
    p.add_argument("--target-accept", type=float, default=0.8)
    p.add_argument("--adapt-trace", action="store_true",
                   help="include the per-draw step-size trace in JSON output")
    p.add_argument("--out", default=None,
                   help="output path; .json for a full report, .csv for samples only")

    p = sub.add_parser("compare-trees", help="bitwise oracle battery over both builders")
    p.add_argument("--depth-max", type=int, default=10)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("bench", help="compare builder timings on a model")
    p.add_argument("--model", required=True)
    p.add_argument("--chains", type=int, default=2)
    p.add_argument("--warmup", type=int, default=300)
    p.add_argument("--samples", type=int, default=300)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tree-depth", type=int, default=8,
                   help="depth of the no-turn trees used by the microbenchmark")
    p.add_argument("--reps", type=int, default=5)
    p.add_argument("--out", default=None, help="optional JSON output path")

    sub.add_parser("selftest", help="run the quick analytic/property battery")
    return parser


def _cmd_sample(args) -> int:
    model = model_from_descriptor(args.model)
    if args.warmup == 0 and args.step_size is None:
        print("error: --warmup 0 requires an explicit --step-size", file=sys.stderr)
        return 2
    base = SamplerConfig(
        step_size=args.step_size if args.step_size else 1.0,
        mass=MassMatrix.identity(model.dim),
        max_tree_depth=args.max_depth,
        criterion=args.criterion,
        tree_builder=_BUILDERS[args.builder],
    )
    config = RunConfig(
        model=model.descriptor(),
        num_chains=args.chains,
        num_warmup=args.warmup,
        num_samples=args.samples,
        mode=_MODES[args.mode],
        seed=args.seed,
        sampler=base,
        target_accept=args.target_accept,
    )
    results = run(config, model)
    summary = summarize(results)

    for d in range(model.dim):
        print(
            f"dim {d}: mean={summary.mean[d]:+.4f} std={summary.std[d]:.4f} "
            f"ess={summary.ess[d]:.0f} rhat={summary.split_rhat[d]:.4f}"
        )
    print(
        f"leapfrogs={summary.total_leapfrogs} divergences={summary.divergences} "
        f"ns/leapfrog={summary.time_per_leapfrog_ns:.0f} "
        f"ns/effective-sample={summary.time_per_effective_sample_ns:.0f}"
    )

    if args.out:
        out = Path(args.out)
        if out.suffix == ".csv":
            write_samples_csv(out, results)
        elif out.suffix == ".json":
            write_json(out, run_report(config, model, results, summary, args.adapt_trace))
        else:
            print(f"error: unsupported output extension {out.suffix!r}", file=sys.stderr)
            return 2
        print(f"wrote {out}")
    return 0


def _cmd_compare_trees(args) -> int:
    t0 = time.perf_counter()
    result = compare_builders(args.depth_max, args.trials, args.seed)
    elapsed = time.perf_counter() - t0
    for depth in sorted(result.per_depth):
        passed, total = result.per_depth[depth]
        print(f"depth {depth}: {passed}/{total}")
    print(f"{result.total} comparisons in {elapsed:.1f}s")
    if not result.all_passed:
        for f in result.failures[:10]:
            print(
                f"MISMATCH depth={f.depth} trial={f.trial} model={f.model} "
                f"dim={f.dim} eps={f.eps:+.4f} criterion={f.criterion}",
                file=sys.stderr,
            )
        return 1
    return 0


def _tree_microbench(model, depth: int, reps: int, seed: int) -> dict:
    """ns per leapfrog for full (never-turning) depth-``depth`` trees.

    Repetitions interleave the two builders so load drift on the host
    machine cannot bias the comparison toward either side.
    """
    gen = RngKey.from_seed(seed).fold(0).generator()
    q = gen.standard_normal(model.dim) * 0.1
    r = gen.standard_normal(model.dim)
    z = PhasePoint.from_position(model, q, r)
    # A tiny step cannot U-turn within 2**depth steps, so both builders do
    # the full 2**depth leapfrogs and timings are comparable.
    eps = 1e-4
    config = SamplerConfig(step_size=eps, mass=MassMatrix.identity(model.dim),
                           max_tree_depth=max(depth, 1))
    key = RngKey.from_seed(seed).fold(1)
    builders = (("recursive", build_tree_recursive), ("iterative", build_tree_iterative))
    times: dict[str, list] = {name: [] for name, _ in builders}
    for name, builder in builders:  # warm caches/JIT outside the timed loop
        builder(z, min(depth, 4), eps, config, model, key)
    for _ in range(reps):
        for name, builder in builders:
            t0 = time.perf_counter_ns()
            tree = builder(z, depth, eps, config, model, key)
            times[name].append(time.perf_counter_ns() - t0)
            if tree.turning or tree.leapfrog_count != 1 << depth:
                raise RuntimeError("microbenchmark tree unexpectedly stopped early")
    return {name: min(ts) / (1 << depth) for name, ts in times.items()}


def _cmd_bench(args) -> int:
    from . import kernels

    kernels.warm_up()  # JIT compilation must not be billed to the first builder
    model = model_from_descriptor(args.model)
    report = {"model": model.descriptor(), "builders": {}}
    for name in (RECURSIVE, ITERATIVE):
        base = SamplerConfig(step_size=1.0, mass=MassMatrix.identity(model.dim),
                             tree_builder=name)
        config = RunConfig(
            model=model.descriptor(),
            num_chains=args.chains,
            num_warmup=args.warmup,
            num_samples=args.samples,
            mode=MODE_SEQUENTIAL,
            seed=args.seed,
            sampler=base,
        )
        results = run(config, model)
        summary = summarize(results)
        report["builders"][name] = {
            "time_per_leapfrog_ns": summary.time_per_leapfrog_ns,
            "time_per_effective_sample_ns": summary.time_per_effective_sample_ns,
            "total_leapfrogs": summary.total_leapfrogs,
            "mean_ess": float(np.nanmean(summary.ess)),
            "divergences": summary.divergences,
        }
    micro = _tree_microbench(model, args.tree_depth, args.reps, args.seed)
    report["tree_microbench"] = {
        "depth": args.tree_depth,
        "ns_per_leapfrog": micro,
    }

    print(f"model: {model.name} (dim {model.dim})")
    print(f"{'builder':<12} {'ns/leapfrog':>14} {'ns/eff. sample':>16}")
    for name, row in report["builders"].items():
        print(f"{name:<12} {row['time_per_leapfrog_ns']:>14.0f} "
              f"{row['time_per_effective_sample_ns']:>16.0f}")
    print(f"tree microbenchmark at depth {args.tree_depth} (ns/leapfrog): "
          f"recursive={micro['recursive']:.0f} iterative={micro['iterative']:.0f}")

    if args.out:
        write_json(args.out, report)
        print(f"wrote {args.out}")
    return 0


def _selftest_checks():
    """Yield (name, callable) pairs; each callable raises on failure."""
    from . import selftest

    yield from selftest.all_checks()


def _cmd_selftest(_args) -> int:
    failures = 0
    for name, check in _selftest_checks():
        try:
            check()
        except Exception as exc:  # noqa: BLE001 - report and continue
            failures += 1
            print(f"FAIL {name}: {exc}")
        else:
            print(f"PASS {name}")
    if failures:
        print(f"{failures} check(s) failed")
        return 1
    print("all checks passed")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    dispatch = {
        "sample": _cmd_sample,
        "compare-trees": _cmd_compare_trees,
        "bench": _cmd_bench,
        "selftest": _cmd_selftest,
    }
    try:
        return dispatch[args.command](args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
