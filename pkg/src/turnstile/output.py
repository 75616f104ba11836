"""Machine-readable run output: samples CSV and a versioned JSON report.

CSV rows print floats with ``repr``, the shortest exact decimal round trip,
so two runs that agree bitwise produce byte-identical files.  The JSON
report is deterministic except for its wall-clock timing fields;
``strip_timing`` removes those for whole-file comparisons.
"""

from __future__ import annotations

import copy
import json
from pathlib import Path

import numpy as np

SCHEMA_VERSION = 1

_TIMING_KEYS = ("elapsed_ns", "time_per_leapfrog_ns", "time_per_effective_sample_ns")


def write_samples_csv(path, results) -> None:
    """One row per draw: chain id first, then one column per dimension."""
    dim = results[0].samples.shape[1]
    with open(path, "w", newline="") as fh:
        fh.write("chain," + ",".join(f"dim_{i}" for i in range(dim)) + "\n")
        for r in results:
            for row in r.samples:
                fh.write(str(r.chain_id) + "," + ",".join(repr(float(v)) for v in row) + "\n")


def _chain_block(result, include_trace: bool) -> dict:
    adaptation = dict(result.adaptation)
    if not include_trace:
        adaptation.pop("step_size_trace", None)
    return {
        "chain_id": result.chain_id,
        "samples": [[float(v) for v in row] for row in result.samples],
        "divergences": result.divergences,
        "total_leapfrogs": result.total_leapfrogs,
        "sampling_leapfrogs": result.sampling_leapfrogs,
        "mean_accept_stat": float(np.mean([s.accept_stat for s in result.stats])),
        "max_depth_reached": max(s.depth_reached for s in result.stats),
        "adaptation": adaptation,
        "elapsed_ns": result.elapsed_ns,
    }


def run_report(run_config, model, results, summary, include_trace: bool = False) -> dict:
    """Assemble the full JSON document for a finished run."""
    return {
        "schema_version": SCHEMA_VERSION,
        "model": model.descriptor(),
        "run": {
            "num_chains": run_config.num_chains,
            "num_warmup": run_config.num_warmup,
            "num_samples": run_config.num_samples,
            "mode": run_config.mode,
            "seed": run_config.seed,
        },
        "summary": summary.to_dict(),
        "chains": [_chain_block(r, include_trace) for r in results],
    }


def write_json(path, document: dict) -> None:
    Path(path).write_text(json.dumps(document, indent=2) + "\n")


def strip_timing(document: dict) -> dict:
    """Deep copy with all wall-clock fields removed (for equality checks)."""
    doc = copy.deepcopy(document)
    for key in _TIMING_KEYS:
        doc.get("summary", {}).pop(key, None)
    for chain in doc.get("chains", []):
        chain.pop("elapsed_ns", None)
    return doc
