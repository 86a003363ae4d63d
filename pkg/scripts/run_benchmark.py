"""Repeat the CLI benchmark in fresh subprocesses and aggregate the reports.

The harness emits one report per invocation; averaging over runs is this
script's job. Each run is a new interpreter so allocator and import state
cannot leak between measurements.

Usage:
    python3 scripts/run_benchmark.py --repeats 5 --duration 600 --out agg.json
"""

import argparse
import json
import statistics
import subprocess
import sys
import tempfile
from pathlib import Path


def run_once(args, report_path: Path) -> dict:
    cmd = [
        sys.executable, "-m", "stridekit", "bench",
        "--channels", str(args.channels),
        "--fs", str(args.fs),
        "--duration", str(args.duration),
        "--window", args.window,
        "--stride", args.stride,
        "--workers", str(args.workers),
        "--seed", str(args.seed),
        "--report", str(report_path),
    ]
    if args.rss:
        cmd.append("--rss")
    proc = subprocess.run(cmd, capture_output=True, text=True)
    if proc.returncode != 0:
        sys.stderr.write(proc.stderr)
        raise SystemExit(proc.returncode)
    return json.loads(report_path.read_text())


def aggregate(reports: list[dict]) -> dict:
    def stats(key):
        xs = [r[key] for r in reports]
        return {
            "mean": statistics.fmean(xs),
            "std": statistics.stdev(xs) if len(xs) > 1 else 0.0,
            "min": min(xs),
            "max": max(xs),
        }

    out = {
        "runs": len(reports),
        "runtime_s": stats("runtime_s"),
        "peak_extra_bytes": stats("peak_extra_bytes"),
    }
    if all("rss_peak_bytes" in r for r in reports):
        out["rss_peak_bytes"] = stats("rss_peak_bytes")
    # Protocol-derived fields are identical across runs; carry them through.
    for key in ("data_bytes", "n_windows", "n_feature_columns", "n_workers",
                "seed"):
        out[key] = reports[0][key]
    return out


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--channels", type=int, default=5)
    parser.add_argument("--fs", type=int, default=1000)
    parser.add_argument("--duration", type=float, default=3600.0)
    parser.add_argument("--window", default="30s")
    parser.add_argument("--stride", default="10s")
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--rss", action="store_true",
                        help="record the OS resident-set watermark per run")
    parser.add_argument("--out", default=None,
                        help="write the aggregate JSON here as well as stdout")
    args = parser.parse_args(argv)
    if args.repeats < 1:
        parser.error("--repeats must be at least 1")

    reports = []
    with tempfile.TemporaryDirectory(prefix="stridekit-bench-") as scratch:
        for i in range(args.repeats):
            report = run_once(args, Path(scratch) / f"run_{i:02d}.json")
            print(f"run {i + 1}/{args.repeats}: "
                  f"runtime {report['runtime_s']:.3f} s, "
                  f"peak {report['peak_extra_bytes'] / 1e6:.2f} MB",
                  file=sys.stderr)
            reports.append(report)

    summary = aggregate(reports)
    text = json.dumps(summary, indent=2)
    print(text)
    if args.out:
        Path(args.out).write_text(text + "\n")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
