#!/usr/bin/env python3
"""
End-to-end rate check for the bundled experiment presets.

Runs one preset, writes the report and prints the per-n medians next to
the slope the preset is expected to land in.

Usage:
    python scripts/rate_check.py <preset> [output_dir] [jobs]

Example:
    python scripts/rate_check.py regular4-logistic ./runs/regular4 4
"""

import sys
import time
from pathlib import Path

# Add src to path for development
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from netreg.config import ExperimentSpec, GibbsConfig
from netreg.experiments import ConsistencyExperiment
from netreg.exporters.report_writer import emit_report
from netreg.utils.logging import setup_logging

# (spec, expected slope range); None means "no faster than n^-0.2"
PRESETS = {
    "regular4-logistic": (
        ExperimentSpec(
            model_kind="logistic",
            graph="regular:4",
            d=2,
            theta0=(0.5, -0.3),
            beta0=0.2,
            n_grid=(500, 1000, 2000, 4000, 8000),
            replicas=20,
            seed=1,
            gibbs=GibbsConfig(burn_in=200),
        ),
        (-0.65, -0.35),
    ),
    "sk-linear": (
        ExperimentSpec(
            model_kind="linear",
            graph="sk",
            d=2,
            theta0=(0.5, -0.3),
            beta0=0.2,
            n_grid=(250, 500, 1000, 2000),
            replicas=20,
            seed=2,
            record_ols=True,
        ),
        (-0.7, -0.3),
    ),
    "cw-logistic": (
        ExperimentSpec(
            model_kind="logistic",
            graph="cw",
            d=2,
            theta0=(0.5, -0.3),
            beta0=0.2,
            n_grid=(500, 1000, 2000, 4000, 8000),
            replicas=20,
            seed=3,
            gibbs=GibbsConfig(burn_in=200),
        ),
        None,
    ),
}


def main():
    if len(sys.argv) < 2 or sys.argv[1] not in PRESETS:
        print("Usage: python scripts/rate_check.py <preset> [output_dir] [jobs]")
        print(f"\nPresets: {', '.join(PRESETS)}")
        sys.exit(1)

    name = sys.argv[1]
    output_dir = Path(sys.argv[2]) if len(sys.argv) > 2 else Path("./runs") / name
    jobs = int(sys.argv[3]) if len(sys.argv) > 3 else 1
    spec, expected = PRESETS[name]

    setup_logging("INFO")

    print(f"\n{'='*60}")
    print(f"RATE CHECK: {name}")
    print(f"{'='*60}")
    print(f"  Model:     {spec.model_kind}")
    print(f"  Graph:     {spec.graph}")
    print(f"  Sizes:     {', '.join(str(n) for n in spec.n_grid)}")
    print(f"  Replicas:  {spec.replicas}")
    print(f"  Jobs:      {jobs}")

    start_time = time.time()

    def progress_callback(done: int, total: int):
        print(f"  [{100 * done / total:3.0f}%] {done}/{total} cells")

    report = ConsistencyExperiment(jobs=jobs).run(spec, progress_callback=progress_callback)
    paths = emit_report(report, output_dir)

    print(f"\n{'='*60}")
    print("RESULTS")
    print(f"{'='*60}")
    print(f"  {'n':>8} {'median':>12} {'q25':>12} {'q75':>12} {'failed':>7}")
    for summary in report.summaries:
        print(
            f"  {summary.n:>8} {summary.median:>12.5f} {summary.q25:>12.5f} "
            f"{summary.q75:>12.5f} {summary.failures:>7}"
        )

    if report.slope is None:
        print("\n  Slope:      undefined")
        verdict = False
    else:
        print(f"\n  Slope:      {report.slope:.3f}")
        if expected is None:
            print("  Expected:   > -0.20 (no consistency)")
            verdict = report.slope > -0.2
        else:
            print(f"  Expected:   [{expected[0]:.2f}, {expected[1]:.2f}]")
            verdict = expected[0] <= report.slope <= expected[1]

    print(f"  Total time: {time.time() - start_time:.1f}s")
    print(f"  Report:     {paths['summary_json'].parent}")
    print(f"\n{'='*60}")
    print("PASS" if verdict else "FAIL")
    print(f"{'='*60}\n")
    sys.exit(0 if verdict else 1)


if __name__ == "__main__":
    main()
