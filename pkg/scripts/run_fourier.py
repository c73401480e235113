"""Radial Fourier reconstruction over a p-grid; writes CSV and PGM files.

    python scripts/run_fourier.py [--spec scripts/fourier_128.spec] [--output-dir DIR]
"""
import argparse
from dataclasses import replace
from pathlib import Path

from analysis_lp.experiments import load_spec, run_fourier_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--spec", default=str(Path(__file__).with_name("fourier_128.spec")))
    ap.add_argument("--output-dir")
    args = ap.parse_args()
    spec = load_spec(args.spec)
    if args.output_dir:
        spec = replace(spec, output_dir=args.output_dir)
    report = run_fourier_experiment(spec)
    print(f"m = {report.m} ({100 * report.sampling_fraction:.2f}% of the grid)")
    for p in spec.p_grid:
        errs = report.errors_for(p)
        changes = report.changes_for(p)
        print(f"p = {p:g}")
        for k, (e, c) in enumerate(zip(errs, changes), 1):
            print(f"  k={k:2d}  rel_error={e:.4e}  rel_change={c:.3e}")
    for p, msg in report.failures.items():
        print(f"p = {p:g} failed: {msg}")
    print(f"{report.wall_clock:.1f}s, outputs in {spec.output_dir}")


if __name__ == "__main__":
    main()
