"""Best s-term approximation in redundant Haar frames with coefficient subsampling.

    python scripts/run_sterm.py [--levels 2,4,6] [--norm unit_norm] [--out results/sterm]
"""
import argparse
from pathlib import Path

from analysis_lp.experiments import (STERM_COLUMNS, natural_image, run_sterm_experiment,
                                     sterm_rows, write_csv)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--side", type=int, default=256)
    ap.add_argument("--levels", default="2,4,6")
    ap.add_argument("--norm", default="unit_norm", choices=["unit_norm", "parseval"])
    ap.add_argument("--reconstruction", default="lsq", choices=["lsq", "scaled_dual"])
    ap.add_argument("--out", default="results/sterm")
    args = ap.parse_args()
    img = natural_image(args.side)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    reports = []
    for J in (int(v) for v in args.levels.split(",")):
        for keep, stride in ((0.9, 1), (0.3, 4)):
            rep = run_sterm_experiment(img, J, keep, stride, args.norm, output_dir=out,
                                       reconstruction=args.reconstruction)
            reports.append(rep)
            print(f"J={J} keep={keep:g} stride={stride}: rel_error={rep.rel_error:.4f} "
                  f"psnr={rep.psnr:.2f} dB")
    write_csv(out / "sterm.csv", STERM_COLUMNS, sterm_rows(reports))


if __name__ == "__main__":
    main()
