"""Frame bounds, c1/c2 and q_max of the 2D undecimated Haar frames.

    python scripts/frame_table.py [--side 64] [--levels 1,2,3,4] [--out frame_table.csv]
"""
import argparse

from analysis_lp.experiments import frame_bound_table, frame_table_columns, write_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--side", type=int, default=64)
    ap.add_argument("--levels", default="1,2,3,4")
    ap.add_argument("--p-grid", default="0.5,1.0")
    ap.add_argument("--out", default="frame_table.csv")
    args = ap.parse_args()
    p_grid = [float(v) for v in args.p_grid.split(",")]
    specs = [(args.side, int(J), norm) for norm in ("unit_norm", "parseval")
             for J in args.levels.split(",")]
    rows = frame_bound_table(specs, p_grid)
    write_csv(args.out, frame_table_columns(p_grid), rows)
    print(f"{'norm':>10} {'J':>2} {'c1/c2':>10} {'1/N':>10} " +
          " ".join(f"q_max(p={p:g})" for p in p_grid))
    for r in rows:
        print(f"{r['normalization']:>10} {r['J']:>2} {r['ratio']:>10.6f} {r['inv_N']:>10.3e} " +
              " ".join(f"{r[f'q_max_p{p:g}']:>11d}" for p in p_grid))


if __name__ == "__main__":
    main()
