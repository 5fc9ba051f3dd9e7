"""Recompute the punctured-disk and cone sweeps and print them next to the reference column.

    python scripts/reproduce_tables.py [--out-dir results]
"""

import argparse
from pathlib import Path

from singlap.harness import TABLE1_REFERENCE, Experiment, ExperimentConfig, emit_csv, run_table1, run_table2


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out-dir", type=Path)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    t1 = run_table1(ExperimentConfig(Experiment.TABLE1, workers=args.workers))
    print("disk a(theta) = 1 + 0.4 cos(theta), intrinsic kernel")
    print(f"{'t':>8} {'sqrt(t) L_t':>12} {'reference':>10} {'diff':>9} {'limit':>9}")
    for r in t1:
        ref = TABLE1_REFERENCE[r.t]
        print(f"{r.t:8.0e} {r.scaled:12.6f} {ref:10.6f} {r.scaled - ref:+9.1e} {r.predicted:9.6f}")

    t2 = run_table2(ExperimentConfig(Experiment.TABLE2, workers=args.workers))
    print("\n45 degree cone, ambient kernel, f = x^2 + y^2")
    print(f"{'t':>8} {'L_t':>14} {'sqrt(t) L_t':>12}")
    for r in t2:
        print(f"{r.t:8.0e} {r.computed:14.10f} {r.scaled:12.6f}")

    if args.out_dir:
        args.out_dir.mkdir(parents=True, exist_ok=True)
        emit_csv(t1, args.out_dir / "table1.csv")
        emit_csv(t2, args.out_dir / "table2.csv")
        print(f"\nwrote {args.out_dir}/table1.csv, table2.csv")


if __name__ == "__main__":
    main()
