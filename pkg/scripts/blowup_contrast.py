"""Contrast the t^{-1/2} blow-up of the angular-cos metric with the bounded cone value.

    python scripts/blowup_contrast.py [--t-min 1e-6]
"""

import argparse

import numpy as np

from singlap.asymptotics import rate_fit
from singlap.harness import Experiment, ExperimentConfig, run_counterexample, table2_values


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--t-min", type=float, default=1e-6)
    ap.add_argument("--n", type=int, default=9)
    args = ap.parse_args()
    ts = tuple(np.geomspace(1e-2, args.t_min, args.n))

    res = run_counterexample(ExperimentConfig(Experiment.COUNTEREXAMPLE, t_values=ts))
    cone = table2_values(ExperimentConfig(Experiment.TABLE2, t_values=ts))
    cone_fit = rate_fit(cone)

    print(f"vol_g = {res.volume:.6f}; predicted sqrt(t) L_t limit {res.predicted_constant:.6f}")
    print(f"{'t':>9} {'singular L_t':>14} {'sqrt(t) L_t':>12} {'cone L_t':>14}")
    for v, c in zip(res.values, cone):
        print(f"{v.t:9.2e} {v.value:14.6f} {v.scaled:12.6f} {c.value:14.10f}")
    print(f"\nslopes in log t: singular {res.fit.slope:.4f} (r2 {res.fit.r_squared:.6f}), cone {cone_fit.slope:.2e}")


if __name__ == "__main__":
    main()
