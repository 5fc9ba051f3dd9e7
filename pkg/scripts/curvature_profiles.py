"""Tabulate kappa(s) and the moment classification for the registered metrics.

    python scripts/curvature_profiles.py [--s-min 1e-6] [--metrics sy-log,angular-cos]
"""

import argparse

from singlap.errors import QuadratureError
from singlap.geometry import (
    METRICS,
    curvature_growth_exponent,
    curvature_moment_classifier,
    curvature_profile,
    gauss_bonnet_residual,
    get_metric,
)
from singlap.harness import CURVATURE_EPS


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--s-min", type=float, default=1e-6)
    ap.add_argument("--metrics", default=",".join(METRICS))
    args = ap.parse_args()

    for name in args.metrics.split(","):
        m = get_metric(name)
        eps = CURVATURE_EPS.get(name, 0.5)
        prof = curvature_profile(m, args.s_min, eps, n_s=25)
        cls = curvature_moment_classifier(prof)
        alpha, r2 = curvature_growth_exponent(prof)
        try:
            gb = f"{gauss_bonnet_residual(m, 0.3):.1e}"
        except QuadratureError:
            gb = "n/a (curvature not integrable)"
        print(f"== {name}: eps={eps:.4f} moment {cls}, alpha {alpha:.4f} (r2 {r2:.4f}), Gauss-Bonnet residual at 0.3: {gb}")
        for s, k in list(zip(prof.s_values, prof.kappa_values))[::4]:
            print(f"   s={s:9.2e}  kappa={k:12.5e}  s^2 kappa={s * s * k:10.5f}")


if __name__ == "__main__":
    main()
