"""``singlap`` command line entry point.

Exit codes: 0 success, 2 argument/config error, 3 numerical failure,
4 threshold violation under ``--check``.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .errors import ArgumentError, QuadratureError, SamplingError, SinglapError
from .harness import Experiment, ExperimentConfig, check_rows, emit_csv, format_csv, run
from .quadrature import QuadratureSpec, TruncationPolicy

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_CHECK = 0, 2, 3, 4

# config-file key -> argparse dest
_KEYS = {
    "t-values": "t_values",
    "n-theta": "n_theta",
    "n-r": "n_r",
    "trunc": "trunc",
    "seed": "seed",
    "out": "out",
    "workers": "workers",
    "n-values": "n_values",
    "metric": "metric",
    "check": "check",
}


class UsageError(Exception):
    pass


def _floats(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise UsageError(f"bad number list {text!r}") from exc


def _ints(text):
    try:
        return [int(float(x)) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise UsageError(f"bad integer list {text!r}") from exc


def read_config(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    try:
        lines = open(path, encoding="utf-8").read().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from exc
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("_", "-")
        if key not in _KEYS:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        out[_KEYS[key]] = value
    return out


def build_parser():
    ap = argparse.ArgumentParser(prog="singlap", description="Graph Laplacian asymptotics at isolated singularities.")
    ap.add_argument("experiment", choices=[e.value for e in Experiment])
    ap.add_argument("--t-values", help="comma-separated, strictly decreasing bandwidths in (0,1)")
    ap.add_argument("--n-theta", type=int)
    ap.add_argument("--n-r", type=int)
    ap.add_argument("--trunc", help="fixed:R | power:eta | mult:c")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--out", help="CSV path (default: stdout)")
    ap.add_argument("--workers", type=int)
    ap.add_argument("--n-values", help="sample sizes for the mc experiment")
    ap.add_argument("--metric", help="registry metric for the curvature experiment")
    ap.add_argument("--config", help="file of 'key = value' lines; flags override it")
    ap.add_argument("--check", action="store_true", default=None, help="exit 4 if acceptance thresholds fail")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def make_config(args) -> tuple[ExperimentConfig, bool]:
    opts = read_config(args.config) if args.config else {}
    for dest in _KEYS.values():
        val = getattr(args, dest, None)
        if val is not None:
            opts[dest] = val

    def get(key, conv, default=None):
        if key not in opts:
            return default
        v = opts[key]
        if isinstance(v, str):
            try:
                return conv(v)
            except (ValueError, ArgumentError) as exc:
                raise UsageError(f"bad value for {key}: {v!r}") from exc
        return v

    check = opts.get("check", False)
    if isinstance(check, str):
        check = check.strip().lower() in ("1", "true", "yes", "on")
    default_quad = QuadratureSpec()
    quad = QuadratureSpec(get("n_theta", int, default_quad.n_theta), get("n_r", int, default_quad.n_r))
    cfg = ExperimentConfig(
        experiment=Experiment(args.experiment),
        t_values=get("t_values", _floats),
        quad=quad,
        truncation=get("trunc", TruncationPolicy.parse),
        seed=get("seed", int, 42),
        output_path=get("out", str),
        workers=get("workers", int, 1),
        n_values=tuple(get("n_values", _ints, (1000, 10000, 100000))),
        metric=get("metric", str),
    )
    return cfg, bool(check)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg, check = make_config(args)
        rows, extra = run(cfg)
    except (UsageError, ArgumentError) as exc:
        print(f"singlap: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (QuadratureError, SamplingError, ArithmeticError) as exc:
        print(f"singlap: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except SinglapError as exc:
        print(f"singlap: error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    if cfg.output_path:
        try:
            emit_csv(rows, cfg.output_path)
        except OSError as exc:
            print(f"singlap: {exc}", file=sys.stderr)
            return EXIT_USAGE
    else:
        sys.stdout.write(format_csv(rows))

    if extra is not None and hasattr(extra, "fit"):
        print(f"# slope={extra.fit.slope:.6f} r2={extra.fit.r_squared:.8f} "
              f"constant={extra.empirical_constant:.6f} predicted={extra.predicted_constant:.6f}", file=sys.stderr)
    if extra is not None and hasattr(extra, "classification"):
        print(f"# moment={extra.classification} alpha={extra.growth[0]:.4f} r2={extra.growth[1]:.6f}", file=sys.stderr)

    if check:
        failures = check_rows(cfg, rows, extra)
        for msg in failures:
            print(f"singlap: check failed: {msg}", file=sys.stderr)
        if failures:
            return EXIT_CHECK
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
