"""Command line entry point: ``wkde run|check|sweep <config-file>``.

Exit codes: 0 success, 2 invalid configuration, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import sys
from pathlib import Path

from .harness import (
    ConfigError,
    compare_to_theory,
    emit,
    load_config,
    predict,
    run_experiment,
    run_sweep,
)

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    res = run_experiment(cfg, workers=args.workers)
    pred = None if cfg.mode == "max_term_only" else predict(cfg)
    res.theory = compare_to_theory(res, pred)
    out = Path(args.output or cfg.output)
    emit(res, out)
    for s, med in zip(res.summaries, res.theory.median_T):
        print(f"n={s.n} ok={s.count} failed={s.failed} median_T={med:.6g}")
    print(f"wrote {out}")
    return EXIT_OK


def _cmd_check(args) -> int:
    cfg = load_config(args.config)
    pred = predict(cfg)
    print(f"norming      {pred.norming_kind}")
    print(f"tightness    {pred.tightness}")
    print(f"as_behavior  {pred.as_behavior}")
    if pred.limit_constant is not None:
        print(f"constant     {pred.limit_constant:.10g}")
    if pred.limit_law is not None:
        law = pred.limit_law
        print(f"limit_law    max({law.scale:.10g} * Z^{law.beta:g}, {law.constant:.10g})")
    print(f"reason       {pred.reason}")
    return EXIT_OK


def _floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _cmd_sweep(args) -> int:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        cp.read_string(Path(args.config).read_text())
        sec = cp["sweep"]
        family = sec["family"]
        alphas = _floats(sec["alpha"])
        betas = _floats(sec["beta"])
        pname = sec.get("param")
        grid = [{pname: v} for v in _floats(sec["values"])] if pname else [{}]
    except (OSError, configparser.Error, KeyError, ValueError) as exc:
        raise ConfigError(f"invalid sweep config: {exc}") from exc
    try:
        records = run_sweep(family, grid, alphas, betas)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    mismatches = [r for r in records if not r["match"]]
    out = Path(args.output or sec.get("output", "sweep.csv"))
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["family", "params", "alpha", "beta", "numeric", "reference", "match"])
        for r in records:
            params = ";".join(f"{k}={v:g}" for k, v in r["params"].items())
            wr.writerow([r["family"], params, "%g" % r["alpha"], "%g" % r["beta"],
                         r["numeric"], r["reference"] or "", int(r["match"])])
    print(f"{len(records)} points, {len(mismatches)} mismatches; wrote {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="wkde", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="simulate and write rows.csv, summary.csv, config.txt")
    p.add_argument("config")
    p.add_argument("--output", help="output directory (overrides the config)")
    p.add_argument("--workers", type=int, help="worker processes (default: $WKDE_WORKERS or 1)")
    p.set_defaults(func=_cmd_run)
    p = sub.add_parser("check", help="print the predicted regime without simulating")
    p.add_argument("config")
    p.set_defaults(func=_cmd_check)
    p = sub.add_parser("sweep", help="tail-condition verdicts over a parameter grid")
    p.add_argument("config")
    p.add_argument("--output", help="CSV path (overrides the config)")
    p.set_defaults(func=_cmd_sweep)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - reported as a runtime failure
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
