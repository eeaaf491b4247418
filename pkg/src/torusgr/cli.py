"""Command-line driver.

Subcommands:

* ``run <config.toml>`` — build initial data, evolve, write diagnostics.csv,
  snapshots, the asymptotics report, and run.json into the output directory.
* ``converge <config.toml> --resolutions 16,32,64 --dts 0.02,0.01,0.005`` —
  run the self-convergence matrix and print observed spatial ratios and
  temporal orders.
* ``accept <config.toml>`` — run the acceptance suite (fixed physics
  profiles; the config supplies the output directory), print one PASS/FAIL
  line per criterion, and write accept.json.

Exit codes: 0 success, 2 configuration error, 3 numerical failure during a
run, 4 acceptance-suite failure.  The ``run`` subcommand's criteria flags in
run.json are informational and do not affect its exit code.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .errors import ConfigError, TorusGrError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_ACCEPTANCE = 4


def _parse_float_list(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad numeric list {text!r}: {exc}") from None


def _parse_int_list(text: str) -> list[int]:
    try:
        return [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad integer list {text!r}: {exc}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="torusgr",
        description="Pseudo-spectral frame evolution of a self-gravitating "
        "scalar field on the torus with positive cosmological constant.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("config", help="path to a TOML run configuration")
        p.add_argument("--output-dir", help="override the configured output directory")
        p.add_argument("--seed", type=int, help="override the recipe's random seed")

    p_run = sub.add_parser("run", help="evolve one configuration and write artifacts")
    add_common(p_run)
    p_run.add_argument(
        "--snapshot-times",
        help="comma-separated times at which to store full field snapshots",
    )

    p_conv = sub.add_parser("converge", help="self-convergence study")
    add_common(p_conv)
    p_conv.add_argument("--resolutions", help="comma-separated grid sizes, e.g. 16,32,64")
    p_conv.add_argument("--dts", help="comma-separated time steps, e.g. 0.02,0.01,0.005")

    p_acc = sub.add_parser("accept", help="run the acceptance suite")
    add_common(p_acc)
    return parser


def _load_with_overrides(args: argparse.Namespace):
    from .config import load_config

    cfg = load_config(args.config)
    if args.output_dir is not None:
        cfg = replace(cfg, output_dir=args.output_dir)
    if args.seed is not None:
        cfg = replace(cfg, recipe=replace(cfg.recipe, seed=args.seed))
    if getattr(args, "snapshot_times", None) is not None:
        cfg = replace(cfg, snapshot_times=tuple(_parse_float_list(args.snapshot_times)))
    return cfg


def _cmd_run(args: argparse.Namespace) -> int:
    from .harness import run

    cfg = _load_with_overrides(args)
    result = run(cfg, write_artifacts=True)
    print(f"run finished in {result.runtime_seconds:.1f}s; artifacts in {result.output_dir}")
    for name, entry in sorted(result.rates.items()):
        if entry is None:
            print(f"  rate {name:>13s}: not measurable")
        else:
            print(f"  rate {name:>13s}: {entry['rate']:+.4f}  (r2 = {entry['r_squared']:.5f})")
    if result.extraction_note:
        print(f"  note: {result.extraction_note}")
    for name, flag in sorted(result.criteria.items()):
        print(f"  check {name}: {flag}")
    return EXIT_OK


def _cmd_converge(args: argparse.Namespace) -> int:
    from .harness import convergence_study

    cfg = _load_with_overrides(args)
    resolutions = _parse_int_list(args.resolutions) if args.resolutions else None
    dts = _parse_float_list(args.dts) if args.dts else None
    report = convergence_study(cfg, resolutions=resolutions, dts=dts)
    if report.spatial_resolutions:
        print(f"spatial errors at t = {report.t_compare_spatial} (vs finest grid):")
        for i, n in enumerate(report.spatial_resolutions[:-1]):
            label = "x".join(str(v) for v in n)
            line = f"  n = {label:>11s}: error {report.spatial_errors[i]:.3e}"
            if i > 0:
                line += f"  ratio {report.spatial_ratios[i - 1]:.1f}"
            print(line)
        if report.spatial_ratios:
            print(f"  doubling ratios: {['%.1f' % r for r in report.spatial_ratios]}")
    if report.temporal_dts:
        print(f"temporal errors at t = {report.t_compare_temporal} (vs dt_min/4 reference):")
        for i, dt in enumerate(report.temporal_dts):
            line = f"  dt = {dt:.5f}: error {report.temporal_errors[i]:.3e}"
            if i > 0:
                line += f"  order {report.temporal_orders[i - 1]:.2f}"
            print(line)
    return EXIT_OK


def _cmd_accept(args: argparse.Namespace) -> int:
    from .acceptance import AcceptanceContext, format_result, run_all

    cfg = _load_with_overrides(args)
    workdir = Path(cfg.output_dir) / "acceptance"
    ctx = AcceptanceContext(workdir)
    results = run_all(ctx)
    for res in results:
        print(format_result(res))
    payload = {
        "passed": all(r.passed for r in results),
        "criteria": [
            {"index": r.index, "name": r.name, "passed": r.passed, "detail": r.detail}
            for r in results
        ],
    }
    workdir.mkdir(parents=True, exist_ok=True)
    with open(workdir / "accept.json", "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    print(f"{sum(r.passed for r in results)}/{len(results)} criteria passed")
    return EXIT_OK if payload["passed"] else EXIT_ACCEPTANCE


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"run": _cmd_run, "converge": _cmd_converge, "accept": _cmd_accept}[args.command]
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TorusGrError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
