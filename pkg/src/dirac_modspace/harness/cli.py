"""Command line: ``dirac-modspace run|oracle|dump-info``.

Exit status is 0 when every check passes, 1 when an estimate misses its
tolerance and 2 for configuration or usage errors.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from .config import ConfigError, bundled_configs, load_config
from .experiments import run_experiment, write_outputs

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="dirac-modspace", description="Modulation-space estimate experiments for Dirac systems.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    r = sub.add_parser("run", help="run an experiment described by a JSON config")
    r.add_argument("config", help="config path, or the name of a bundled config")
    r.add_argument("--output", "-o", default=None, help="output directory (default: results/<config name>)")
    r.add_argument("--stability", action="store_true", help="force the refinement companion run")
    o = sub.add_parser("oracle", help="run reference-value oracles and write provenance files")
    o.add_argument("case", help="oracle name or 'all'")
    o.add_argument("--output", "-o", default="oracles")
    sub.add_parser("dump-info", help="print presets, bundled configs and version")
    return p


def _run(args) -> int:
    try:
        cfg = load_config(args.config)
        if args.stability:
            cfg = dataclasses.replace(cfg, stability=True)
        report = run_experiment(cfg)
    except ConfigError as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.output) if args.output else Path("results") / Path(args.config).stem
    for path in write_outputs(report, out):
        print(f"wrote {path}")
    for name, c in report.checks.items():
        print(f"{'PASS' if c['pass'] else 'FAIL'} {name}")
    print(f"{cfg.experiment}: {'PASS' if report.passed else 'FAIL'} ({report.runtime:.1f} s)")
    return EXIT_PASS if report.passed else EXIT_FAIL


def _oracle(args) -> int:
    from .oracles import ORACLES, run_oracle

    names = list(ORACLES) if args.case == "all" else [args.case]
    unknown = [n for n in names if n not in ORACLES]
    if unknown:
        print(f"unknown oracle {unknown[0]!r}; choose from all, {', '.join(ORACLES)}", file=sys.stderr)
        return EXIT_CONFIG
    ok = True
    for n in names:
        record, passed = run_oracle(n, args.output)
        ok = ok and passed
        print(f"{'PASS' if passed else 'FAIL'} {n} ({record['runtime_s']:.1f} s)")
    return EXIT_PASS if ok else EXIT_FAIL


def _dump_info() -> int:
    import numpy as np

    from .. import __version__
    from ..dirac import PRESETS

    print(f"dirac-modspace {__version__} (numpy {np.__version__})")
    print("presets:")
    for name in sorted(PRESETS):
        cs = PRESETS[name](1.0)
        print(f"  {name}: N={cs.N} m={cs.m}")
    print("bundled configs:")
    for name in bundled_configs():
        print(f"  {name}")
    return EXIT_PASS


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return _run(args)
    if args.command == "oracle":
        return _oracle(args)
    return _dump_info()


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
