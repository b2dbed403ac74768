"""Command-line entry point: ``rbnlab <subcommand> [options]``."""

from __future__ import annotations

import argparse
import sys
from typing import List, Optional

from rbnlab import __version__
from rbnlab.harness import (FIELDS, ConfigError, ExperimentKind, FigureError,
                            ResumeMismatch, build_config, emit_figure_data, parse_config_text,
                            parse_value, run_experiment)
from rbnlab.presets import preset_names, preset_values

EXIT_OK, EXIT_INVALID, EXIT_RESUME = 0, 2, 3

SUBCOMMANDS = {
    "entropy-scan": (ExperimentKind.ENTROPY_SCAN,),
    "scaling-fit": (ExperimentKind.MAX_ENTROPY_SCALING,),
    "evolve": (ExperimentKind.EVOLVE_SWEEP,),
    "measure": (ExperimentKind.MEASURE_CURVES, ExperimentKind.CUMULATIVE_LANDSCAPE),
}


class _ArgError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 itself; raise so main() controls the exit
    def error(self, message):
        raise _ArgError(message)


def _add_config_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value experiment file")
    p.add_argument("--preset", help="figure preset such as fig4:desk")
    p.add_argument("--workers", type=int, default=1, help="parallel grid cells")
    p.add_argument("--quiet", action="store_true")
    for name in FIELDS:
        if name == "kind":
            continue
        p.add_argument("--" + name.replace("_", "-"), dest=name, metavar="VALUE",
                       help=argparse.SUPPRESS if name in ("n_values", "k_values",
                                                          "i_values", "s_values") else None)
    p.add_argument("--n", dest="n_values", metavar="LIST", help="N values, e.g. 20,100")
    p.add_argument("--k", dest="k_values", metavar="LIST", help="K values or lo:hi:step")
    p.add_argument("--i", dest="i_values", metavar="LIST", help="input sizes")
    p.add_argument("--s", dest="s_values", metavar="LIST", help="sample fractions")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rbnlab", description="Random Boolean network experiments.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        _add_config_options(p)
        if name == "measure":
            p.add_argument("--curves-only", action="store_true",
                           help="skip the cumulative areas")
    fig = sub.add_parser("figure", help="write the data table behind a figure")
    fig.add_argument("manifest", help="result directory or its manifest.json")
    fig.add_argument("figure_id")
    fig.add_argument("-o", "--out", help="output CSV (default: stdout)")
    sub.add_parser("presets", help="list preset names")
    return parser


def _config_from_args(args) -> "ExperimentConfig":
    values = {}
    if args.preset:
        try:
            values.update(preset_values(args.preset))
        except KeyError as exc:
            raise ConfigError("preset", str(exc.args[0])) from None
    if args.config:
        try:
            with open(args.config) as fh:
                values.update(parse_config_text(fh.read()))
        except OSError as exc:
            raise ConfigError("config", str(exc)) from None
    for name in FIELDS:
        raw = getattr(args, name, None)
        if raw is not None and name != "kind":
            values[name] = parse_value(name, raw)
    kinds = SUBCOMMANDS[args.command]
    if args.command == "measure":
        kind = kinds[0] if args.curves_only else kinds[1]
        if values.get("kind") in (k.value for k in kinds) and not args.curves_only:
            kind = ExperimentKind(values["kind"])
    else:
        kind = kinds[0]
    if values.get("kind") is not None and ExperimentKind(values["kind"]) not in kinds:
        raise ConfigError("kind", f"{values['kind']} cannot run under '{args.command}'")
    values["kind"] = kind
    return build_config(values)


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _ArgError as exc:
        parser.print_usage(sys.stderr)
        print(f"rbnlab: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    if args.command == "presets":
        print("\n".join(preset_names()))
        return EXIT_OK
    if args.command == "figure":
        try:
            text = emit_figure_data(args.manifest, args.figure_id, args.out)
        except (FigureError, OSError) as exc:
            print(f"rbnlab: error: {exc}", file=sys.stderr)
            return EXIT_INVALID
        if args.out is None:
            sys.stdout.write(text)
        return EXIT_OK
    try:
        config = _config_from_args(args)
    except (ConfigError, ValueError) as exc:
        print(f"rbnlab: invalid config: {exc}", file=sys.stderr)
        return EXIT_INVALID

    def report(cell):
        if not args.quiet:
            print(f"cell {cell} done", file=sys.stderr, flush=True)

    try:
        manifest = run_experiment(config, workers=args.workers, progress=report)
    except ResumeMismatch as exc:
        print(f"rbnlab: resume mismatch: {exc}", file=sys.stderr)
        return EXIT_RESUME
    print(manifest.directory)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
