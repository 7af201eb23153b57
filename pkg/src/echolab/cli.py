"""Command line entry point: ``echo-lab <subcommand> --config <path> [options]``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .config import KINDS, load_config, load_preset, preset_names
from .errors import ConfigError, EchoLabError, NumericalValidityError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _window(text: str):
    try:
        lo, hi = (float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("window must look like 2,8") from None
    return lo, hi


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="echo-lab", description="Fidelity decay experiments")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    for kind in KINDS:
        p = sub.add_parser(kind, help=f"run the {kind} experiment")
        src = p.add_mutually_exclusive_group(required=True)
        src.add_argument("--config", help="INI configuration file")
        src.add_argument("--preset", help="name of a shipped preset (see `echo-lab presets`)")
        p.add_argument("--out", help="output directory (overrides experiment.out)")
        p.add_argument("--seed", type=int, help="override experiment.seed")
        p.add_argument("--threads", type=int, help="override experiment.threads")
        p.add_argument("--T", type=int, dest="T", help="override experiment.T")
        figs = p.add_mutually_exclusive_group()
        figs.add_argument("--figures", dest="figures", action="store_true", default=None,
                          help="render figures next to the data (needs matplotlib)")
        figs.add_argument("--no-figures", dest="figures", action="store_false")
    f = sub.add_parser("fit", help="re-fit an existing CSV with a new window")
    f.add_argument("csv", help="CSV file with columns t,value,stderr")
    f.add_argument("--window", type=_window, required=True, help="t_start,t_end")
    sub.add_parser("presets", help="list shipped presets")
    return parser


def _report(bundle) -> None:
    print(f"{bundle.kind}: results in {bundle.out_dir}")
    for name, s in bundle.series.items():
        if s.fit is not None:
            f = s.fit
            print(f"  {name:32s} rate {f.rate:.4f} +/- {f.rate_stderr:.4f} over [{f.window[0]:g}, {f.window[1]:g}]"
                  f" residual {f.residual:.3f}")
    for key, value in sorted(bundle.scalars.items()):
        if isinstance(value, float):
            print(f"  {key:32s} {value:.6g}")
    if bundle.comparison:
        c = bundle.comparison
        print(f"  quantum/classical rate ratio {c['ratio']:.3f} follows-classical={c['follows_classical']}")
        if "lyapunov_reference" in c:
            print(f"  ln(K/2) = {c['lyapunov_reference']:.4f}, quantum rate / ln(K/2) = {c['ratio_to_lyapunov']:.3f}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "presets":
            for name in preset_names():
                cfg = load_preset(name)
                print(f"{name:18s} {cfg.kind}")
            return EXIT_OK
        if args.command == "fit":
            from .runner import refit_csv

            print(json.dumps(refit_csv(args.csv, args.window), sort_keys=True, indent=2))
            return EXIT_OK
        from .runner import run

        cfg = load_config(args.config) if args.config else load_preset(args.preset)
        if cfg.kind != args.command:
            raise ConfigError(f"config describes {cfg.kind!r}, not {args.command!r}", field="experiment.kind")
        cfg = cfg.with_overrides(seed=args.seed, threads=args.threads, T=args.T, figures=args.figures)
        bundle = run(cfg, out_dir=args.out)
        _report(bundle)
        return EXIT_OK
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalValidityError as exc:
        hint = getattr(exc, "suggested_n_max", None)
        print(f"numerical validity error: {exc}" + (f" (try n_max >= {hint})" if hint else ""), file=sys.stderr)
        return EXIT_NUMERICAL
    except EchoLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
