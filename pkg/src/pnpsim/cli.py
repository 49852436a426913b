"""Command-line front end.

``pnp-sim <experiment> [--preset NAME] [--config PATH] [--out DIR] [--seed N]
[--threads N] [--resolution HZ]``

Exit status: 0 on success, 1 for configuration errors, 2 for numerical
failures.
"""

from __future__ import annotations

import argparse
import json
import sys

from .config import PRESETS, Experiment, config_from_dict, config_to_dict, load_config, parse_si, preset
from .errors import ConfigurationError, NumericalError, PNPError
from .parallel import THREADS_ENV

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="pnp-sim",
        description="Comb-injected laser simulator: photonic neural population experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="EXPERIMENT")
    for exp in Experiment:
        p = sub.add_parser(exp.value, help=f"run the {exp.value} experiment")
        p.add_argument("--config", metavar="PATH", help="TOML experiment config")
        p.add_argument("--preset", metavar="NAME", help=f"built-in scenario: {', '.join(PRESETS)}")
        p.add_argument("--out", metavar="DIR", help="output directory (default ./pnp-<experiment>)")
        p.add_argument("--seed", type=int, metavar="N", help="master seed, overrides the config")
        p.add_argument("--threads", type=int, metavar="N",
                       help=f"worker threads (default ${THREADS_ENV} or 1)")
        p.add_argument("--resolution", metavar="HZ",
                       help="spectral resolution target, e.g. 2.5MHz (overrides the grid)")
    return parser


def resolve_config(args):
    """Preset, then config file, then command-line overrides."""
    if args.config:
        cfg = load_config(args.config)
        if args.preset and cfg.preset != args.preset:
            data = config_to_dict(cfg)
            data["preset"] = args.preset
            cfg = config_from_dict(data)
    elif args.preset:
        cfg = preset(args.preset)
    else:
        cfg = config_from_dict({})
    data = config_to_dict(cfg)
    data["experiment"] = args.command
    if args.seed is not None:
        data["seed"] = args.seed
    if args.resolution is not None:
        data["grid"] = {"resolution": parse_si(args.resolution, "Hz", "resolution")}
    return config_from_dict(data)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        from .runner import run

        cfg = resolve_config(args)
        out = args.out or f"pnp-{cfg.experiment.value}"
        manifest = run(cfg, out, threads=args.threads)
    except ConfigurationError as exc:
        print(f"pnp-sim: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"pnp-sim: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except PNPError as exc:
        print(f"pnp-sim: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"pnp-sim: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(json.dumps(manifest["summary"], indent=2, sort_keys=True, default=str))
    print(f"wrote {out}", file=sys.stderr)
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
