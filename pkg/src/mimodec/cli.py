"""Command line front end.

``mimodec simulate`` runs a Monte Carlo campaign and writes a metrics CSV;
``mimodec compare`` diffs two campaign CSVs.  Exit codes: 0 success,
2 configuration error, 3 I/O error.

Flags may also come from a flat ``key=value`` config file (one per line,
``#`` comments allowed) via ``--config``; explicit flags win.
"""

from __future__ import annotations

import argparse
import sys

from .harness import (CampaignConfig, ConfigError, compare_report,
                      parse_snr_grid, run_campaign)

_CONFIG_KEYS = ("tx", "rx", "mod", "snr", "trials", "decoder", "radius",
                "threads", "seed", "out", "trace", "erasure")


def _load_config_file(path) -> dict:
    values = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw.strip()!r}")
            key, value = (t.strip() for t in line.split("=", 1))
            if key not in _CONFIG_KEYS:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = value
    return values


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mimodec",
                                     description="Massive-MIMO detection simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a Monte Carlo campaign")
    sim.add_argument("--config", help="flat key=value config file (flags win)")
    sim.add_argument("--tx", type=int, help="transmit antennas M")
    sim.add_argument("--rx", type=int, help="receive antennas N")
    sim.add_argument("--mod", choices=["bpsk", "qpsk", "qam16", "qam64"])
    sim.add_argument("--snr", help="SNR grid in dB: a:b:step or a single value")
    sim.add_argument("--trials", type=int, help="trials per grid point")
    sim.add_argument("--decoder", help="decoder spec, e.g. sd:bestfs,j=2 or kbest:k=10")
    sim.add_argument("--radius", default=None, help="formula | inf | squared value")
    sim.add_argument("--threads", type=int, default=None,
                     help="default/cap for decoder-internal threads")
    sim.add_argument("--seed", type=int, default=None)
    sim.add_argument("--out", help="output CSV path")
    sim.add_argument("--trace", help="dump a search trace of the first trial per point")
    sim.add_argument("--erasure", choices=["errors", "mmse-fallback"], default=None)

    cmp_ = sub.add_parser("compare", help="diff two campaign CSVs")
    cmp_.add_argument("csv_a")
    cmp_.add_argument("csv_b")
    return parser


def _merge(args) -> CampaignConfig:
    file_values = _load_config_file(args.config) if args.config else {}

    def pick(flag, key=None, default=None):
        value = getattr(args, flag)
        if value is not None:
            return value
        return file_values.get(key or flag, default)

    missing = [name for name, value in
               (("tx", pick("tx")), ("rx", pick("rx")), ("mod", pick("mod")),
                ("snr", pick("snr")), ("trials", pick("trials")),
                ("decoder", pick("decoder")))
               if value is None]
    if missing:
        raise ConfigError(f"missing required option(s): {', '.join('--' + m for m in missing)}")

    threads = pick("threads")
    seed = pick("seed", default=0)
    return CampaignConfig(
        m=int(pick("tx")),
        n=int(pick("rx")),
        mod=str(pick("mod")),
        snr_grid=parse_snr_grid(pick("snr")),
        trials=int(pick("trials")),
        decoder=str(pick("decoder")),
        radius=str(pick("radius", default="formula")),
        threads=int(threads) if threads is not None else None,
        seed=int(seed),
        out=pick("out"),
        trace=pick("trace"),
        erasure=str(pick("erasure", default="errors")),
    )


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "simulate":
            config = _merge(args)
            config.validate()
            run_campaign(config)
            return 0
        report = compare_report(args.csv_a, args.csv_b)
        print(report)
        return 0
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
