"""Command line interface: ``trapquench run|validate|presets|oracle regenerate``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from pathlib import Path

from . import config as cfgmod
from .textio import atomic_write, fmt

EXIT_CONFIG = 2


def _fail(errors, stream=None) -> int:
    stream = stream or sys.stderr
    print(json.dumps({"status": "error", "errors": list(errors)}, sort_keys=True), file=stream)
    return EXIT_CONFIG


def _build_config(args):
    if args.config and args.preset:
        raise cfgmod.ConfigError(["--config and --preset are mutually exclusive"])
    if args.preset:
        cfg = cfgmod.load_preset(args.preset)
    elif args.config:
        cfg = cfgmod.load(args.config)
    else:
        raise cfgmod.ConfigError(["one of --config or --preset is required"])
    overrides = list(args.override or [])
    if args.workers is not None:
        overrides.append(f"output.workers={args.workers}")
    cfg = cfgmod.apply_overrides(cfg, overrides)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return cfgmod.validate_config(cfg)


def cmd_run(args) -> int:
    from .runner import run

    try:
        cfg = _build_config(args)
    except cfgmod.ConfigError as exc:
        return _fail(exc.errors)
    except OSError as exc:
        return _fail([f"config: {exc}"])
    if not args.out:
        return _fail(["--out: output directory required"])
    for w in cfg.warnings:
        logging.warning(w)
    return run(cfg, args.out)


def cmd_validate(args) -> int:
    try:
        cfg = _build_config(args)
    except cfgmod.ConfigError as exc:
        return _fail(exc.errors)
    except OSError as exc:
        return _fail([f"config: {exc}"])
    for w in cfg.warnings:
        print(f"# warning: {w}")
    print(cfg.to_text(), end="")
    return 0


def cmd_presets(args) -> int:
    for name in cfgmod.preset_names():
        print(name)
    return 0


ORACLE_COUPLINGS = (0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 25.0)


def regenerate_oracle_fixture(path, couplings=ORACLE_COUPLINGS) -> None:
    from .oracles import two_boson_relative_energy

    L, P0, levels = 10.0, 2001, 3
    lines = ["# two-boson relative-motion ground energies from the finite-difference grid oracle",
             f"# generation: L = {L}, P = {P0}..{(P0 - 1) * 2 ** (levels - 1) + 1} (halving), "
             "Richardson over the finest triplet",
             "# regenerate with: python -m trapquench oracle regenerate --out <this file>",
             "# g E_rel E_total measured_order"]
    for g in couplings:
        e, order = two_boson_relative_energy(g, L=L, P0=P0, levels=levels, return_order=True)
        lines.append(f"{fmt(g)} {fmt(e)} {fmt(e + 0.5)} {fmt(order)}")
    atomic_write(Path(path), "\n".join(lines) + "\n")


def cmd_oracle(args) -> int:
    if args.action != "regenerate":
        return _fail([f"oracle: unknown action {args.action!r}"])
    regenerate_oracle_fixture(args.out)
    print(args.out)
    return 0


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="trapquench", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def config_flags(sp):
        sp.add_argument("--config", help="configuration file")
        sp.add_argument("--preset", help="named preset (see `presets`)")
        sp.add_argument("--override", action="append", metavar="KEY=VALUE",
                        help="override a config key, e.g. physics.n_tot=20 (repeatable)")
        sp.add_argument("--workers", type=int, help="parallel sweep points")

    r = sub.add_parser("run", help="run a sweep and write outputs")
    config_flags(r)
    r.add_argument("--out", help="output directory")
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("validate", help="resolve and check a configuration")
    config_flags(v)
    v.set_defaults(func=cmd_validate)

    s = sub.add_parser("presets", help="list shipped presets")
    s.set_defaults(func=cmd_presets)

    o = sub.add_parser("oracle", help="reference-value fixtures")
    o.add_argument("action", choices=["regenerate"])
    o.add_argument("--out", default="tests/data/oracle_values.txt")
    o.set_defaults(func=cmd_oracle)
    return p


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = make_parser().parse_args(argv)
    return args.func(args)
