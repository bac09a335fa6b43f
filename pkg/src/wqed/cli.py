"""``wqed`` command line.

    wqed run CONFIG [--out DIR] [--tol TOL] [--krylov-dim M] [--threads N]
    wqed run --preset fig1a --photons 2
    wqed presets list
    wqed presets show NAME
    wqed check CONFIG
"""

from __future__ import annotations

import argparse
import json
import sys

from .config import PRESETS, ConfigError, load, preset


def _parser():
    p = argparse.ArgumentParser(prog="wqed", description="Exact waveguide-QED dynamics on a coupled-cavity array")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a scenario from a config file or a preset")
    src = r.add_mutually_exclusive_group(required=True)
    src.add_argument("config", nargs="?", help="flat key = value scenario file")
    src.add_argument("--preset", help="built-in scenario (see 'wqed presets list')")
    r.add_argument("--photons", type=int, help="photon number for scatter-single scenarios")
    r.add_argument("--out", help="output directory (overrides output.dir)")
    r.add_argument("--tol", type=float, help="Krylov local error tolerance per unit time")
    r.add_argument("--krylov-dim", type=int, help="Krylov subspace dimension")
    r.add_argument("--threads", type=int, help="BLAS/OpenMP thread limit, recorded in the output header")
    r.add_argument("--dump-operator", metavar="PATH", help="write H as 'row col value' text")

    pr = sub.add_parser("presets", help="list or show built-in scenarios")
    pr_sub = pr.add_subparsers(dest="action", required=True)
    pr_sub.add_parser("list")
    show = pr_sub.add_parser("show")
    show.add_argument("name")

    c = sub.add_parser("check", help="validate a config file and print it with defaults filled in")
    c.add_argument("config")
    return p


def _overrides(args, cfg):
    out = {}
    if args.photons is not None:
        if cfg.scenario != "scatter-single":
            raise ConfigError("--photons only applies to scatter-single scenarios")
        out["pulse.photons"] = args.photons
    if args.out is not None:
        out["output.dir"] = args.out
    if args.tol is not None:
        out["propagator.tol"] = args.tol
    if args.krylov_dim is not None:
        out["propagator.krylov_dim"] = args.krylov_dim
    if args.threads is not None:
        out["run.threads"] = args.threads
    return out


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        if args.command == "presets":
            if args.action == "list":
                for name, (desc, _) in PRESETS.items():
                    print(f"{name:14s} {desc}")
            else:
                print(preset(args.name).to_text(), end="")
            return 0
        if args.command == "check":
            print(load(args.config).to_text(), end="")
            return 0

        from .experiments import run, write_outputs
        from .hamiltonian import dump_coo

        cfg = preset(args.preset) if args.preset else load(args.config)
        cfg = cfg.with_overrides(_overrides(args, cfg))
        result = run(cfg)
        paths = write_outputs(result, cfg["output.dir"])
        if args.dump_operator:
            dump_coo(result.operators["H"], args.dump_operator)
            paths.append(args.dump_operator)
        print(json.dumps(result.summary, indent=2, sort_keys=True))
        for path in paths:
            print(f"wrote {path}", file=sys.stderr)
        return 0
    except (ConfigError, OSError, ValueError) as exc:
        print(f"wqed: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
