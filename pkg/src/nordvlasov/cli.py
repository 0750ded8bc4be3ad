"""Command line: ``nordvlasov {run,verify,probe} --config PATH [--out DIR] [--override k=v ...]``.

Exit status: 0 success, 1 a verification property failed, 2 configuration
error, 3 runtime abort (the error class and reason go to stderr) or probe
rows outside causal or history coverage.
"""
import argparse
import sys

from .errors import ConfigError, NVError
from .harness import load_config, probe, run, verify


def _parser():
    ap = argparse.ArgumentParser(prog="nordvlasov", description="2D Nordstrom-Vlasov simulator")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, text in (("run", "run the coupled simulation"),
                       ("verify", "run the property suite"),
                       ("probe", "evaluate retarded phi and derivatives at given points")):
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", required=True, metavar="PATH")
        p.add_argument("--out", metavar="DIR", help="output directory (overrides out_dir)")
        p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE")
        if name == "probe":
            p.add_argument("--points", required=True, metavar="CSV",
                           help="CSV with columns t,x1,x2")
    return ap


def _abort(err, cfg):
    step = getattr(err, "step", None)
    where = f" at step {step}" if step is not None else ""
    print(f"abort{where}: {type(err).__name__} ({err.reason}): {err}", file=sys.stderr)
    if cfg is not None:
        print("config:\n" + cfg.echo(), file=sys.stderr)
    return 3


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.override)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    out = args.out or cfg.out_dir
    try:
        if args.command == "verify":
            ok, _ = verify(cfg)
            return 0 if ok else 1
        if args.command == "run":
            res = run(cfg, out_dir=out)
            last = res.records[-1]
            print(f"run finished: t={last.t:g} E={last.total_energy:.6g} P={last.P_t:.4g} -> {out}")
            return 0
        rows, errors = probe(cfg, args.points, out_dir=out)
        print(f"probe: {len(rows) - errors}/{len(rows)} rows ok -> {out}")
        if errors:
            print(f"probe: {errors} rows outside causal or history coverage", file=sys.stderr)
            return 3
        return 0
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except NVError as err:
        return _abort(err, cfg)


if __name__ == "__main__":
    sys.exit(main())
