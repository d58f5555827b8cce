"""Command line: ``cfcusps {cusps, expand, distribute, crosscheck}``.

Exit codes: 0 success, 1 a check failed, 2 usage error.
"""
from __future__ import annotations

import argparse
import json
import sys

from .cf_engines import CFKind, approximants
from .harness import (
    config_from_mapping,
    default_crosscheck,
    parse_config_text,
    parse_value,
    run_distribution,
    write_report,
)
from .numerics import DomainError
from .orbit import expand
from .skewprod import trajectory_rows, write_trajectory
from .subgroups import (
    build_coset_table,
    cusp_partition,
    cusp_representative,
    parse_group,
    parse_spec,
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _parser():
    p = _Parser(prog="cfcusps", description="Continued fractions, cusps and skew products.")
    sub = p.add_subparsers(dest="cmd")

    c = sub.add_parser("cusps", help="index, cusp classes and widths of a subgroup")
    c.add_argument("--group", default="modular", help="modular | hecke:m")
    c.add_argument("--spec", required=True, help="mod:N | gamma0:N | perm:FILE")

    e = sub.add_parser("expand", help="digits and approximants of a value")
    e.add_argument("--kind", default="regular", help="regular | alpha:a | rosen:m")
    e.add_argument("--x", required=True, help="value, e.g. 2/5 or lam-1")
    e.add_argument("--n", type=int, default=10)
    e.add_argument("--dump", help="write the skew-product trajectory (TSV) here")
    e.add_argument("--spec", default="mod:2", help="subgroup for --dump")

    d = sub.add_parser("distribute", help="cusp distribution experiment")
    d.add_argument("--config", help="key=value config file; flags override it")
    d.add_argument("--kind")
    d.add_argument("--spec")
    d.add_argument("--N", type=int)
    d.add_argument("--S", type=int)
    d.add_argument("--seed", type=int)
    d.add_argument("--input", choices=["random-adaptive", "random-rational", "explicit"])
    d.add_argument("--rational-bits", type=int)
    d.add_argument("--value")
    d.add_argument("--output", help="report path (stdout if omitted)")
    d.add_argument("--format", choices=["json", "csv"])
    d.add_argument("--tolerance", type=float, help="exit 1 if some cusp deviates by more")

    x = sub.add_parser("crosscheck", help="run the oracle suites")
    x.add_argument("--seed", type=int, default=0)
    x.add_argument("--quick", action="store_true")
    return p


def _cmd_cusps(args, out):
    m = parse_group(args.group)
    table = build_coset_table(parse_spec(args.spec, m))
    inf, zero = cusp_partition(table, "inf"), cusp_partition(table, "0")
    print(f"group {args.group}  spec {args.spec}", file=out)
    print(f"index {table.index}", file=out)
    print(f"cusps {inf.count}  widths {' '.join(map(str, inf.widths))}  sum {sum(inf.widths)}", file=out)
    for rel, ct in (("inf", inf), ("0", zero)):
        print(f"relation .{rel}:", file=out)
        for j, cls in enumerate(ct.classes):
            rep = cusp_representative(table, j, inf)
            print(f"  cusp {j}  width {ct.widths[j]}  [{rep}]  labels {' '.join(map(str, cls))}", file=out)
    return 0


def _cmd_expand(args, out):
    kind = CFKind.parse(args.kind)
    if args.n < 0:
        raise UsageError("--n must be non-negative")
    x = parse_value(args.x, kind)
    exp = expand(kind, x, args.n)
    if kind.signed:
        digits = " ".join(f"{'+' if s.epsilon > 0 else '-'}{s.digit}" for s in exp.steps)
    else:
        digits = " ".join(str(s.digit) for s in exp.steps)
    print(f"digits {digits}", file=out)
    for k, ap in enumerate(approximants(exp.steps, kind), 1):
        print(f"  k={k}  p/q = {ap.p_cur}/{ap.q_cur}", file=out)
    print("terminated" if exp.terminated else f"truncated after {len(exp.steps)} digits", file=out)
    if args.dump:
        table = build_coset_table(parse_spec(args.spec, kind.group_m))
        rows, _ = trajectory_rows(x, kind, table, args.n)
        with open(args.dump, "w") as fh:
            write_trajectory(fh, rows)
    return 0


def _cmd_distribute(args, out):
    d = {}
    if args.config:
        with open(args.config) as fh:
            d = parse_config_text(fh.read())
    for key, attr in (("kind", "kind"), ("spec", "spec"), ("N", "N"), ("S", "S"), ("seed", "seed"),
                      ("input", "input"), ("rational_bits", "rational_bits"), ("value", "value"),
                      ("output", "output"), ("format", "format")):
        v = getattr(args, attr)
        if v is not None:
            d[key] = str(v)
    if not d.get("spec"):
        raise UsageError("distribute needs --spec (or spec in the config file)")
    config = config_from_mapping(d)
    report = run_distribution(config)
    if config.output:
        write_report(report, config.output, config.fmt)
    else:
        out.write(report.to_json() if config.fmt == "json" else report.to_csv())
    if args.tolerance is not None and report.max_deviation() > args.tolerance:
        print(f"max deviation {report.max_deviation():.4f} exceeds {args.tolerance}", file=sys.stderr)
        return 1
    return 0


def _cmd_crosscheck(args, out):
    results = default_crosscheck(args.seed, args.quick)
    ok = True
    for name, r in results.items():
        status = "ok" if r["failures"] == 0 else "FAIL"
        ok &= r["failures"] == 0
        print(f"{name:18s} {status}  checked {r['checked']}  failures {r['failures']}", file=out)
    return 0 if ok else 1


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = _parser()
    try:
        args = parser.parse_args(argv)
        if not args.cmd:
            raise UsageError("missing subcommand")
        cmd = {"cusps": _cmd_cusps, "expand": _cmd_expand, "distribute": _cmd_distribute,
               "crosscheck": _cmd_crosscheck}[args.cmd]
        return cmd(args, out)
    except UsageError as exc:
        print(f"cfcusps: usage error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, DomainError, OSError, json.JSONDecodeError) as exc:
        print(f"cfcusps: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
