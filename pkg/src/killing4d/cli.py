"""Command-line front end: ``verify``, ``dump`` and ``schema``.

Exit status: 0 when every requested suite passes, 1 on a suite failure,
2 on a configuration error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

from . import __version__
from .chart import ConfigurationError, DomainError, grid_points
from .config import SCHEMA, SUITES, build_case, load_config
from .verify import Context, dump_columns, report_json, run, worker_count

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _read_config(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ConfigurationError(f"cannot read config {path}: {e.strerror}") from None
    return load_config(text)


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def cmd_verify(args) -> int:
    cfg = _read_config(args.config)
    report = run(cfg, args.suite or None)
    out = args.output or cfg.get("output", {}).get("report")
    _write(out, report_json(report))
    for name, s in report["suites"].items():
        flag = "PASS" if s["pass"] else "FAIL"
        print(f"{flag} {name}", file=sys.stderr)
        for r in s["rows"]:
            if r["pass"] is False:
                print(f"     {r['identity']}: max {r['max']:.3e} vs {r['comparison']} {r['tolerance']:.1e}",
                      file=sys.stderr)
    for name, why in report["skipped"].items():
        print(f"SKIP {name}: {why}", file=sys.stderr)
    return EXIT_OK if report["pass"] else EXIT_FAIL


def _parse_grid(s: str) -> tuple[int, int]:
    try:
        nx, ny = (int(v) for v in s.split(","))
    except ValueError:
        raise ConfigurationError(f"grid must be 'nx,ny', got {s!r}") from None
    if nx < 1 or ny < 1:
        raise ConfigurationError("grid sizes must be positive")
    return nx, ny


def cmd_dump(args) -> int:
    cfg = _read_config(args.config)
    names = [f.strip() for f in args.fields.split(",") if f.strip()] if args.fields else []
    nx, ny = _parse_grid(args.grid)
    case = build_case(cfg)
    pts = grid_points(case.domain, nx, ny)
    ctx = Context(case, pts, worker_count(), int(cfg.get("seed", 0)))
    cols = dump_columns(ctx)
    unknown = [n for n in names if n not in cols]
    if unknown:
        raise ConfigurationError(f"unknown field(s) {unknown}; available: {sorted(cols)}")

    def row(p):
        vals = []
        for n in names:
            try:
                vals.append(repr(float(cols[n](p))))
            except DomainError:
                vals.append("")
        return [repr(float(c)) for c in p] + vals

    rows = ctx.map(row, pts) if names else [[repr(float(c)) for c in p] for p in pts]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(["c0", "c1", "c2", "c3"] + names)
    if names:
        w.writerows(rows)
    out = args.output or cfg.get("output", {}).get("dump")
    _write(out, buf.getvalue())
    return EXIT_OK


def cmd_schema(args) -> int:
    sys.stdout.write(json.dumps(SCHEMA, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="killing4d", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run verification suites and print a JSON report")
    v.add_argument("--config", required=True)
    v.add_argument("--suite", action="append", choices=SUITES, help="repeatable; default: all")
    v.add_argument("--output", "-o", help="report path (default: config output.report, else stdout)")
    v.set_defaults(func=cmd_verify)

    d = sub.add_parser("dump", help="write scalar quantities on a grid as CSV")
    d.add_argument("--config", required=True)
    d.add_argument("--fields", default="", help="comma-separated names, e.g. f+,f-,Scal")
    d.add_argument("--grid", default="20,20", help="nx,ny over the first two coordinates")
    d.add_argument("--output", "-o")
    d.set_defaults(func=cmd_dump)

    s = sub.add_parser("schema", help="print the configuration JSON schema")
    s.set_defaults(func=cmd_schema)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_CONFIG if e.code else EXIT_OK
    try:
        return args.func(args)
    except ConfigurationError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
