"""Command-line entry point: ``tangentmap <subcommand> ...``.

Exit codes: 0 success or pass, 1 experiment failure, 2 usage or parse error.
"""
from __future__ import annotations

import argparse
import inspect
import json
import math
import sys
from contextlib import contextmanager
from typing import Iterator, Optional, Sequence, TextIO

from .chardir import DicriticalError, classify_directions, degreewise, reports_to_json
from .orbit import (OrbitParams, classify, diagnostics, product_form_of, trajectory,
                    write_diagnostics_csv, write_trace_csv)
from .parser import FAMILIES, MapSource, ParseError, format_map, parse_complex
from .poly import SUM_DIFF, Complex2, MapError, PolyMap2, conjugate_linear
from .render import Window, grid_to_ppm, probe, render_grid, stats_csv
from .verify import EXPERIMENTS, run_experiment

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2

DEFAULT_WINDOW = "0.4,0.4,2.4,2.4"


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- flag values

def _floats(text: str, n: int, what: str) -> list[float]:
    parts = text.split(",")
    if len(parts) != n:
        raise UsageError(f"{what} needs {n} comma-separated numbers, got {text!r}")
    try:
        return [float(p) for p in parts]
    except ValueError:
        raise UsageError(f"{what}: bad number in {text!r}") from None


def parse_point(text: str) -> Complex2:
    """``z,w`` with each entry a complex literal, or ``re_z,im_z,re_w,im_w``."""
    parts = [p.strip() for p in text.split(",")]
    if len(parts) == 4:
        a, b, c, d = _floats(text, 4, "point")
        return Complex2(complex(a, b), complex(c, d))
    if len(parts) != 2:
        raise UsageError(f"a point is 'z,w' or 're_z,im_z,re_w,im_w', got {text!r}")
    return Complex2(parse_complex(parts[0]), parse_complex(parts[1]))


def _map_source(args) -> PolyMap2:
    if (args.map is None) == (args.family is None):
        raise UsageError("give exactly one of --map or --family")
    if args.map is not None:
        if args.a is not None or args.r is not None:
            raise UsageError("--a and --r go with --family")
        return MapSource(text=args.map).resolve()
    a = parse_complex(args.a) if args.a is not None else None
    return MapSource(family=args.family, a=a, r=args.r).resolve()


def _in_xy_chart(m: PolyMap2) -> bool:
    return m.variables == ("x", "y")


def _orbit_params(args, m: PolyMap2) -> OrbitParams:
    if args.line is not None:
        parts = args.line.split(",")
        if len(parts) != 2:
            raise UsageError("--line needs 'l0,l1'")
        line = (parse_complex(parts[0]), parse_complex(parts[1]))
    else:
        # the line {z = w} reads {y = 0} in (x, y) coordinates
        line = (0j, 1 + 0j) if _in_xy_chart(m) else (1 + 0j, -1 + 0j)
    return OrbitParams(max_iter=args.max_iter, escape_radius=args.escape_radius,
                       origin_eps=args.origin_eps, line_eps=args.line_eps,
                       direction_window=args.direction_window, line=line,
                       fatou=not args.no_fatou)


@contextmanager
def _output(path: Optional[str], default: TextIO) -> Iterator[TextIO]:
    if path is None or path == "-":
        yield default
        return
    with open(path, "w", newline="\n") as fh:
        yield fh


def _finite(obj):
    """Replace non-finite floats by None so the JSON stays standard."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    return obj


def _dump_json(obj, path: Optional[str], default: Optional[TextIO] = None) -> None:
    with _output(path, default or sys.stdout) as fh:
        fh.write(json.dumps(_finite(obj), indent=2, allow_nan=False) + "\n")


# ---------------------------------------------------------------- subcommands

def cmd_chardirs(args) -> int:
    m = _map_source(args)
    try:
        reports = classify_directions(m)
    except DicriticalError:
        _dump_json({"dicritical": True}, args.out)
        return EXIT_OK
    extra = None
    if args.degreewise:
        extra = []
        for rep in reports:
            st = degreewise(m, rep.direction)
            extra.append({
                "degreewise": [
                    {"degree": j, "characteristic": ch, "degenerate": dg,
                     "lambda": lam if ch else None}
                    for j, ch, dg, lam in st.entries
                ],
                "s_truncated": st.s_truncated,
                "s_reaches_top": st.s_reaches_top,
                "r_plus_1": st.r_plus_1,
            })
    with _output(args.out, sys.stdout) as fh:
        fh.write(reports_to_json(reports, extra))
    return EXIT_OK


def cmd_orbit(args) -> int:
    m = _map_source(args)
    start = parse_point(args.start)
    params = _orbit_params(args, m)
    out = classify(m, start, params, backend=args.backend)
    steps = args.steps if args.steps is not None else out.iterations_used
    if steps < 0 or args.stride < 1:
        raise UsageError("--steps must be >= 0 and --stride >= 1")
    csv_to_stdout = False
    if args.diagnostics is not None:
        m_xy, p_xy = m, start
        if not _in_xy_chart(m):
            m_xy, p_xy = conjugate_linear(m, SUM_DIFF), SUM_DIFF.apply(start)
        dt = diagnostics(m_xy, p_xy, steps, stride=args.stride, product_form=product_form_of(m_xy),
                         backend=args.backend)
        csv_to_stdout = args.diagnostics == "-"
        with _output(args.diagnostics, sys.stdout) as fh:
            write_diagnostics_csv(dt, fh)
    if args.trace is not None:
        if args.trace == "-" and csv_to_stdout:
            raise UsageError("only one CSV can go to standard output")
        tr = trajectory(m, start, steps, stride=args.stride, backend=args.backend)
        csv_to_stdout = csv_to_stdout or args.trace == "-"
        with _output(args.trace, sys.stdout) as fh:
            write_trace_csv(tr, fh, params.line)
    _dump_json(out.to_dict(), args.out, sys.stderr if csv_to_stdout else sys.stdout)
    return EXIT_OK


def cmd_render(args) -> int:
    m = _map_source(args)
    cx, cy, ex, ey = _floats(args.window, 4, "--window")
    width, height = (int(v) for v in _floats(args.px, 2, "--px"))
    imz, imw = _floats(args.slice, 2, "--slice")
    window = Window(cx, cy, ex, ey, width, height, imz, imw)
    params = _orbit_params(args, m)
    if args.stats == "-" and args.probe:
        raise UsageError("stats and probes cannot both go to standard output")
    grid = render_grid(m, window, params, threads=args.threads,
                       overlay_preimages=args.overlay_preimages, backend=args.backend)
    with open(args.out, "wb") as fh:
        fh.write(grid_to_ppm(grid))
    if args.stats is not None:
        with _output(args.stats, sys.stdout) as fh:
            fh.write(stats_csv(grid))
    if args.probe:
        pts = [parse_point(p) for p in args.probe]
        rows = []
        for pt, res in zip(pts, probe(m, pts, params, backend=args.backend)):
            row = {"start": [pt.z.real, pt.z.imag, pt.w.real, pt.w.imag]}
            try:
                i, j = window.pixel_of(pt.z.real, pt.w.real)
                row["pixel"] = [i, j]
                row["pixel_class"] = grid.class_at(i, j).name
            except ValueError:
                row["pixel"] = None
            row.update(res.to_dict())
            rows.append(row)
        _dump_json(rows, None)
    return EXIT_OK


def cmd_verify(args) -> int:
    key = args.experiment.upper()
    if key not in EXPERIMENTS:
        raise UsageError(f"unknown experiment {args.experiment!r}; choose from {', '.join(EXPERIMENTS)}")
    fn = EXPERIMENTS[key]
    accepted = inspect.signature(fn).parameters
    kwargs = {}
    wanted = {
        "seed": args.seed,
        "n_samples": args.samples,
        "horizon": args.horizon,
        "r": args.r,
        "family": args.family,
        "threads": args.threads,
    }
    if args.a is not None:
        a = parse_complex(args.a)
        wanted["a"] = a.real if a.imag == 0 else a
    if args.slice is not None:
        wanted["slice_im"] = tuple(_floats(args.slice, 2, "--slice"))
    for name, val in wanted.items():
        if val is None:
            continue
        if name not in accepted:
            if name == "threads":
                continue
            raise UsageError(f"{key} does not take --{name.replace('n_samples', 'samples')}")
        kwargs[name] = val
    report = run_experiment(key, **kwargs)
    with _output(args.out, sys.stdout) as fh:
        fh.write(report.to_json())
    print(f"{report.id} {report.verdict}", file=sys.stderr)
    return EXIT_FAIL if report.verdict == "fail" else EXIT_OK


def cmd_fmt(args) -> int:
    m = _map_source(args)
    with _output(args.out, sys.stdout) as fh:
        fh.write(format_map(m) + "\n")
    return EXIT_OK


# ---------------------------------------------------------------- argument parser

def _add_map_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("map")
    g.add_argument("--map", help='expression such as "(z - z^2 + z*w, w + z*w - w^2)"')
    g.add_argument("--family", help=f"named family: {', '.join(FAMILIES)}")
    g.add_argument("--a", help="family parameter, as re,im or a complex literal")
    g.add_argument("--r", type=int, help="family degree parameter")


def _add_orbit_flags(p: argparse.ArgumentParser) -> None:
    d = OrbitParams()
    g = p.add_argument_group("classification")
    g.add_argument("--max-iter", type=int, default=d.max_iter)
    g.add_argument("--escape-radius", type=float, default=d.escape_radius)
    g.add_argument("--origin-eps", type=float, default=d.origin_eps)
    g.add_argument("--line-eps", type=float, default=d.line_eps)
    g.add_argument("--direction-window", type=int, default=d.direction_window)
    g.add_argument("--line", help="l0,l1: the line test measures |l0 z + l1 w| "
                                  "(default 1,-1; 0,1 for maps written in x, y)")
    g.add_argument("--no-fatou", action="store_true", help="disable the parabolic approach test")
    g.add_argument("--backend", choices=("cython", "python"), help="kernel implementation")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tangentmap",
                                 description="Dynamics of polynomial maps of C^2 tangent to the identity.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("chardirs", help="characteristic directions as JSON")
    _add_map_flags(p)
    p.add_argument("--degreewise", action="store_true", help="add per-degree status of each direction")
    p.add_argument("--out", help="output file (default stdout)")
    p.set_defaults(func=cmd_chardirs)

    p = sub.add_parser("orbit", help="classify one orbit; optional CSV traces")
    _add_map_flags(p)
    _add_orbit_flags(p)
    p.add_argument("--start", required=True, help="z,w or re_z,im_z,re_w,im_w")
    p.add_argument("--steps", type=int, help="trace length (default: iterations used)")
    p.add_argument("--stride", type=int, default=1)
    p.add_argument("--trace", help="orbit CSV path ('-' for stdout)")
    p.add_argument("--diagnostics", nargs="?", const="-",
                   help="u, v, t diagnostics CSV in (x, y) coordinates (default stdout)")
    p.add_argument("--out", help="outcome JSON path")
    p.set_defaults(func=cmd_orbit)

    p = sub.add_parser("render", help="basin picture as PPM")
    _add_map_flags(p)
    _add_orbit_flags(p)
    p.add_argument("--window", default=DEFAULT_WINDOW, help="cx,cy,ex,ey (centre and full extents)")
    p.add_argument("--px", default="600,600", help="W,H")
    p.add_argument("--slice", default="0,0", help="imz,imw")
    p.add_argument("--overlay-preimages", action="store_true")
    p.add_argument("--threads", type=int, default=0, help="0 = all cores")
    p.add_argument("--out", required=True, help="PPM path")
    p.add_argument("--stats", help="class,count,fraction CSV path ('-' for stdout)")
    p.add_argument("--probe", action="append", metavar="POINT",
                   help="also classify this exact start and report its pixel")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("verify", help="run an experiment and write its report")
    p.add_argument("--experiment", required=True, help=", ".join(EXPERIMENTS))
    p.add_argument("--seed", type=int)
    p.add_argument("--samples", type=int)
    p.add_argument("--horizon", type=int)
    p.add_argument("--a")
    p.add_argument("--r", type=int)
    p.add_argument("--family", help="E8 only: f or h")
    p.add_argument("--slice", help="E8 only: imz,imw")
    p.add_argument("--threads", type=int, default=0)
    p.add_argument("--out", help="report JSON path (default stdout)")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("fmt", help="parse a map and print its canonical form")
    _add_map_flags(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_fmt)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ParseError, MapError, ValueError, KeyError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"tangentmap {args.command}: {msg}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"tangentmap {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
