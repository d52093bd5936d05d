"""Command line surface: ``mpcorner <command>``.

Commands: ``decompose`` (CSV cloud to decomposition JSON), ``represent``
(decomposition JSON to image files), ``distance`` (between two decomposition
files), and the three experiment drivers ``convergence``, ``bench``,
``instability`` (CSV reports).

Options may come from a ``--config`` file of ``key=value`` lines ('#' starts
a comment); explicit flags override config values.  Exit codes: 0 success,
1 input problem, 2 configuration problem, 3 internal error; failures print a
single ``mpcorner: error=<kind> message="..."`` line to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__
from .distances import bottleneck, interleaving_rect
from .experiments import (
    decompose_cloud,
    run_bench,
    run_convergence,
    run_instability,
)
from .invariants import PhiKind
from .model import (
    INF_DEATH_SENTINEL,
    decomposition_to_dict,
    read_decomposition,
)
from .pipeline import load_pointcloud
from .representations import (
    GridSpec,
    image_distance,
    mpl,
    scdr_p,
    scdr_sup,
    write_image_csv,
    write_image_pgm,
)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_CONFIG = 2
EXIT_INTERNAL = 3


class InputError(Exception):
    """Problem with an input file (missing, unreadable, malformed)."""


class ConfigError(Exception):
    """Problem with a flag or config value."""


# Converters for config-file values, keyed by option destination name.
_CONVERTERS = {
    "seed": int,
    "workers": int,
    "delta": float,
    "phi": str,
    "p": str,
    "grid": str,
    "bif_grid": str,
    "bandwidth": float,
    "lines": int,
    "degree": int,
    "margin": float,
    "reps": int,
    "base_size": int,
    "generator": str,
    "sizes": str,
    "grids": str,
    "eps": str,
    "repeats": int,
    "samples": int,
    "k": int,
    "metric": str,
    "norm": str,
    "window": str,
    "output": str,
}


def _load_config(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    out = {}
    for lineno, line in enumerate(lines, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno}: expected key=value, got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _CONVERTERS:
            raise ConfigError(f"config line {lineno}: unknown key {key!r}")
        out[key] = value
    return out


class _Options:
    """Flag values with config-file fallback and typed conversion."""

    def __init__(self, args):
        self.args = args
        self.config = _load_config(args.config) if getattr(args, "config", None) else {}

    def get(self, key, default=None):
        flag = getattr(self.args, key, None)
        if flag is not None:
            return flag
        if key in self.config:
            try:
                return _CONVERTERS[key](self.config[key])
            except ValueError as exc:
                raise ConfigError(f"config value {key}={self.config[key]!r}: {exc}") from exc
        return default


def _parse_resolution(text, *, key="grid") -> tuple:
    """'50x50' (or a bare '50') to a (W, H) tuple."""
    parts = str(text).lower().split("x")
    try:
        dims = tuple(int(p) for p in parts)
    except ValueError as exc:
        raise ConfigError(f"{key} must look like WxH, got {text!r}") from exc
    if len(dims) == 1:
        dims = (dims[0], dims[0])
    if len(dims) != 2 or any(d < 1 for d in dims):
        raise ConfigError(f"{key} must be two positive sizes, got {text!r}")
    return dims


def _parse_window(text):
    """'x0,y0:x1,y1' to a (lower, upper) pair of 2-vectors."""
    try:
        lo_s, hi_s = str(text).split(":")
        lo = tuple(float(v) for v in lo_s.split(","))
        hi = tuple(float(v) for v in hi_s.split(","))
    except ValueError as exc:
        raise ConfigError(f"window must look like x0,y0:x1,y1, got {text!r}") from exc
    if len(lo) != len(hi) or len(lo) != 2:
        raise ConfigError(f"window must have two coordinates per corner, got {text!r}")
    return lo, hi


def _parse_num_list(text, convert, *, key) -> list:
    try:
        return [convert(part) for part in str(text).split(",") if part.strip() != ""]
    except ValueError as exc:
        raise ConfigError(f"{key} must be a comma list, got {text!r}") from exc


def _phi_kind(value) -> PhiKind:
    try:
        return PhiKind.coerce(value)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _positive_delta(value) -> float:
    delta = float(value)
    if delta <= 0:
        raise ConfigError(f"delta must be positive, got {delta}")
    return delta


def _read_cloud(path):
    try:
        return load_pointcloud(path)
    except OSError as exc:
        raise InputError(f"cannot read point cloud {path}: {exc}") from exc
    except ValueError as exc:
        raise InputError(f"bad point cloud {path}: {exc}") from exc


def _read_decomposition(path):
    try:
        return read_decomposition(path)
    except OSError as exc:
        raise InputError(f"cannot read decomposition {path}: {exc}") from exc
    except ValueError as exc:
        raise InputError(f"bad decomposition {path}: {exc}") from exc


def _default_window(decomp, delta):
    """Corner bounding box padded by delta; unit window when empty."""
    boxes = [m.bounding_box() for m in decomp.intervals if not m.is_zero]
    if not boxes:
        return (0.0, 0.0), (1.0, 1.0)
    lo = np.min([b.lower for b in boxes], axis=0) - delta
    hi = np.max([b.upper for b in boxes], axis=0) + delta
    return tuple(lo), tuple(hi)


def cmd_decompose(args) -> int:
    opt = _Options(args)
    cloud = _read_cloud(args.input)
    lines = int(opt.get("lines", 32))
    if lines < 2:
        raise ConfigError(f"lines must be >= 2, got {lines}")
    degree = int(opt.get("degree", 1))
    bandwidth = float(opt.get("bandwidth", 0.3))
    if bandwidth <= 0:
        raise ConfigError(f"bandwidth must be positive, got {bandwidth}")
    margin = float(opt.get("margin", 0.3))
    bif_res = _parse_resolution(opt.get("bif_grid", "32x32"), key="bif-grid")
    try:
        dec, _ = decompose_cloud(
            cloud,
            bif_resolution=bif_res,
            margin=margin,
            bandwidth=bandwidth,
            num_lines=lines,
            degree=degree,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    out = args.output or "decomposition.json"
    payload = decomposition_to_dict(dec)
    payload["metadata"] = {
        "source": str(args.input),
        "bandwidth": bandwidth,
        "lines": lines,
        "bif_grid": "x".join(str(r) for r in bif_res),
        "margin": margin,
        "infinite_death_sentinel": INF_DEATH_SENTINEL,
        "infinite_deaths_truncated_at_bounding_box": True,
    }
    with open(out, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")
    print(json.dumps({"intervals": len(dec), "degree": degree, "output": str(out)}))
    return EXIT_OK


def cmd_represent(args) -> int:
    opt = _Options(args)
    dec = _read_decomposition(args.input)
    delta = _positive_delta(opt.get("delta", 0.1))
    kind = _phi_kind(opt.get("phi", "b"))
    p = str(opt.get("p", "sup"))
    resolution = _parse_resolution(opt.get("grid", "50x50"))
    window_text = opt.get("window")
    window = _parse_window(window_text) if window_text else _default_window(dec, delta)
    try:
        grid = GridSpec(window[0], window[1], resolution)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    try:
        if p.lower() == "sup":
            image = scdr_sup(dec, kind, delta, grid)
        else:
            image = scdr_p(dec, float(p), kind, delta, grid)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    prefix = args.output or "representation"
    csv_path = f"{prefix}.csv"
    pgm_path = f"{prefix}.pgm"
    write_image_csv(image, csv_path)
    write_image_pgm(image, pgm_path)
    print(
        json.dumps(
            {
                "csv": csv_path,
                "pgm": pgm_path,
                "max_value": float(image.values.max()) if image.values.size else 0.0,
            }
        )
    )
    return EXIT_OK


def cmd_distance(args) -> int:
    opt = _Options(args)
    dec_a = _read_decomposition(args.input_a)
    dec_b = _read_decomposition(args.input_b)
    metric = str(opt.get("metric", "bottleneck")).lower()
    if metric == "bottleneck":
        try:
            result = bottleneck(dec_a, dec_b)
        except ValueError as exc:
            raise InputError(str(exc)) from exc
        print(json.dumps({"metric": metric, "value": result.cost}))
    elif metric == "interleaving-rect":
        if len(dec_a) != 1 or len(dec_b) != 1:
            raise InputError("interleaving-rect expects single-summand decompositions")
        try:
            value = interleaving_rect(dec_a.intervals[0], dec_b.intervals[0])
        except ValueError as exc:
            raise InputError(str(exc)) from exc
        print(json.dumps({"metric": metric, "value": value}))
    elif metric == "image":
        delta = _positive_delta(opt.get("delta", 0.1))
        kind = _phi_kind(opt.get("phi", "b"))
        p = str(opt.get("p", "sup"))
        resolution = _parse_resolution(opt.get("grid", "50x50"))
        norm = str(opt.get("norm", "linf")).lower()
        if norm not in ("linf", "l2sq"):
            raise ConfigError(f"norm must be linf or l2sq, got {norm!r}")
        window_text = opt.get("window")
        if window_text:
            window = _parse_window(window_text)
        else:
            wa = _default_window(dec_a, delta)
            wb = _default_window(dec_b, delta)
            window = (
                tuple(np.minimum(wa[0], wb[0])),
                tuple(np.maximum(wa[1], wb[1])),
            )
        grid = GridSpec(window[0], window[1], resolution)

        def rep(dec):
            if p.lower() == "sup":
                return scdr_sup(dec, kind, delta, grid)
            if len(dec) == 0:
                raise InputError("p-normalized image of an empty decomposition")
            return scdr_p(dec, float(p), kind, delta, grid)

        value = image_distance(rep(dec_a), rep(dec_b), norm)
        print(json.dumps({"metric": metric, "norm": norm, "value": value}))
    else:
        raise ConfigError(
            f"metric must be bottleneck, interleaving-rect or image, got {metric!r}"
        )
    return EXIT_OK


def cmd_convergence(args) -> int:
    opt = _Options(args)
    sizes = _parse_num_list(opt.get("sizes", "125,250,500,1000,2000"), int, key="sizes")
    try:
        report = run_convergence(
            sizes,
            reps=int(opt.get("reps", 5)),
            seed=int(opt.get("seed", 0)),
            delta=_positive_delta(opt.get("delta", 0.1)),
            kind=_phi_kind(opt.get("phi", "b")),
            p=str(opt.get("p", "sup")),
            generator=str(opt.get("generator", "annulus")),
            base_size=int(opt.get("base_size", 5000)),
            workers=int(opt.get("workers", 1)),
            image_resolution=_parse_resolution(opt.get("grid", "50x50")),
            bif_resolution=_parse_resolution(opt.get("bif_grid", "32x32"), key="bif-grid"),
            bandwidth=float(opt.get("bandwidth", 0.3)),
            num_lines=int(opt.get("lines", 32)),
            degree=int(opt.get("degree", 1)),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    out = args.output or "convergence.csv"
    report.to_csv(out)
    print(json.dumps({"output": str(out), **report.summary}))
    return EXIT_OK


def cmd_bench(args) -> int:
    opt = _Options(args)
    sizes = _parse_num_list(opt.get("sizes", "500"), int, key="sizes")
    grids = _parse_num_list(opt.get("grids", "50"), int, key="grids")
    try:
        report = run_bench(
            sizes,
            grids,
            seed=int(opt.get("seed", 0)),
            delta=_positive_delta(opt.get("delta", 0.1)),
            repeats=int(opt.get("repeats", 3)),
            samples_per_axis=int(opt.get("samples", 8)),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    out = args.output or "bench.csv"
    report.to_csv(out)
    speedups = {
        f"{r[2]}_m{r[0]}_g{r[1]}": r[4] for r in report.rows if r[2] != "baseline_dense_b"
    }
    print(json.dumps({"output": str(out), **speedups}))
    return EXIT_OK


def cmd_instability(args) -> int:
    opt = _Options(args)
    eps = _parse_num_list(
        opt.get("eps", "0,0.001,0.0025,0.005,0.01,0.025,0.05,0.075,0.1"), float, key="eps"
    )
    try:
        report = run_instability(
            eps,
            delta=_positive_delta(opt.get("delta", 0.5)),
            image_resolution=_parse_resolution(opt.get("grid", "40x40")),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    out = args.output or "instability.csv"
    report.to_csv(out)
    print(json.dumps({"output": str(out), **report.summary}))
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mpcorner",
        description="Corner-based interval decompositions of 2-parameter persistence.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="key=value option file; flags override it")
        p.add_argument("--seed", type=int, help="random seed")
        p.add_argument("--workers", type=int, help="parallel worker count")
        p.add_argument("--delta", type=float, help="local window half-width")
        p.add_argument("--phi", choices=("a", "b", "c"), help="local function kind")
        p.add_argument("--p", help="weight exponent, or 'sup'")
        p.add_argument("--grid", help="image grid WxH")
        p.add_argument("--bandwidth", type=float, help="kernel density bandwidth")
        p.add_argument("--lines", type=int, help="number of slicing lines")
        p.add_argument("--degree", type=int, help="homology degree")
        p.add_argument("--output", "-o", help="output path (or prefix)")

    p = sub.add_parser("decompose", help="point cloud CSV to decomposition JSON")
    p.add_argument("input", help="point cloud CSV, one point per row")
    p.add_argument("--margin", type=float, help="grid window margin fraction")
    p.add_argument("--bif-grid", dest="bif_grid", help="filtration vertex grid WxH")
    add_common(p)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("represent", help="decomposition JSON to image CSV + PGM")
    p.add_argument("input", help="decomposition JSON")
    p.add_argument("--window", help="image window x0,y0:x1,y1 (default: corner bbox)")
    add_common(p)
    p.set_defaults(func=cmd_represent)

    p = sub.add_parser("distance", help="distance between two decomposition files")
    p.add_argument("input_a", help="first decomposition JSON")
    p.add_argument("input_b", help="second decomposition JSON")
    p.add_argument("--metric", choices=("bottleneck", "interleaving-rect", "image"))
    p.add_argument("--norm", choices=("linf", "l2sq"), help="image norm")
    p.add_argument("--window", help="image window x0,y0:x1,y1")
    add_common(p)
    p.set_defaults(func=cmd_distance)

    p = sub.add_parser("convergence", help="subsample convergence experiment")
    p.add_argument("--sizes", help="comma list of subsample sizes")
    p.add_argument("--reps", type=int, help="repetitions per size")
    p.add_argument("--base-size", dest="base_size", type=int, help="base cloud size")
    p.add_argument("--generator", choices=("annulus", "circle"), help="cloud generator")
    p.add_argument("--bif-grid", dest="bif_grid", help="filtration vertex grid WxH")
    add_common(p)
    p.set_defaults(func=cmd_convergence)

    p = sub.add_parser("bench", help="corner route vs dense baseline timings")
    p.add_argument("--sizes", help="comma list of summand counts")
    p.add_argument("--grids", help="comma list of square grid sizes")
    p.add_argument("--repeats", type=int, help="timing repetitions (min is kept)")
    p.add_argument("--samples", type=int, help="baseline samples per axis per cell")
    add_common(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("instability", help="bridged-squares contrast experiment")
    p.add_argument("--eps", help="comma list of bridge widths")
    add_common(p)
    p.set_defaults(func=cmd_instability)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse handles --help / bad flags itself
        return int(exc.code or 0)
    try:
        return args.func(args)
    except InputError as exc:
        print(f'mpcorner: error=input message="{exc}"', file=sys.stderr)
        return EXIT_INPUT
    except ConfigError as exc:
        print(f'mpcorner: error=config message="{exc}"', file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f'mpcorner: error=input message="{exc}"', file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # pragma: no cover - safety net
        print(f'mpcorner: error=internal message="{exc}"', file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
