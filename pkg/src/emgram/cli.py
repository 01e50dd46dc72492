"""Command-line front end.

::

    emgram gramian --kind x --system sys.json --dt 0.1 --horizon 10 --out wx.csv
    emgram reduce --method bt --system sys.json --orders 1..8 --out errors.csv
    emgram bench linear --n 64 --seed 1 --out results/
    emgram version

Exit status is 0 on success, 1 for invalid configuration and 2 for
numerical failures.  Every command writes ``metadata.json`` next to its
outputs with all settings needed to repeat the run.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bench import BenchmarkSpec, run_benchmark
from .errors import ConfigError, NumericalError
from .gramian import GramianConfig, empirical_gramian
from .integrate import TimeGrid, solve
from .model import load_linear_system
from .reduce import (balance_square_root, bt_bound, direct_truncation, l2_error,
                     project_linear)
from .signals import make_signal

CSV_FORMAT = "%.17g"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def parse_nf(text):
    """Parse a comma-separated list of up to 12 integer flags."""
    try:
        vals = tuple(int(v) for v in text.split(",") if v.strip() != "")
    except ValueError:
        raise argparse.ArgumentTypeError(f"flags must be integers: {text!r}") from None
    if len(vals) > 12:
        raise argparse.ArgumentTypeError(f"at most 12 flags, got {len(vals)}")
    return vals + (0,) * (12 - len(vals))


def parse_partition(text):
    """Parse ``WIDTH:INDEX`` into two integers."""
    try:
        w, i = text.split(":")
        return int(w), int(i)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected WIDTH:INDEX, got {text!r}") from None


def parse_orders(text, N=None):
    """Parse ``1..8``, ``1,2,4`` or ``1..N`` into a tuple of orders."""
    out = []
    for part in text.split(","):
        part = part.strip()
        if ".." in part:
            a, b = part.split("..")
            b = N if b.strip().upper() == "N" else int(b)
            if b is None:
                raise ConfigError("'N' in an order range needs a known system size")
            out.extend(range(int(a), int(b) + 1))
        elif part:
            out.append(int(part))
    return tuple(out)


def _threads(value):
    if value is not None:
        return value
    env = os.environ.get("EMGRAM_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"EMGRAM_THREADS must be an integer, got {env!r}") from None
    return 1


def write_csv(path, mat):
    mat = np.atleast_2d(np.asarray(mat, dtype=float))
    np.savetxt(path, mat, fmt=CSV_FORMAT, delimiter=",")


def read_csv(path):
    return np.loadtxt(path, delimiter=",", ndmin=2)


def write_table(path, columns, rows):
    with open(path, "w", newline="") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(str(v) if isinstance(v, (int, np.integer)) else CSV_FORMAT % v
                              for v in row) + "\n")


def write_metadata(directory, meta):
    path = Path(directory) / "metadata.json"
    with open(path, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True, default=_jsonable)
        fh.write("\n")
    return path


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.integer, np.floating)):
        return obj.item()
    if isinstance(obj, range):
        return [obj.start, obj.stop]
    return str(obj)


def emit_plot(columns, rows, path, title=None):
    """Render an error table as a self-contained SVG.

    Tables with ``order``-style first column give a log-scale error curve
    (with the bound as second series when present); tables over two orders
    give a heatmap of log10 errors.
    """
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    if not rows:
        raise ConfigError("cannot plot an empty table")
    plt.rcParams["svg.hashsalt"] = "emgram"
    fig, ax = plt.subplots(figsize=(6, 4))
    data = np.array(rows, dtype=float)
    if len(columns) >= 3 and columns[1] == "parameter_order":
        ns, ps = np.unique(data[:, 0]), np.unique(data[:, 1])
        E = np.full((ns.size, ps.size), np.nan)
        for n, p, e in data:
            E[np.searchsorted(ns, n), np.searchsorted(ps, p)] = e
        im = ax.imshow(np.log10(np.maximum(E, 1e-17)), origin="lower", aspect="auto")
        ax.set_xticks(range(ps.size), [str(int(p)) for p in ps])
        ax.set_yticks(range(ns.size), [str(int(n)) for n in ns])
        ax.set_xlabel("parameter order")
        ax.set_ylabel("state order")
        fig.colorbar(im, ax=ax, label="log10 error")
    else:
        ax.semilogy(data[:, 0], np.maximum(data[:, 1], 1e-17), "o-", ms=3, label=columns[1])
        if "bound" in columns:
            j = columns.index("bound")
            ax.semilogy(data[:, 0], np.maximum(data[:, j], 1e-17), "--", label="bound")
        ax.set_xlabel(columns[0])
        ax.set_ylabel("relative error")
        ax.legend()
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


# Commands -------------------------------------------------------------------

def _grid(args):
    return TimeGrid(args.dt, args.horizon)


def cmd_gramian(args):
    sys_ = load_linear_system(args.system)
    grid = _grid(args)
    nf = list(args.nf)
    if args.partition:
        nf[10], nf[11] = args.partition
    pr = read_csv(args.pr) if args.pr else None
    cfg = GramianConfig(pr=pr, nf=tuple(nf), ut=args.input, um=args.um, xm=args.xm,
                        stages=args.stages, threads=_threads(args.threads))
    res = empirical_gramian(sys_, grid, args.kind, cfg)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_csv(out, res.matrix)
    files = [out.name]
    if res.companion is not None:
        comp = out.with_name(out.stem + "_companion.csv")
        write_csv(comp, res.companion)
        files.append(comp.name)
    meta = _base_meta(args, "gramian")
    meta.update({"kind": res.kind.value, "system": str(args.system), "nf": list(cfg.nf),
                 "columns": res.columns, "outputs": files, "pr": args.pr,
                 "um": args.um, "xm": args.xm})
    write_metadata(out.parent, meta)
    return 0


def cmd_reduce(args):
    sys_ = load_linear_system(args.system)
    grid = _grid(args)
    orders = parse_orders(args.orders, sys_.N)
    cfg = GramianConfig(stages=args.stages, threads=_threads(args.threads))
    if args.method == "bt":
        WC = read_csv(args.wc) if args.wc else empirical_gramian(sys_, grid, "c", cfg).matrix
        WO = read_csv(args.wo) if args.wo else empirical_gramian(sys_, grid, "o", cfg).matrix
        make = lambda n: balance_square_root(WC, WO, n)
    else:
        WX = read_csv(args.wx) if args.wx else empirical_gramian(sys_, grid, "x", cfg).matrix
        make = lambda n: direct_truncation(WX, n)
    u = make_signal(args.test_input, sys_.M, grid).table()
    u_norm = float(np.sqrt(grid.h * np.sum(u * u)))
    y = solve(sys_, grid, np.zeros(sys_.N), u, stages=args.stages)
    y_norm = l2_error(y, np.zeros_like(y), grid)
    rows = []
    for n in orders:
        proj = make(n)
        rom = project_linear(sys_, proj)
        yr = solve(rom, grid, np.zeros(n), u, stages=args.stages)
        err = l2_error(y, yr, grid) / y_norm
        if args.method == "bt":
            rows.append((n, err, bt_bound(proj.singular_values, n, u_norm) / y_norm))
        else:
            rows.append((n, err))
    cols = ("order", "l2_error", "bound") if args.method == "bt" else ("order", "l2_error")
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_table(out, cols, rows)
    meta = _base_meta(args, "reduce")
    meta.update({"method": args.method, "system": str(args.system), "orders": list(orders),
                 "test_input": args.test_input, "relative_to": "full-order output norm",
                 "gramians": {"wc": args.wc, "wo": args.wo, "wx": args.wx}})
    write_metadata(out.parent, meta)
    return 0


def cmd_bench(args):
    kw = {"kind": args.kind, "N": args.n, "seed": args.seed, "threads": _threads(args.threads)}
    if args.dt is not None or args.horizon is not None:
        from .bench import default_grid
        g = default_grid(args.kind, args.n)
        kw["grid"] = TimeGrid(args.dt or g.h, args.horizon or g.T)
    if args.orders:
        kw["orders"] = parse_orders(args.orders, args.n)
    if args.parameter_orders:
        kw["parameter_orders"] = parse_orders(args.parameter_orders, args.n)
    if args.ports is not None:
        kw["ports"] = args.ports
    if args.samples is not None:
        kw["samples"] = args.samples
    spec = BenchmarkSpec(**kw)
    res = run_benchmark(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_table(out / "errors.csv", res.columns, res.rows)
    if not args.no_plot:
        emit_plot(res.columns, res.rows, out / "plot.svg", title=f"{args.kind} N={args.n}")
    meta = _base_meta(args, "bench")
    meta.update(res.metadata)
    meta.update({"orders": list(spec.orders),
                 "parameter_orders": list(spec.parameter_orders or [])})
    write_metadata(out, meta)
    return 0


def cmd_version(args):
    print(__version__)
    return 0


def _base_meta(args, command):
    meta = {"command": command, "version": __version__,
            "deterministic": args.deterministic, "threads": _threads(args.threads)}
    for key in ("dt", "horizon", "stages", "input"):
        if hasattr(args, key):
            meta[key] = getattr(args, key)
    meta["integrator"] = "SSP(s,2) low-storage Runge-Kutta"
    meta["quadrature"] = "rectangle rule on right-hand samples"
    return meta


def build_parser():
    p = _Parser(prog="emgram", description="Empirical Gramians and model reduction.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, grid=True, stages=True):
        sp.add_argument("--threads", type=int, default=None,
                        help="worker threads (default: EMGRAM_THREADS or 1)")
        sp.add_argument("--deterministic", action=argparse.BooleanOptionalAction, default=True,
                        help="fixed reduction order (always on; recorded in metadata)")
        if stages:
            sp.add_argument("--stages", type=int, default=3, help="SSP integrator stages")
        if grid:
            sp.add_argument("--dt", type=float, default=0.01, help="time step")
            sp.add_argument("--horizon", type=float, default=10.0, help="time horizon")

    g = sub.add_parser("gramian", help="compute an empirical Gramian")
    g.add_argument("--kind", required=True, choices=list("coxysij"))
    g.add_argument("--system", required=True, help="system descriptor JSON")
    g.add_argument("--nf", type=parse_nf, default=(0,) * 12, help="12 comma-separated flags")
    g.add_argument("--partition", type=parse_partition, default=None, help="WIDTH:INDEX")
    g.add_argument("--input", default="impulse", help="impulse, chirp or prbs:SEED")
    g.add_argument("--pr", default=None, help="CSV of parameter samples (P x S)")
    g.add_argument("--um", type=float, default=1.0, help="input perturbation scale")
    g.add_argument("--xm", type=float, default=1.0, help="state perturbation scale")
    g.add_argument("--out", required=True, help="output CSV")
    common(g)
    g.set_defaults(func=cmd_gramian)

    r = sub.add_parser("reduce", help="reduction error sweep for a linear system")
    r.add_argument("--method", required=True, choices=["bt", "dt"])
    r.add_argument("--system", required=True)
    r.add_argument("--orders", default="1..N", help="e.g. 1..8 or 1,2,4")
    r.add_argument("--wc", default=None, help="controllability Gramian CSV")
    r.add_argument("--wo", default=None, help="observability Gramian CSV")
    r.add_argument("--wx", default=None, help="cross Gramian CSV")
    r.add_argument("--test-input", default="prbs:1", help="test excitation")
    r.add_argument("--out", required=True)
    common(r)
    r.set_defaults(func=cmd_reduce, input=None)

    b = sub.add_parser("bench", help="run a benchmark")
    b.add_argument("kind", choices=["linear", "transport", "network"])
    b.add_argument("--n", type=int, default=256)
    b.add_argument("--seed", type=int, default=1)
    b.add_argument("--orders", default=None)
    b.add_argument("--parameter-orders", default=None)
    b.add_argument("--ports", type=int, default=None)
    b.add_argument("--samples", type=int, default=None)
    b.add_argument("--no-plot", action="store_true")
    b.add_argument("--out", required=True, help="output directory")
    common(b, grid=False, stages=False)
    b.add_argument("--dt", type=float, default=None)
    b.add_argument("--horizon", type=float, default=None)
    b.set_defaults(func=cmd_bench)

    v = sub.add_parser("version", help="print the version")
    v.set_defaults(func=cmd_version, threads=1, deterministic=True)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"emgram: configuration error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"emgram: numerical error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError, KeyError) as exc:
        print(f"emgram: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
