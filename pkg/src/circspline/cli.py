"""Command-line interface.

Every command writes its outputs plus a ``manifest.json`` naming inputs,
parameters and outputs. Exit codes: 0 ok, 2 invalid input, 3 mathematically
infeasible request (non-invertible bank, no FIR complement), 4 I/O failure.
"""

from __future__ import annotations

import argparse
import contextlib
import os
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import io
from .approximation import DenseGraph, nearest_circulant, rcm_relabel, read_matrix_csv, Relabelling
from .circulant import make_circulant
from .complementary import InfeasibleFactorizationError
from .filterbank import (
    DisconnectedGraphError,
    SamplingPattern,
    SingularFilterBankError,
    analyze,
    check_invertibility,
    lowpass_invertible,
    strang_fix_multiplicity,
    vanishing_moments,
)
from .multiscale import STRATEGIES, PyramidTransform, bank_builder, coarsen, nla
from .products import ProductGraph, lexicographic_circulant

EXIT_OK, EXIT_INVALID, EXIT_INFEASIBLE, EXIT_IO = 0, 2, 3, 4
BANKS = ("hgswt", "hgeswt", "hcgswt", "hcgeswt")


class Infeasible(Exception):
    """Raised for requests that are valid but mathematically impossible."""


def _out_dir(path) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _add_bank_args(p):
    p.add_argument("--graph", required=True, help="graph JSON")
    p.add_argument("--bank", choices=BANKS, default="hgswt")
    p.add_argument("--k", type=int, default=1, help="filter power")
    p.add_argument("--alphas", default="", help="comma list; prefix h: for hyperbolic")
    p.add_argument("--dual-moments", action="store_true", help="complementary banks: impose dual moments")
    p.add_argument("--levels", type=int, default=1)
    p.add_argument("--strategy", choices=STRATEGIES, default="preserve-set")
    p.add_argument("--pattern", default=None, help="single-level sampling pattern, e.g. 1010...; 1 = low-pass")


def _builder(args, alphas=None):
    alphas = io.parse_alphas(args.alphas) if alphas is None else alphas
    if args.k < 1:
        raise ValueError("--k must be positive")
    return bank_builder(args.bank, args.k, alphas, args.dual_moments)


def _pattern(args, n):
    if args.pattern is None:
        return None
    sp = SamplingPattern.from_string(args.pattern)
    if sp.n != n:
        raise ValueError(f"pattern has {sp.n} entries for {n} nodes")
    return sp


# ------------------------------------------------------------------ graph


def cmd_graph(args, started):
    out = _out_dir(args.out)
    params = {k: v for k, v in vars(args).items() if k not in ("func", "out")}
    inputs, outputs = {}, []
    if args.action == "make":
        g = make_circulant(args.n, io.parse_gens(args.gens))
        io.write_graph(out / "graph.json", g)
        outputs.append("graph.json")
    elif args.action == "approx":
        inputs["adjacency"] = args.input
        a = DenseGraph(read_matrix_csv(args.input))
        lab = rcm_relabel(a) if args.relabel == "rcm" else Relabelling.identity(a.n)
        g = nearest_circulant(a, lab)
        io.write_graph(out / "graph.json", g)
        io.write_json(out / "perm.json", {"method": lab.method, "perm": lab.perm.tolist()})
        outputs += ["graph.json", "perm.json"]
    elif args.action == "product":
        inputs.update(g1=args.g1, g2=args.g2)
        pg = ProductGraph(args.kind, io.read_graph(args.g1), io.read_graph(args.g2))
        io.write_json(out / "product.json", pg.to_dict())
        outputs.append("product.json")
        if args.kind == "lexicographic" and 1 in pg.g1.generators and pg.g1.connected:
            circ, perm = lexicographic_circulant(pg.g1, pg.g2)
            io.write_graph(out / "graph.json", circ)
            io.write_json(out / "perm.json", {"method": "lexicographic", "perm": perm.tolist()})
            outputs += ["graph.json", "perm.json"]
    elif args.action == "coarsen":
        inputs["graph"] = args.input
        g = coarsen(io.read_graph(args.input), args.strategy)
        if isinstance(g, DenseGraph):
            np.savetxt(out / "adjacency.csv", g.adjacency, delimiter=",", fmt="%.17g")
            outputs.append("adjacency.csv")
        else:
            io.write_graph(out / "graph.json", g)
            outputs.append("graph.json")
    io.write_manifest(out / "manifest.json", f"graph {args.action}", inputs, params, outputs, started)
    return EXIT_OK


# ----------------------------------------------------------------- signal


def cmd_signal(args, started):
    out = _out_dir(args.out)
    t = np.arange(args.n, dtype=float)
    if args.kind == "poly":
        coeffs = [float(c) for c in args.coeffs.split(",")]
        x = np.polynomial.polynomial.polyval(t / args.n, coeffs).astype(complex)
    elif args.kind == "sines":
        freqs = [float(f) for f in args.freqs.split(",")]
        x = sum(np.cos(2 * np.pi * f * t / args.n) for f in freqs).astype(complex)
    elif args.kind == "exp":
        x = np.exp(1j * 2 * np.pi * float(args.freqs.split(",")[0]) * t / args.n)
    else:
        rng = np.random.default_rng(args.seed)
        x = rng.standard_normal(args.n).astype(complex)
    io.write_signal(out / "signal.csv", x)
    io.write_manifest(out / "manifest.json", "signal", {}, {k: v for k, v in vars(args).items() if k not in ("func", "out")}, ["signal.csv"], started)
    return EXIT_OK


# -------------------------------------------------------------- transform


def _transform(args, g):
    builder = _builder(args)
    sp = _pattern(args, g.n)
    if sp is not None and args.levels != 1:
        raise ValueError("--pattern is only supported with --levels 1")
    if sp is None:
        return PyramidTransform(g, builder, args.strategy, args.levels, check=not args.force), None
    bank = builder(g, 0)
    rep = check_invertibility(bank, sp)
    if not rep.invertible and not args.force:
        raise Infeasible(f"bank is not invertible for this pattern ({rep.condition_used}: {rep.detail})")
    return bank, sp


def cmd_transform(args, started):
    out = _out_dir(args.out)
    g = io.read_graph(args.graph)
    x = io.read_signal(args.signal)
    if x.size != g.n:
        raise ValueError(f"signal has {x.size} entries for {g.n} nodes")
    params = {k: v for k, v in vars(args).items() if k not in ("func", "out", "graph", "signal")}
    inputs = {"graph": args.graph, "signal": args.signal}
    t, sp = _transform(args, g)
    outputs = []
    summary = {}
    if args.inverse:
        if sp is None:
            y = t.inverse(x)
        else:
            from .filterbank import invert

            y = invert(t, sp, x)
        io.write_signal(out / "reconstruction.csv", y)
        outputs.append("reconstruction.csv")
    else:
        if sp is None:
            pyr = t.analyze(x)
            c = pyr.flatten()
            outputs += io.write_pyramid(out, pyr)
            hp = np.concatenate([lv.hp_coeffs for lv in pyr.levels]) if pyr.levels else np.zeros(0)
        else:
            w = analyze(t, sp, x)
            c = w
            hp = w[sp.hp_nodes]
            pyr = None
        io.write_signal(out / "coefficients.csv", c)
        outputs.append("coefficients.csv")
        scale = max(np.max(np.abs(x)), 1e-300)
        summary = {
            "coefficients": int(c.size),
            "hp_count": int(hp.size),
            "hp_zero_count": int(np.sum(np.abs(hp) <= 1e-9 * scale)),
        }
        if args.figure and pyr is not None:
            from .plotting import plot_pyramid

            plot_pyramid(out / "pyramid.png", x, pyr, f"{args.bank} k={args.k}")
            outputs.append("pyramid.png")
        print(f"hp zeros: {summary['hp_zero_count']} of {summary['hp_count']}")
    params.update(summary)
    io.write_manifest(out / "manifest.json", "transform", inputs, params, outputs, started)
    return EXIT_OK


# -------------------------------------------------------------------- nla


def cmd_nla(args, started):
    out = _out_dir(args.out)
    g = io.read_graph(args.graph)
    x = io.read_signal(args.signal)
    if x.size != g.n:
        raise ValueError(f"signal has {x.size} entries for {g.n} nodes")
    kmax = args.kmax if args.kmax is not None else g.n
    ks = list(range(0, min(kmax, g.n) + 1, max(args.step, 1)))
    t = PyramidTransform(g, _builder(args), args.strategy, args.levels, check=not args.force)
    curve = nla(x, t, ks).curve
    extra = None
    curves = {args.bank: curve}
    if args.compare_alphas is not None:
        t2 = PyramidTransform(g, _builder(args, io.parse_alphas(args.compare_alphas)), args.strategy, args.levels, check=not args.force)
        extra = nla(x, t2, ks).curve
        curves[f"{args.bank} alphas={args.compare_alphas}"] = extra
    io.write_nla_csv(out / "nla.csv", curve, extra)
    outputs = ["nla.csv"]
    if args.figure:
        from .plotting import plot_nla

        plot_nla(out / "nla.png", curves, f"{args.bank} k={args.k}, {args.levels} levels")
        outputs.append("nla.png")
    params = {k: v for k, v in vars(args).items() if k not in ("func", "out", "graph", "signal")}
    io.write_manifest(out / "manifest.json", "nla", {"graph": args.graph, "signal": args.signal}, params, outputs, started)
    return EXIT_OK


# ------------------------------------------------------------------ check


def cmd_check(args, started):
    g = io.read_graph(args.graph)
    bank = _builder(args)(g, 0)
    sp = _pattern(args, g.n) or SamplingPattern.alternating(g.n)
    rep = check_invertibility(bank, sp)
    report = rep.to_dict()
    report["pattern"] = sp.to_string()
    report["bank"] = bank.to_dict()
    report["strang_fix"] = [{"z0": [z.real, z.imag], "multiplicity": m} for z, m in strang_fix_multiplicity(bank)]
    report["vanishing_moments"] = [{"z0": [z.real, z.imag], "multiplicity": m} for z, m in vanishing_moments(bank)]
    report["lowpass_invertible"] = lowpass_invertible(bank, cross_check=False)
    if args.out:
        out = _out_dir(args.out)
        io.write_json(out / "report.json", report)
        params = {k: v for k, v in vars(args).items() if k not in ("func", "out", "graph")}
        io.write_manifest(out / "manifest.json", "check", {"graph": args.graph}, params, ["report.json"], started)
    else:
        import json

        print(json.dumps(report, indent=2, default=io._json_default))
    return EXIT_OK


# ----------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="circspline", description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=0, help="seed for randomized generators")
    sub = ap.add_subparsers(dest="command", required=True)

    pg = sub.add_parser("graph", help="create, approximate, combine or coarsen graphs")
    gsub = pg.add_subparsers(dest="action", required=True)
    p = gsub.add_parser("make")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--gens", required=True, help="s:w list, e.g. 1:1,2:1")
    p.add_argument("--out", required=True)
    p = gsub.add_parser("approx")
    p.add_argument("--in", dest="input", required=True, help="adjacency CSV")
    p.add_argument("--relabel", choices=("rcm", "identity"), default="rcm")
    p.add_argument("--out", required=True)
    p = gsub.add_parser("product")
    p.add_argument("--kind", choices=("kronecker", "cartesian", "strong", "lexicographic"), required=True)
    p.add_argument("--g1", required=True)
    p.add_argument("--g2", required=True)
    p.add_argument("--out", required=True)
    p = gsub.add_parser("coarsen")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--strategy", choices=STRATEGIES, default="preserve-set")
    p.add_argument("--out", required=True)
    pg.set_defaults(func=cmd_graph)

    p = sub.add_parser("signal", help="generate a test signal")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--kind", choices=("poly", "sines", "exp", "noise"), default="sines")
    p.add_argument("--coeffs", default="0,1", help="poly: ascending coefficients in t/n")
    p.add_argument("--freqs", default="1", help="sines/exp: integer DFT frequencies")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_signal)

    p = sub.add_parser("transform", help="forward or inverse wavelet transform")
    _add_bank_args(p)
    p.add_argument("--signal", required=True, help="signal (or coefficient) CSV")
    p.add_argument("--inverse", action="store_true")
    p.add_argument("--force", action="store_true", help="skip the invertibility check")
    p.add_argument("--figure", action="store_true", help="also render pyramid.png")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("nla", help="non-linear approximation curve")
    _add_bank_args(p)
    p.add_argument("--signal", required=True)
    p.add_argument("--kmax", type=int, default=None)
    p.add_argument("--step", type=int, default=1)
    p.add_argument("--compare-alphas", default=None, help="second alpha list for a comparison column")
    p.add_argument("--force", action="store_true")
    p.add_argument("--figure", action="store_true", help="also render nla.png")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_nla)

    p = sub.add_parser("check", help="invertibility and moment report")
    _add_bank_args(p)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_check)
    return ap


def _limit_threads():
    n = os.environ.get("GWT_THREADS")
    if not n:
        return contextlib.nullcontext()
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:
        return contextlib.nullcontext()
    return threadpool_limits(int(n))


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_INVALID if e.code else EXIT_OK
    started = time.perf_counter()
    try:
        with _limit_threads(), warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            try:
                return args.func(args, started)
            finally:
                for w in {str(w.message) for w in caught}:
                    print(f"warning: {w}", file=sys.stderr)
    except (Infeasible, SingularFilterBankError, InfeasibleFactorizationError, DisconnectedGraphError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, KeyError, TypeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
