"""Command-line interface: ``freeprob <command> ...``.

Exit status is 0 on success, 2 for invalid input and 1 for numerical
failures.  Data goes to stdout (or ``--out``); diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import io
import json
import os
import sys
from fractions import Fraction

import numpy as np

from . import cumulants as C
from . import measures as M
from . import partitions as P
from . import rmt as R
from . import transforms as T
from .errors import FreeProbError, NumericalError, ValidationError

DEFAULT_SEED = 20240601


# -- argument helpers -------------------------------------------------------

def _flag_error(flag: str, msg: str) -> ValidationError:
    return ValidationError(f"{flag}: {msg}")


def parse_grid(text: str, flag: str = "--grid") -> np.ndarray:
    try:
        lo, hi, n = text.split(":")
        lo, hi, n = float(lo), float(hi), int(n)
    except ValueError:
        raise _flag_error(flag, f"expected lo:hi:n, got {text!r}") from None
    if not hi > lo or n < 3:
        raise _flag_error(flag, "need hi > lo and n >= 3")
    return np.linspace(lo, hi, n)


def parse_eps(text: str | None, flag: str = "--eps"):
    if text is None or text == "auto":
        return None
    try:
        eps = [float(t) for t in text.split(",")]
    except ValueError:
        raise _flag_error(flag, f"expected 'auto' or comma-separated values, got {text!r}") from None
    if len(eps) < 2 or any(e <= 0 for e in eps):
        raise _flag_error(flag, "need at least two positive values")
    return eps


def parse_params(items) -> dict:
    out = {}
    for item in items or []:
        key, sep, val = item.partition("=")
        if not sep:
            raise _flag_error("--param", f"expected key=value, got {item!r}")
        out[key] = float(val)
    return out


def load_measure_arg(text: str, flag: str) -> M.Measure:
    """``zoo:name[:key=val,...]`` or a path to a measure JSON file."""
    if text.startswith("zoo:"):
        name, _, rest = text[4:].partition(":")
        params = parse_params([p for p in rest.split(",") if p])
        try:
            return M.zoo(name, **params)
        except ValidationError as exc:
            raise _flag_error(flag, str(exc)) from None
    try:
        return M.load_measure(text)
    except OSError as exc:
        raise _flag_error(flag, f"cannot read {text!r}: {exc.strerror}") from None
    except ValidationError as exc:
        raise _flag_error(flag, str(exc)) from None


def parse_partition(text: str, flag: str = "--partition") -> P.Partition:
    try:
        return P.Partition.from_json(text)
    except (ValueError, TypeError) as exc:
        raise _flag_error(flag, str(exc)) from None


def _seq(text: str, flag: str, exact: bool) -> list:
    try:
        return C.parse_sequence(text, exact=exact)
    except ValidationError as exc:
        raise _flag_error(flag, str(exc)) from None


def _num(x):
    if isinstance(x, Fraction):
        return x.numerator if x.denominator == 1 else str(x)
    return x


def _emit(args, text: str) -> None:
    if getattr(args, "out", None):
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_json(args, obj) -> None:
    _emit(args, json.dumps(obj, indent=2) + "\n")


# -- nc -------------------------------------------------------------------

def cmd_nc(args) -> None:
    if args.action == "enumerate":
        kinds = {
            "nc": lambda: P.enumerate_nc(args.n),
            "all": lambda: P.enumerate_set_partitions(args.n),
            "pairings": lambda: P.enumerate_pairings(args.n),
            "nc-pairings": lambda: P.enumerate_pairings(args.n, noncrossing_only=True),
        }
        try:
            parts = kinds[args.kind]()
        except ValidationError as exc:
            raise _flag_error("--n", str(exc)) from None
        if args.format == "json":
            _emit_json(args, [p.to_list() for p in parts])
        else:
            _emit(args, "".join(f"{p.to_json()}\n" for p in parts))
    elif args.action == "mobius":
        try:
            parts = P.enumerate_nc(args.n, max_n=P.MAX_MOBIUS_N)
        except ValidationError as exc:
            raise _flag_error("--n", str(exc)) from None
        top = P.one(args.n)
        rows = [(p, P.mobius(p, top)) for p in parts]
        if args.format == "json":
            _emit_json(args, [{"partition": p.to_list(), "mobius_to_top": v} for p, v in rows])
        else:
            _emit(args, "".join(f"{p.to_json()}\t{v}\n" for p, v in rows))
    elif args.action == "kreweras":
        if not args.partition:
            raise _flag_error("--partition", "required for kreweras")
        k = P.kreweras(parse_partition(args.partition))
        if args.format == "json":
            _emit_json(args, k.to_list())
        else:
            _emit(args, k.to_json() + "\n")


# -- cumulants ----------------------------------------------------------------

def cmd_cumulants(args) -> None:
    exact = not args.float
    a = args.action
    if a == "to-moments":
        kap = _seq(_need(args.cumulants, "--cumulants"), "--cumulants", exact)
        out = (C.moments_from_cumulants_recursive(kap) if len(kap) > C.MAX_LATTICE_ORDER
               else C.moments_from_cumulants(kap))
    elif a == "from-moments":
        out = C.cumulants_from_moments(_seq(_need(args.moments, "--moments"), "--moments", exact))
    elif a == "convolve":
        out = C.free_convolve_cumulants(_seq(_need(args.cumulants, "--cumulants"), "--cumulants", exact),
                                        _seq(_need(args.other, "--other"), "--other", exact))
    elif a == "dilate":
        if args.t is None:
            raise _flag_error("--t", "required for dilate")
        t = Fraction(args.t) if exact else float(Fraction(args.t))
        try:
            out = C.dilate_cumulants(_seq(_need(args.cumulants, "--cumulants"), "--cumulants", exact), t)
        except ValidationError as exc:
            raise _flag_error("--t", str(exc)) from None
    else:  # pragma: no cover - argparse restricts choices
        raise ValidationError(f"unknown action {a}")
    if args.format == "json":
        _emit_json(args, [_num(x) for x in out])
    else:
        _emit(args, ",".join(str(_num(x)) for x in out) + "\n")


def _need(value, flag):
    if value is None:
        raise _flag_error(flag, "required")
    return value


# -- analytic commands ------------------------------------------------------------

def _write_measure(args, mu: M.Measure) -> None:
    if args.format == "json":
        _emit(args, mu.to_json(indent=2) + "\n")
        return
    for x, w in mu.atoms:
        print(f"atom x={x!r} w={w!r}", file=sys.stderr)
    _emit(args, mu.to_csv())


def cmd_convolve(args) -> None:
    mu = load_measure_arg(args.mu, "--mu")
    nu = load_measure_arg(args.nu, "--nu")
    grid = parse_grid(args.grid) if args.grid else None
    out = T.free_convolve(mu, nu, grid=grid, eps=parse_eps(args.eps), tol=args.tol,
                          max_iter=args.max_iter, aitken=args.aitken, threads=args.threads)
    _report(out)
    _write_measure(args, out)


def cmd_power(args) -> None:
    mu = load_measure_arg(args.mu, "--mu")
    grid = parse_grid(args.grid) if args.grid else None
    try:
        out = T.convolution_power(mu, args.t, grid=grid, eps=parse_eps(args.eps), tol=args.tol,
                                  max_iter=args.max_iter, threads=args.threads)
    except ValidationError as exc:
        raise _flag_error("--t" if "t must" in str(exc) else "--mu", str(exc)) from None
    _report(out)
    _write_measure(args, out)


def _report(mu: M.Measure) -> None:
    d = mu.diagnostics
    if d:
        print(f"solver: max_iterations={d.get('max_iterations')} "
              f"max_residual={d.get('max_residual'):.3g}", file=sys.stderr)


def cmd_invert(args) -> None:
    G = T.closed_form(args.name, **parse_params(args.param))
    grid = parse_grid(args.grid)
    inv = T.stieltjes_invert(G, grid, parse_eps(args.eps),
                             expected_mass=None if args.no_normalize else 1.0,
                             mass_tol=args.mass_tol)
    if args.format == "json":
        _emit_json(args, {"name": args.name, **inv.to_dict()})
    else:
        buf = io.StringIO()
        M.write_density_csv(buf, inv.grid, inv.density)
        _emit(args, buf.getvalue())


def cmd_zoo(args) -> None:
    if args.list or not args.name:
        _emit(args, "".join(f"{n}\n" for n in sorted(M.ZOO)))
        return
    mu = M.zoo(args.name, **parse_params(args.param))
    if args.format == "csv":
        _emit(args, mu.to_csv())
    else:
        _emit(args, mu.to_json() + "\n")


# -- rmt ----------------------------------------------------------------------

def _cfg(args) -> R.SimulationConfig:
    try:
        return R.SimulationConfig(N=args.n, trials=args.trials, seed=args.seed,
                                  parallel=args.threads is not None and args.threads > 1,
                                  threads=args.threads,
                                  budget=R.LARGE_BUDGET if args.large else R.DEFAULT_BUDGET)
    except ValidationError as exc:
        raise _flag_error("--n/--trials/--seed", str(exc)) from None


def _moment_rows(est: dict, exact=None) -> list[dict]:
    rows = []
    for m, (mean, se) in est.items():
        row = {"m": m, "mean": mean, "stderr": se}
        if exact is not None:
            row["exact"] = exact(m)
        rows.append(row)
    return rows


def _emit_rows(args, header: dict, rows: list[dict]) -> None:
    if args.format == "json":
        _emit_json(args, {**header, "rows": rows})
        return
    lines = [" ".join(f"{k}={v}" for k, v in header.items())]
    if rows:
        keys = list(rows[0])
        lines.append("\t".join(keys))
        lines += ["\t".join(repr(r[k]) if isinstance(r[k], float) else str(r[k]) for k in keys)
                  for r in rows]
    _emit(args, "\n".join(lines) + "\n")


def cmd_rmt(args) -> None:
    a = args.action
    if a in ("rotated-sum", "gue-plus"):
        cfg = _cfg(args)
        if a == "rotated-sum":
            mu_a = load_measure_arg(_need(args.mu_a, "--mu-a"), "--mu-a")
            mu_b = load_measure_arg(_need(args.mu_b, "--mu-b"), "--mu-b")
            hist = R.rotated_sum_spectrum(mu_a, mu_b, cfg, bins=args.bins)
            pred = (mu_a, mu_b)
        else:
            mu_d = load_measure_arg(_need(args.mu_d, "--mu-d"), "--mu-d")
            hist = R.gue_plus_deterministic_spectrum(mu_d, cfg, bins=args.bins)
            pred = (M.make_semicircle(1.0), mu_d)
        if args.compare:
            ks = M.ks_distance(hist, T.free_convolve(*pred))
            print(f"ks_distance={ks!r}", file=sys.stderr)
        print(f"seed={cfg.seed}", file=sys.stderr)
        if args.format == "json":
            _emit_json(args, {"seed": cfg.seed, **hist.to_dict()})
        else:
            _emit(args, hist.to_csv())
        return
    if a == "verify-genus":
        if args.m % 2:
            raise _flag_error("--m", "must be even")
        cfg = _cfg(args)
        mean, se = R.gue_moment_mc(args.m, cfg)
        exact = R.genus_expansion_exact(args.m, args.n)
        z = abs(mean - exact) / se if se > 0 else float("inf")
        _emit_rows(args, {"seed": cfg.seed, "N": cfg.N, "trials": cfg.trials},
                   [{"m": args.m, "exact": exact, "mean": mean, "stderr": se, "z": z,
                     "polynomial": ";".join(f"{c}*N^{e}" for e, c in R.genus_polynomial(args.m).items())}])
        return
    cfg = _cfg(args)
    header = {"seed": cfg.seed, "N": cfg.N, "trials": cfg.trials}
    ms = list(range(1, args.moments + 1))
    if a == "gue":
        est = R.gue_moments_mc(ms, cfg)
        rows = _moment_rows(est, lambda m: R.genus_expansion_exact(m, cfg.N) if m % 2 == 0 else 0.0)
    elif a == "wigner":
        def one(trial):
            ev = R.eigenvalues_hermitian(R.sample_wigner(cfg.N, R.rademacher, cfg.rng(trial)), check=False)
            return [np.mean(ev ** m) for m in ms]
        data = np.array(cfg.map_trials(one))
        rows = _moment_rows({m: R.jackknife(data[:, k]) for k, m in enumerate(ms)},
                            lambda m: float(P.catalan(m // 2)) if m % 2 == 0 else 0.0)
    else:  # haar
        def one(trial):
            ev = np.linalg.eigvals(R.sample_haar_unitary(cfg.N, cfg.rng(trial)))
            return [np.mean(ev ** k).real for k in ms]
        data = np.array(cfg.map_trials(one))
        rows = _moment_rows({k: R.jackknife(data[:, j]) for j, k in enumerate(ms)}, lambda k: 0.0)
    _emit_rows(args, header, rows)


# -- parser -----------------------------------------------------------------------

def _add_common(p, fmt_choices=("text", "json")):
    p.add_argument("--format", choices=fmt_choices, default=fmt_choices[0])
    p.add_argument("--out", help="write data to this file instead of stdout")


def _add_solver(p):
    p.add_argument("--grid", help="output grid lo:hi:n (default: padded support, 2000 points)")
    p.add_argument("--eps", default="auto", help="'auto' or comma-separated imaginary offsets")
    p.add_argument("--tol", type=float, default=T.DEFAULT_TOL)
    p.add_argument("--max-iter", type=int, default=T.DEFAULT_MAX_ITER)
    p.add_argument("--threads", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="freeprob", description="Computational free probability.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("nc", help="non-crossing partition lattice")
    p.add_argument("action", choices=["enumerate", "mobius", "kreweras"])
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--kind", choices=["nc", "all", "pairings", "nc-pairings"], default="nc")
    p.add_argument("--partition", help="JSON blocks, e.g. [[1,2],[3]]")
    _add_common(p)
    p.set_defaults(func=cmd_nc)

    p = sub.add_parser("cumulants", help="moment / free cumulant conversions")
    p.add_argument("action", choices=["to-moments", "from-moments", "convolve", "dilate"])
    p.add_argument("--moments")
    p.add_argument("--cumulants")
    p.add_argument("--other", help="second cumulant sequence for convolve")
    p.add_argument("--t", help="dilation parameter (rational allowed)")
    p.add_argument("--float", action="store_true", help="floating point instead of exact rationals")
    _add_common(p)
    p.set_defaults(func=cmd_cumulants)

    p = sub.add_parser("convolve", help="free additive convolution of two measures")
    p.add_argument("--mu", required=True, help="measure JSON path or zoo:name[:k=v,...]")
    p.add_argument("--nu", required=True)
    p.add_argument("--aitken", action="store_true")
    _add_solver(p)
    _add_common(p, ("csv", "json"))
    p.set_defaults(func=cmd_convolve)

    p = sub.add_parser("power", help="free convolution power mu^{boxplus t}, t >= 1")
    p.add_argument("--mu", required=True)
    p.add_argument("--t", type=float, required=True)
    _add_solver(p)
    _add_common(p, ("csv", "json"))
    p.set_defaults(func=cmd_power)

    p = sub.add_parser("invert", help="Stieltjes inversion of a closed-form Cauchy transform")
    p.add_argument("--name", required=True, choices=sorted(T.CLOSED_FORMS))
    p.add_argument("--param", action="append", help="key=value parameter")
    p.add_argument("--grid", required=True)
    p.add_argument("--eps", default="auto")
    p.add_argument("--no-normalize", action="store_true",
                   help="skip the unit-mass check and rescaling")
    p.add_argument("--mass-tol", type=float, default=T.MASS_WINDOW)
    _add_common(p, ("csv", "json"))
    p.set_defaults(func=cmd_invert)

    p = sub.add_parser("rmt", help="random matrix Monte Carlo")
    p.add_argument("action", choices=["gue", "wigner", "haar", "rotated-sum", "gue-plus", "verify-genus"])
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--moments", type=int, default=4)
    p.add_argument("--m", type=int, default=4)
    p.add_argument("--mu-a")
    p.add_argument("--mu-b")
    p.add_argument("--mu-d")
    p.add_argument("--bins", type=int, default=120)
    p.add_argument("--compare", action="store_true", help="report KS distance to the free convolution")
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--large", action="store_true", help="raise the compute budget")
    _add_common(p)
    p.set_defaults(func=cmd_rmt)

    p = sub.add_parser("zoo", help="emit a named measure")
    p.add_argument("--name", choices=sorted(M.ZOO))
    p.add_argument("--param", action="append")
    p.add_argument("--list", action="store_true")
    _add_common(p, ("json", "csv"))
    p.set_defaults(func=cmd_zoo)
    return ap


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    threads = getattr(args, "threads", None)
    if threads is not None and threads < 1:
        print("error: --threads: must be >= 1", file=sys.stderr)
        return 2
    try:
        args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1
    except FreeProbError as exc:  # pragma: no cover
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    try:
        code = run()
        sys.stdout.flush()
    except BrokenPipeError:
        # reader went away (e.g. piped into head); silence the flush at exit
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        code = 0
    sys.exit(code)
