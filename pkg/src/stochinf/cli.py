"""Command-line interface: ``stochinf {norm|stability|profile|gen|bench}``.

Exit codes: 0 success (or stable), 1 I/O or parse error, 2 mean-square
unstable, 3 no gamma bracket found.
"""

import argparse
from concurrent.futures import ThreadPoolExecutor
import csv
import json
import logging
import os
import sys
import time

import numpy as np

from .glyap import MSUnstable
from .hinf import BracketError, profile, stoch_hinf_norm
from .io import ManifestError, load_system, parse_generator, write_manifest
from .linalg import spectral_abscissa
from .operators import KRON_GUARD, ms_stable_fast, ms_stable_oracle, spectral_radius_power
from .problems import heat_system, random_system

EXIT_OK, EXIT_IO, EXIT_UNSTABLE, EXIT_BRACKET = 0, 1, 2, 3

log = logging.getLogger("stochinf")


def _threads():
    try:
        return max(1, int(os.environ.get("STOCHINF_THREADS", "1")))
    except ValueError:
        return 1


def _err(msg):
    print(f"stochinf: {msg}", file=sys.stderr)


def _system_from_args(args):
    if args.gen:
        return parse_generator(args.gen)[0]
    if not args.manifest:
        raise ManifestError("give a manifest path or --gen SPEC")
    return load_system(args.manifest)


def _add_system_args(p):
    p.add_argument("manifest", nargs="?", help="system manifest (JSON)")
    p.add_argument("--gen", metavar="SPEC",
                   help="generate the system instead: heat:K, random:N,M,P,SEED, scalar:A,N1,B,C")


def _add_newton_args(p):
    p.add_argument("--tol", type=float, default=1e-4, help="relative bisection tolerance")
    p.add_argument("--kmax", type=int, default=50, help="Newton iteration cap")
    p.add_argument("--newton-tol", type=float, default=1e-10, help="Newton residual tolerance")


def cmd_norm(args):
    sys_ = _system_from_args(args)
    report = stoch_hinf_norm(sys_, tol=args.tol, kmax=args.kmax, newton_tol=args.newton_tol)
    print(f"system        {sys_.name or '-'} (n={sys_.n}, m={sys_.m}, p={sys_.p}, nu={sys_.nu})")
    print(f"norm          {report.norm:.6f}")
    print(f"bracket       [{report.gamma_lo:.10g}, {report.gamma_hi:.10g}]")
    print(f"deterministic {report.det_hinf:.6f}")
    print(f"newton runs   {len(report.bracket_history)}")
    print(f"time          {report.timings['total']:.3f} s")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(report.to_dict(), fh, indent=2)
    return EXIT_OK


def cmd_stability(args):
    sys_ = _system_from_args(args)
    alpha = spectral_abscissa(sys_.A)
    print(f"spectral abscissa of A  {alpha:.6g}")
    if alpha < 0:
        rho, its, ok = spectral_radius_power(sys_.A, sys_.Nx)
        print(f"rho(L_A^-1 Pi_N)        {rho:.6g} ({its} power steps{'' if ok else ', not converged'})")
    if sys_.n ** 2 <= KRON_GUARD:
        print(f"kronecker oracle        {'stable' if ms_stable_oracle(sys_.A, sys_.Nx) else 'unstable'}")
    stable = ms_stable_fast(sys_.A, sys_.Nx)
    print(f"mean-square stable      {'yes' if stable else 'no'}")
    return EXIT_OK if stable else EXIT_UNSTABLE


def cmd_profile(args):
    sys_ = _system_from_args(args)
    gmin, gmax = args.gamma_min, args.gamma_max
    if gmin is None or gmax is None:
        norm = stoch_hinf_norm(sys_, tol=args.tol, kmax=args.kmax, newton_tol=args.newton_tol).norm
        gmin = 1.1 * norm if gmin is None else gmin
        gmax = 6.0 * norm if gmax is None else gmax
    gammas = np.linspace(gmin, gmax, args.points)
    pts = profile(sys_, gammas, kmax=args.kmax, newton_tol=args.newton_tol, workers=_threads())
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(fh)
        w.writerow(["gamma", "rho", "alpha", "status"])
        for p in pts:
            w.writerow([repr(p.gamma), repr(p.rho), repr(p.alpha), p.status])
    finally:
        if args.out:
            fh.close()
    return EXIT_OK


def cmd_gen(args):
    if args.heat is not None:
        if args.heat < 2:
            raise ManifestError(f"heat grid size must be >= 2, got {args.heat}")
        sys_, prov = heat_system(args.heat), f"heat_system({args.heat})"
    else:
        try:
            vals = [int(v) for v in args.random.split(",")]
        except ValueError as exc:
            raise ManifestError(f"--random expects N,M,P,SEED, got {args.random!r}") from exc
        if len(vals) != 4 or min(vals[:3]) < 1:
            raise ManifestError(f"--random expects N,M,P,SEED with positive sizes, got {args.random!r}")
        n, m, p, seed = vals
        sys_, prov = random_system(n, m, p, seed), f"random_system({n}, {m}, {p}, seed={seed})"
    path = write_manifest(sys_, args.out, provenance=prov)
    print(path)
    return EXIT_OK


def _bench_case(label, sys_, tol):
    t0 = time.perf_counter()
    r = stoch_hinf_norm(sys_, tol=tol)
    wall = time.perf_counter() - t0
    iters = sum(s.newton_iters for s in r.bracket_history)
    return [label, sys_.n, f"{r.norm:.6f}", f"{r.det_hinf:.6f}", len(r.bracket_history),
            iters, f"{wall:.3f}"]


def cmd_bench(args):
    cases = [(f"heat:{k}", heat_system(k)) for k in args.heat_ks]
    cases += [(f"random:{n},1,1,{args.seed}", random_system(n, 1, 1, args.seed))
              for n in args.random_ns]
    with ThreadPoolExecutor(max_workers=_threads()) as ex:
        rows = list(ex.map(lambda c: _bench_case(c[0], c[1], args.tol), cases))
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(fh)
        w.writerow(["case", "n", "norm", "det_hinf", "newton_runs", "newton_iters", "wall_time_s"])
        w.writerows(rows)
    finally:
        if args.out:
            fh.close()
    return EXIT_OK


def _int_list(text):
    return [int(v) for v in text.split(",") if v]


def build_parser():
    parser = argparse.ArgumentParser(prog="stochinf", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("norm", help="compute the stochastic H-infinity norm")
    _add_system_args(p)
    _add_newton_args(p)
    p.add_argument("--json", metavar="PATH", help="write the full report as JSON")
    p.set_defaults(func=cmd_norm)

    p = sub.add_parser("stability", help="mean-square stability test")
    _add_system_args(p)
    p.set_defaults(func=cmd_stability)

    p = sub.add_parser("profile", help="rho(gamma), alpha(gamma) as CSV")
    _add_system_args(p)
    _add_newton_args(p)
    p.add_argument("--gamma-min", type=float)
    p.add_argument("--gamma-max", type=float)
    p.add_argument("--points", type=int, default=50)
    p.add_argument("--out", help="CSV file (default: standard output)")
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("gen", help="write a generated system as MatrixMarket + manifest")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--heat", type=int, metavar="K")
    g.add_argument("--random", metavar="N,M,P,SEED")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("bench", help="heat and random benchmark table (CSV)")
    p.add_argument("--heat-ks", type=_int_list, default=[5, 6, 7, 8, 9, 10])
    p.add_argument("--random-ns", type=_int_list, default=[10, 20, 40])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--out", help="CSV file (default: standard output)")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_IO if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except MSUnstable as exc:
        _err(f"system is not mean-square stable: {exc}")
        return EXIT_UNSTABLE
    except BracketError as exc:
        _err(str(exc))
        return EXIT_BRACKET
    except (ManifestError, OSError) as exc:
        _err(str(exc))
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
