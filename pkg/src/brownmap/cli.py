"""``brownmap`` command line.

Exit codes: 0 ok, 1 verification failure, 2 input error, 3 empty trace,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from pathlib import Path

from .errors import BlowupError, ConsistencyError, ConvergenceError, DomainError
from .io import RunManifest, atomic_write_text, atomic_write_with, dumps_json, eigenvalue_csv

EXIT_OK, EXIT_VERIFY, EXIT_INPUT, EXIT_EMPTY, EXIT_NUMERIC = 0, 1, 2, 3, 4


class EmptyTrace(Exception):
    pass


def parse_complex(text: str) -> complex:
    """Parse ``a+bi`` style literals (``2``, ``-i``, ``0.2-0.19i``; ``j`` also accepted)."""
    t = text.strip().replace(" ", "")
    if not t or t.count("i") + t.count("j") > 1:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}")
    try:
        return complex(t.replace("i", "j"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}") from None


def positive_float(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (v > 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError(f"must be a positive number, got {text}")
    return v


def positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {text}")
    return v


def _complex_json(z: complex):
    return [z.real, z.imag]


def _load_law(path):
    from .measure import Law

    try:
        return Law.from_json(path)
    except OSError as exc:
        raise DomainError(f"cannot read measure file: {exc}") from exc


def _trace_outputs(trace, out: Path, stem: str):
    if trace.is_empty:
        raise EmptyTrace(f"{stem}: the domain is empty, no boundary to trace")
    csv_path = atomic_write_with(out / f"{stem}.csv", trace.to_csv)
    json_path = atomic_write_with(out / f"{stem}.json", trace.to_json)
    return [str(csv_path), str(json_path)]


def cmd_domain(args):
    from .domain import boundary_sigma

    law = _load_law(args.measure)
    trace = boundary_sigma(law, args.t, args.n_radii)
    files = _trace_outputs(trace, args.out, "domain_trace")
    params = {"measure": str(args.measure), "t": args.t, "n_radii": args.n_radii,
              "components": len(trace.components), "flagged": len(trace.flagged)}
    return params, files, None


def cmd_mapD(args):
    from .mapping import boundary_D, check_params

    law = _load_law(args.measure)
    check_params(args.s, args.tau)
    trace = boundary_D(law, args.s, args.tau, args.n_radii)
    files = _trace_outputs(trace, args.out, "mapD_trace")
    params = {"measure": str(args.measure), "s": args.s, "tau": _complex_json(args.tau),
              "n_radii": args.n_radii, "components": len(trace.components)}
    return params, files, None


def cmd_tstar(args):
    from .domain import lifetime_T
    from .hamilton import blowup

    law = _load_law(args.measure)
    bu = blowup(law, args.lam, args.eps0)
    result = {"lambda0": _complex_json(args.lam), "eps0": args.eps0, "t_star": bu.t_star, "delta": bu.delta,
              "C": bu.C, "a_squared": bu.a_squared, "branch": bu.branch}
    if args.lam != 0:
        result["T"] = lifetime_T(law, args.lam)
    path = atomic_write_text(args.out / "tstar.json", dumps_json(result))
    print(json.dumps(result))
    return {"measure": str(args.measure), "lambda0": _complex_json(args.lam), "eps0": args.eps0}, [str(path)], None


def cmd_flow(args):
    from .hamilton import blowup, flow, write_trajectory_csv

    law = _load_law(args.measure)
    t_end = args.t_end if args.t_end is not None else 0.9 * blowup(law, args.lam, args.eps0).t_star
    states = flow(law, args.lam, args.eps0, t_end, args.dt)
    path = atomic_write_with(args.out / "trajectory.csv", lambda p: write_trajectory_csv(states, p))
    params = {"measure": str(args.measure), "lambda0": _complex_json(args.lam), "eps0": args.eps0,
              "t_end": t_end, "dt": args.dt, "n_states": len(states)}
    return params, [str(path)], None


def cmd_rmt(args):
    from .mapping import _cached_boundary, check_params
    from .rmt import SimConfig, containment, sample_x, simulate_b, spectrum

    law = _load_law(args.measure)
    check_params(args.s, args.tau)
    scheme = args.scheme or ("product" if args.tau == args.s else "euler")
    cfg = SimConfig(args.N, args.steps, args.s, args.tau, scheme, args.seed, args.x_mode, args.precision)
    eigs = spectrum(sample_x(law, cfg), simulate_b(cfg))
    rep = containment(eigs, law, args.s, args.tau, args.dilation, args.n_radii)
    files = [str(atomic_write_text(args.out / "eigenvalues.csv", eigenvalue_csv(eigs)))]
    report = rep.to_dict()
    report.update({"seed": args.seed, "steps": args.steps, "scheme": scheme, "x_mode": args.x_mode,
                   "precision": args.precision})
    files.append(str(atomic_write_text(args.out / "spectrum.json", dumps_json(report))))
    trace = _cached_boundary(law, float(args.s), complex(args.tau), args.n_radii)
    if not trace.is_empty:
        files += _trace_outputs(trace, args.out, "mapD_trace")
    params = {"measure": str(args.measure), "s": args.s, "tau": _complex_json(args.tau), "N": args.N,
              "steps": args.steps, "scheme": scheme, "x_mode": args.x_mode, "dilation": args.dilation,
              "precision": args.precision, "n_radii": args.n_radii}
    return params, files, args.seed


def cmd_verify(args):
    from . import verify

    kwargs = {}
    if args.measure is not None:
        law = _load_law(args.measure)
        kwargs = {"conservation": {"laws": (law,)}, "blowup": {"laws": (law,)}}
    kwargs.setdefault("containment", {}).update({"N": args.N, "steps": args.steps, "seed": args.seed})
    kwargs.setdefault("injectivity", {}).update({"n_pairs": args.pairs, "seed": args.seed})
    checks = verify.run_suite(args.suite, **kwargs)
    ok = all(c["passed"] for c in checks)
    report = {"suite": args.suite, "passed": ok, "n_checks": len(checks),
              "n_failed": sum(not c["passed"] for c in checks), "checks": checks}
    path = atomic_write_text(args.out / f"verify_{args.suite}.json", dumps_json(report))
    for c in checks:
        print(f"{'PASS' if c['passed'] else 'FAIL'}  {c['name']}  value={c['value']:.3g}  threshold={c['threshold']:.3g}")
    params = {"suite": args.suite, "measure": None if args.measure is None else str(args.measure),
              "N": args.N, "steps": args.steps, "pairs": args.pairs}
    return params, [str(path)], args.seed, (EXIT_OK if ok else EXIT_VERIFY)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="brownmap", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, measure_required=True):
        sp.add_argument("--measure", type=Path, required=measure_required, help="law JSON file")
        sp.add_argument("--out", type=Path, default=Path("."), help="output directory")

    sp = sub.add_parser("domain", help="trace the boundary of Sigma_t")
    common(sp)
    sp.add_argument("--t", type=positive_float, required=True)
    sp.add_argument("--n-radii", type=positive_int, default=512)
    sp.set_defaults(func=cmd_domain)

    sp = sub.add_parser("mapD", help="trace the boundary of D_{s,tau}")
    common(sp)
    sp.add_argument("--s", type=positive_float, required=True)
    sp.add_argument("--tau", type=parse_complex, required=True)
    sp.add_argument("--n-radii", type=positive_int, default=512)
    sp.set_defaults(func=cmd_mapD)

    sp = sub.add_parser("tstar", help="blow-up time of the characteristic flow")
    common(sp)
    sp.add_argument("--lambda", dest="lam", type=parse_complex, required=True)
    sp.add_argument("--eps0", type=float, default=0.0)
    sp.set_defaults(func=cmd_tstar)

    sp = sub.add_parser("flow", help="integrate the characteristic flow")
    common(sp)
    sp.add_argument("--lambda", dest="lam", type=parse_complex, required=True)
    sp.add_argument("--eps0", type=positive_float, required=True)
    sp.add_argument("--t-end", type=positive_float, default=None, help="default 0.9 t*")
    sp.add_argument("--dt", type=positive_float, default=None, help="default 1e-4 t*")
    sp.set_defaults(func=cmd_flow)

    sp = sub.add_parser("rmt", help="eigenvalues of X B_{s,tau} and containment in D")
    common(sp)
    sp.add_argument("--s", type=positive_float, required=True)
    sp.add_argument("--tau", type=parse_complex, required=True)
    sp.add_argument("--N", type=positive_int, default=1000)
    sp.add_argument("--steps", type=positive_int, default=1000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--scheme", choices=["product", "euler"], default=None,
                    help="default: product when tau = s, else euler")
    sp.add_argument("--x-mode", choices=["quantile", "iid"], default="quantile")
    sp.add_argument("--precision", choices=["double", "single"], default="double")
    sp.add_argument("--dilation", type=float, default=0.05)
    sp.add_argument("--n-radii", type=positive_int, default=512)
    sp.set_defaults(func=cmd_rmt)

    sp = sub.add_parser("verify", help="run self-check suites")
    common(sp, measure_required=False)
    sp.add_argument("--suite", choices=["conservation", "blowup", "injectivity", "containment", "collapse", "all"],
                    default="all")
    sp.add_argument("--N", type=positive_int, default=300, help="matrix size for the containment suite")
    sp.add_argument("--steps", type=positive_int, default=300)
    sp.add_argument("--pairs", type=positive_int, default=1000, help="pairs for the injectivity suite")
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_verify)
    return p


def _thread_limit():
    value = os.environ.get("BROWNMAP_THREADS")
    if not value:
        return None
    try:
        n = int(value)
    except ValueError:
        raise DomainError(f"BROWNMAP_THREADS must be an integer, got {value!r}") from None
    if n < 1:
        raise DomainError("BROWNMAP_THREADS must be >= 1")
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=n)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    start = time.perf_counter()
    try:
        limiter = _thread_limit()
        try:
            result = args.func(args)
        finally:
            if limiter is not None:
                limiter.restore_original_limits()
    except EmptyTrace as exc:
        print(f"brownmap: {exc}", file=sys.stderr)
        return EXIT_EMPTY
    except (BlowupError, ConvergenceError, ConsistencyError, ArithmeticError) as exc:
        print(f"brownmap: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DomainError, ValueError) as exc:
        print(f"brownmap: invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT
    params, files, seed, *rest = result
    code = rest[0] if rest else EXIT_OK
    manifest = RunManifest(command=args.command, params=params, seed=seed, outputs=files,
                           wall_time=time.perf_counter() - start)
    manifest.write(args.out / f"{args.command}_manifest.json")
    return code


if __name__ == "__main__":
    sys.exit(main())
