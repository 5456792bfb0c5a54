"""Command-line front end.

Subcommands mirror the library: certify / classify / transition for the
splitting machinery, periodic / shadow / connect / mixing / unbounded for
orbit constructions, perturb / large-b for the robustness experiments, and
catalog for the built-in examples.  Output is deterministic JSON on stdout;
experiments can also write CSV and, with --figure, a rendered plot.

Exit status: 0 success, 2 validated negative verdict, 1 unusable input.
"""

from __future__ import annotations

import os

_threads = os.environ.get("HYPERDYN_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                 "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS"):
        os.environ.setdefault(_var, _threads)

import argparse  # noqa: E402
import json  # noqa: E402
import sys  # noqa: E402

from . import catalog, report  # noqa: E402
from .dynamics import (connect, mixing_experiment, periodic_point)  # noqa: E402
from .errors import HyperdynError, Precondition  # noqa: E402
from .operators import LatticeOperator, perturb  # noqa: E402
from .robustness import (epsilon0, large_b_experiment, random_perturbation,
                         robust_splitting, shifted_persists)  # noqa: E402
from .seqspace import LatticeVector, NormKind  # noqa: E402
from .shadowing import (NoiseRule, make_pseudo_orbit, second_shadow,
                        shadow_intersection, shadow_series,
                        unbounded_point, uniform_expansivity_probe)  # noqa: E402
from .splitting import (Splitting, certify, classify,
                        transition_subspace)  # noqa: E402


def _emit(obj) -> None:
    json.dump(obj, sys.stdout, sort_keys=True, indent=2, allow_nan=True)
    sys.stdout.write("\n")


def _load_setup(args):
    """Operator + splitting + window from --example or --operator-file."""
    if getattr(args, "example", None):
        entry = catalog.build(args.example)
        op, s, window = entry.operator, entry.splitting, entry.window
    elif getattr(args, "operator_file", None):
        with open(args.operator_file) as fh:
            obj = json.load(fh)
        op = LatticeOperator.from_json(obj["operator"])
        if "splitting" in obj:
            s = Splitting.from_json(obj["splitting"])
        else:
            s = Splitting("coordinate", int(obj.get("threshold", 0)))
        window = tuple(obj.get("window", (-48, 48)))
    else:
        raise Precondition("give --example NAME or --operator-file FILE")
    if getattr(args, "threshold", None) is not None:
        s = Splitting("coordinate", args.threshold)
    if getattr(args, "window", None) is not None:
        window = tuple(args.window)
    return op, s, window


def _load_vector(path: str) -> LatticeVector:
    with open(path) as fh:
        return LatticeVector.from_json(json.load(fh))


def _setup_args(p, window_default=False):
    p.add_argument("--example", help="catalog entry name")
    p.add_argument("--operator-file",
                   help="JSON file with operator/splitting/window")
    p.add_argument("--threshold", type=int,
                   help="override: coordinate splitting at this index")
    p.add_argument("--window", type=int, nargs=2, metavar=("LO", "HI"))


def _certified(args):
    op, s, window = _load_setup(args)
    return op, s, window, certify(op, s, *window)


def cmd_certify(args):
    op, s, window = _load_setup(args)
    cert = certify(op, s, *window)
    _emit({"certificate": cert.to_json()})
    return 0


def cmd_classify(args):
    op, s, window = _load_setup(args)
    verdict = classify(op, s, *window)
    _emit({"verdict": verdict})
    return 0


def cmd_transition(args):
    op, s, window = _load_setup(args)
    basis_e0 = transition_subspace(op, s, *window)
    _emit({"dimension_on_window": len(basis_e0),
           "basis": basis_e0.to_json()})
    return 0


def cmd_periodic(args):
    op, s, window, cert = _certified(args)
    if args.vector_file:
        seed = _load_vector(args.vector_file)
    else:
        basis_e0 = transition_subspace(op, s, *window)
        if args.seed_index >= len(basis_e0):
            raise Precondition("transition seed index out of range",
                               available=len(basis_e0))
        seed = basis_e0.vectors[args.seed_index]
    pp = periodic_point(op, cert, seed, args.period, tol=args.tol)
    _emit({"periodic_point": pp.to_json()})
    return 0


def cmd_shadow(args):
    op, s, window, cert = _certified(args)
    start = (_load_vector(args.start_file) if args.start_file
             else LatticeVector({0: 1.0}))
    noise = NoiseRule(args.noise, args.delta)
    po = make_pseudo_orbit(op, start, args.length, noise, rng=args.rng_seed)
    out = {"delta": po.delta}
    results = {}
    if args.method in ("series", "both"):
        results["series"] = shadow_series(op, cert, po, tol=args.tol)
    if args.method in ("intersection", "both"):
        results["intersection"] = shadow_intersection(op, cert, po,
                                                      tol=args.tol)
    out.update({k: r.to_json() for k, r in results.items()})
    if len(results) == 2:
        a = results["series"].point
        b = results["intersection"].point
        from .seqspace import combine
        out["solver_gap"] = combine(1.0, a, -1.0, b).norm(cert.norm_kind)
    if args.eta is not None:
        base = results.get("series") or next(iter(results.values()))
        shifted, sep = second_shadow(op, cert, po, base, args.eta)
        out["second_shadow"] = shifted.to_json()
        out["separation"] = sep
    _emit(out)
    return 0


def cmd_connect(args):
    op, s, window, cert = _certified(args)
    if args.x_file and args.y_file:
        x, y = _load_vector(args.x_file), _load_vector(args.y_file)
    else:
        basis_e0 = transition_subspace(op, s, *window)
        if not basis_e0.vectors:
            raise Precondition("no default endpoints: transition subspace "
                               "is trivial; pass --x-file/--y-file")
        seed = basis_e0.vectors[0]
        x = periodic_point(op, cert, seed, 1).point
        y = x.scaled(args.target_scale)
    res = connect(op, cert, x, y, args.big_n)
    _emit({"connect": res.to_json()})
    return 0


def cmd_mixing(args):
    op, s, window, cert = _certified(args)
    if args.u_file and args.v_file:
        u, v = _load_vector(args.u_file), _load_vector(args.v_file)
    else:
        basis_e0 = transition_subspace(op, s, *window)
        if not basis_e0.vectors:
            raise Precondition("no default endpoints: transition subspace "
                               "is trivial; pass --u-file/--v-file")
        seed = basis_e0.vectors[0]
        u = periodic_point(op, cert, seed, 1).point
        v = periodic_point(op, cert, seed, 2).point
    rows = mixing_experiment(op, cert, u, v, args.r,
                             range(args.n_range[0], args.n_range[1] + 1))
    fields = ["n", "k", "m", "residual_at_u", "residual_at_v",
              "system_residual", "verified"]
    if args.csv:
        report.write_csv(args.csv, fields, rows)
    if args.figure:
        report.mixing_figure(rows, args.figure, args.r)
    _emit({"rows": [{k: row[k] for k in fields} for row in rows],
           "all_verified": all(row["verified"] for row in rows)})
    return 0


def cmd_unbounded(args):
    op, s, window, cert = _certified(args)
    rep = unbounded_point(op, cert, args.delta, args.steps)
    if args.csv:
        report.write_csv(args.csv, ["n", "pseudo_norm", "shadow_norm"],
                         [{"n": r[0], "pseudo_norm": r[1], "shadow_norm": r[2]}
                          for r in rep.rows])
    if args.figure:
        report.growth_figure(rep.rows, args.figure)
    out = rep.to_json()
    out["shadow"]["point"] = "(omitted)"
    _emit(out)
    return 0


def cmd_expansivity(args):
    op, s, window = _load_setup(args)
    cert = None
    try:
        cert = certify(op, s, *window)
    except HyperdynError:
        pass
    verdict = uniform_expansivity_probe(op, cert, c=args.c,
                                        n_max=args.n_max)
    _emit({"expansivity": verdict.to_json()})
    return 0


def cmd_perturb(args):
    op, s, window, cert = _certified(args)
    eps = args.eps if args.eps is not None else 0.5 * epsilon0(cert)
    p = random_perturbation(args.rng_seed, *args.perturb_window, eps,
                            kind=cert.norm_kind)
    s_op = perturb(op, p)
    rep = robust_splitting(s_op, cert)
    if args.csv:
        report.write_csv(args.csv, ["iteration", "minus_step", "plus_step"],
                         [{"iteration": r[0], "minus_step": r[1],
                           "plus_step": r[2]} for r in rep.contraction_log])
    if args.figure:
        report.recovery_figure(rep.contraction_log, args.figure)
    new = rep.certificate
    _emit({
        "eps": eps, "epsilon0": epsilon0(cert),
        "iterations": rep.iterations,
        "lambda_plus": new.lambda_plus, "lambda_minus": new.lambda_minus,
        "lipschitz": new.lipschitz,
        "tilt_columns": {"minus": len(rep.splitting.minus_tilt),
                         "plus": len(rep.splitting.plus_tilt)},
        "shifted_persists": shifted_persists(s_op, rep),
    })
    return 0


def cmd_large_b(args):
    op, s, window, cert = _certified(args)
    basis_e0 = transition_subspace(op, s, *window)
    if not basis_e0.vectors:
        raise Precondition("experiment needs a transition direction")
    seed = basis_e0.vectors[0]
    # seeds get iterated orbit_len steps, and each application of the
    # operator consumes one term of a truncated fixed-point tail
    terms = args.orbit_len + 60
    v1 = periodic_point(op, cert, seed, 1, series_terms=terms).point
    v2 = periodic_point(op, cert, seed, 2, series_terms=terms).point
    p = random_perturbation(args.rng_seed, *args.perturb_window, args.delta,
                            kind=cert.norm_kind)
    s_op = perturb(op, p)
    cert_s = robust_splitting(s_op, cert).certificate
    rep = large_b_experiment(
        op, s_op, cert_s,
        {"samples": args.samples, "vectors": [v1, v2], "horizon": 4},
        args.big_n, args.eps, args.delta, orbit_len=args.orbit_len,
        rng=args.rng_seed)
    fields = ["sample", "orbit_norm", "delta", "eps", "bound",
              "shadow_orbit_sup", "ok"]
    if args.csv:
        report.write_csv(args.csv, fields, rep.rows)
    _emit({"success_rate": rep.success_rate, "budget": rep.budget,
           "samples": len(rep.rows)})
    return 0


def cmd_catalog(args):
    if args.action == "list":
        _emit({"entries": catalog.names()})
        return 0
    entry = catalog.build(args.name)
    _emit({"name": entry.name, "expected": entry.expected,
           "notes": entry.notes, "window": list(entry.window),
           "operator": entry.operator.to_json(),
           "splitting": entry.splitting.to_json()})
    return 0


def _build_parser():
    ap = argparse.ArgumentParser(
        prog="hyperdyn",
        description="certified hyperbolic dynamics on the integer lattice")
    sub = ap.add_subparsers(dest="command", required=True)

    for name, fn, extra in [
        ("certify", cmd_certify, None),
        ("classify", cmd_classify, None),
        ("transition", cmd_transition, None),
    ]:
        p = sub.add_parser(name)
        _setup_args(p)
        p.set_defaults(fn=fn)

    p = sub.add_parser("periodic")
    _setup_args(p)
    p.add_argument("--period", type=int, default=1)
    p.add_argument("--seed-index", type=int, default=0)
    p.add_argument("--vector-file")
    p.add_argument("--tol", type=float, default=1e-9)
    p.set_defaults(fn=cmd_periodic)

    p = sub.add_parser("shadow")
    _setup_args(p)
    p.add_argument("--length", type=int, default=64)
    p.add_argument("--delta", type=float, default=1e-4)
    p.add_argument("--noise", default="uniform",
                   choices=["zero", "single", "uniform", "drift"])
    p.add_argument("--method", default="both",
                   choices=["series", "intersection", "both"])
    p.add_argument("--start-file")
    p.add_argument("--eta", type=float,
                   help="also emit a second shadow shifted by eta")
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--rng-seed", type=int, default=0)
    p.set_defaults(fn=cmd_shadow)

    p = sub.add_parser("connect")
    _setup_args(p)
    p.add_argument("--big-n", type=int, default=20)
    p.add_argument("--x-file")
    p.add_argument("--y-file")
    p.add_argument("--target-scale", type=float, default=2.0)
    p.set_defaults(fn=cmd_connect)

    p = sub.add_parser("mixing")
    _setup_args(p)
    p.add_argument("--r", type=float, default=0.1)
    p.add_argument("--n-range", type=int, nargs=2, default=(25, 35),
                   metavar=("N_MIN", "N_MAX"))
    p.add_argument("--u-file")
    p.add_argument("--v-file")
    p.add_argument("--csv")
    p.add_argument("--figure")
    p.set_defaults(fn=cmd_mixing)

    p = sub.add_parser("unbounded")
    _setup_args(p)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--steps", type=int, default=60)
    p.add_argument("--csv")
    p.add_argument("--figure")
    p.set_defaults(fn=cmd_unbounded)

    p = sub.add_parser("expansivity")
    _setup_args(p)
    p.add_argument("--c", type=float, default=2.0)
    p.add_argument("--n-max", type=int, default=6)
    p.set_defaults(fn=cmd_expansivity)

    p = sub.add_parser("perturb")
    _setup_args(p)
    p.add_argument("--eps", type=float,
                   help="perturbation size (default: epsilon0 / 2)")
    p.add_argument("--perturb-window", type=int, nargs=2, default=(-6, 6))
    p.add_argument("--rng-seed", type=int, default=0)
    p.add_argument("--csv")
    p.add_argument("--figure")
    p.set_defaults(fn=cmd_perturb)

    p = sub.add_parser("large-b")
    _setup_args(p)
    p.add_argument("--delta", type=float, default=1e-4)
    p.add_argument("--big-n", type=float, default=4.0)
    p.add_argument("--eps", type=float, default=0.01)
    p.add_argument("--samples", type=int, default=50)
    p.add_argument("--orbit-len", type=int, default=48)
    p.add_argument("--perturb-window", type=int, nargs=2, default=(-6, 6))
    p.add_argument("--rng-seed", type=int, default=0)
    p.add_argument("--csv")
    p.set_defaults(fn=cmd_large_b)

    p = sub.add_parser("catalog")
    p.add_argument("action", choices=["list", "emit"])
    p.add_argument("name", nargs="?")
    p.set_defaults(fn=cmd_catalog)
    return ap


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except HyperdynError as exc:
        _emit({"error": {"code": exc.code, "message": str(exc),
                         "verdict": exc.verdict}})
        return 2 if exc.verdict else 1
    except (OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
        _emit({"error": {"code": "INPUT", "message": str(exc),
                         "verdict": False}})
        return 1


if __name__ == "__main__":
    sys.exit(main())
