"""Command-line interface.

Tensor arguments accept a JSON file path, ``-`` for stdin, or
``catalog:NAME`` for a built-in example. Exit codes: 0 success, 1 input
error, 2 an assumption fails, 3 no convergence.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import catalog
from .chain import LeafProfile, certificate_csv, evolve, geometric_certificate
from .dag import event_probability, events_csv, exact_coupling_distribution
from .errors import MaxIterExceeded, NotBalanced, NotTwoColour, ParseError, TooLarge, UrnError
from .fixed_point import all_fixed_points_2colour, multi_start, solve
from .tensor import (
    ReplacementTensor,
    dump_tensor,
    ergodicity_coefficients,
    induced_chain_tensor,
    load_tensor,
    tuple_index,
    validate,
)
from .urn import as_law, exact_distribution, monte_carlo, total_variation

EXIT_OK, EXIT_INPUT, EXIT_ASSUMPTION, EXIT_NOCONV = 0, 1, 2, 3


class InputError(Exception):
    pass


def _read_tensor(source: str) -> ReplacementTensor:
    if source.startswith("catalog:"):
        try:
            return catalog.tensor(source.split(":", 1)[1])
        except KeyError as exc:
            raise InputError(str(exc)) from exc
    if source == "-":
        try:
            return ReplacementTensor.from_dict(json.load(sys.stdin))
        except json.JSONDecodeError as exc:
            raise ParseError(f"stdin: {exc}") from exc
    return load_tensor(source)


def _floats(text: str):
    try:
        return [float(v) for v in text.split(",")]
    except ValueError as exc:
        raise InputError(f"expected comma-separated numbers, got {text!r}") from exc


def _emit(text: str, out):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json(obj):
    print(json.dumps(obj, indent=2, default=_jsonable))


def _jsonable(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    raise TypeError(type(o))


def cmd_check(args) -> int:
    tensor = _read_tensor(args.tensor)
    report = validate(tensor)
    _json(report.to_dict())
    return EXIT_OK if report.all_hold else EXIT_ASSUMPTION


def cmd_solve(args) -> int:
    tensor = _read_tensor(args.tensor)
    out = {"name": tensor.name}
    try:
        if args.all_2colour:
            out["fixed_points"] = [x.tolist() for x in all_fixed_points_2colour(tensor)]
        if args.starts:
            out["multi_start"] = [
                r.to_dict() for r in multi_start(tensor, args.starts, args.seed, args.tol, args.max_iter)
            ]
        x0 = _floats(args.x0) if args.x0 else None
        out["solve"] = solve(tensor, args.tol, args.max_iter, x0=x0).to_dict()
    except MaxIterExceeded as exc:
        out["solve"] = {
            "converged": False,
            "iterations": exc.iterations,
            "residual": exc.residual,
            "last_iterates": [x.tolist() for x in exc.history],
            "certified": validate(tensor).ergodicity_holds,
        }
        _json(out)
        return EXIT_NOCONV
    except NotTwoColour as exc:
        raise InputError(str(exc)) from exc
    _json(out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    tensor = _read_tensor(args.tensor)
    initial = _floats(args.initial) if args.initial else [1.0] * tensor.d
    x_star = _floats(args.x_star) if args.x_star else None
    try:
        stats = monte_carlo(tensor, initial, args.n, args.replicates, args.seed, x_star=x_star)
    except MaxIterExceeded:
        print("no unique fixed point found; pass --x-star", file=sys.stderr)
        return EXIT_NOCONV
    _emit(stats.to_csv(), args.out)
    return EXIT_OK


def cmd_dag(args) -> int:
    if args.tensor:
        tensor = _read_tensor(args.tensor)
        pi = np.asarray(_floats(args.pi)) if args.pi else np.full(tensor.d, 1.0 / tensor.d)
        n = args.n[0]
        urn_law = as_law(exact_distribution(tensor, tensor.sigma * pi, n))
        dag_law = exact_coupling_distribution(tensor, pi, n)
        _json({
            "n": n,
            "pi": pi.tolist(),
            "urn": [{"counts": list(k), "p": p} for k, p in sorted(urn_law.items())],
            "dag": [{"counts": list(k), "p": p} for k, p in sorted(dag_law.items())],
            "tv": total_variation(urn_law, dag_law),
        })
        return EXIT_OK
    rows = [event_probability(n, args.m, args.ell, args.replicates, args.seed) for n in args.n]
    _emit(events_csv(rows), args.out)
    return EXIT_OK


def _leaves(source, d, m, depth):
    n_states = d**m
    if source == "uniform":
        return LeafProfile.uniform(n_states, m, depth)
    if source.startswith("point:"):
        colours = [int(v) - 1 for v in source.split(":", 1)[1].split(",")]
        if len(colours) != m or not all(0 <= c < d for c in colours):
            raise InputError(f"point leaves need {m} colours in 1..{d}")
        return LeafProfile.point(n_states, tuple_index(colours, d), m, depth)
    raise InputError("--leaves must be 'uniform' or 'point:c1,..,cm'")


def cmd_chain(args) -> int:
    tensor = _read_tensor(args.tensor)
    t = induced_chain_tensor(tensor)
    leaves = _leaves(args.leaves, tensor.d, tensor.m, args.depth)
    if ergodicity_coefficients(t).q < 1:
        rows = geometric_certificate(t, leaves)
        _emit(certificate_csv(rows), args.out)
        return EXIT_OK
    res = evolve(t, leaves)
    errs = res.per_level_max_error or [float("nan")] * (args.depth + 1)
    lines = ["level,max_error,bound"] + [f"{k},{e!r},nan" for k, e in enumerate(errs)]
    _emit("\n".join(lines) + "\n", args.out)
    print(f"q = {res.q:.6g} >= 1: no contraction certificate", file=sys.stderr)
    return EXIT_ASSUMPTION


def cmd_catalog(args) -> int:
    if args.emit:
        try:
            entry = catalog.get(args.emit)
        except KeyError as exc:
            raise InputError(str(exc)) from exc
        dump_tensor(entry.tensor, sys.stdout)
        return EXIT_OK
    _json([catalog.get(n).summary() for n in catalog.names()])
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="polyaurn", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", help="check (T), (B), (E); JSON report")
    c.add_argument("tensor")
    c.set_defaults(func=cmd_check)

    s = sub.add_parser("solve", help="fixed point of x -> R(x,..,x)/sigma")
    s.add_argument("tensor")
    s.add_argument("--tol", type=float, default=1e-12)
    s.add_argument("--max-iter", type=int, default=10_000)
    s.add_argument("--x0", help="start point, comma separated (default: barycenter)")
    s.add_argument("--all-2colour", action="store_true", help="list all fixed points (d = 2)")
    s.add_argument("--starts", type=int, default=0, help="also run a multi-start search")
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_solve)

    m = sub.add_parser("simulate", help="Monte Carlo error to x*; CSV")
    m.add_argument("tensor")
    m.add_argument("--n", type=int, default=10_000)
    m.add_argument("--replicates", type=int, default=100)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--initial", help="U(0), comma separated (default: all ones)")
    m.add_argument("--x-star", help="reference point (default: solved fixed point)")
    m.add_argument("--out")
    m.set_defaults(func=cmd_simulate)

    g = sub.add_parser(
        "dag",
        help="genealogy events of the uniform recursive DAG; CSV",
        description="Estimate P(E_n and F_n). Keep --ell small and fixed: the "
        "completeness event only has limit 1 for ell growing slower than "
        "log log log n. With a tensor, compare the exact DAG-coupled and "
        "direct urn laws at --n (<= 3) instead; JSON.",
    )
    g.add_argument("--n", type=int, nargs="+", default=[1000])
    g.add_argument("--m", type=int, default=2)
    g.add_argument("--ell", type=int, default=2)
    g.add_argument("--replicates", type=int, default=1000)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--tensor", help="coupling mode: tensor to compare")
    g.add_argument("--pi", help="coupling mode: initial distribution")
    g.add_argument("--out")
    g.set_defaults(func=cmd_dag)

    h = sub.add_parser("chain", help="exact chain recursion and decay certificate; CSV")
    h.add_argument("tensor")
    h.add_argument("--depth", type=int, default=8)
    h.add_argument("--leaves", default="uniform", help="uniform | point:c1,..,cm (1-based)")
    h.add_argument("--out")
    h.set_defaults(func=cmd_chain)

    k = sub.add_parser("catalog", help="built-in example tensors")
    grp = k.add_mutually_exclusive_group()
    grp.add_argument("--list", action="store_true")
    grp.add_argument("--emit", metavar="NAME")
    k.set_defaults(func=cmd_catalog)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, InputError, TooLarge, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NotBalanced as exc:
        print(f"assumption (B) fails: {exc}", file=sys.stderr)
        return EXIT_ASSUMPTION
    except UrnError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
