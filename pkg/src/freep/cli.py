"""Command-line interface.

Subcommands: validate, norm, tree-norm, amen, bounds, search, count-trees.
Human-readable tables by default, machine JSON with --json (every numeric
field re-parses to the exact printed double). Exit codes: 0 success,
1 input or parse error, 2 mathematical validation failure, 3 capacity or
internal error.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__
from .amenability import (
    amen_estimate,
    bound_one_extra_point,
    bound_two_points,
    metric_amen_bound,
    retract_upper_bound,
)
from .exceptions import (
    CapacityError,
    FreepError,
    InputError,
    MetricValidationError,
)
from .norm import free_norm, free_norm_pruned
from .search import SearchConfig, search_campaign
from .space import Molecule, load_space, load_tree, path_p_metric, validate_p_metric
from .trees import rooted_tree_count

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_VALIDATION = 2
EXIT_INTERNAL = 3


class _ArgumentError(InputError):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that raises instead of exiting, so we control the exit code."""

    def error(self, message):
        raise _ArgumentError(message)


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def _emit(payload: dict, lines, as_json: bool):
    if as_json:
        print(json.dumps(payload, indent=2))
    else:
        for line in lines:
            print(line)


def _parse_coeffs(text: str) -> dict:
    out = {}
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        if "=" not in chunk:
            raise InputError(f"coefficient {chunk!r} is not label=value")
        label, _, value = chunk.partition("=")
        label = label.strip()
        if label in out:
            raise InputError(f"coefficient for {label!r} given twice")
        try:
            out[label] = float(value)
        except ValueError:
            raise InputError(f"bad coefficient value {value!r}") from None
    if not out:
        raise InputError("empty coefficient list")
    return out


def _witness_edges(space, result):
    labels = [space.labels[v] for v in result.witness_vertices]
    tree = result.witness
    return [f"{labels[tree.parent[v]]} -> {labels[v]}"
            for v in range(tree.m) if v != tree.root_index]


def _cmd_validate(args) -> int:
    with open(args.space, encoding="utf-8") as fh:
        space_doc = json.load(fh)
    try:
        dist = np.asarray(space_doc["dist"], dtype=float)
        q = float(space_doc["q"])
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed space document: {exc}") from exc
    report = validate_p_metric(dist, q)
    payload = {
        "file": args.space,
        "q": q,
        "points": space_doc.get("points"),
        "valid": report.valid,
        "issues": report.issues(),
    }
    lines = [f"space: {args.space}", f"q: {_fmt(q)}",
             f"valid: {'yes' if report.valid else 'no'}"]
    lines += [f"  issue: {msg}" for msg in report.issues()]
    _emit(payload, lines, args.json)
    return EXIT_OK if report.valid else EXIT_VALIDATION


def _cmd_norm(args) -> int:
    space = load_space(args.space)
    molecule = Molecule.from_labels(space, _parse_coeffs(args.coeffs))
    fn = free_norm_pruned if args.prune else free_norm
    result = fn(space, molecule, args.p, workers=args.workers)
    payload = {
        "value": result.value,
        "p_power": result.p_power,
        "p": args.p,
        "trees_evaluated": result.trees_evaluated,
        "witness_points": [space.labels[v] for v in result.witness_vertices],
        "witness_edges": _witness_edges(space, result),
        "pruned": bool(args.prune),
    }
    lines = [f"norm: {_fmt(result.value)}",
             f"norm^p: {_fmt(result.p_power)}",
             f"trees evaluated: {result.trees_evaluated}",
             "witness tree: " + ", ".join(payload["witness_edges"])]
    _emit(payload, lines, args.json)
    return EXIT_OK


def _cmd_tree_norm(args) -> int:
    tree, q = load_tree(args.tree)
    space = path_p_metric(tree, q)
    molecule = Molecule.from_labels(space, _parse_coeffs(args.coeffs))
    result = free_norm(space, molecule, args.p, workers=args.workers)
    payload = {
        "value": result.value,
        "p_power": result.p_power,
        "p": args.p,
        "q": q,
        "trees_evaluated": result.trees_evaluated,
        "witness_edges": _witness_edges(space, result),
    }
    lines = [f"path metric q: {_fmt(q)}",
             f"norm: {_fmt(result.value)}",
             f"norm^p: {_fmt(result.p_power)}",
             "witness tree: " + ", ".join(payload["witness_edges"])]
    _emit(payload, lines, args.json)
    return EXIT_OK


def _cmd_amen(args) -> int:
    space = load_space(args.space)
    wanted = [s.strip() for s in args.subset.split(",") if s.strip()]
    subset = {space.label_index(label) for label in wanted}
    subset.add(space.base_index)
    est = amen_estimate(space, tuple(sorted(subset)), args.p, starts=args.starts,
                        seed=args.seed, tol=args.tol, grid=args.grid,
                        workers=args.workers)
    n = len(subset) - 1
    k = space.m - 1
    caps = {}
    if n < k:
        rb = retract_upper_bound(n, k, space.q)
        caps["retract"] = rb.pair_cap
        caps["absolute"] = rb.absolute_cap
    if space.q == 1.0 and args.p < 1.0:
        caps["metric"] = metric_amen_bound(args.p)
    witness = {space.labels[v]: c
               for v, c in est.witness_coefficients.coefficients.items()}
    payload = {
        "value": est.value,
        "p": args.p,
        "q": space.q,
        "n": n,
        "k": k,
        "witness_coefficients": witness,
        "witness_superspace_points": [space.labels[v] for v in est.witness_vertices_m],
        "starts": est.starts,
        "evaluations": est.evaluations,
        "converged": est.converged,
        "caps": caps,
    }
    lines = [f"lower bound for the embedding constant: {_fmt(est.value)}",
             f"subset size n: {n}   superspace size k: {k}",
             "witness coefficients: "
             + ", ".join(f"{lab}={_fmt(c)}" for lab, c in sorted(witness.items())),
             f"starts: {est.starts}   evaluations: {est.evaluations}   "
             f"converged: {'yes' if est.converged else 'no'}"]
    lines += [f"cap ({name}): {_fmt(val)}" for name, val in caps.items()]
    _emit(payload, lines, args.json)
    return EXIT_OK


def _cmd_bounds(args) -> int:
    kind = args.kind
    if kind == "one-extra":
        if args.n is None or args.q is None:
            raise InputError("one-extra needs -n and -q (and -p)")
        b = bound_one_extra_point(args.n, args.p, args.q)
        payload = {"kind": kind, "n": b.n, "p": b.p, "q": b.q,
                   "lower": b.lower, "upper": b.upper,
                   "witness_coefficient": b.n ** (-1.0 / b.p)}
        lines = [f"lower bound: {_fmt(b.lower)}   (unit star, {b.n} leaves, "
                 f"coefficients {_fmt(b.n ** (-1.0 / b.p))})",
                 f"upper cap:   {_fmt(b.upper)}   (= 2^(1/q))"]
    elif kind == "two-point":
        q = args.q if args.q is not None else args.p
        b = bound_two_points(args.p, q)
        payload = {"kind": kind, "p": b.p, "q": b.q, "ratio": b.value,
                   "ratio_p": b.p_power, "hub_weight": b.hub_weight,
                   "realized_ratio": b.realized_ratio,
                   "nonisometric": b.p_power > 1.0}
        lines = [f"ratio bound: {_fmt(b.value)}",
                 f"ratio_p (p-th power): {_fmt(b.p_power)}",
                 f"hub edge weight: {_fmt(b.hub_weight)}",
                 f"witness replay: {_fmt(b.realized_ratio)}",
                 "note: both normalisations are reported; the p-th power is "
                 "the displayed inner expression"]
        if b.p_power > 1.0:
            lines.append(">1: the two-point subspace embeds non-isometrically "
                         "at these exponents")
    elif kind == "retract":
        if args.n is None or args.k is None or args.q is None:
            raise InputError("retract needs -n, -k and -q")
        b = retract_upper_bound(args.n, args.k, args.q)
        payload = {"kind": kind, "n": args.n, "k": args.k, "q": args.q,
                   "pair_cap": b.pair_cap, "absolute_cap": b.absolute_cap}
        lines = [f"cap for (n={args.n}, k={args.k}): {_fmt(b.pair_cap)}",
                 f"absolute cap for n={args.n}: {_fmt(b.absolute_cap)}"]
    else:  # metric
        val = metric_amen_bound(args.p)
        payload = {"kind": kind, "p": args.p, "cap": val}
        lines = [f"metric-superspace cap: {_fmt(val)}"]
    _emit(payload, lines, args.json)
    return EXIT_OK


def _cmd_search(args) -> int:
    mode = {"random": "random_space", "tree": "weighted_tree"}[args.mode]
    config = SearchConfig(mode=mode, n=args.n, k=args.k, p=args.p, q=args.q,
                          iterations=args.iters, seed=args.seed,
                          out_path=args.out,
                          starts_per_instance=args.starts)
    summary = search_campaign(config, workers=args.workers)
    payload = {
        "mode": mode,
        "records": summary.records,
        "max_ratio": summary.max_ratio,
        "max_ratio_p": summary.best.ratio_p,
        "best_instance": summary.best.instance_id,
        "threshold": summary.threshold,
        "exceeds_threshold": summary.exceeds_threshold,
        "cap_violations": summary.cap_violations,
        "metric_cap": summary.metric_cap,
        "csv": summary.csv_path,
        "manifest": summary.manifest_path,
    }
    lines = [f"instances: {summary.records}",
             f"max ratio: {_fmt(summary.max_ratio)} "
             f"(instance {summary.best.instance_id})",
             f"threshold 2^(1/q): {_fmt(summary.threshold)}"
             + ("   EXCEEDS" if summary.exceeds_threshold else "")]
    if summary.metric_cap is not None:
        lines.append(f"metric-superspace cap: {_fmt(summary.metric_cap)}")
    lines += [f"cap violations: {summary.cap_violations}",
              f"results: {summary.csv_path}"]
    _emit(payload, lines, args.json)
    return EXIT_OK


def _cmd_count_trees(args) -> int:
    count = rooted_tree_count(args.m)
    _emit({"m": args.m, "count": count}, [str(count)], args.json)
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="freep",
                     description="Exact free p-norms, embedding constants "
                                 "and counterexample search on finite "
                                 "p-metric spaces")
    parser.add_argument("--version", action="version", version=f"freep {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("validate", help="check a space file for q-metric validity")
    sp.add_argument("space")
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(fn=_cmd_validate)

    sp = sub.add_parser("norm", help="free p-norm of a molecule")
    sp.add_argument("space")
    sp.add_argument("-p", type=float, required=True)
    sp.add_argument("--coeffs", required=True,
                    help="label=value[,label=value...]; unlisted points are 0")
    sp.add_argument("--prune", action="store_true",
                    help="use the zero-coefficient-point reduction")
    sp.add_argument("--workers", type=int, default=None)
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(fn=_cmd_norm)

    sp = sub.add_parser("tree-norm",
                        help="norm in the path metric of a weighted tree file")
    sp.add_argument("tree")
    sp.add_argument("-p", type=float, required=True)
    sp.add_argument("--coeffs", required=True)
    sp.add_argument("--workers", type=int, default=None)
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(fn=_cmd_tree_norm)

    sp = sub.add_parser("amen", help="lower-bound the embedding constant of a subset")
    sp.add_argument("space")
    sp.add_argument("--subset", required=True,
                    help="comma-separated labels (the base point is always kept)")
    sp.add_argument("-p", type=float, required=True)
    sp.add_argument("--starts", type=int, default=8)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--tol", type=float, default=1e-6)
    sp.add_argument("--grid", action="store_true",
                    help="dense sphere grid instead of random restarts (dim <= 3)")
    sp.add_argument("--workers", type=int, default=None)
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(fn=_cmd_amen)

    sp = sub.add_parser("bounds", help="closed-form bounds and constructions")
    sp.add_argument("kind", choices=["one-extra", "two-point", "retract", "metric"])
    sp.add_argument("-p", type=float, required=True)
    sp.add_argument("-q", type=float, default=None)
    sp.add_argument("-n", type=int, default=None)
    sp.add_argument("-k", type=int, default=None)
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(fn=_cmd_bounds)

    sp = sub.add_parser("search", help="randomised campaign for large ratios")
    sp.add_argument("mode", choices=["random", "tree"])
    sp.add_argument("-p", type=float, required=True)
    sp.add_argument("-q", type=float, required=True)
    sp.add_argument("-n", type=int, required=True)
    sp.add_argument("-k", type=int, required=True)
    sp.add_argument("--iters", type=int, required=True)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--starts", type=int, default=4)
    sp.add_argument("--workers", type=int, default=None)
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(fn=_cmd_search)

    sp = sub.add_parser("count-trees", help="number of rooted labelled trees")
    sp.add_argument("-m", type=int, required=True)
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(fn=_cmd_count_trees)

    return parser


def run_command(argv) -> int:
    """Parse and dispatch; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.fn(args)
    except _ArgumentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except MetricValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except FreepError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


def main():
    sys.exit(run_command(sys.argv[1:]))


if __name__ == "__main__":
    main()
