"""Exact free p-norm of molecules by exhaustive rooted-tree minimisation.

The p-th power of the norm of sum a_x delta(x) equals the minimum of

    sum over non-root x of |c_T(x, a) * d(x, parent(x))|^p

over all rooted labelled trees T on the point set, where c_T(x, a) is the
coefficient sum of the subtree below x. The engine compares p-th powers
(the final root is taken once), abandons a tree as soon as its partial sum
exceeds the best so far, and seeds the bound with the star tree's value;
both tricks preserve exactness. Ties go to the first tree in lexicographic
Pruefer order, also across worker threads.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from . import _kernel
from .exceptions import CapacityError, ExponentError, InputError
from .space import DEFAULT_TOL, PMetricSpace, validate_p_metric
from .trees import (
    DEFAULT_TREE_LIMIT,
    KERNEL_MAX_VERTICES,
    RootedTreeTopology,
    _coefficient_vector,
    _rank_to_sequence,
    pruefer_decode,
    rooted_tree_count,
    shard_bounds,
)

#: relative headroom added to the star-tree seed so the tie-break witness survives
_SEED_SLACK = 1e-9


@dataclass(frozen=True, eq=False)
class NormResult:
    """Value, witness tree and effort counters of one norm computation.

    `witness_vertices` names the original point indices the witness tree
    lives on; it is the full point set except for pruned computations that
    settled on a subspace.
    """

    value: float
    p_power: float
    witness: RootedTreeTopology
    trees_evaluated: int
    witness_vertices: tuple


def resolve_workers(workers=None) -> int:
    """Explicit argument, else FREEP_THREADS, else 1."""
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get("FREEP_THREADS", "").strip()
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


def _check_exponent_pair(p: float, q: float):
    if not (0.0 < p <= 1.0):
        raise ExponentError(f"exponent p = {p} must lie in (0, 1]")
    if p > q + 1e-12:
        raise ExponentError(f"p = {p} exceeds the space's validity exponent q = {q}")


def _check_capacity(m: int, tree_limit: int):
    if m > tree_limit:
        raise CapacityError(
            f"{m} points mean {rooted_tree_count(m)} trees; "
            f"raise tree_limit (<= {KERNEL_MAX_VERTICES}) to force the scan")
    if m > KERNEL_MAX_VERTICES:
        raise CapacityError(f"scan kernels cap out at {KERNEL_MAX_VERTICES} points")


def _first_tree(m: int, root: int) -> RootedTreeTopology:
    if m == 2:
        return pruefer_decode((), root=root)
    return pruefer_decode(_rank_to_sequence(0, m), root=root)


def _scan_min(space: PMetricSpace, vec: np.ndarray, p: float, workers: int,
              backend, min_children=None, best_init=None):
    """Sharded minimum over the full rank range; returns (best, rank, scanned)."""
    m = space.m
    root = space.base_index
    # scalar pow here: numpy's vectorized pow rounds differently in the last
    # ulp than libm, and tree_value must reproduce the kernel bit for bit
    dist_p = np.array([[d ** p for d in row] for row in space.dist.tolist()])
    coeff = np.ascontiguousarray(vec)
    if best_init is None:
        star = float(np.sum(np.abs(coeff) ** p * dist_p[:, root]))
        best_init = star * (1.0 + _SEED_SLACK)
    mc = None
    if min_children is not None:
        mc = np.ascontiguousarray(min_children, dtype=np.int8)

    total = rooted_tree_count(m)
    scan = backend.scan_range
    if workers <= 1 or total < 4 * workers:
        return scan(dist_p, coeff, root, 0, total, mc, p, best_init)

    # over-shard for load balance: early abandon makes shard costs uneven
    nshards = min(total, workers * 8)
    bounds = [shard_bounds(m, s, nshards) for s in range(nshards)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(
            lambda se: scan(dist_p, coeff, root, se[0], se[1], mc, p, best_init),
            bounds))
    scanned = sum(part[2] for part in parts)
    found = [(part[0], part[1]) for part in parts if part[1] >= 0]
    if not found:
        return best_init, -1, scanned
    best, best_rank = min(found)
    return best, best_rank, scanned


def free_norm(space: PMetricSpace, a, p: float, *, workers=None,
              tree_limit: int = DEFAULT_TREE_LIMIT, backend=None) -> NormResult:
    """Exact norm of the molecule, minimised over every rooted tree.

    Deterministic for any worker count: shards keep local bests and merge by
    (p-power, rank), so the witness is the first minimiser in enumeration
    order.
    """
    _check_exponent_pair(p, space.q)
    m = space.m
    _check_capacity(m, tree_limit)
    vec = _coefficient_vector(a, m, space.base_index)
    all_vertices = tuple(range(m))
    if not np.any(vec):
        return NormResult(0.0, 0.0, _first_tree(m, space.base_index), 0, all_vertices)

    kern = _kernel.get_backend(backend)
    best, rank, scanned = _scan_min(space, vec, p, resolve_workers(workers), kern)
    if rank < 0:  # the star seed is never below the true minimum
        raise RuntimeError("scan found no witness; this is a bug")
    witness = pruefer_decode(_rank_to_sequence(rank, m), root=space.base_index) \
        if m > 2 else _first_tree(m, space.base_index)
    return NormResult(best ** (1.0 / p), best, witness, scanned, all_vertices)


def star_upper_bound(space: PMetricSpace, a, p: float) -> float:
    """Value of the star tree: (sum |a_x d(x, 0)|^p)^(1/p); always >= the norm."""
    _check_exponent_pair(p, space.q)
    vec = _coefficient_vector(a, space.m, space.base_index)
    power = float(np.sum(np.abs(vec) ** p * space.dist[:, space.base_index] ** p))
    return power ** (1.0 / p)


def free_norm_pruned(space: PMetricSpace, a, p: float, *, workers=None,
                     tree_limit: int = DEFAULT_TREE_LIMIT, backend=None) -> NormResult:
    """Same value as :func:`free_norm`, exploiting zero-coefficient points.

    Points z with a_z = 0 are handled by the recursive identity: the norm is
    the minimum of (i) the norm with z dropped from the space and (ii) the
    values of trees in which every zero point keeps at least two children.
    When the zero set is larger than |support| - 1, the norm is attained
    after dropping down to exactly |support| - 1 zero points, so only those
    subsets are searched. Intended as an oracle-checked alternative, not the
    default engine.
    """
    _check_exponent_pair(p, space.q)
    _check_capacity(space.m, tree_limit)
    base = space.base_index
    vec = _coefficient_vector(a, space.m, base)
    kern = _kernel.get_backend(backend)
    nworkers = resolve_workers(workers)
    support = tuple(v for v in range(space.m) if vec[v] != 0.0)
    memo = {}

    def rec(vertices):
        if vertices in memo:
            return memo[vertices]
        zeros = tuple(v for v in vertices if v != base and vec[v] == 0.0)
        if not support:
            sub = space.restrict(vertices)
            res = NormResult(0.0, 0.0, _first_tree(sub.m, sub.base_index), 0, vertices)
        elif len(zeros) > len(support) - 1:
            res = None
            for extra in combinations(zeros, len(support) - 1):
                cand = rec(tuple(sorted(set(support) | {base} | set(extra))))
                if res is None or cand.p_power < res.p_power:
                    res = cand
        else:
            sub = space.restrict(vertices)
            local = {old: new for new, old in enumerate(vertices)}
            subvec = vec[list(vertices)]
            if not zeros:
                best, rank, scanned = _scan_min(sub, subvec, p, nworkers, kern)
                witness = pruefer_decode(_rank_to_sequence(rank, sub.m),
                                         root=sub.base_index) if sub.m > 2 \
                    else _first_tree(sub.m, sub.base_index)
                res = NormResult(best ** (1.0 / p), best, witness, scanned, vertices)
            else:
                res = None
                evaluated = 0
                for z in zeros:
                    cand = rec(tuple(v for v in vertices if v != z))
                    evaluated += cand.trees_evaluated
                    if res is None or cand.p_power < res.p_power:
                        res = cand
                mc = np.zeros(sub.m, dtype=np.int8)
                for z in zeros:
                    mc[local[z]] = 2
                best, rank, scanned = _scan_min(sub, subvec, p, nworkers, kern,
                                                min_children=mc,
                                                best_init=res.p_power)
                evaluated += scanned
                if rank >= 0:
                    witness = pruefer_decode(_rank_to_sequence(rank, sub.m),
                                             root=sub.base_index)
                    res = NormResult(best ** (1.0 / p), best, witness,
                                     evaluated, vertices)
                else:
                    res = NormResult(res.value, res.p_power, res.witness,
                                     evaluated, res.witness_vertices)
        memo[vertices] = res
        return res

    return rec(tuple(range(space.m)))


def three_point_norm(d_x: float, d_y: float, d_xy: float,
                     a: float, b: float, p: float) -> float:
    """Closed-form norm of a*delta(x) + b*delta(y) on the space {0, x, y}.

    The three rooted trees on three vertices give

        min{|a d_x|^p + |b d_y|^p, |(a+b) d_x|^p + |b d_xy|^p,
            |(a+b) d_y|^p + |a d_xy|^p}

    as the p-th power of the norm.
    """
    if not (0.0 < p <= 1.0):
        raise ExponentError(f"exponent p = {p} must lie in (0, 1]")
    mat = np.array([[0.0, d_x, d_y], [d_x, 0.0, d_xy], [d_y, d_xy, 0.0]])
    report = validate_p_metric(mat, p)
    if not report.valid:
        raise InputError("distances do not form a valid p-metric triangle: "
                         + "; ".join(report.issues()))
    power = min(
        abs(a * d_x) ** p + abs(b * d_y) ** p,
        abs((a + b) * d_x) ** p + abs(b * d_xy) ** p,
        abs((a + b) * d_y) ** p + abs(a * d_xy) ** p,
    )
    return power ** (1.0 / p)


@dataclass(frozen=True, eq=False)
class PositiveNormResult:
    """Closed-form check for nonnegative molecules.

    `condition_holds` states whether every non-base point attains its
    distance to the rest of the space at the base point; exactly then the
    norm's p-th power collapses to `closed_form` = sum (a_x d(x,0))^p for
    every nonnegative molecule (for p = 1 it always does). `norm` is the
    independently computed exact norm for cross-checking.
    """

    condition_holds: bool
    closed_form: float
    norm: NormResult


def positive_condition_and_norm(space: PMetricSpace, a, p: float, *,
                                tol: float = DEFAULT_TOL, workers=None,
                                tree_limit: int = DEFAULT_TREE_LIMIT,
                                backend=None) -> PositiveNormResult:
    """Evaluate the nonnegative-coefficient closed form and the exact norm."""
    vec = _coefficient_vector(a, space.m, space.base_index)
    if np.any(vec < 0.0):
        raise InputError("coefficients must be nonnegative")
    base = space.base_index
    dist = space.dist
    holds = True
    for x in range(space.m):
        if x == base:
            continue
        others = [dist[x, y] for y in range(space.m) if y not in (x, base)]
        if others and dist[x, base] > min(others) * (1.0 + tol):
            holds = False
            break
    closed = float(np.sum((vec * dist[:, base]) ** p))
    result = free_norm(space, a, p, workers=workers, tree_limit=tree_limit,
                       backend=backend)
    return PositiveNormResult(holds, closed, result)
