"""Embedding constants of subspaces: certified lower bounds and caps.

For a subspace N of M (same base point), the embedding constant is the
supremum of ||mu||_N / ||mu||_M over molecules supported on N. The norm
ratio is scale invariant, attained, and always >= 1, but maximising it is a
nonconvex problem for p < 1, so the estimator below reports certified lower
bounds only: any evaluated molecule certifies its own ratio. Closed-form
upper caps (retract bounds) and the explicit extremal constructions are
implemented alongside for cross-checking.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations, product

import numpy as np

from .exceptions import ExponentError, InputError
from .norm import NormResult, free_norm, free_norm_pruned
from .space import (
    DEFAULT_TOL,
    Molecule,
    PMetricSpace,
    WeightedRootedTree,
    path_p_metric,
    validate_p_metric,
)
from .trees import DEFAULT_TREE_LIMIT

_STEP0 = 0.25  # initial pattern-search step on the sup-norm sphere


@dataclass(frozen=True, eq=False)
class AmenEstimate:
    """Best found norm ratio with witnesses and effort counters.

    `value` is a certified lower bound for the embedding constant of the
    subspace. `witness_vertices_m` names the superspace points the M-side
    witness tree lives on (the norm over M is attained on such a subset when
    M carries more extra points than the subspace can use).
    """

    value: float
    witness_coefficients: Molecule
    witness_tree_N: object
    witness_tree_M: object
    witness_vertices_m: tuple
    starts: int
    evaluations: int
    converged: bool


def _norm_over_superspace(spaceM: PMetricSpace, a: Molecule, p: float, *,
                          workers=None, tree_limit=DEFAULT_TREE_LIMIT,
                          backend=None) -> NormResult:
    """Norm over M of a molecule with zero coefficients off its support.

    Falls back to the zero-point reduction when M itself is too large to
    scan; the reduction is exact, not an approximation.
    """
    if spaceM.m <= tree_limit:
        return free_norm(spaceM, a, p, workers=workers, tree_limit=tree_limit,
                         backend=backend)
    return free_norm_pruned(spaceM, a, p, workers=workers,
                            tree_limit=tree_limit, backend=backend)


def embedding_ratio(spaceM: PMetricSpace, subset, a: Molecule, p: float, *,
                    workers=None, tree_limit=DEFAULT_TREE_LIMIT,
                    backend=None) -> float:
    """||a||_N / ||a||_M for N = M restricted to `subset`; scale invariant."""
    subset = tuple(sorted(set(int(i) for i in subset)))
    if spaceM.base_index not in subset:
        raise InputError("subset must contain the base point")
    if not isinstance(a, Molecule):
        raise InputError("coefficients must be given as a Molecule")
    if not a.support():
        raise InputError("the zero molecule has no ratio")
    if any(v not in subset for v in a.support()):
        raise InputError("molecule must be supported on the subset")
    spaceN = spaceM.restrict(subset)
    aN = a.remapped(spaceM.index_map(subset))
    resN = free_norm(spaceN, aN, p, workers=workers, tree_limit=tree_limit,
                     backend=backend)
    resM = _norm_over_superspace(spaceM, a, p, workers=workers,
                                 tree_limit=tree_limit, backend=backend)
    return resN.value / resM.value


def _normalized(vec):
    top = max(abs(v) for v in vec)
    if top == 0.0:
        return None
    return tuple(v / top for v in vec)


def amen_estimate(spaceM: PMetricSpace, subset, p: float, starts: int = 8,
                  seed: int = 0, tol: float = 1e-6, *, grid: bool = False,
                  workers=None, tree_limit: int = DEFAULT_TREE_LIMIT,
                  backend=None) -> AmenEstimate:
    """Maximise the norm ratio over coefficient directions.

    Multi-start coordinate pattern search on the unit sup-norm sphere of the
    coefficient space (the ratio is scale invariant and |.|^p is kinked at
    sign changes, so the search is derivative free). Canonical probes (the
    all-ones direction, which covers the extremal star and two-leaf
    constructions, and all unit vectors) run before the random starts, so
    the result is at least 1 and at least every probe's ratio. When M has
    more than |subset| - 2 extra points, the norm over M is attained on
    subsets carrying exactly that many extras, and each such subset is
    optimised separately. `grid=True` (dimension <= 3 only) sweeps the
    sphere at resolution 1e-2 with local refinement instead of random
    restarts. Deterministic for a fixed seed.
    """
    subset = tuple(sorted(set(int(i) for i in subset)))
    base = spaceM.base_index
    if base not in subset:
        raise InputError("subset must contain the base point")
    if len(subset) < 2:
        raise InputError("subset needs at least one non-base point")
    if starts < 1:
        raise InputError("starts must be >= 1")
    if p > spaceM.q + 1e-12 or p <= 0.0:
        raise ExponentError(f"p = {p} exceeds the space's exponent q = {spaceM.q}")

    non_base = tuple(v for v in subset if v != base)
    dim = len(non_base)
    if grid and dim > 3:
        raise InputError("grid mode is limited to at most 3 coefficient dimensions")

    spaceN = spaceM.restrict(subset)
    mapN = spaceM.index_map(subset)
    extras = tuple(v for v in range(spaceM.m) if v not in subset)
    reduction = len(extras) > len(subset) - 2
    if reduction:
        supersets = [tuple(sorted(subset + combo))
                     for combo in combinations(extras, len(subset) - 2)]
    else:
        supersets = [tuple(range(spaceM.m))]

    state = {"evals": 0, "best": None}  # best: (ratio, x, resN, resF, fvertices)

    def make_ratio(fvertices):
        spaceF = spaceM.restrict(fvertices) if len(fvertices) < spaceM.m else spaceM
        mapF = spaceM.index_map(fvertices)
        cache = {}

        def ratio(x):
            got = cache.get(x)
            if got is not None:
                return got
            molN = Molecule({mapN[v]: c for v, c in zip(non_base, x) if c != 0.0})
            molF = Molecule({mapF[v]: c for v, c in zip(non_base, x) if c != 0.0})
            resN = free_norm(spaceN, molN, p, workers=workers,
                             tree_limit=tree_limit, backend=backend)
            resF = free_norm(spaceF, molF, p, workers=workers,
                             tree_limit=tree_limit, backend=backend)
            value = resN.value / resF.value
            state["evals"] += 1
            best = state["best"]
            if best is None or value > best[0]:
                state["best"] = (value, x, resN, resF, fvertices)
            cache[x] = value
            return value

        return ratio

    def pattern_search(ratio, x0, step0):
        x = _normalized(x0)
        if x is None:
            return
        fx = ratio(x)
        step = step0
        guard = 0
        while step >= tol and guard < 100000:
            improved = False
            for i in range(dim):
                for sgn in (1.0, -1.0):
                    y = list(x)
                    y[i] += sgn * step
                    y = _normalized(y)
                    if y is None or y == x:
                        continue
                    fy = ratio(y)
                    guard += 1
                    if fy > fx:
                        x, fx = y, fy
                        improved = True
            if not improved:
                step *= 0.5

    history = []
    total_starts = 0
    for f_idx, fvertices in enumerate(supersets):
        ratio = make_ratio(fvertices)
        ratio((1.0,) * dim)
        for i in range(dim):
            probe = [0.0] * dim
            probe[i] = 1.0
            ratio(tuple(probe))
            probe[i] = -1.0
            ratio(tuple(probe))
        if grid:
            hundredths = [round(t, 2) for t in np.arange(-1.0, 1.0 + 1e-9, 0.01)]
            for face in range(dim):
                for rest in product(hundredths, repeat=dim - 1):
                    x = rest[:face] + (1.0,) + rest[face:]
                    ratio(x)
            best = state["best"]
            pattern_search(ratio, best[1], 0.01)
        else:
            rng = np.random.default_rng([seed, f_idx])
            for _ in range(starts):
                x0 = tuple(rng.uniform(-1.0, 1.0, dim))
                while max(abs(v) for v in x0) == 0.0:
                    x0 = tuple(rng.uniform(-1.0, 1.0, dim))
                pattern_search(ratio, x0, _STEP0)
                total_starts += 1
                history.append(state["best"][0])

    best_ratio, best_x, best_resN, best_resF, best_f = state["best"]

    # re-certify the witness against the full superspace
    if reduction:
        witness = Molecule({v: c for v, c in zip(non_base, best_x) if c != 0.0})
        resM = _norm_over_superspace(spaceM, witness, p, workers=workers,
                                     tree_limit=tree_limit, backend=backend)
        value = best_resN.value / resM.value
        tree_m, vertices_m = resM.witness, resM.witness_vertices
        value = max(value, best_ratio)
    else:
        value, tree_m, vertices_m = best_ratio, best_resF.witness, best_f

    if grid or len(history) < 2:
        converged = bool(grid)
    else:
        cut = max(1, (2 * len(history)) // 3)
        converged = history[-1] - history[cut - 1] <= tol * max(1.0, history[-1])

    return AmenEstimate(
        value=value,
        witness_coefficients=Molecule({v: c for v, c in zip(non_base, best_x)}),
        witness_tree_N=best_resN.witness,
        witness_tree_M=tree_m,
        witness_vertices_m=tuple(vertices_m),
        starts=total_starts,
        evaluations=state["evals"],
        converged=converged,
    )


def rebase_molecule(a: Molecule, old_base: int, new_base: int) -> Molecule:
    """Coefficients of the same element after moving the base point.

    Under the isometry that re-expresses point evaluations relative to a new
    base point, the new-base coefficient disappears and the old base picks
    up minus the total coefficient sum; the norm is unchanged.
    """
    out = {v: c for v, c in a.coefficients.items() if v != new_base}
    out[old_base] = -a.total()
    return Molecule(out)


def isometric_3pt_test(d_x: float, d_y: float, d_xy: float, p: float,
                       tol: float = DEFAULT_TOL) -> bool:
    """True iff one p-triangle inequality among the three distances is tight.

    Exactly then the three-point space embeds isometrically into every
    superspace.
    """
    mat = np.array([[0.0, d_x, d_y], [d_x, 0.0, d_xy], [d_y, d_xy, 0.0]])
    if not (0.0 < p <= 1.0):
        raise ExponentError(f"exponent p = {p} must lie in (0, 1]")
    report = validate_p_metric(mat, p, tol)
    if not report.valid:
        raise InputError("distances do not form a valid p-metric triangle")
    ax, ay, axy = d_x ** p, d_y ** p, d_xy ** p
    for lhs, rhs in ((ax + ay, axy), (ax + axy, ay), (ay + axy, ax)):
        if abs(lhs - rhs) <= tol * max(lhs, rhs):
            return True
    return False


def optimal_extension_3pt(d_x: float, d_y: float, d_xy: float, p: float,
                          tol: float = DEFAULT_TOL):
    """Norm-minimising one-point extension of a strict 3-point space.

    Requires every p-triangle inequality strict (otherwise the construction
    degenerates). Returns the extended 4-point space (new point z placed so
    that d'(v, z)^p = (d^p(u,v) + d^p(w,v) - d^p(u,w)) / 2 for each vertex v
    against the other two u, w) together with the closed-form norm of
    a*delta(x) + b*delta(y) in the extension:

        value^p = d_x^p (|a+b|^p + |a|^p - |b|^p) / 2
                + d_y^p (|a+b|^p + |b|^p - |a|^p) / 2
                + d_xy^p (|a|^p + |b|^p - |a+b|^p) / 2.
    """
    if not (0.0 < p < 1.0):
        raise ExponentError("the extension construction needs 0 < p < 1")
    if isometric_3pt_test(d_x, d_y, d_xy, p, tol):
        raise InputError("a p-triangle equality holds; the extension degenerates")
    px, py, pxy = d_x ** p, d_y ** p, d_xy ** p
    z0 = ((px + py - pxy) / 2.0) ** (1.0 / p)
    zx = ((px + pxy - py) / 2.0) ** (1.0 / p)
    zy = ((py + pxy - px) / 2.0) ** (1.0 / p)
    dist = np.array([
        [0.0, d_x, d_y, z0],
        [d_x, 0.0, d_xy, zx],
        [d_y, d_xy, 0.0, zy],
        [z0, zx, zy, 0.0],
    ])
    space = PMetricSpace(("0", "x", "y", "z"), 0, p, dist)

    def extension_norm(a: float, b: float) -> float:
        pa, pb, pab = abs(a) ** p, abs(b) ** p, abs(a + b) ** p
        power = px * (pab + pa - pb) / 2.0 + py * (pab + pb - pa) / 2.0 \
            + pxy * (pa + pb - pab) / 2.0
        return power ** (1.0 / p)

    return space, extension_norm


@dataclass(frozen=True, eq=False)
class OneExtraPointBound:
    """Two-sided bound for subspaces missing one point, with its witness."""

    lower: float
    upper: float
    n: int
    p: float
    q: float
    tree: WeightedRootedTree
    space: PMetricSpace
    subset: tuple
    molecule: Molecule


def bound_one_extra_point(n: int, p: float, q: float) -> OneExtraPointBound:
    """Bounds 2^(1/q) / (1 + n^(p-1))^(1/p) <= sup <= 2^(1/q) for n leaves.

    The witness is the unit-weight star: hub z under the root, n leaves under
    the hub, subspace = leaves plus root, coefficients n^(-1/p). Its norm
    ratio equals max(lower, 1) exactly: the superspace norm is the smaller of
    the subspace norm and the hub-tree value, so for p < q the formula can
    fall below 1 while the realised ratio floors there. The upper bound is
    the one-extra-point retract cap.
    """
    if n < 2:
        raise InputError("need n >= 2 leaves")
    if not (0.0 < p <= q <= 1.0):
        raise InputError(f"need 0 < p <= q <= 1, got p = {p}, q = {q}")
    labels = ("0", "z") + tuple(f"x{i}" for i in range(1, n + 1))
    parent = (-1, 0) + (1,) * n
    weight = (0.0, 1.0) + (1.0,) * n
    tree = WeightedRootedTree(labels, 0, parent, weight)
    space = path_p_metric(tree, q)
    subset = (0,) + tuple(range(2, n + 2))
    molecule = Molecule({i: n ** (-1.0 / p) for i in range(2, n + 2)})
    lower = 2.0 ** (1.0 / q) / (1.0 + n ** (p - 1.0)) ** (1.0 / p)
    return OneExtraPointBound(lower, 2.0 ** (1.0 / q), n, p, q,
                              tree, space, subset, molecule)


@dataclass(frozen=True, eq=False)
class TwoPointBound:
    """Lower bound for two-point subspaces from the weighted two-leaf tree.

    `p_power` is the displayed inner expression (the bound on the ratio's
    p-th power) and `value` its 1/p root; both are reported because the two
    normalisations circulate. `realized_ratio` replays the witness through
    the norm engine; it equals max(value, 1).
    """

    value: float
    p_power: float
    hub_weight: float
    realized_ratio: float
    p: float
    q: float
    tree: WeightedRootedTree
    space: PMetricSpace
    subset: tuple
    molecule: Molecule


def bound_two_points(p: float, q: float, *, workers=None,
                     backend=None) -> TwoPointBound:
    """Evaluate the extremal two-leaf weighted tree and replay its witness.

    The tree hangs leaves x, y on a hub z with unit weights and gives the hub
    edge the weight (2 / (2 - 2^p)^(q/p) - 1)^(1/q); coefficients (1, 1) on
    the leaves then realise the bound

        ratio^p = 2 * 2^(p/q) / (2^p (2 - (2-2^p)^(q/p))^(p/q) + 2 (2-2^p)).
    """
    if not (0.0 < p <= q <= 1.0) or p >= 1.0:
        raise InputError(f"need 0 < p <= q <= 1 with p < 1, got p = {p}, q = {q}")
    hub = (2.0 / (2.0 - 2.0 ** p) ** (q / p) - 1.0) ** (1.0 / q)
    tree = WeightedRootedTree(("0", "z", "x", "y"), 0, (-1, 0, 1, 1),
                              (0.0, hub, 1.0, 1.0))
    space = path_p_metric(tree, q)
    subset = (0, 2, 3)
    molecule = Molecule({2: 1.0, 3: 1.0})
    p_power = 2.0 * 2.0 ** (p / q) / (
        2.0 ** p * (2.0 - (2.0 - 2.0 ** p) ** (q / p)) ** (p / q)
        + 2.0 * (2.0 - 2.0 ** p))
    value = p_power ** (1.0 / p)
    realized = embedding_ratio(space, subset, molecule, p, workers=workers,
                               backend=backend)
    expected = max(value, 1.0)
    if abs(realized - expected) > 1e-8 * expected:
        raise RuntimeError(
            f"witness replay gave {realized}, expected {expected}; this is a bug")
    return TwoPointBound(value, p_power, hub, realized, p, q,
                         tree, space, subset, molecule)


@dataclass(frozen=True, eq=False)
class RetractBound:
    """Caps (k - n + 1)^(1/q) for fixed sizes and n^(1/q) overall."""

    pair_cap: float
    absolute_cap: float


def retract_upper_bound(n: int, k: int, q: float) -> RetractBound:
    """Upper caps from Lipschitz retractions onto the subspace.

    A subspace missing k - n points is a (k - n + 1)^(1/q)-Lipschitz retract
    of the superspace, and no subspace with n non-base points ever exceeds
    n^(1/q).
    """
    if not (2 <= n < k):
        raise InputError(f"need 2 <= n < k, got n = {n}, k = {k}")
    if not (0.0 < q <= 1.0):
        raise InputError(f"exponent q = {q} must lie in (0, 1]")
    return RetractBound((k - n + 1) ** (1.0 / q), n ** (1.0 / q))


def metric_amen_bound(p: float) -> float:
    """Cap 7 * 12^(1/p - 1) valid for every subspace of a metric space."""
    if not (0.0 < p < 1.0):
        raise InputError(f"the metric-superspace cap needs 0 < p < 1, got {p}")
    return 7.0 * 12.0 ** (1.0 / p - 1.0)
