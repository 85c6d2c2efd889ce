"""Randomised search campaigns for large embedding-ratio instances.

Two instance generators are supported: `random_space` repairs random
symmetric matrices into q-metric spaces via the shortest-path closure, and
`weighted_tree` samples weighted rooted trees and takes the subspace of
their leaves, which is where the worst case provably lives for sizes
n <= k <= 2n - 1. Campaign maxima are certified lower bounds only (every
persisted ratio replays through the norm engine); whether the sampling
converges to the true supremum is unknown, so findings above 2^(1/q) are
flagged EXCEEDS and persisted in full, never treated as errors.

Instance i derives its RNG from (campaign seed, i), so results are
independent of the worker-pool size; the CSV is append-only and byte-stable
across reruns except for the elapsed-time column.
"""

from __future__ import annotations

import csv
import hashlib
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from . import __version__
from .amenability import (
    amen_estimate,
    bound_one_extra_point,
    bound_two_points,
    metric_amen_bound,
    retract_upper_bound,
)
from .exceptions import InputError, PersistenceError
from .norm import resolve_workers
from .space import PMetricSpace, WeightedRootedTree, p_metric_closure, path_p_metric
from .trees import _decode_edges

#: distances and weights are sampled log-uniformly over two decades
_SCALE_LOW, _SCALE_HIGH = 0.1, 10.0

CSV_COLUMNS = ("instance_id", "seed", "mode", "n", "k", "p", "q", "ratio",
               "ratio_p", "witness_coeffs", "witness_digest", "elapsed_ms")


@dataclass(frozen=True)
class SearchConfig:
    """Campaign description; everything needed to reproduce a run."""

    mode: str
    n: int
    k: int
    p: float
    q: float
    iterations: int
    seed: int
    out_path: str
    starts_per_instance: int = 4
    opt_tol: float = 1e-3

    def __post_init__(self):
        if self.mode not in ("random_space", "weighted_tree"):
            raise InputError(f"unknown mode {self.mode!r}")
        if self.n < 2:
            raise InputError("need n >= 2 non-base subspace points")
        if self.k < self.n:
            raise InputError("need k >= n")
        if self.mode == "weighted_tree" and self.k > 2 * self.n - 1:
            raise InputError(
                f"weighted-tree search needs n <= k <= 2n-1, got n={self.n}, k={self.k}")
        if not (0.0 < self.p <= self.q <= 1.0):
            raise InputError(f"need 0 < p <= q <= 1, got p={self.p}, q={self.q}")
        if self.iterations < 1:
            raise InputError("need at least one iteration")
        if self.starts_per_instance < 1:
            raise InputError("need at least one optimizer start per instance")


@dataclass(frozen=True)
class SearchRecord:
    instance_id: int
    seed: int
    mode: str
    n: int
    k: int
    p: float
    q: float
    ratio: float
    ratio_p: float
    witness_coeffs: tuple
    witness_digest: str
    elapsed_ms: float


@dataclass(frozen=True)
class CampaignSummary:
    config: SearchConfig
    records: int
    max_ratio: float
    best: SearchRecord
    threshold: float
    exceeds_threshold: bool
    cap_violations: int
    metric_cap: float | None
    csv_path: str
    manifest_path: str


def random_p_metric(m: int, q: float, rng) -> PMetricSpace:
    """Random q-metric space: log-uniform distances repaired by the closure."""
    if m < 2:
        raise InputError("need at least two points")
    raw = np.exp(rng.uniform(np.log(_SCALE_LOW), np.log(_SCALE_HIGH), size=(m, m)))
    raw = np.triu(raw, 1)
    raw = raw + raw.T
    dist = p_metric_closure(raw, q)
    labels = tuple(f"p{i}" for i in range(m))
    return PMetricSpace(labels, 0, q, dist, validate=False)


def random_weighted_tree(k: int, n: int, rng) -> WeightedRootedTree:
    """Uniform tree on k non-root vertices conditioned on exactly n leaves.

    Rejection-samples Pruefer sequences until the non-root leaf count hits n
    (a vertex is a leaf exactly when it is absent from the sequence and is
    not the root). n = k forces the star at the root, which is returned
    directly. Weights are log-uniform.
    """
    if not (2 <= n <= k <= 2 * n - 1):
        raise InputError(f"need 2 <= n <= k <= 2n-1, got n={n}, k={k}")
    m = k + 1
    labels = ("0",) + tuple(f"v{i}" for i in range(1, m))
    if n == k:
        parent = (-1,) + (0,) * k
        seq = None
    else:
        for _ in range(200000):
            cand = rng.integers(0, m, size=m - 2)
            present = np.zeros(m, dtype=bool)
            present[cand] = True
            if m - 1 - int(np.count_nonzero(present[1:])) == n:
                seq = [int(x) for x in cand]
                break
        else:
            raise RuntimeError(f"leaf-count rejection did not hit n={n}, k={k}")
        adj = [[] for _ in range(m)]
        for u, v in _decode_edges(seq, m):
            adj[u].append(v)
            adj[v].append(u)
        parent = [-1] * m
        stack = [0]
        seen = {0}
        while stack:
            x = stack.pop()
            for y in adj[x]:
                if y not in seen:
                    seen.add(y)
                    parent[y] = x
                    stack.append(y)
        parent = tuple(parent)
    weights = np.exp(rng.uniform(np.log(_SCALE_LOW), np.log(_SCALE_HIGH), size=m))
    weight = tuple(0.0 if v == 0 else float(weights[v]) for v in range(m))
    return WeightedRootedTree(labels, 0, parent, weight)


def _digest(payload) -> str:
    canon = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def campaign_instance(config: SearchConfig, instance_id: int):
    """(space, subset, n, k, digest) of instance `instance_id`.

    Instances 0 and 1 are canonical probes (the unit star and, for n = 2,
    the extremal two-leaf tree) so every campaign reproduces the known
    lower bounds; later instances are random. Deterministic given the
    campaign seed.
    """
    if instance_id == 0:
        probe = bound_one_extra_point(config.n, config.p, config.q)
        digest = _digest({"probe": "one_extra_star", "n": config.n, "q": config.q})
        return probe.space, probe.subset, config.n, config.n + 1, digest
    if instance_id == 1 and config.n == 2 and config.p < 1.0:
        probe = bound_two_points(config.p, config.q)
        digest = _digest({"probe": "two_leaf_tree", "p": config.p, "q": config.q})
        return probe.space, probe.subset, 2, 3, digest

    rng = np.random.default_rng([config.seed, instance_id])
    if config.mode == "weighted_tree":
        tree = random_weighted_tree(config.k, config.n, rng)
        space = path_p_metric(tree, config.q)
        leaves = tree.leaves()
        subset = (tree.root_index,) + leaves
        digest = _digest({"parent": list(tree.parent), "weight": list(tree.weight),
                          "q": config.q})
        return space, subset, len(leaves), config.k, digest
    space = random_p_metric(config.k + 1, config.q, rng)
    others = rng.permutation(np.arange(1, config.k + 1))[:config.n]
    subset = (0,) + tuple(int(x) for x in sorted(others))
    digest = _digest({"dist": space.dist.tolist(), "q": config.q,
                      "subset": list(subset)})
    return space, subset, config.n, config.k, digest


def _run_instance(config: SearchConfig, instance_id: int) -> SearchRecord:
    t0 = time.perf_counter()
    space, subset, n, k, digest = campaign_instance(config, instance_id)
    inst_seed = (config.seed * 1000003 + instance_id) % (2 ** 31)
    est = amen_estimate(space, subset, config.p,
                        starts=config.starts_per_instance, seed=inst_seed,
                        tol=config.opt_tol, workers=1)
    elapsed = (time.perf_counter() - t0) * 1000.0
    base = space.base_index
    coeffs = tuple(est.witness_coefficients.coefficients.get(v, 0.0)
                   for v in subset if v != base)
    return SearchRecord(instance_id, inst_seed, config.mode, n, k,
                        config.p, config.q, est.value, est.value ** config.p,
                        coeffs, digest, elapsed)


def search_campaign(config: SearchConfig, workers=None) -> CampaignSummary:
    """Run every instance, persist records, and summarise the maximum.

    The CSV at `config.out_path` gets one row per instance in id order with
    a sidecar manifest `<out_path>.manifest.json`. Instances run on a worker
    pool capped by FREEP_THREADS (or the explicit argument); the inner norm
    scans then stay single-threaded so the budget is respected.
    """
    nworkers = resolve_workers(workers)
    manifest_path = config.out_path + ".manifest.json"
    started = time.strftime("%Y-%m-%dT%H:%M:%S")
    try:
        with open(manifest_path, "w", encoding="utf-8") as fh:
            json.dump({"config": asdict(config), "tool_version": __version__,
                       "started_at": started, "ended_at": None}, fh, indent=2)
    except OSError as exc:
        raise PersistenceError(f"cannot write manifest {manifest_path}: {exc}") from exc

    best = None
    cap_violations = 0
    threshold = 2.0 ** (1.0 / config.q)
    metric_cap = metric_amen_bound(config.p) if config.q == 1.0 and config.p < 1.0 else None
    written = 0
    try:
        with open(config.out_path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_COLUMNS)
            ids = range(config.iterations)
            if nworkers > 1:
                pool = ThreadPoolExecutor(max_workers=nworkers)
                results = pool.map(lambda i: _run_instance(config, i), ids)
            else:
                pool = None
                results = map(lambda i: _run_instance(config, i), ids)
            try:
                for rec in results:
                    writer.writerow([
                        rec.instance_id, rec.seed, rec.mode, rec.n, rec.k,
                        repr(rec.p), repr(rec.q), repr(rec.ratio), repr(rec.ratio_p),
                        ";".join(repr(c) for c in rec.witness_coeffs),
                        rec.witness_digest, f"{rec.elapsed_ms:.3f}",
                    ])
                    fh.flush()
                    written += 1
                    cap = retract_upper_bound(rec.n, rec.k, rec.q).pair_cap
                    if rec.ratio > cap + 1e-9:
                        cap_violations += 1
                    if best is None or rec.ratio > best.ratio:
                        best = rec
            finally:
                if pool is not None:
                    pool.shutdown()
    except OSError as exc:
        raise PersistenceError(
            f"writing {config.out_path} failed after {written} records: {exc}") from exc

    try:
        with open(manifest_path, "w", encoding="utf-8") as fh:
            json.dump({"config": asdict(config), "tool_version": __version__,
                       "started_at": started,
                       "ended_at": time.strftime("%Y-%m-%dT%H:%M:%S")}, fh, indent=2)
    except OSError as exc:
        raise PersistenceError(f"cannot finalise manifest: {exc}") from exc

    return CampaignSummary(
        config=config,
        records=written,
        max_ratio=best.ratio,
        best=best,
        threshold=threshold,
        exceeds_threshold=best.ratio > threshold + 1e-12,
        cap_violations=cap_violations,
        metric_cap=metric_cap,
        csv_path=config.out_path,
        manifest_path=manifest_path,
    )
