"""Finite pointed p-metric spaces, weighted rooted trees, molecules.

A distance d on a finite set is a valid q-metric (0 < q <= 1) when d^q
satisfies the triangle inequality; every q-metric is then also a p-metric
for any p <= q. Distances are stored in original units and q-th powers are
taken on demand, so a single matrix serves every admissible exponent.

All types are immutable after construction and safe to share across threads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .exceptions import InputError, MetricValidationError

#: relative tolerance used for triangle-inequality and equality checks
DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of a q-metric validity check."""

    valid: bool
    symmetry_violations: tuple = ()
    diagonal_violations: tuple = ()
    positivity_violations: tuple = ()
    triangle_violations: tuple = ()

    def issues(self):
        out = []
        for i, j in self.symmetry_violations:
            out.append(f"dist[{i}][{j}] != dist[{j}][{i}]")
        for i in self.diagonal_violations:
            out.append(f"dist[{i}][{i}] != 0")
        for i, j in self.positivity_violations:
            out.append(f"dist[{i}][{j}] <= 0 for distinct points")
        for i, j, k in self.triangle_violations:
            out.append(f"d({i},{k})^q > d({i},{j})^q + d({j},{k})^q")
        return out


def _as_matrix(dist) -> np.ndarray:
    mat = np.asarray(dist, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise InputError(f"distance matrix must be square, got shape {mat.shape}")
    if mat.shape[0] < 2:
        raise InputError("need at least two points")
    if not np.all(np.isfinite(mat)):
        raise InputError("distance matrix contains non-finite entries")
    if np.any(mat < 0):
        raise InputError("distance matrix contains negative entries")
    return mat


def _check_exponent(q: float):
    if not (0.0 < q <= 1.0):
        raise InputError(f"exponent must lie in (0, 1], got {q}")


def validate_p_metric(dist, q: float, tol: float = DEFAULT_TOL) -> ValidationReport:
    """Check symmetry, zero diagonal, positivity and the q-triangle inequality.

    The triangle check is relative: (i, j, k) is reported when
    d(i,k)^q * (1 - tol) > d(i,j)^q + d(j,k)^q.  Every violating triple is
    listed, with i < k to avoid mirror duplicates.
    """
    mat = _as_matrix(dist)
    _check_exponent(q)
    m = mat.shape[0]

    sym = [(i, j) for i in range(m) for j in range(i + 1, m)
           if not np.isclose(mat[i, j], mat[j, i], rtol=tol, atol=0.0)]
    diag = [i for i in range(m) if mat[i, i] != 0.0]
    pos = [(i, j) for i in range(m) for j in range(i + 1, m) if mat[i, j] <= 0.0]

    dq = mat ** q
    tri = []
    for i in range(m):
        for k in range(i + 1, m):
            lhs = dq[i, k] * (1.0 - tol)
            for j in range(m):
                if j == i or j == k:
                    continue
                if lhs > dq[i, j] + dq[j, k]:
                    tri.append((i, j, k))

    ok = not (sym or diag or pos or tri)
    return ValidationReport(ok, tuple(sym), tuple(diag), tuple(pos), tuple(tri))


def p_metric_closure(dist, q: float) -> np.ndarray:
    """Largest q-metric pointwise below `dist`.

    Runs all-pairs shortest paths on d^q and takes the q-th root back.
    Entries on no shortcut keep their original bits, so already-valid
    matrices come back identical and the operation is idempotent.
    """
    mat = _as_matrix(dist)
    _check_exponent(q)
    if np.any(mat[~np.eye(mat.shape[0], dtype=bool)] <= 0.0):
        raise InputError("off-diagonal distances must be positive (duplicate points?)")
    if np.any(np.diag(mat) != 0.0):
        raise InputError("diagonal must be zero")
    if not np.allclose(mat, mat.T, rtol=1e-12, atol=0.0):
        raise InputError("matrix must be symmetric")

    dq = mat ** q
    sp = dq.copy()
    for k in range(sp.shape[0]):
        np.minimum(sp, sp[:, k, None] + sp[None, k, :], out=sp)
    # repair only material shortcuts; ulp-level ones would make reruns jitter
    out = np.where(sp < dq * (1.0 - 1e-12), sp ** (1.0 / q), mat)
    np.fill_diagonal(out, 0.0)
    return out


@dataclass(frozen=True, eq=False)
class PMetricSpace:
    """Finite pointed q-metric space with labelled points.

    Point identity is index based; labels exist for I/O only. The distance
    matrix is validated on construction and frozen afterwards.
    """

    labels: tuple
    base_index: int
    q: float
    dist: np.ndarray
    validate: bool = field(default=True, repr=False)

    def __post_init__(self):
        mat = _as_matrix(self.dist).copy()
        mat.setflags(write=False)
        object.__setattr__(self, "dist", mat)
        object.__setattr__(self, "labels", tuple(str(x) for x in self.labels))
        m = mat.shape[0]
        if len(self.labels) != m:
            raise InputError(f"{len(self.labels)} labels for {m} points")
        if len(set(self.labels)) != m:
            raise InputError("labels must be unique")
        if not (0 <= self.base_index < m):
            raise InputError(f"base index {self.base_index} out of range")
        if self.validate:
            report = validate_p_metric(mat, self.q)
            if not report.valid:
                raise MetricValidationError(
                    "not a valid q-metric: " + "; ".join(report.issues()[:5]))

    @property
    def m(self) -> int:
        return self.dist.shape[0]

    def non_base_indices(self):
        return tuple(i for i in range(self.m) if i != self.base_index)

    def label_index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise InputError(f"unknown point label {label!r}") from None

    def with_base(self, base_index: int) -> "PMetricSpace":
        """Same space with a different distinguished point."""
        if not (0 <= base_index < self.m):
            raise InputError(f"base index {base_index} out of range")
        return PMetricSpace(self.labels, base_index, self.q, self.dist, validate=False)

    def restrict(self, keep, base=None) -> "PMetricSpace":
        """Subspace on the (sorted, deduplicated) index set `keep`."""
        keep = sorted(set(int(i) for i in keep))
        if any(i < 0 or i >= self.m for i in keep):
            raise InputError("restriction index out of range")
        if len(keep) < 2:
            raise InputError("restriction needs at least two points")
        base_old = self.base_index if base is None else int(base)
        if base_old not in keep:
            raise InputError("restriction must keep the base point")
        idx = np.array(keep, dtype=int)
        sub = self.dist[np.ix_(idx, idx)]
        return PMetricSpace(
            tuple(self.labels[i] for i in keep),
            keep.index(base_old),
            self.q,
            sub,
            validate=False,
        )

    def index_map(self, keep):
        """Old index -> new index mapping used by :meth:`restrict`."""
        keep = sorted(set(int(i) for i in keep))
        return {old: new for new, old in enumerate(keep)}

    def to_dict(self) -> dict:
        return {
            "q": self.q,
            "points": list(self.labels),
            "base": self.labels[self.base_index],
            "dist": self.dist.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PMetricSpace":
        try:
            labels = [str(x) for x in data["points"]]
            base = str(data["base"])
            q = float(data["q"])
            dist = data["dist"]
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed space document: {exc}") from exc
        if base not in labels:
            raise InputError(f"base point {base!r} not among points")
        return cls(tuple(labels), labels.index(base), q, np.asarray(dist, dtype=float))


def restrict_subspace(space: PMetricSpace, keep) -> PMetricSpace:
    """Subspace induced by `keep` (must contain the base point)."""
    return space.restrict(keep)


@dataclass(frozen=True, eq=False)
class Molecule:
    """Finitely supported coefficient vector over non-base point indices."""

    coefficients: dict

    def __post_init__(self):
        coeffs = {int(k): float(v) for k, v in dict(self.coefficients).items()}
        if any(k < 0 for k in coeffs):
            raise InputError("negative point index in molecule")
        object.__setattr__(self, "coefficients", coeffs)

    @classmethod
    def from_labels(cls, space: PMetricSpace, mapping) -> "Molecule":
        out = {}
        for label, value in mapping.items():
            idx = space.label_index(label)
            if idx == space.base_index:
                raise InputError("the base point carries no coefficient")
            out[idx] = float(value)
        return cls(out)

    def to_vector(self, m: int, base_index: int) -> np.ndarray:
        """Dense length-m vector; rejects coefficients on the base point."""
        vec = np.zeros(m)
        for idx, val in self.coefficients.items():
            if idx >= m:
                raise InputError(f"molecule index {idx} outside space of {m} points")
            if idx == base_index and val != 0.0:
                raise InputError("the base point carries no coefficient")
            vec[idx] = val
        return vec

    def support(self):
        return tuple(sorted(k for k, v in self.coefficients.items() if v != 0.0))

    def scaled(self, factor: float) -> "Molecule":
        return Molecule({k: factor * v for k, v in self.coefficients.items()})

    def remapped(self, index_map: dict) -> "Molecule":
        """Molecule with indices translated through `index_map`."""
        out = {}
        for idx, val in self.coefficients.items():
            if val == 0.0 and idx not in index_map:
                continue
            if idx not in index_map:
                raise InputError(f"molecule point {idx} not kept by the restriction")
            out[index_map[idx]] = val
        return Molecule(out)

    def total(self) -> float:
        return float(sum(self.coefficients.values()))


@dataclass(frozen=True, eq=False)
class WeightedRootedTree:
    """Rooted tree with positive weights on the edges to the parents."""

    labels: tuple
    root_index: int
    parent: tuple
    weight: tuple

    def __post_init__(self):
        labels = tuple(str(x) for x in self.labels)
        object.__setattr__(self, "labels", labels)
        m = len(labels)
        if m < 2:
            raise InputError("a weighted tree needs at least two vertices")
        if len(set(labels)) != m:
            raise InputError("vertex labels must be unique")
        if not (0 <= self.root_index < m):
            raise InputError("root index out of range")
        parent = tuple(int(x) for x in self.parent)
        weight = tuple(float(x) for x in self.weight)
        if len(parent) != m or len(weight) != m:
            raise InputError("parent and weight arrays must cover every vertex")
        if parent[self.root_index] != -1:
            raise InputError("root must have parent -1")
        for v in range(m):
            if v == self.root_index:
                continue
            if not (0 <= parent[v] < m) or parent[v] == v:
                raise InputError(f"bad parent for vertex {v}")
            if weight[v] <= 0.0 or not np.isfinite(weight[v]):
                raise InputError(f"edge weight at vertex {v} must be positive")
        # every vertex must reach the root (catches cycles among non-root vertices)
        for v in range(m):
            seen, x = set(), v
            while x != self.root_index:
                if x in seen:
                    raise InputError("parent structure contains a cycle")
                seen.add(x)
                x = parent[x]
        object.__setattr__(self, "parent", parent)
        object.__setattr__(self, "weight", weight)

    @property
    def m(self) -> int:
        return len(self.labels)

    def children(self):
        out = [[] for _ in range(self.m)]
        for v in range(self.m):
            if v != self.root_index:
                out[self.parent[v]].append(v)
        return out

    def leaves(self):
        """Non-root vertices without children."""
        has_child = [False] * self.m
        for v in range(self.m):
            if v != self.root_index:
                has_child[self.parent[v]] = True
        return tuple(v for v in range(self.m)
                     if v != self.root_index and not has_child[v])

    @classmethod
    def from_edges(cls, labels, root_label, edges) -> "WeightedRootedTree":
        """Build from undirected (u, v, w) label triples by orienting to the root."""
        labels = [str(x) for x in labels]
        if root_label not in labels:
            raise InputError(f"root {root_label!r} not among vertices")
        index = {lab: i for i, lab in enumerate(labels)}
        m = len(labels)
        if len(edges) != m - 1:
            raise InputError(f"a tree on {m} vertices needs {m - 1} edges")
        adj = {i: [] for i in range(m)}
        for u, v, w in edges:
            if u not in index or v not in index:
                raise InputError(f"edge touches unknown vertex ({u!r}, {v!r})")
            ui, vi = index[u], index[v]
            adj[ui].append((vi, float(w)))
            adj[vi].append((ui, float(w)))
        root = index[root_label]
        parent = [-1] * m
        weight = [0.0] * m
        stack, seen = [root], {root}
        while stack:
            x = stack.pop()
            for y, w in adj[x]:
                if y not in seen:
                    seen.add(y)
                    parent[y] = x
                    weight[y] = w
                    stack.append(y)
        if len(seen) != m:
            raise InputError("edge list does not connect all vertices")
        return cls(tuple(labels), root, tuple(parent), tuple(weight))

    def to_dict(self, q: float) -> dict:
        edges = [
            {"u": self.labels[self.parent[v]], "v": self.labels[v], "w": self.weight[v]}
            for v in range(self.m) if v != self.root_index
        ]
        return {"q": q, "vertices": list(self.labels),
                "root": self.labels[self.root_index], "edges": edges}

    @classmethod
    def from_dict(cls, data: dict):
        """Returns (tree, q); the file format carries the exponent alongside."""
        try:
            labels = [str(x) for x in data["vertices"]]
            root = str(data["root"])
            q = float(data["q"])
            edges = [(e["u"], e["v"], float(e["w"])) for e in data["edges"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed tree document: {exc}") from exc
        _check_exponent(q)
        return cls.from_edges(labels, root, edges), q


def path_p_metric(tree: WeightedRootedTree, q: float) -> PMetricSpace:
    """p-metric space generated by q-summing edge weights along tree paths.

    d(x, y) = (sum of w^q over the unique x-y path)^(1/q); the root becomes
    the base point. Adjacent vertices keep their edge weight exactly.
    """
    _check_exponent(q)
    m = tree.m
    root = tree.root_index
    wq = [0.0] * m
    depth = [0] * m
    for v in range(m):
        if v != root:
            wq[v] = tree.weight[v] ** q

    # ancestor chains; trees here are small, quadratic walk is fine
    def chain(v):
        out = [v]
        while v != root:
            v = tree.parent[v]
            out.append(v)
        return out

    chains = [chain(v) for v in range(m)]
    for v in range(m):
        depth[v] = len(chains[v]) - 1

    dist = np.zeros((m, m))
    for x in range(m):
        anc_x = set(chains[x])
        for y in range(x + 1, m):
            # lowest common ancestor by walking y's chain
            lca = next(v for v in chains[y] if v in anc_x)
            total = 0.0
            v = x
            while v != lca:
                total += wq[v]
                v = tree.parent[v]
            v = y
            while v != lca:
                total += wq[v]
                v = tree.parent[v]
            d = tree.weight[y] if (lca == x and depth[y] == depth[x] + 1) else total ** (1.0 / q)
            d = tree.weight[x] if (lca == y and depth[x] == depth[y] + 1) else d
            dist[x, y] = dist[y, x] = d
    return PMetricSpace(tree.labels, root, q, dist, validate=False)


def load_space(path) -> PMetricSpace:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"invalid JSON in {path}: {exc}") from exc
    return PMetricSpace.from_dict(data)


def save_space(space: PMetricSpace, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(space.to_dict(), fh, indent=2)
        fh.write("\n")


def load_tree(path):
    """Read a weighted-tree file; returns (tree, q)."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"invalid JSON in {path}: {exc}") from exc
    return WeightedRootedTree.from_dict(data)


def save_tree(tree: WeightedRootedTree, q: float, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(tree.to_dict(q), fh, indent=2)
        fh.write("\n")
