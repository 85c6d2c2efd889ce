"""Rooted labelled trees: Pruefer codes, exhaustive enumeration, tree values.

Labelled trees on m vertices are in bijection with Pruefer sequences of
length m - 2 over {0..m-1} (Cayley: m^(m-2) trees), which gives O(m) decoding,
exact counting and trivially disjoint shards for parallel scans. Rooting at
the distinguished point orients every edge toward the root.

The value of a rooted tree T for a coefficient vector a is

    T(a)^p = sum over non-root x of |c(x) * d(x, parent(x))|^p,

where c(x) sums the coefficients over the subtree below x. The free p-norm
engine minimises this quantity over all rooted trees.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import CapacityError, ExponentError, InputError
from .space import Molecule, PMetricSpace

#: default guard on exhaustive enumeration (10^8 trees at m = 10)
DEFAULT_TREE_LIMIT = 10

#: hard cap of the scan kernels' fixed-size buffers
KERNEL_MAX_VERTICES = 16


@dataclass(frozen=True, eq=False)
class RootedTreeTopology:
    """Parent-array tree rooted at `root_index`.

    `order` lists all vertices so that every child appears before its parent
    (nonincreasing distance from the root), which lets subtree sums run in a
    single pass.
    """

    m: int
    root_index: int
    parent: tuple
    order: tuple

    @classmethod
    def from_parent(cls, parent, root_index: int) -> "RootedTreeTopology":
        parent = tuple(int(x) for x in parent)
        m = len(parent)
        if not (0 <= root_index < m) or parent[root_index] != -1:
            raise InputError("root must carry parent -1")
        rank = [0] * m
        for v in range(m):
            seen, x, hops = set(), v, 0
            while x != root_index:
                if x in seen or not (0 <= parent[x] < m):
                    raise InputError("parent array is not a rooted tree")
                seen.add(x)
                x = parent[x]
                hops += 1
            rank[v] = hops
        order = sorted(range(m), key=lambda v: -rank[v])
        return cls(m, root_index, parent, tuple(order))

    def edges(self):
        """(parent, child) pairs."""
        return tuple((self.parent[v], v) for v in range(self.m) if v != self.root_index)

    def children(self):
        out = [[] for _ in range(self.m)]
        for v in range(self.m):
            if v != self.root_index:
                out[self.parent[v]].append(v)
        return out


def rooted_tree_count(m: int) -> int:
    """Number of labelled trees on m vertices rooted at a fixed vertex."""
    if m < 2:
        raise InputError("need at least two vertices")
    return m ** (m - 2)


def _decode_edges(seq, m):
    """Undirected edge list of the labelled tree encoded by `seq`."""
    deg = [1] * m
    for v in seq:
        deg[v] += 1
    edges = []
    ptr = 0
    while deg[ptr] != 1:
        ptr += 1
    leaf = ptr
    for v in seq:
        edges.append((leaf, v))
        deg[v] -= 1
        if deg[v] == 1 and v < ptr:
            leaf = v
        else:
            ptr += 1
            while deg[ptr] != 1:
                ptr += 1
            leaf = ptr
    edges.append((leaf, m - 1))
    return edges


def _orient(edges, m, root):
    """Parent array and a children-first order, rooting at `root`."""
    adj = [[] for _ in range(m)]
    for u, v in edges:
        adj[u].append(v)
        adj[v].append(u)
    parent = [-1] * m
    bfs = [root]
    for x in bfs:
        px = parent[x]
        for y in adj[x]:
            if y != px:
                parent[y] = x
                bfs.append(y)
    if len(bfs) != m:
        raise InputError("edge list is not a spanning tree")
    return parent, bfs


def pruefer_decode(seq, root: int = 0, m: int | None = None) -> RootedTreeTopology:
    """Decode a Pruefer sequence and root the resulting tree at `root`."""
    seq = [int(x) for x in seq]
    if m is None:
        m = len(seq) + 2
    if len(seq) != m - 2:
        raise InputError(f"sequence of length {len(seq)} cannot encode {m} vertices")
    if m < 2:
        raise InputError("need at least two vertices")
    if any(x < 0 or x >= m for x in seq):
        raise InputError("sequence symbol out of range")
    if not (0 <= root < m):
        raise InputError("root out of range")
    parent, bfs = _orient(_decode_edges(seq, m), m, root)
    return RootedTreeTopology(m, root, tuple(parent), tuple(reversed(bfs)))


def pruefer_encode(tree: RootedTreeTopology):
    """Inverse of :func:`pruefer_decode` (ignores the rooting)."""
    m = tree.m
    if m == 2:
        return ()
    adj = [set() for _ in range(m)]
    for p, c in tree.edges():
        adj[p].add(c)
        adj[c].add(p)
    seq = []
    for _ in range(m - 2):
        leaf = min(v for v in range(m) if len(adj[v]) == 1)
        nbr = next(iter(adj[leaf]))
        seq.append(nbr)
        adj[nbr].discard(leaf)
        adj[leaf].clear()
    return tuple(seq)


def _rank_to_sequence(rank: int, m: int):
    seq = [0] * (m - 2)
    for i in range(m - 3, -1, -1):
        rank, seq[i] = divmod(rank, m)
    return seq


def sequence_to_rank(seq, m: int) -> int:
    rank = 0
    for s in seq:
        rank = rank * m + s
    return rank


def shard_bounds(m: int, shard: int, total: int):
    """Contiguous lexicographic rank range of shard `shard` of `total`."""
    if total < 1 or not (0 <= shard < total):
        raise InputError(f"bad shard index ({shard} of {total})")
    n = rooted_tree_count(m)
    return (shard * n) // total, ((shard + 1) * n) // total


def enumerate_rooted_trees(m: int, root: int = 0, partition=None,
                           limit: int = DEFAULT_TREE_LIMIT):
    """Yield every rooted labelled tree on m vertices exactly once.

    Trees come in lexicographic Pruefer order. `partition=(shard, total)`
    restricts to that shard's contiguous rank range; shards are disjoint and
    cover everything. Raise the `limit` guard explicitly to enumerate past
    m = 10.
    """
    if m < 2:
        raise InputError("need at least two vertices")
    if m > limit:
        raise CapacityError(
            f"m = {m} means {rooted_tree_count(m)} trees; pass a higher limit to force it")
    if not (0 <= root < m):
        raise InputError("root out of range")
    start, stop = (0, rooted_tree_count(m)) if partition is None \
        else shard_bounds(m, *partition)
    if m == 2:
        if start <= 0 < stop:
            yield RootedTreeTopology(2, root, (-1, 0) if root == 0 else (1, -1),
                                     (1 - root, root))
        return
    seq = _rank_to_sequence(start, m)
    decode_edges, orient = _decode_edges, _orient
    for _ in range(start, stop):
        parent, bfs = orient(decode_edges(seq, m), m, root)
        yield RootedTreeTopology(m, root, tuple(parent), tuple(reversed(bfs)))
        i = m - 3
        while i >= 0:
            seq[i] += 1
            if seq[i] == m:
                seq[i] = 0
                i -= 1
            else:
                break


def _coefficient_vector(a, m: int, root: int) -> np.ndarray:
    if isinstance(a, Molecule):
        return a.to_vector(m, root)
    vec = np.asarray(a, dtype=float)
    if vec.shape != (m,):
        raise InputError(f"coefficient vector must have length {m}")
    if vec[root] != 0.0:
        raise InputError("the base point carries no coefficient")
    return vec


def subtree_sums(tree: RootedTreeTopology, a) -> np.ndarray:
    """c[x] = sum of coefficients over the subtree rooted at x, in one pass."""
    c = _coefficient_vector(a, tree.m, tree.root_index).copy()
    parent = tree.parent
    for x in tree.order:
        if x != tree.root_index:
            c[parent[x]] += c[x]
    return c


def tree_value(tree: RootedTreeTopology, a, space: PMetricSpace, p: float):
    """(T(a), T(a)^p) for the tree evaluated in `space` at exponent p.

    Edge distances come straight from the space's matrix; requires p <= q,
    the tree on the full point set, and the root at the base point.
    """
    if p > space.q + 1e-12 or p <= 0.0:
        raise ExponentError(f"exponent p = {p} not admissible for a {space.q}-metric space")
    if tree.m != space.m:
        raise InputError("tree and space have different point counts")
    if tree.root_index != space.base_index:
        raise InputError("tree root must sit at the base point")
    c = subtree_sums(tree, a)
    dist = space.dist
    total = 0.0
    for x in tree.order:
        if x != tree.root_index:
            cx = c[x]
            if cx != 0.0:
                total += abs(cx) ** p * dist[x, tree.parent[x]] ** p
    return total ** (1.0 / p), total


@dataclass(frozen=True, eq=False)
class SplitPiece:
    """One side of a tree split: original vertex ids plus reindexed data.

    `vertices` are original indices in ascending order; `tree` and
    `coefficients` live in the corresponding local indexing.
    """

    vertices: tuple
    tree: RootedTreeTopology
    coefficients: Molecule


def split_at_vertex(tree: RootedTreeTopology, a, x0: int):
    """Split T at an internal non-root vertex into two value-additive parts.

    Piece one is the subtree below x0 re-rooted at x0 with the coefficients
    inside it (x0 becomes a base point and drops its own); piece two is the
    remainder where x0 absorbs the whole subtree coefficient sum. For every
    admissible space and exponent, T(a)^p = T1(a1)^p + T2(a2)^p.
    """
    m, root = tree.m, tree.root_index
    if x0 == root:
        raise InputError("cannot split at the root")
    children = tree.children()
    if not children[x0]:
        raise InputError("cannot split at a leaf")
    vec = _coefficient_vector(a, m, root)

    inside = {x0}
    stack = [x0]
    while stack:
        v = stack.pop()
        for w in children[v]:
            inside.add(w)
            stack.append(w)

    part1 = sorted(inside)
    part2 = sorted(set(range(m)) - inside | {x0})
    map1 = {old: new for new, old in enumerate(part1)}
    map2 = {old: new for new, old in enumerate(part2)}

    parent1 = [-1] * len(part1)
    for v in part1:
        if v != x0:
            parent1[map1[v]] = map1[tree.parent[v]]
    tree1 = RootedTreeTopology.from_parent(parent1, map1[x0])
    coeffs1 = Molecule({map1[v]: vec[v] for v in part1 if v != x0 and vec[v] != 0.0})

    parent2 = [-1] * len(part2)
    for v in part2:
        if v != root:
            parent2[map2[v]] = map2[tree.parent[v]]
    tree2 = RootedTreeTopology.from_parent(parent2, map2[root])
    absorbed = float(sum(vec[v] for v in part1))
    coeffs2_raw = {map2[v]: vec[v] for v in part2 if v not in (root, x0) and vec[v] != 0.0}
    coeffs2_raw[map2[x0]] = absorbed
    coeffs2 = Molecule(coeffs2_raw)

    return (SplitPiece(tuple(part1), tree1, coeffs1),
            SplitPiece(tuple(part2), tree2, coeffs2))
