import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from freep import (
    CapacityError,
    ExponentError,
    InputError,
    Molecule,
    enumerate_rooted_trees,
    pruefer_decode,
    pruefer_encode,
    rooted_tree_count,
    split_at_vertex,
    subtree_sums,
    tree_value,
)
from freep.trees import sequence_to_rank, shard_bounds
from conftest import make_molecule, make_space


class TestPrueferDecode:
    def test_two_vertices(self):
        tree = pruefer_decode((), root=0)
        assert tree.parent == (-1, 0)
        assert tree.order == (1, 0)

    def test_star_from_zero_sequence(self):
        tree = pruefer_decode((0, 0), root=0)
        assert tree.parent == (-1, 0, 0, 0)

    def test_three_vertices_all_distinct(self):
        trees = {pruefer_decode((s,), root=0).parent for s in range(3)}
        assert len(trees) == 3

    def test_errors(self):
        with pytest.raises(InputError):
            pruefer_decode((4,), root=0)
        with pytest.raises(InputError):
            pruefer_decode((0,), root=3)

    def test_order_visits_children_first(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            m = int(rng.integers(2, 9))
            seq = tuple(rng.integers(0, m, m - 2))
            tree = pruefer_decode(seq, root=int(rng.integers(0, m)))
            seen = set()
            for v in tree.order:
                for child, par in enumerate(tree.parent):
                    if par == v:
                        assert child in seen
                seen.add(v)

    @given(st.integers(3, 8), st.integers(0, 10 ** 9))
    @settings(max_examples=60, deadline=None)
    def test_bijectivity_random(self, m, seed):
        rng = np.random.default_rng(seed)
        seq = tuple(int(x) for x in rng.integers(0, m, m - 2))
        assert pruefer_encode(pruefer_decode(seq, root=0)) == seq

    def test_bijectivity_exhaustive_small(self):
        for m in (3, 4, 5):
            seen = set()
            for tree in enumerate_rooted_trees(m):
                seq = pruefer_encode(tree)
                assert seq not in seen
                seen.add(seq)
            assert len(seen) == rooted_tree_count(m)


class TestEnumeration:
    @pytest.mark.parametrize("m,count", [(2, 1), (3, 3), (4, 16), (5, 125), (6, 1296)])
    def test_counts(self, m, count):
        assert sum(1 for _ in enumerate_rooted_trees(m)) == count

    def test_sharding_partitions(self):
        for m, total in ((5, 5), (6, 4), (6, 7)):
            whole = [t.parent for t in enumerate_rooted_trees(m)]
            pieces = []
            for shard in range(total):
                pieces += [t.parent for t in enumerate_rooted_trees(m, partition=(shard, total))]
            assert pieces == whole

    def test_shard_bounds_cover(self):
        lo, hi = shard_bounds(8, 0, 8)
        assert lo == 0
        assert shard_bounds(8, 7, 8)[1] == rooted_tree_count(8)
        with pytest.raises(InputError):
            shard_bounds(8, 8, 8)

    def test_capacity_guard(self):
        with pytest.raises(CapacityError):
            next(enumerate_rooted_trees(11))
        # explicit limit override works
        gen = enumerate_rooted_trees(11, limit=11)
        assert next(gen).m == 11

    def test_lexicographic_order(self):
        ranks = [sequence_to_rank(pruefer_encode(t), 5)
                 for t in enumerate_rooted_trees(5)]
        assert ranks == sorted(ranks)


class TestSubtreeSums:
    def test_chain(self):
        tree = pruefer_decode((1,), root=0)  # 0 -> 1 -> 2
        sums = subtree_sums(tree, Molecule({1: 1.0, 2: 2.0}))
        assert sums[1] == 3.0 and sums[2] == 2.0

    def test_star_equals_coefficients(self):
        tree = pruefer_decode((0, 0), root=0)
        sums = subtree_sums(tree, Molecule({1: 1.0, 2: -2.0, 3: 0.5}))
        assert list(sums[1:]) == [1.0, -2.0, 0.5]

    def test_zero_molecule(self):
        tree = pruefer_decode((0, 0), root=0)
        assert not np.any(subtree_sums(tree, Molecule({})))

    def test_only_child_of_root_carries_total(self):
        rng = np.random.default_rng(21)
        for _ in range(20):
            m = int(rng.integers(3, 9))
            seq = tuple(int(x) for x in rng.integers(0, m, m - 2))
            tree = pruefer_decode(seq, root=0)
            kids = tree.children()[0]
            if len(kids) != 1:
                continue
            mol = Molecule({v: float(rng.uniform(-2, 2)) for v in range(1, m)})
            sums = subtree_sums(tree, mol)
            assert sums[kids[0]] == pytest.approx(mol.total(), rel=1e-12, abs=1e-12)


class TestTreeValue:
    def test_chain_example(self):
        space = make_space(np.random.default_rng(0), 3, 0.5)
        dist = np.array(space.dist)
        dist[0, 1] = dist[1, 0] = 1.0
        dist[1, 2] = dist[2, 1] = 2.0
        dist[0, 2] = dist[2, 0] = 5.0  # within the 0.5-triangle window
        from freep import PMetricSpace
        space = PMetricSpace(space.labels, 0, 0.5, dist)
        tree = pruefer_decode((1,), root=0)
        value, power = tree_value(tree, Molecule({1: 1.0, 2: 2.0}), space, 0.5)
        assert power == pytest.approx(np.sqrt(3) + 2, rel=1e-15)
        assert value == pytest.approx((np.sqrt(3) + 2) ** 2, rel=1e-15)

    def test_zero_molecule_and_star(self):
        rng = np.random.default_rng(1)
        space = make_space(rng, 4, 0.6)
        star = pruefer_decode((0, 0), root=0)
        assert tree_value(star, Molecule({}), space, 0.5) == (0.0, 0.0)
        mol = make_molecule(rng, space)
        vec = mol.to_vector(4, 0)
        _, power = tree_value(star, mol, space, 0.5)
        expected = sum(abs(vec[x]) ** 0.5 * space.dist[x, 0] ** 0.5 for x in (1, 2, 3))
        assert power == pytest.approx(expected, rel=1e-14)

    def test_exponent_gate(self):
        rng = np.random.default_rng(2)
        space = make_space(rng, 3, 0.5)
        with pytest.raises(ExponentError):
            tree_value(pruefer_decode((0,), root=0), Molecule({1: 1.0}), space, 0.8)


class TestSplit:
    def test_chain_split_by_hand(self):
        # 0 -> x -> y split at x
        tree = pruefer_decode((1,), root=0)
        piece1, piece2 = split_at_vertex(tree, Molecule({1: 1.5, 2: -0.5}), 1)
        assert piece1.vertices == (1, 2)
        assert piece1.coefficients.coefficients == {1: -0.5}
        assert piece2.vertices == (0, 1)
        assert piece2.coefficients.coefficients == {1: 1.0}  # 1.5 + (-0.5)

    def test_zero_sum_subtree_keeps_piece2_value(self):
        rng = np.random.default_rng(3)
        space = make_space(rng, 5, 0.5)
        tree = pruefer_decode((1, 1, 0), root=0)
        children = tree.children()
        x0 = next(v for v in range(5) if v != 0 and children[v])
        sums = subtree_sums(tree, Molecule({v: 0.0 for v in range(1, 5)}))
        assert sums[x0] == 0.0

    def test_errors(self):
        tree = pruefer_decode((1,), root=0)
        with pytest.raises(InputError):
            split_at_vertex(tree, Molecule({1: 1.0}), 0)
        with pytest.raises(InputError):
            split_at_vertex(tree, Molecule({1: 1.0}), 2)

    def test_identity_on_random_instances(self):
        rng = np.random.default_rng(4)
        done = 0
        while done < 60:
            m = int(rng.integers(4, 8))
            q = rng.uniform(0.3, 1.0)
            space = make_space(rng, m, q)
            seq = tuple(int(x) for x in rng.integers(0, m, m - 2))
            tree = pruefer_decode(seq, root=0)
            children = tree.children()
            internal = [v for v in range(m) if v != 0 and children[v]]
            if not internal:
                continue
            x0 = internal[int(rng.integers(0, len(internal)))]
            mol = make_molecule(rng, space)
            p = rng.uniform(0.2, q)
            piece1, piece2 = split_at_vertex(tree, mol, x0)
            _, total = tree_value(tree, mol, space, p)
            sub1 = space.restrict(piece1.vertices, base=x0)
            sub2 = space.restrict(piece2.vertices)
            _, part1 = tree_value(piece1.tree, piece1.coefficients, sub1, p)
            _, part2 = tree_value(piece2.tree, piece2.coefficients, sub2, p)
            assert abs(total - part1 - part2) <= 1e-12 * max(total, 1e-300)
            done += 1
