import numpy as np
import pytest

from freep import (
    CapacityError,
    ExponentError,
    InputError,
    Molecule,
    PMetricSpace,
    enumerate_rooted_trees,
    free_norm,
    free_norm_pruned,
    positive_condition_and_norm,
    restrict_subspace,
    star_upper_bound,
    three_point_norm,
    tree_value,
)
from conftest import make_molecule, make_space, make_three_point

EQ = PMetricSpace(("0", "x", "y"), 0, 0.5, [[0, 1, 1], [1, 0, 1], [1, 1, 0]])


def brute_force(space, mol, p):
    """Independent oracle: explicit minimum over the enumerated trees."""
    best = None
    for rank, tree in enumerate(enumerate_rooted_trees(space.m, root=space.base_index)):
        _, power = tree_value(tree, mol, space, p)
        if best is None or power < best[0]:
            best = (power, rank, tree)
    return best


class TestFreeNorm:
    def test_two_point_isometry(self):
        space = PMetricSpace(("0", "x"), 0, 1.0, [[0, 3], [3, 0]])
        for p in (0.2, 0.5, 1.0):
            res = free_norm(space, Molecule({1: 5.0}), p)
            assert res.value == pytest.approx(15.0, rel=1e-12)

    def test_equilateral(self):
        res = free_norm(EQ, Molecule({1: 1.0, 2: 1.0}), 0.5)
        assert res.p_power == pytest.approx(2.0, rel=1e-15)
        assert res.value == pytest.approx(4.0, rel=1e-15)

    def test_p1_nonnegative_closed_form(self):
        rng = np.random.default_rng(0)
        for _ in range(25):
            space = make_space(rng, int(rng.integers(3, 7)), 1.0)
            vec = rng.uniform(0.0, 2.0, space.m)
            vec[0] = 0.0
            mol = Molecule({v: vec[v] for v in range(1, space.m)})
            res = free_norm(space, mol, 1.0)
            expected = float(np.sum(vec * space.dist[:, 0]))
            assert res.value == pytest.approx(expected, rel=1e-12)

    def test_matches_brute_force_with_tie_break(self):
        rng = np.random.default_rng(1)
        for _ in range(30):
            m = int(rng.integers(3, 6))
            q = rng.uniform(0.3, 1.0)
            space = make_space(rng, m, q)
            mol = make_molecule(rng, space, zero_prob=0.2)
            p = rng.uniform(0.2, q)
            res = free_norm(space, mol, p)
            power, rank, tree = brute_force(space, mol, p)
            assert res.p_power == power
            assert res.witness.parent == tree.parent

    def test_witness_invariant(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            space = make_space(rng, int(rng.integers(3, 7)), 0.7)
            mol = make_molecule(rng, space)
            res = free_norm(space, mol, 0.4)
            _, power = tree_value(res.witness, mol, space, 0.4)
            assert power == pytest.approx(res.p_power, rel=1e-12)

    def test_zero_molecule(self):
        res = free_norm(EQ, Molecule({}), 0.5)
        assert res.value == 0.0 and res.p_power == 0.0

    def test_errors(self):
        with pytest.raises(ExponentError):
            free_norm(EQ, Molecule({1: 1.0}), 0.9)  # p > q
        with pytest.raises(ExponentError):
            free_norm(EQ, Molecule({1: 1.0}), 0.0)
        rng = np.random.default_rng(3)
        big = make_space(rng, 11, 0.5)
        with pytest.raises(CapacityError):
            free_norm(big, Molecule({1: 1.0}), 0.5)

    def test_workers_do_not_change_anything(self):
        rng = np.random.default_rng(4)
        space = make_space(rng, 6, 0.5)
        mol = make_molecule(rng, space)
        serial = free_norm(space, mol, 0.35, workers=1)
        threaded = free_norm(space, mol, 0.35, workers=3)
        assert serial.p_power == threaded.p_power
        assert serial.witness.parent == threaded.witness.parent


class TestThreePoint:
    def test_equilateral(self):
        assert three_point_norm(1, 1, 1, 1, 1, 0.5) == pytest.approx(4.0, rel=1e-15)

    def test_difference_molecule_gives_distance(self):
        for p in (0.3, 0.5, 1.0):
            assert three_point_norm(1, 1, 1, 1, -1, p) == pytest.approx(1.0, rel=1e-15)

    def test_single_point_support(self):
        assert three_point_norm(2.0, 1.0, 2.0, 1.5, 0.0, 0.5) == pytest.approx(3.0, rel=1e-15)

    def test_invalid_triangle(self):
        with pytest.raises(InputError):
            three_point_norm(1, 1, 5, 1, 1, 0.5)

    def test_agrees_with_engine(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            p = float(rng.choice([0.3, 0.5, 0.7, 1.0]))
            d_x, d_y, d_xy = make_three_point(rng, p)
            a, b = rng.uniform(-2, 2, 2)
            space = PMetricSpace(("0", "x", "y"), 0, p,
                                 [[0, d_x, d_y], [d_x, 0, d_xy], [d_y, d_xy, 0]])
            res = free_norm(space, Molecule({1: a, 2: b}), p)
            closed = three_point_norm(d_x, d_y, d_xy, a, b, p)
            assert res.value == pytest.approx(closed, rel=1e-12)


class TestPositiveCondition:
    def test_equilateral_holds(self):
        out = positive_condition_and_norm(EQ, Molecule({1: 1.0, 2: 1.0}), 0.5)
        assert out.condition_holds
        assert out.closed_form == pytest.approx(2.0, rel=1e-15)
        assert out.norm.p_power == pytest.approx(out.closed_form, rel=1e-12)

    def test_violator_is_strictly_cheaper(self):
        space = PMetricSpace(("0", "x", "y"), 0, 0.5,
                             [[0, 1, 1], [1, 0, 0.5], [1, 0.5, 0]])
        out = positive_condition_and_norm(space, Molecule({1: 1.0, 2: 4.0}), 0.5)
        assert not out.condition_holds
        assert out.closed_form == pytest.approx(3.0, rel=1e-15)
        assert out.norm.p_power <= np.sqrt(5) + np.sqrt(0.5) + 1e-12
        assert out.norm.p_power < out.closed_form

    def test_p1_always_matches(self):
        rng = np.random.default_rng(6)
        for _ in range(10):
            space = make_space(rng, 5, 1.0)
            vec = rng.uniform(0, 3, 5)
            vec[0] = 0.0
            mol = Molecule({v: vec[v] for v in range(1, 5)})
            out = positive_condition_and_norm(space, mol, 1.0)
            assert out.norm.p_power == pytest.approx(out.closed_form, rel=1e-12)

    def test_negative_coefficient_rejected(self):
        with pytest.raises(InputError):
            positive_condition_and_norm(EQ, Molecule({1: -1.0}), 0.5)


class TestStarBound:
    def test_single_support_equals_norm(self):
        rng = np.random.default_rng(7)
        space = make_space(rng, 5, 0.5)
        mol = Molecule({2: 1.7})
        assert star_upper_bound(space, mol, 0.4) == pytest.approx(
            free_norm(space, mol, 0.4).value, rel=1e-12)

    def test_equilateral_tight(self):
        assert star_upper_bound(EQ, Molecule({1: 1.0, 2: 1.0}), 0.5) == pytest.approx(4.0)

    def test_chain_favorable_strictly_greater(self):
        # y sits close to x but far from the base -> chain beats the star
        space = PMetricSpace(("0", "x", "y"), 0, 1.0,
                             [[0, 1, 1.05], [1, 0, 0.1], [1.05, 0.1, 0]])
        mol = Molecule({1: 1.0, 2: -1.0})
        star = star_upper_bound(space, mol, 1.0)
        exact = free_norm(space, mol, 1.0).value
        assert star > exact * (1 + 1e-9)

    def test_always_upper_bound(self):
        rng = np.random.default_rng(8)
        for _ in range(30):
            space = make_space(rng, int(rng.integers(3, 7)), 0.8)
            mol = make_molecule(rng, space, zero_prob=0.3)
            p = rng.uniform(0.2, 0.8)
            assert star_upper_bound(space, mol, p) >= free_norm(space, mol, p).value * (1 - 1e-12)


class TestPruned:
    def test_no_zeros_identical(self):
        rng = np.random.default_rng(9)
        space = make_space(rng, 5, 0.5)
        mol = make_molecule(rng, space)
        plain = free_norm(space, mol, 0.4)
        pruned = free_norm_pruned(space, mol, 0.4)
        assert pruned.p_power == plain.p_power
        assert pruned.witness.parent == plain.witness.parent
        assert pruned.witness_vertices == plain.witness_vertices

    def test_matches_plain_with_zeros(self):
        rng = np.random.default_rng(10)
        for _ in range(40):
            m = int(rng.integers(4, 8))
            q = rng.uniform(0.3, 1.0)
            space = make_space(rng, m, q)
            mol = make_molecule(rng, space, zero_prob=0.45)
            p = rng.uniform(0.2, q)
            plain = free_norm(space, mol, p)
            pruned = free_norm_pruned(space, mol, p)
            assert pruned.value == pytest.approx(plain.value, rel=1e-12)

    def test_small_support_many_zeros_reduction(self):
        rng = np.random.default_rng(11)
        space = make_space(rng, 6, 0.5)
        mol = Molecule({1: 1.0, 2: -2.0, 3: 0.0, 4: 0.0, 5: 0.0})
        pruned = free_norm_pruned(space, mol, 0.4)
        plain = free_norm(space, mol, 0.4)
        assert pruned.value == pytest.approx(plain.value, rel=1e-12)
        # reduction: the norm is attained keeping exactly |support|-1 = 1 zero point
        per_subspace = []
        for z in (3, 4, 5):
            sub = restrict_subspace(space, [0, 1, 2, z])
            sub_mol = mol.remapped(space.index_map([0, 1, 2, z]))
            per_subspace.append(free_norm(sub, sub_mol, 0.4).value)
        assert min(per_subspace) == pytest.approx(plain.value, rel=1e-12)

    def test_zero_molecule(self):
        rng = np.random.default_rng(12)
        space = make_space(rng, 5, 0.5)
        res = free_norm_pruned(space, Molecule({}), 0.5)
        assert res.value == 0.0


class TestNormAxioms:
    def test_delta_isometry_exact(self):
        rng = np.random.default_rng(13)
        for _ in range(30):
            m = int(rng.integers(3, 7))
            q = rng.uniform(0.3, 1.0)
            space = make_space(rng, m, q)
            x, y = rng.choice(np.arange(1, m), size=2, replace=False)
            mol = Molecule({int(x): 1.0, int(y): -1.0})
            p = rng.uniform(0.2, q)
            assert free_norm(space, mol, p).value == pytest.approx(
                space.dist[x, y], rel=1e-12)

    def test_homogeneity_and_symmetry(self):
        rng = np.random.default_rng(14)
        for _ in range(20):
            space = make_space(rng, 5, 0.6)
            mol = make_molecule(rng, space)
            p = rng.uniform(0.2, 0.6)
            lam = float(rng.uniform(0.1, 5.0)) * float(rng.choice([-1.0, 1.0]))
            base = free_norm(space, mol, p).value
            assert free_norm(space, mol.scaled(lam), p).value == pytest.approx(
                abs(lam) * base, rel=1e-12)
            assert free_norm(space, mol.scaled(-1.0), p).value == pytest.approx(
                base, rel=1e-12)

    def test_p_triangle(self):
        rng = np.random.default_rng(15)
        for _ in range(20):
            space = make_space(rng, 5, 0.7)
            a = make_molecule(rng, space)
            b = make_molecule(rng, space)
            p = rng.uniform(0.2, 0.7)
            ab = Molecule({v: a.coefficients.get(v, 0.0) + b.coefficients.get(v, 0.0)
                           for v in space.non_base_indices()})
            lhs = free_norm(space, ab, p).p_power
            rhs = free_norm(space, a, p).p_power + free_norm(space, b, p).p_power
            assert lhs <= rhs * (1 + 1e-12)

    def test_superspace_monotonicity(self):
        rng = np.random.default_rng(16)
        for _ in range(20):
            m = int(rng.integers(4, 8))
            space = make_space(rng, m, 0.5)
            keep = [0] + sorted(rng.choice(np.arange(1, m), size=m - 2, replace=False).tolist())
            sub = restrict_subspace(space, keep)
            sub_mol = make_molecule(rng, sub)
            full_mol = Molecule({keep[i]: c for i, c in sub_mol.coefficients.items()})
            p = rng.uniform(0.2, 0.5)
            over_m = free_norm(space, full_mol, p).value
            over_n = free_norm(sub, sub_mol, p).value
            assert over_m <= over_n * (1 + 1e-12)
