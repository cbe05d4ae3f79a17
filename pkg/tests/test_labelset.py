import numpy as np
import pytest

from veritas_py.labelset import (
    LABEL_SET_LOSSES,
    axiom_check,
    leaf_dice,
    leaf_dice_gradient,
    loss_by_name,
    marginal_cross_entropy,
    marginal_dice,
    marginal_dice_gradient,
    marginalize,
    mean_class_dice,
    mean_class_dice_gradient,
    partition_marginal_dice,
    psi0,
    random_partial_annotation,
    redistribute,
    soft_target_dice,
)
from veritas_py.utils.exceptions import LabelSpaceError, PartitionError, ValidationError


def one_hot(labels, K):
    return np.eye(K)[labels]


def finite_difference(fn, p, h=1e-5):
    grad = np.zeros_like(p)
    for idx in np.ndindex(p.shape):
        up, down = p.copy(), p.copy()
        up[idx] += h
        down[idx] -= h
        grad[idx] = (fn(up) - fn(down)) / (2.0 * h)
    return grad


class TestMarginalize:
    def test_merges_label_set(self):
        out = marginalize([[0.8, 0.0, 0.2]], [0b011])
        np.testing.assert_allclose(out, [[0.4, 0.4, 0.2]])

    def test_singleton_rows_unchanged(self, rng):
        p = rng.dirichlet(np.ones(4), size=10)
        g = 1 << rng.integers(0, 4, size=10)
        np.testing.assert_array_equal(marginalize(p, g), p)

    def test_idempotent_and_mass_preserving(self, rng):
        p = rng.dirichlet(np.ones(5), size=50)
        g = rng.integers(1, 32, size=50)
        once = marginalize(p, g)
        np.testing.assert_allclose(marginalize(once, g), once, atol=1e-15)
        np.testing.assert_allclose(once.sum(axis=1), 1.0, atol=1e-12)

    def test_psi0(self):
        np.testing.assert_allclose(psi0([0b011, 0b100], 3), [[0.5, 0.5, 0.0], [0.0, 0.0, 1.0]])

    def test_psi0_is_fixed_point(self, rng):
        g = rng.integers(1, 16, size=30)
        q = psi0(g, 4)
        np.testing.assert_allclose(marginalize(q, g), q, atol=1e-15)

    def test_invalid_annotations(self):
        p = np.full((2, 3), 1.0 / 3)
        with pytest.raises(LabelSpaceError):
            marginalize(p, [0, 1])
        with pytest.raises(LabelSpaceError):
            marginalize(p, [1, 0b1000])
        with pytest.raises(ValidationError):
            marginalize(p, [1, 2, 4])
        with pytest.raises(ValidationError):
            marginalize(p, [1.0, 2.0])


class TestMeanClassDice:
    def test_identical_one_hots(self):
        q = one_hot([0, 1, 2, 1], 3)
        assert mean_class_dice(q, q) < 1e-5

    def test_disjoint_one_hots(self):
        assert mean_class_dice(one_hot([0, 0], 2), one_hot([1, 1], 2)) == pytest.approx(1.0)

    @pytest.mark.parametrize("alpha", [1, 2])
    def test_hand_formula(self, rng, alpha):
        p = rng.dirichlet(np.ones(3), size=7)
        q = rng.dirichlet(np.ones(3), size=7)
        terms = [
            2 * sum(q[i, c] * p[i, c] for i in range(7))
            / (sum(q[i, c] ** alpha for i in range(7)) + sum(p[i, c] ** alpha for i in range(7)) + 1e-5)
            for c in range(3)
        ]
        assert mean_class_dice(p, q, alpha) == pytest.approx(1.0 - sum(terms) / 3.0, abs=1e-12)

    def test_shape_and_alpha(self):
        with pytest.raises(ValidationError):
            mean_class_dice(np.ones((2, 3)), np.ones((3, 3)))
        with pytest.raises(ValidationError):
            mean_class_dice(np.ones((2, 3)), np.ones((2, 3)), alpha=3)


class TestLeafDice:
    def test_perfect_singletons(self):
        labels = [0, 1, 2, 2, 1]
        assert leaf_dice(one_hot(labels, 3), 1 << np.array(labels)) < 1e-4

    def test_all_unsegmented(self, rng):
        p = rng.dirichlet(np.ones(3), size=8)
        g = np.full(8, 0b110)
        assert leaf_dice(p, g) == 1.0
        assert np.all(leaf_dice_gradient(p, g) == 0.0)

    @pytest.mark.parametrize("alpha", [1, 2])
    def test_collapses_to_mean_class_dice(self, rng, alpha):
        labels = rng.integers(0, 4, size=20)
        p = rng.dirichlet(np.ones(4), size=20)
        expected = mean_class_dice(p, one_hot(labels, 4), alpha)
        assert leaf_dice(p, 1 << labels, alpha) == pytest.approx(expected, abs=1e-12)

    def test_rejects_other_structures(self):
        p = np.full((3, 4), 0.25)
        with pytest.raises(PartitionError):
            leaf_dice(p, [0b0011, 0b1100, 0b0011])
        with pytest.raises(PartitionError):
            leaf_dice(p, [0b1111, 0b0001, 0b0010])
        with pytest.raises(PartitionError):
            leaf_dice(p, [0b0011, 0b0001, 0b0100])


class TestConvertedLosses:
    def test_marginal_dice_fully_annotated(self, rng):
        labels = rng.integers(0, 3, size=12)
        p = rng.dirichlet(np.ones(3), size=12)
        assert marginal_dice(p, 1 << labels) == pytest.approx(mean_class_dice(p, one_hot(labels, 3)), abs=1e-15)

    def test_marginal_dice_is_redistribution_invariant(self, rng):
        p = rng.dirichlet(np.ones(4), size=25)
        g = random_partial_annotation(rng, 25, 4)
        q = redistribute(rng, p, g)
        assert marginal_dice(q, g) == pytest.approx(marginal_dice(p, g), abs=1e-12)

    def test_soft_target_counterexample(self):
        g = np.array([0b011, 0b100])
        p = np.array([[0.8, 0.0, 0.2], [0.0, 0.1, 0.9]])
        q = np.array([[0.4, 0.4, 0.2], [0.0, 0.1, 0.9]])
        np.testing.assert_allclose(marginalize(p, g), marginalize(q, g))
        assert abs(soft_target_dice(p, g) - soft_target_dice(q, g)) > 1e-6
        assert marginal_dice(p, g) == pytest.approx(marginal_dice(q, g), abs=1e-15)

    def test_soft_target_singletons(self, rng):
        labels = rng.integers(0, 3, size=10)
        p = rng.dirichlet(np.ones(3), size=10)
        assert soft_target_dice(p, 1 << labels) == pytest.approx(mean_class_dice(p, one_hot(labels, 3)), abs=1e-15)

    def test_marginal_cross_entropy(self):
        p = np.array([[0.5, 0.3, 0.2], [0.1, 0.1, 0.8]])
        expected = -(np.log(0.4) + np.log(0.8)) / 2.0
        assert marginal_cross_entropy(p, [0b011, 0b100]) == pytest.approx(expected, abs=1e-15)

    def test_loss_range(self, rng):
        for name in ("leaf_dice", "marginal_dice", "soft_target_dice"):
            p = rng.dirichlet(np.ones(4), size=30)
            g = random_partial_annotation(rng, 30, 4)
            assert 0.0 <= loss_by_name(name)(p, g) <= 1.0

    def test_registry(self):
        assert set(LABEL_SET_LOSSES) == {"leaf_dice", "marginal_dice", "soft_target_dice", "marginal_cross_entropy"}
        with pytest.raises(ValidationError):
            loss_by_name("focal")


class TestPartitionClosedForm:
    @pytest.mark.parametrize("alpha", [1, 2])
    def test_matches_marginal_dice(self, alpha):
        rng = np.random.default_rng(21)
        for _ in range(100):
            K = int(rng.integers(2, 7))
            cuts = np.sort(rng.choice(np.arange(1, K), size=int(rng.integers(0, K - 1)), replace=False))
            order = rng.permutation(K)
            blocks = [int(np.sum(1 << part)) for part in np.split(order, cuts)]
            sizes = np.array([bin(b).count("1") for b in blocks])
            n = int(rng.integers(5, 40))
            masses = rng.dirichlet(np.ones(len(blocks)), size=n)
            p = np.zeros((n, K))
            for j, b in enumerate(blocks):
                members = [c for c in range(K) if b >> c & 1]
                p[:, members] = (masses[:, j] / sizes[j])[:, None]
            g = rng.choice(blocks, size=n)
            assert partition_marginal_dice(p, g, alpha) == pytest.approx(marginal_dice(p, g, alpha), abs=1e-12)

    @pytest.mark.parametrize("alpha", [1, 2])
    def test_non_uniform_block_rejected(self, alpha):
        p = np.array([[0.6, 0.1, 0.3], [0.3, 0.1, 0.6]])
        with pytest.raises(PartitionError):
            partition_marginal_dice(p, [0b011, 0b100], alpha)

    def test_annotated_voxels_need_no_uniformity(self):
        p = np.array([[0.6, 0.1, 0.3], [0.1, 0.1, 0.8]])
        g = [0b011, 0b100]
        assert partition_marginal_dice(p, g) == pytest.approx(marginal_dice(p, g), abs=1e-12)

    def test_overlap_rejected(self):
        with pytest.raises(PartitionError):
            partition_marginal_dice(np.full((2, 3), 1.0 / 3), [0b011, 0b110])


class TestAxiom:
    @pytest.mark.parametrize("loss", [leaf_dice, marginal_dice])
    def test_label_set_losses_pass(self, loss):
        report = axiom_check(loss, trials=1000)
        assert report.trials == 1000
        assert report.max_violation < 1e-9
        assert report.holds()

    def test_marginal_cross_entropy_passes(self):
        assert axiom_check(marginal_cross_entropy, trials=200).holds()

    def test_soft_target_dice_fails(self):
        report = axiom_check(soft_target_dice, trials=200)
        assert report.max_violation > 1e-6
        assert not report.holds()

    def test_needs_trials(self):
        with pytest.raises(ValidationError):
            axiom_check(marginal_dice, trials=0)


class TestGradients:
    def _relative_error(self, analytic, numeric):
        return np.linalg.norm(analytic - numeric) / max(np.linalg.norm(numeric), 1e-12)

    @pytest.mark.parametrize("alpha", [1, 2])
    def test_mean_class_dice(self, rng, alpha):
        p = rng.dirichlet(np.ones(3), size=6)
        q = rng.dirichlet(np.ones(3), size=6)
        numeric = finite_difference(lambda x: mean_class_dice(x, q, alpha), p)
        assert self._relative_error(mean_class_dice_gradient(p, q, alpha), numeric) < 1e-4

    @pytest.mark.parametrize("alpha", [1, 2])
    def test_marginal_dice(self, rng, alpha):
        p = rng.dirichlet(np.ones(4), size=6)
        g = np.array([0b0011, 0b0100, 0b1000, 0b0011, 0b1100, 0b0001])
        numeric = finite_difference(lambda x: marginal_dice(x, g, alpha), p)
        assert self._relative_error(marginal_dice_gradient(p, g, alpha), numeric) < 1e-4

    def test_leaf_dice(self, rng):
        p = rng.dirichlet(np.ones(4), size=6)
        g = np.array([0b0011, 0b0100, 0b1000, 0b0011, 0b0100, 0b1000])
        numeric = finite_difference(lambda x: leaf_dice(x, g), p)
        assert self._relative_error(leaf_dice_gradient(p, g), numeric) < 1e-4
