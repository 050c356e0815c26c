import numpy as np
import pytest

from smartbuilding.core import ContractError
from smartbuilding.models.rforest import (
    RandomForestModel,
    RFLeaf,
    RFNode,
    gini,
    rforest_fit,
    rforest_predict,
    rforest_predict_many,
)


def separable_data(n=60):
    x = np.linspace(-1.0, 1.0, n).reshape(-1, 1)
    y = (x[:, 0] >= 0).astype(int)
    return x, y


class TestGini:
    def test_balanced_pair(self):
        # {0,0,1,1}: 1 - (.5^2 + .5^2) = 0.5
        assert gini(2, 2) == pytest.approx(0.5)

    def test_pure_set(self):
        assert gini(4, 0) == 0.0
        assert gini(0, 7) == 0.0

    def test_empty_set(self):
        assert gini(0, 0) == 0.0

    def test_brute_force_equivalence(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            labels = rng.integers(0, 2, size=rng.integers(1, 30))
            c1 = int(labels.sum())
            c0 = len(labels) - c1
            p = np.bincount(labels, minlength=2) / len(labels)
            assert gini(c0, c1) == pytest.approx(1.0 - float(np.sum(p**2)))


class TestFit:
    def test_separable_data_perfect_training_accuracy(self):
        x, y = separable_data()
        model = rforest_fit(x, y, n_estimators=20, max_depth=2, rng_seed=0)
        assert np.array_equal(rforest_predict_many(model, x), y)

    def test_same_seed_same_predictions(self):
        rng = np.random.default_rng(1)
        x = rng.normal(size=(80, 3))
        y = (x[:, 0] + x[:, 1] > 0).astype(int)
        a = rforest_fit(x, y, n_estimators=15, rng_seed=3)
        b = rforest_fit(x, y, n_estimators=15, rng_seed=3)
        probe = rng.normal(size=(30, 3))
        assert np.array_equal(rforest_predict_many(a, probe), rforest_predict_many(b, probe))

    def test_single_class_warns_and_returns_leaves(self):
        x = np.arange(10, dtype=float).reshape(-1, 1)
        y = np.zeros(10, dtype=int)
        with pytest.warns(UserWarning):
            model = rforest_fit(x, y, n_estimators=5, rng_seed=0)
        assert all(isinstance(t, RFLeaf) for t in model.trees)
        assert rforest_predict(model, [3.0]) == (0, 0.0)

    def test_depth_bound_respected(self):
        rng = np.random.default_rng(2)
        x = rng.normal(size=(200, 2))
        y = rng.integers(0, 2, size=200)
        model = rforest_fit(x, y, n_estimators=10, max_depth=3, rng_seed=1)

        def depth(node, d=0):
            if isinstance(node, RFLeaf):
                return d
            return max(depth(node.left, d + 1), depth(node.right, d + 1))

        assert all(depth(t) <= 3 for t in model.trees)

    def test_leaves_never_empty(self):
        rng = np.random.default_rng(3)
        x = rng.normal(size=(100, 2))
        y = rng.integers(0, 2, size=100)
        model = rforest_fit(x, y, n_estimators=10, rng_seed=2)

        def check(node):
            if isinstance(node, RFLeaf):
                assert sum(node.counts) > 0
            else:
                check(node.left)
                check(node.right)

        for t in model.trees:
            check(t)

    def test_label_validation(self):
        with pytest.raises(ContractError):
            rforest_fit(np.ones((4, 1)), np.array([0, 1, 2, 1]))
        with pytest.raises(ContractError):
            rforest_fit(np.ones((1, 1)), np.array([0]))


class TestPredict:
    def hand_forest(self, votes) -> RandomForestModel:
        trees = []
        for v in votes:
            counts = (0, 3) if v == 1 else (3, 0)
            trees.append(RFLeaf(counts))
        return RandomForestModel(
            trees=trees, n_estimators=len(trees), max_depth=None,
            min_samples_split=2, feature_count=1,
        )

    def test_unanimous_vote(self):
        model = self.hand_forest([1, 1, 1])
        assert rforest_predict(model, [0.0]) == (1, 1.0)

    def test_exact_tie_breaks_to_unoccupied(self):
        model = self.hand_forest([1, 0])
        label, prob = rforest_predict(model, [0.0])
        assert label == 0
        assert prob == pytest.approx(0.5)

    def test_hand_counted_majority(self):
        # 2 of 3 trees vote class 1
        model = self.hand_forest([1, 1, 0])
        label, prob = rforest_predict(model, [0.0])
        assert label == 1
        assert prob == pytest.approx(2 / 3)

    def test_probability_averages_leaf_frequencies(self):
        trees = [RFLeaf((1, 3)), RFLeaf((2, 2))]  # p1 = 0.75, 0.5
        model = RandomForestModel(
            trees=trees, n_estimators=2, max_depth=None, min_samples_split=2, feature_count=1
        )
        _, prob = rforest_predict(model, [0.0])
        assert prob == pytest.approx(0.625)

    def test_routing_through_internal_nodes(self):
        tree = RFNode(
            feature=0, threshold=0.5,
            left=RFLeaf((5, 0)), right=RFLeaf((0, 5)),
        )
        model = RandomForestModel(
            trees=[tree], n_estimators=1, max_depth=None, min_samples_split=2, feature_count=1
        )
        assert rforest_predict(model, [0.5]) == (0, 0.0)  # boundary goes left
        assert rforest_predict(model, [0.51]) == (1, 1.0)

    def test_dimension_mismatch(self):
        model = self.hand_forest([1])
        with pytest.raises(ContractError):
            rforest_predict(model, [0.1, 0.2])

    def test_predict_many_matches_scalar(self):
        rng = np.random.default_rng(5)
        x = rng.normal(size=(60, 2))
        y = (x[:, 0] > 0).astype(int)
        model = rforest_fit(x, y, n_estimators=9, rng_seed=4)
        probe = rng.normal(size=(25, 2))
        batch = rforest_predict_many(model, probe)
        assert list(batch) == [rforest_predict(model, row)[0] for row in probe]


class TestProperties:
    def test_forest_at_least_as_good_as_any_tree_on_separable_data(self):
        x, y = separable_data(100)
        model = rforest_fit(x, y, n_estimators=15, max_depth=4, rng_seed=6)
        forest_acc = float(np.mean(rforest_predict_many(model, x) == y))
        for tree in model.trees:
            single = RandomForestModel(
                trees=[tree], n_estimators=1, max_depth=4, min_samples_split=2, feature_count=1
            )
            tree_acc = float(np.mean(rforest_predict_many(single, x) == y))
            assert forest_acc >= tree_acc

    @pytest.mark.parametrize(
        "transform",
        [lambda v: 3.0 * v + 7.0, lambda v: v**3, lambda v: np.exp(v / 2.0)],
    )
    def test_monotone_transform_invariance(self, transform):
        rng = np.random.default_rng(7)
        x = rng.normal(size=(120, 3))
        y = ((x[:, 0] + 0.5 * x[:, 1] - x[:, 2]) > 0).astype(int)
        probe = rng.normal(size=(40, 3))
        base = rforest_fit(x, y, n_estimators=12, max_depth=5, rng_seed=8)
        mapped = rforest_fit(transform(x), y, n_estimators=12, max_depth=5, rng_seed=8)
        assert np.array_equal(
            rforest_predict_many(base, probe),
            rforest_predict_many(mapped, transform(probe)),
        )
