import math

import numpy as np
import pytest

from smartbuilding.core import ContractError
from smartbuilding.models.iforest import (
    EULER_GAMMA,
    IsolationForestModel,
    Leaf,
    TreeNode,
    c_factor,
    iforest_classify,
    iforest_classify_many,
    iforest_fit,
    iforest_score,
    iforest_score_many,
)


class TestCFactor:
    def test_base_cases(self):
        assert c_factor(0) == 0.0
        assert c_factor(1) == 0.0
        assert c_factor(2) == 1.0

    def test_formula_above_two(self):
        n = 10
        expected = 2.0 * (math.log(n - 1) + EULER_GAMMA) - 2.0 * (n - 1) / n
        assert c_factor(n) == pytest.approx(expected)

    def test_monotone_growth(self):
        values = [c_factor(n) for n in range(2, 200)]
        assert all(b > a for a, b in zip(values, values[1:]))


class TestFit:
    def test_two_identical_rows_score_half(self):
        with pytest.warns(UserWarning, match="degenerate"):
            model = iforest_fit(np.array([[1.0], [1.0]]), n_estimators=5, rng_seed=0)
        scores = iforest_score_many(model, np.array([[1.0], [1.0]]))
        # unsplittable pair: path length c(2)=1 over c(psi=2)=1 gives 2^-1
        assert np.allclose(scores, 0.5)
        assert model.degenerate

    def test_outlier_scores_highest(self):
        rng = np.random.default_rng(1)
        rows = np.vstack([rng.normal(21.0, 0.5, size=(100, 1)), [[200.0]]])
        model = iforest_fit(rows, n_estimators=100, max_samples_fraction=1.0,
                            contamination=0.05, rng_seed=2)
        scores = iforest_score_many(model, rows)
        assert int(np.argmax(scores)) == 100

    def test_same_seed_same_trees(self):
        rows = np.random.default_rng(3).normal(size=(50, 2))
        a = iforest_fit(rows, n_estimators=20, rng_seed=7)
        b = iforest_fit(rows, n_estimators=20, rng_seed=7)
        probe = np.random.default_rng(4).normal(size=(20, 2))
        assert np.array_equal(iforest_score_many(a, probe), iforest_score_many(b, probe))

    def test_height_limit_respected(self):
        rows = np.random.default_rng(5).normal(size=(128, 1))
        model = iforest_fit(rows, n_estimators=10, max_samples_fraction=1.0, rng_seed=0)
        limit = math.ceil(math.log2(model.subsample_size))

        def depth(node, d=0):
            if isinstance(node, Leaf):
                return d
            return max(depth(node.left, d + 1), depth(node.right, d + 1))

        assert all(depth(t) <= limit for t in model.trees)

    def test_threshold_is_score_quantile(self):
        rows = np.random.default_rng(6).normal(size=(300, 1))
        model = iforest_fit(rows, n_estimators=50, contamination=0.1, rng_seed=1)
        scores = iforest_score_many(model, rows)
        assert model.score_threshold == pytest.approx(float(np.quantile(scores, 0.9)))

    def test_empty_rows_rejected(self):
        with pytest.raises(ContractError):
            iforest_fit(np.empty((0, 1)))

    def test_bad_params_rejected(self):
        rows = np.ones((10, 1))
        with pytest.raises(ContractError):
            iforest_fit(rows, max_samples_fraction=0.0)
        with pytest.raises(ContractError):
            iforest_fit(rows, contamination=0.7)


class TestScore:
    def hand_model(self) -> IsolationForestModel:
        # single tree of depth 1 over psi=2: split at 0.5, one point each side
        tree = TreeNode(feature=0, value=0.5, left=Leaf(1), right=Leaf(1))
        return IsolationForestModel(
            trees=[tree],
            n_estimators=1,
            max_samples_fraction=1.0,
            contamination=0.1,
            score_threshold=0.5,
            feature_count=1,
            subsample_size=2,
        )

    def test_hand_built_tree_matches_formula(self):
        model = self.hand_model()
        # either side: h = 1 + c(1) = 1, c(psi)=c(2)=1, s = 2^(-1/1) = 0.5
        assert iforest_score(model, [0.2]) == pytest.approx(0.5)
        assert iforest_score(model, [0.9]) == pytest.approx(0.5)

    def test_score_half_when_path_equals_c_psi(self):
        # score = 0.5 exactly when E[h] == c(psi); forced by the hand model
        assert iforest_score(self.hand_model(), [0.0]) == 0.5

    def test_score_tends_to_one_for_short_paths(self):
        # leaf of size 1 at the root: h = 0 + c(1) = 0, s = 2^0 = 1 in the limit
        model = IsolationForestModel(
            trees=[Leaf(1)], n_estimators=1, max_samples_fraction=1.0,
            contamination=0.1, score_threshold=0.5, feature_count=1, subsample_size=256,
        )
        assert iforest_score(model, [0.0]) == pytest.approx(1.0)

    def test_scores_strictly_inside_unit_interval(self):
        rows = np.random.default_rng(8).normal(size=(200, 3))
        model = iforest_fit(rows, n_estimators=30, rng_seed=3)
        scores = iforest_score_many(model, rows)
        assert np.all(scores > 0.0) and np.all(scores < 1.0)

    def test_dimension_mismatch(self):
        model = self.hand_model()
        with pytest.raises(ContractError):
            iforest_score(model, [0.1, 0.2])

    def test_uniform_data_average_score_near_half(self):
        # canonical sanity bound: psi=256, N=2000, average score around 0.5
        rows = np.random.default_rng(11).uniform(size=(2000, 2))
        model = iforest_fit(
            rows, n_estimators=100, max_samples_fraction=256 / 2000,
            contamination=0.1, rng_seed=4,
        )
        assert model.subsample_size == 256
        mean_score = float(iforest_score_many(model, rows).mean())
        assert abs(mean_score - 0.5) < 0.07


class TestClassify:
    def test_boundary_score_is_normal(self):
        model = TestScore().hand_model()  # every score is exactly 0.5
        model.score_threshold = 0.5
        assert iforest_classify(model, [0.3]) is False

    def test_injected_200c_flagged_in_21c_cluster(self):
        rng = np.random.default_rng(12)
        rows = np.vstack([rng.normal(21.0, 0.3, size=(200, 1)), [[200.0]]])
        model = iforest_fit(rows, n_estimators=100, contamination=0.01, rng_seed=5)
        assert iforest_classify(model, [200.0]) is True

    def test_cluster_interior_point_is_normal(self):
        rng = np.random.default_rng(13)
        rows = np.vstack([rng.normal(21.0, 0.3, size=(200, 1)), [[200.0]]])
        model = iforest_fit(rows, n_estimators=100, contamination=0.01, rng_seed=5)
        # brute-force recount: the interior score must sit below the quantile
        scores = iforest_score_many(model, rows)
        interior = iforest_score(model, [21.0])
        assert interior <= float(np.quantile(scores, 0.99))
        assert iforest_classify(model, [21.0]) is False

    def test_classify_many_matches_scalar(self):
        rows = np.random.default_rng(14).normal(size=(50, 2))
        model = iforest_fit(rows, n_estimators=20, rng_seed=6)
        flags = iforest_classify_many(model, rows)
        assert list(flags) == [iforest_classify(model, row) for row in rows]
