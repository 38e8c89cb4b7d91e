import numpy as np
import pytest
from scipy import stats as sps

from ranksentinel import (
    SyntheticSpec,
    ValidationError,
    generate_matrix,
    loo_rankings,
    loo_t_stats,
    t_rank,
)
from conftest import make_matrix


def scratch_t(values, labels, deleted, variant="welch"):
    """Independent oracle: scipy t-test on the matrix with one column removed."""
    keep = [j for j in range(values.shape[1]) if j != deleted]
    sub = values[:, keep]
    lab = [labels[j] for j in keep]
    a = sub[:, [k for k, l in enumerate(lab) if l == "case"]]
    b = sub[:, [k for k, l in enumerate(lab) if l == "control"]]
    return sps.ttest_ind(a, b, axis=1, equal_var=(variant == "pooled")).statistic


def random_cohort(rng, m, n_cases, n_controls, high=1e6):
    values = rng.uniform(0.0, high, size=(m, n_cases + n_controls))
    labels = ("case",) * n_cases + ("control",) * n_controls
    return make_matrix(values, labels)


class TestTRank:
    def test_shifted_feature_ranks_first(self):
        hits = 0
        for seed in range(200):
            rng = np.random.default_rng(seed)
            values = rng.normal(50.0, 5.0, size=(30, 20))
            values[4, :10] += 50.0  # 10 sd shift on feature 5 in the case group
            x = make_matrix(np.abs(values), ("case",) * 10 + ("control",) * 10)
            ranking = t_rank(x, top_m=5, log_transform=False)
            hits += ranking.feature_ids[0] == "g5"
        assert hits >= 198  # >= 99% recovery

    def test_ranks_ascending_in_p(self):
        rng = np.random.default_rng(0)
        x = random_cohort(rng, 100, 8, 8)
        ranking = t_rank(x, top_m=100, log_transform=False)
        assert np.all(np.diff(ranking.p_values) >= 0)

    def test_zero_variance_both_groups_ranked_last(self):
        rng = np.random.default_rng(1)
        values = rng.uniform(1, 10, size=(5, 8))
        values[2] = 7.0  # constant in both groups
        x = make_matrix(values, ("case",) * 4 + ("control",) * 4)
        ranking = t_rank(x, top_m=5, log_transform=False)
        assert ranking.feature_ids[-1] == "g3"
        assert ranking.p_values[-1] == 1.0
        assert ranking.t_stats[-1] == 0.0

    def test_zero_variance_one_group_still_tested(self):
        values = np.array([[5.0, 5.0, 5.0, 1.0, 2.0, 3.0], [1, 2, 3, 4, 5, 6.0]])
        x = make_matrix(values, ("case",) * 3 + ("control",) * 3)
        ranking = t_rank(x, top_m=2, log_transform=False)
        ts = dict(zip(ranking.feature_ids, ranking.t_stats))
        assert np.isfinite(ts["g1"]) and ts["g1"] != 0.0

    def test_tie_break_is_lexicographic(self):
        # two identical features share an identical p-value
        values = np.array([[1, 2, 3, 9, 8, 7.0], [1, 2, 3, 9, 8, 7.0]])
        x = make_matrix(values, ("case",) * 3 + ("control",) * 3, feature_ids=("zz", "aa"))
        ranking = t_rank(x, top_m=2, log_transform=False)
        assert ranking.feature_ids == ("aa", "zz")

    def test_welch_matches_scipy(self):
        rng = np.random.default_rng(2)
        x = random_cohort(rng, 50, 6, 9)
        ranking = t_rank(x, top_m=50, log_transform=False)
        case = x.values[:, :6]
        control = x.values[:, 6:]
        res = sps.ttest_ind(case, control, axis=1, equal_var=False)
        by_id = dict(zip(x.feature_ids, zip(res.statistic, res.pvalue)))
        for fid, t, p in zip(ranking.feature_ids, ranking.t_stats, ranking.p_values):
            assert t == pytest.approx(by_id[fid][0], abs=1e-10)
            assert p == pytest.approx(by_id[fid][1], abs=1e-10)

    def test_pooled_matches_scipy(self):
        rng = np.random.default_rng(3)
        x = random_cohort(rng, 30, 5, 7)
        ranking = t_rank(x, top_m=30, variant="pooled", log_transform=False)
        res = sps.ttest_ind(x.values[:, :5], x.values[:, 5:], axis=1, equal_var=True)
        by_id = dict(zip(x.feature_ids, zip(res.statistic, res.pvalue)))
        for fid, t, p in zip(ranking.feature_ids, ranking.t_stats, ranking.p_values):
            assert t == pytest.approx(by_id[fid][0], abs=1e-10)
            assert p == pytest.approx(by_id[fid][1], abs=1e-10)

    def test_errors(self, tiny_matrix):
        with pytest.raises(ValidationError, match="top_m"):
            t_rank(tiny_matrix, top_m=99)
        with pytest.raises(ValidationError, match="top_m"):
            t_rank(tiny_matrix, top_m=0)
        one_per_group = make_matrix([[1.0, 2.0]], ("case", "control"))
        with pytest.raises(ValidationError, match="at least 2"):
            t_rank(one_per_group, top_m=1)
        with pytest.raises(ValidationError, match="variant"):
            t_rank(tiny_matrix, top_m=2, variant="student")


class TestLooRankings:
    def test_toy_downdate_matches_scratch(self):
        rng = np.random.default_rng(4)
        x = random_cohort(rng, 12, 3, 3, high=10.0)
        t_loo = loo_t_stats(x, log_transform=False)
        for i in range(x.n_samples):
            ref = scratch_t(x.values, x.labels, i)
            assert np.max(np.abs(t_loo[i] - ref)) <= 1e-10

    @pytest.mark.parametrize("variant", ["welch", "pooled"])
    def test_random_downdate_matches_scratch(self, variant):
        rng = np.random.default_rng(5)
        for _ in range(10):
            m = int(rng.integers(5, 120))
            n_cases = int(rng.integers(3, 12))
            n_controls = int(rng.integers(3, 12))
            x = random_cohort(rng, m, n_cases, n_controls)
            t_loo = loo_t_stats(x, variant=variant, log_transform=False)
            for i in range(x.n_samples):
                ref = scratch_t(x.values, x.labels, i, variant)
                assert np.max(np.abs(t_loo[i] - ref)) <= 1e-10

    def test_thread_count_does_not_change_results(self):
        rng = np.random.default_rng(6)
        x = random_cohort(rng, 80, 6, 6)
        ranking = t_rank(x, top_m=20, log_transform=False)
        a = loo_rankings(x, ranking, threads=1)
        b = loo_rankings(x, ranking, threads=7)
        assert np.array_equal(a.loo_ranks, b.loo_ranks)

    def test_rows_are_distinct_positive_ranks(self):
        spec = SyntheticSpec(8, 8, 150, 5, 1.0, 2, 6.0, seed=0)
        x = generate_matrix(spec)
        ranking = t_rank(x, top_m=30)
        loo = loo_rankings(x, ranking)
        assert loo.loo_ranks.shape == (16, 30)
        for row in loo.loo_ranks:
            assert row.min() >= 1
            assert len(set(row.tolist())) == row.size

    def test_ranks_may_exceed_selected_length(self):
        spec = SyntheticSpec(10, 10, 400, 5, 1.0, 3, 8.0, seed=1)
        x = generate_matrix(spec)
        ranking = t_rank(x, top_m=20)
        loo = loo_rankings(x, ranking)
        assert loo.loo_ranks.max() > 20

    def test_duplicate_case_exchangeability(self):
        rng = np.random.default_rng(7)
        values = rng.uniform(1, 100, size=(40, 8))
        values[:, 3] = values[:, 2]  # case 3 duplicates case 2
        x = make_matrix(values, ("case",) * 4 + ("control",) * 4)
        ranking = t_rank(x, top_m=10, log_transform=False)
        loo = loo_rankings(x, ranking)
        assert np.array_equal(loo.loo_ranks[2], loo.loo_ranks[3])

    def test_deleting_below_minimum_group_size_is_an_error(self, tiny_matrix):
        ranking = t_rank(tiny_matrix, top_m=2)
        with pytest.raises(ValidationError, match="at least 3"):
            loo_rankings(tiny_matrix, ranking)

    def test_unknown_selected_feature_is_an_error(self):
        rng = np.random.default_rng(8)
        x = random_cohort(rng, 10, 3, 3)
        ranking = t_rank(x, top_m=3, log_transform=False)
        other = random_cohort(rng, 5, 3, 3)
        with pytest.raises(ValidationError, match="not present"):
            loo_rankings(other, ranking)


class TestStabilityPattern:
    def test_top_ranks_more_stable_on_planted_signal(self):
        """Mean |rank change| per original-rank decile grows from head to tail."""
        passes = 0
        for seed in range(100):
            spec = SyntheticSpec(15, 15, 1000, 20, 1.0, 0, 0.0, seed=seed)
            x = generate_matrix(spec)
            ranking = t_rank(x, top_m=200)
            loo = loo_rankings(x, ranking)
            orig = np.arange(1, 201)
            mean_abs_change = np.abs(loo.loo_ranks - orig).mean(axis=0)
            deciles = mean_abs_change.reshape(10, 20).mean(axis=1)
            passes += bool(np.all(np.diff(deciles) >= 0))
        assert passes >= 90
